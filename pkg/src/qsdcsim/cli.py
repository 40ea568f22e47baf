"""Command-line front end.

Three mutually exclusive modes:

* session (default): run one Monte Carlo session and emit a JSON report
  comparing empirical statistics with the closed forms;
* ``--sweep``: tabulate closed-form curves over a reflectivity grid as CSV;
* ``--schedule``: run the alternating beforehand test stages and report
  the gate verdict.

Flags override values from ``--config`` (a JSON file; a previously written
report works too, its ``config`` block is used). Exit codes: 0 success,
2 usage or configuration error, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Optional

from . import analytics, report
from .adversary import EvePolicy, EveScenario
from .protocol import ProtocolVariant, run_schedule, run_session

_VARIANTS = {
    "standard": ProtocolVariant.STANDARD,
    "modified": ProtocolVariant.MODIFIED,
}

_SCENARIOS = {
    "none": EveScenario.NONE,
    "blind": EveScenario.BLIND,
    "phi-aware": EveScenario.PHI_AWARE,
    "pol-aware": EveScenario.POLARIZATION_AWARE,
    "super": EveScenario.SUPER,
}

_PHI_CHOICES = ("uniform", "det-only", "sup-only")


class ConfigError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="qsdcsim",
        description="Monte Carlo simulator and closed-form analytics for a "
        "two-path single-photon secure-communication protocol.",
        epilog="Values given on the command line override the same keys in --config.",
    )
    p.add_argument("--config", type=Path, help="JSON config file (or a previous report)")
    p.add_argument("--variant", choices=sorted(_VARIANTS), help="protocol variant (default standard)")
    p.add_argument("--r", dest="r", help="beam-splitter reflectivity in [0, 1] (default 0.5)")
    p.add_argument("--eve", choices=sorted(_SCENARIOS), help="eavesdropper scenario (default none)")
    p.add_argument("--trials", type=int, help="number of protocol rounds (default 100000)")
    p.add_argument("--seed", type=int, help="master seed; reports are reproducible from it (default 0)")
    p.add_argument("--phi", choices=_PHI_CHOICES, help="phase-setting distribution (default uniform)")
    p.add_argument("--workers", type=int, help="parallel workers; never changes results (default 1)")
    p.add_argument("--message-bits", type=Path, help="file of 0/1 characters used as the message stream")
    p.add_argument("--sweep", metavar="NAME", choices=sorted(analytics.SWEEP_QUANTITIES),
                   help="emit a closed-form sweep table instead of simulating")
    p.add_argument("--scenario", choices=("blind", "phi-aware", "pol-aware"),
                   help="restrict a p-eavesdropping sweep to one scenario")
    p.add_argument("--grid", metavar="A:B:STEP", help="reflectivity grid for --sweep (default 0:1:0.05)")
    p.add_argument("--schedule", metavar="SPEC",
                   help="run the beforehand schedule, e.g. S1:10000,S2:10000")
    p.add_argument("--out", type=Path, help="output path (default: stdout)")
    p.add_argument("--transcript", action="store_true",
                   help="also write one JSON record per trial next to --out (workers=1 only)")
    return p


def _load_config(path: Optional[Path]) -> dict:
    if path is None:
        return {}
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config file must hold a JSON object")
    # A full report carries its configuration under "config".
    if "config" in raw and isinstance(raw["config"], dict):
        raw = raw["config"]
    return raw


def _merged(args: argparse.Namespace, file_cfg: dict) -> dict:
    defaults = {
        "variant": "standard",
        "r": "0.5",
        "eve": "none",
        "trials": 100_000,
        "seed": 0,
        "phi": "uniform",
        "workers": 1,
        "sweep": None,
        "scenario": None,
        "grid": "0:1:0.05",
        "schedule": None,
        "out": None,
        "transcript": False,
        "message_bits": None,
    }
    cfg = dict(defaults)
    for key in defaults:
        if key in file_cfg and file_cfg[key] is not None:
            cfg[key] = file_cfg[key]
    for key in defaults:
        flag = getattr(args, key, None)
        if flag not in (None, False):
            cfg[key] = flag
    return cfg


def _parse_r(text) -> Fraction:
    try:
        r = Fraction(str(text))
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"invalid reflectivity {text!r}") from exc
    if not (0 <= r <= 1):
        raise ConfigError(f"reflectivity must lie in [0, 1], got {text!r}")
    return r


def _parse_schedule(spec: str) -> list[tuple[str, int]]:
    stages = []
    for part in str(spec).split(","):
        part = part.strip()
        if not part:
            continue
        if ":" not in part:
            raise ConfigError(f"schedule stage {part!r} must look like S1:10000")
        label, count = part.split(":", 1)
        try:
            stages.append((label.strip().upper(), int(count)))
        except ValueError as exc:
            raise ConfigError(f"schedule stage {part!r} has a non-integer count") from exc
    if not stages:
        raise ConfigError("schedule spec is empty")
    return stages


def _read_message_bits(path, trials: int) -> list[int]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read message bits: {exc}") from exc
    bits = [int(c) for c in text if c in "01"]
    if len(bits) < trials:
        raise ConfigError(f"message file provides {len(bits)} bits for {trials} trials")
    return bits


def _write_output(text: str, out: Optional[Path]) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text)
    except OSError as exc:
        raise IOError(f"cannot write {out}: {exc}") from exc


def _run_sweep(cfg: dict) -> str:
    grid = analytics.grid_from_spec(str(cfg["grid"]))
    rows = analytics.sweep(cfg["sweep"], grid, scenario=cfg["scenario"])
    import io

    buf = io.StringIO()
    writer = csv.writer(buf)
    header = list(rows[0].keys())
    writer.writerow(header)
    for row in rows:
        writer.writerow([row[k] for k in header])
    return buf.getvalue()


def _config_echo(cfg: dict, mode: str) -> dict:
    echo = {
        "mode": mode,
        "variant": cfg["variant"],
        "r": str(cfg["r"]),
        "eve": cfg["eve"],
        "trials": cfg["trials"],
        "seed": cfg["seed"],
        "phi": cfg["phi"],
        "workers": cfg["workers"],
    }
    if mode == "schedule":
        echo["schedule"] = str(cfg["schedule"])
    if cfg.get("message_bits"):
        echo["message_bits"] = str(cfg["message_bits"])
    return echo


def _run_session_mode(cfg: dict) -> str:
    variant = _VARIANTS[cfg["variant"]]
    scenario = _SCENARIOS[cfg["eve"]]
    r_exact = _parse_r(cfg["r"])
    trials = int(cfg["trials"])
    if trials < 1:
        raise ConfigError("--trials must be at least 1")
    workers = int(cfg["workers"])
    if workers < 1:
        raise ConfigError("--workers must be at least 1")
    phi_mode = cfg["phi"]
    if phi_mode not in _PHI_CHOICES:
        raise ConfigError(f"unknown phi mode {phi_mode!r}")
    message_bits = None
    if cfg.get("message_bits"):
        message_bits = _read_message_bits(cfg["message_bits"], trials)

    sink = None
    transcript_lines: list[str] = []
    if cfg["transcript"]:
        if workers != 1:
            raise ConfigError("--transcript requires --workers 1")

        def sink(rec):
            transcript_lines.append(json.dumps(rec.to_json_dict()))

    stats = run_session(
        variant,
        float(r_exact),
        EvePolicy.for_scenario(scenario),
        trials,
        int(cfg["seed"]),
        phi_mode=phi_mode,
        workers=workers,
        message_bits=message_bits,
        record_sink=sink,
    )
    doc = report.session_report(
        _config_echo(cfg, "session"),
        stats,
        variant=variant,
        r=r_exact,
        phi_mode=phi_mode,
        scenario=scenario,
    )
    if cfg["transcript"]:
        out = cfg["out"]
        path = Path(str(out) + ".transcript.jsonl") if out else Path("transcript.jsonl")
        try:
            path.write_text("\n".join(transcript_lines) + "\n")
        except OSError as exc:
            raise IOError(f"cannot write transcript {path}: {exc}") from exc
        doc["transcript_path"] = str(path)
    return report.render_json(doc)


def _run_schedule_mode(cfg: dict) -> str:
    scenario = _SCENARIOS[cfg["eve"]]
    stages = _parse_schedule(cfg["schedule"])
    try:
        result = run_schedule(stages, EvePolicy.for_scenario(scenario), int(cfg["seed"]),
                              workers=int(cfg["workers"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    doc = report.schedule_report(_config_echo(cfg, "schedule"), result)
    return report.render_json(doc)


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _merged(args, _load_config(args.config))
        if cfg["sweep"] and cfg["schedule"]:
            raise ConfigError("--sweep and --schedule are mutually exclusive")
        if cfg["sweep"]:
            text = _run_sweep(cfg)
        elif cfg["schedule"]:
            text = _run_schedule_mode(cfg)
        else:
            text = _run_session_mode(cfg)
    except ConfigError as exc:
        parser.exit(2, f"qsdcsim: error: {exc}\n")
    except ValueError as exc:
        parser.exit(2, f"qsdcsim: error: {exc}\n")

    try:
        _write_output(text, cfg["out"] and Path(cfg["out"]))
    except IOError as exc:
        sys.stderr.write(f"qsdcsim: i/o error: {exc}\n")
        return 3
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
