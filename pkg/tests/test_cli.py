"""Command-line interface: reports, sweeps, schedules, reproducibility."""

import csv
import json

import pytest

from qsdcsim.cli import main


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


class TestSessionMode:
    def test_report_structure_and_verdict(self, capsys):
        code, out = _run(
            capsys, "--variant", "standard", "--r", "0.5", "--eve", "none",
            "--trials", "20000", "--seed", "42",
        )
        assert code == 0
        doc = json.loads(out)
        assert set(doc) >= {"config", "statistics", "comparisons", "eve_summary", "verdict"}
        assert doc["config"]["seed"] == 42
        assert doc["config"]["r"] == "0.5"
        assert doc["verdict"].startswith("consistent")
        quantities = {c["quantity"]: c for c in doc["comparisons"]}
        assert quantities["P[MessageDecoded]"]["closed_form"] == pytest.approx(1 / 16)
        assert not quantities["P[MessageDecoded]"]["deviates"]
        assert doc["statistics"]["events"]["EveDetected"] == 0

    def test_interceptor_report_surfaces_discrepancies(self, capsys):
        code, out = _run(
            capsys, "--eve", "pol-aware", "--r", "0.5", "--trials", "30000", "--seed", "1",
        )
        assert code == 0
        doc = json.loads(out)
        ids = {d["id"] for d in doc["documented_discrepancies"]}
        assert "blind-r0-quoted-decimal" in ids
        eav = [c for c in doc["comparisons"] if c["quantity"] == "P[eavesdropping]"][0]
        assert eav["closed_form"] == pytest.approx(37 / 768)
        # The intercept-resend estimate sits near P_message, far above the
        # closed form; the report must mark the deviation, not hide it.
        assert eav["deviates"]
        assert "deviate" in doc["verdict"]

    def test_output_file_and_transcript(self, tmp_path, capsys):
        out_path = tmp_path / "report.json"
        code, _ = _run(
            capsys, "--trials", "500", "--seed", "3", "--out", str(out_path), "--transcript",
        )
        assert code == 0
        doc = json.loads(out_path.read_text())
        transcript = tmp_path / "report.json.transcript.jsonl"
        assert doc["transcript_path"] == str(transcript)
        lines = transcript.read_text().splitlines()
        assert len(lines) == 500
        rec = json.loads(lines[0])
        assert set(rec) >= {"index", "port", "event", "announcements"}

    def test_transcript_requires_single_worker(self):
        with pytest.raises(SystemExit) as exc:
            main(["--trials", "100", "--transcript", "--workers", "2"])
        assert exc.value.code == 2


class TestConfigPrecedence:
    def test_flags_override_config_file(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"trials": 1000, "seed": 5, "r": "0.25"}))
        code, out = _run(capsys, "--config", str(cfg), "--trials", "2000")
        assert code == 0
        doc = json.loads(out)
        assert doc["config"]["trials"] == 2000      # flag wins
        assert doc["config"]["seed"] == 5           # file value kept
        assert doc["config"]["r"] == "0.25"

    def test_report_round_trip_reproduces_statistics(self, tmp_path, capsys):
        first = tmp_path / "first.json"
        code, _ = _run(capsys, "--trials", "5000", "--seed", "11", "--out", str(first))
        assert code == 0
        # Feed the report back in as the config.
        code, out = _run(capsys, "--config", str(first))
        assert code == 0
        doc1 = json.loads(first.read_text())
        doc2 = json.loads(out)
        assert json.dumps(doc1["statistics"]) == json.dumps(doc2["statistics"])

    def test_worker_count_does_not_change_statistics(self, tmp_path, capsys):
        a = tmp_path / "a.json"
        b = tmp_path / "b.json"
        assert _run(capsys, "--trials", "9000", "--seed", "12", "--workers", "1", "--out", str(a))[0] == 0
        assert _run(capsys, "--trials", "9000", "--seed", "12", "--workers", "2", "--out", str(b))[0] == 0
        sa = json.dumps(json.loads(a.read_text())["statistics"])
        sb = json.dumps(json.loads(b.read_text())["statistics"])
        assert sa == sb


class TestSweepMode:
    def test_event_sweep_csv(self, capsys):
        code, out = _run(capsys, "--sweep", "p-events", "--grid", "0:1:0.5")
        assert code == 0
        rows = list(csv.DictReader(out.splitlines()))
        assert [r["r"] for r in rows] == ["0.0", "0.5", "1.0"]
        assert float(rows[0]["p_message"]) == 0.25
        assert float(rows[0]["p_eve_check"]) == 0.25
        assert float(rows[0]["p_discard"]) == 0.5

    def test_single_scenario_sweep(self, capsys):
        code, out = _run(
            capsys, "--sweep", "p-eavesdropping", "--scenario", "pol-aware", "--grid", "0:1:0.05",
        )
        assert code == 0
        rows = list(csv.DictReader(out.splitlines()))
        assert len(rows) == 21
        assert float(rows[0]["pol-aware"]) == 0.25
        assert float(rows[-1]["pol-aware"]) == 0.0
        assert all(0.0 <= float(r["pol-aware"]) <= 1.0 for r in rows)

    def test_all_eavesdropping_curves(self, capsys):
        code, out = _run(capsys, "--sweep", "p-eavesdropping", "--grid", "0:1:0.25")
        rows = list(csv.DictReader(out.splitlines()))
        assert set(rows[0]) == {"r", "blind", "phi-aware", "pol-aware"}
        for row in rows[:-1]:
            assert float(row["blind"]) <= float(row["phi-aware"]) <= float(row["pol-aware"])

    def test_bad_grid_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--sweep", "p-events", "--grid", "1:0:0.1"])
        assert exc.value.code == 2


class TestScheduleMode:
    def test_schedule_report(self, capsys):
        code, out = _run(capsys, "--schedule", "S1:500,S2:500", "--eve", "super", "--seed", "7")
        assert code == 0
        doc = json.loads(out)
        assert [s["label"] for s in doc["stages"]] == ["S1", "S2"]
        assert doc["stages"][0]["eve_detections"] == 0
        assert doc["stages"][1]["eve_detections"] > 0
        assert doc["verdict"] == "eve-detected"
        assert doc["message_phase_unlocked"] is False

    def test_clear_schedule(self, capsys):
        code, out = _run(capsys, "--schedule", "S1:300,S2:300", "--eve", "none", "--seed", "8")
        doc = json.loads(out)
        assert doc["verdict"] == "clear" and doc["message_phase_unlocked"] is True

    def test_invalid_schedule_spec(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--schedule", "S2:100"])
        assert exc.value.code == 2


class TestMessageBits:
    def test_bits_from_file(self, tmp_path, capsys):
        bits = tmp_path / "bits.txt"
        bits.write_text("10" * 600)
        code, out = _run(
            capsys, "--trials", "1000", "--seed", "9", "--message-bits", str(bits),
        )
        assert code == 0
        assert json.loads(out)["statistics"]["decode_errors"] == 0

    def test_short_file_is_usage_error(self, tmp_path):
        bits = tmp_path / "bits.txt"
        bits.write_text("101")
        with pytest.raises(SystemExit) as exc:
            main(["--trials", "1000", "--message-bits", str(bits)])
        assert exc.value.code == 2


class TestErrors:
    def test_bad_reflectivity(self):
        with pytest.raises(SystemExit) as exc:
            main(["--r", "1.2", "--trials", "10"])
        assert exc.value.code == 2

    def test_unknown_eve_choice(self):
        with pytest.raises(SystemExit) as exc:
            main(["--eve", "mallory"])
        assert exc.value.code == 2

    def test_unwritable_output_is_io_error(self, capsys):
        code = main(["--trials", "100", "--out", "/nonexistent-dir/report.json"])
        assert code == 3
