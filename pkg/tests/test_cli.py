"""Command line behavior: formats, round trips, exit codes, replay."""

import json

import numpy as np
import pytest

from tbmpsk.cli import main, parse_shape
from tbmpsk.ring_code import TensorShape, case_matrix


def run_cli(*argv):
    return main(list(argv))


class TestParsing:
    def test_shape_formats(self):
        assert parse_shape("4,2,2") == (4, 2, 2)
        assert parse_shape("4x2x2") == (4, 2, 2)

    def test_bad_shape_exits_2(self, capsys):
        assert run_cli("matrix", "--shape", "4,a", "--mod", "4") == 2
        assert "error:" in capsys.readouterr().err

    def test_canonicalization_note(self, capsys):
        assert run_cli("matrix", "--shape", "10,20,16", "--mod", "4") == 0
        assert "canonicalized to 20x16x10" in capsys.readouterr().err


class TestMatrix:
    def test_stdout_matches_library(self, capsys):
        assert run_cli("matrix", "--shape", "4,2,2", "--mod", "4", "--case", "1") == 0
        out = capsys.readouterr().out
        sh = TensorShape((4, 2, 2), 4)
        assert out == case_matrix(sh, 1).to_text()
        assert out.splitlines()[0] == "5 15 4"

    def test_systematic_needs_case1(self, capsys):
        rc = run_cli("matrix", "--shape", "4,2,2", "--mod", "4", "--case", "3",
                     "--systematic")
        assert rc == 2

    def test_file_output_with_manifest(self, tmp_path):
        out = tmp_path / "g.txt"
        assert run_cli("matrix", "--shape", "2,2", "--mod", "2", "--out", str(out)) == 0
        assert out.exists()
        doc = json.loads((tmp_path / "g.txt.manifest.json").read_text())
        assert doc["command"] == "matrix"
        assert doc["shape_given"] == "2,2"

    def test_manifest_keeps_shape_as_typed(self, tmp_path):
        out = tmp_path / "g.txt"
        assert run_cli("matrix", "--shape", "2x4", "--mod", "2", "--out", str(out)) == 0
        doc = json.loads((tmp_path / "g.txt.manifest.json").read_text())
        assert doc["shape_given"] == "2x4"
        assert doc["config"]["dims"] == [4, 2]


class TestEncodeDecode:
    def test_all_zero_word_maps_to_ones(self, capsys):
        assert run_cli("encode", "--shape", "4,2,2", "--mod", "4",
                       "--info", "0,0,0,0,0") == 0
        lines = capsys.readouterr().out.splitlines()
        assert len(lines) == 16
        for line in lines:
            re, im = (float(v) for v in line.split())
            assert (re, im) == (1.0, 0.0)

    def test_round_trip_via_files(self, tmp_path, capsys):
        enc = tmp_path / "s.txt"
        assert run_cli("encode", "--shape", "4,2,2", "--mod", "4",
                       "--info", "3,1,0,2,1", "--out", str(enc)) == 0
        assert run_cli("decode", "--shape", "4,2,2", "--mod", "4",
                       "--in", str(enc)) == 0
        assert capsys.readouterr().out.strip() == "3 1 0 2 1"

    def test_ml_decoder_round_trip(self, tmp_path, capsys):
        enc = tmp_path / "s.txt"
        run_cli("encode", "--shape", "2,2", "--mod", "4", "--info", "2,3",
                "--out", str(enc))
        assert run_cli("decode", "--shape", "2,2", "--mod", "4", "--in", str(enc),
                       "--decoder", "ml") == 0
        assert capsys.readouterr().out.strip() == "2 3"

    def test_ml_guard_exits_3(self, tmp_path, capsys):
        enc = tmp_path / "s.txt"
        run_cli("encode", "--shape", "10,20,16", "--mod", "4",
                "--info", ",".join(["0"] * 43), "--out", str(enc))
        capsys.readouterr()
        rc = run_cli("decode", "--shape", "10,20,16", "--mod", "4", "--in", str(enc),
                     "--decoder", "ml")
        assert rc == 3
        assert "error:" in capsys.readouterr().err

    def test_wrong_info_length_exits_2(self):
        assert run_cli("encode", "--shape", "4,2,2", "--mod", "4", "--info", "1,2") == 2


class TestGraphAndBound:
    def test_export_graph_lines(self, capsys):
        assert run_cli("export-graph", "--shape", "4,2,2", "--mod", "4") == 0
        lines = capsys.readouterr().out.splitlines()
        assert len(lines) == 28
        assert all(line.startswith("u ") for line in lines)

    def test_bound_rate_value(self, capsys):
        assert run_cli("bound", "--blocklength", "3200", "--target-error", "0.01",
                       "--snr-db", "0") == 0
        val = float(capsys.readouterr().out.strip())
        assert abs(val - 0.9504380819331502) < 1e-9

    def test_bound_min_snr(self, capsys):
        assert run_cli("bound", "--blocklength", "3200", "--target-error", "0.01",
                       "--rate", "0.625") == 0
        float(capsys.readouterr().out.strip())

    def test_bound_unreachable_exits_3(self, capsys):
        assert run_cli("bound", "--blocklength", "3200", "--target-error", "0.01",
                       "--rate", "40") == 3

    def test_bound_requires_one_mode(self):
        assert run_cli("bound", "--blocklength", "100", "--target-error", "0.01") == 2


class TestSimulateReplay:
    def test_csv_and_manifest_then_replay(self, tmp_path):
        out = tmp_path / "r.csv"
        args = ["simulate", "--shape", "4,2,2", "--mod", "4", "--snr-db", "2",
                "--trials", "40", "--seed", "7", "--stop-errors", "0",
                "--out", str(out)]
        assert run_cli(*args) == 0
        first = out.read_bytes()
        manifest = tmp_path / "r.csv.manifest.json"
        assert manifest.exists()

        out2 = tmp_path / "replayed.csv"
        assert run_cli("replay", "--manifest", str(manifest), "--out", str(out2),
                       "--threads", "2") == 0
        assert out2.read_bytes() == first

    def test_seed_required(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run_cli("simulate", "--shape", "4,2,2", "--mod", "4", "--snr-db", "2",
                    "--trials", "10")
        assert exc.value.code == 2

    def test_simulate_stdout(self, capsys):
        assert run_cli("simulate", "--shape", "4,2,2", "--mod", "4", "--snr-db", "8",
                       "--trials", "10", "--seed", "1") == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0].startswith("scenario,shape,M,")
        assert len(lines) == 2

    def test_sweep_writes_table(self, tmp_path):
        out = tmp_path / "sweep.csv"
        rc = run_cli("sweep", "--shapes", "4,2,2", "--mods", "4", "--target-per", "0.1",
                     "--snr-lo", "-2", "--snr-hi", "6", "--resolution", "2",
                     "--trials", "60", "--seed", "3", "--stop-errors", "0",
                     "--out", str(out))
        assert rc == 0
        lines = out.read_text().splitlines()
        assert lines[0].startswith("shape,M,case,rate")
        assert len(lines) == 2
        assert (tmp_path / "sweep.csv.manifest.json").exists()

    def test_replay_sweep_reproduces(self, tmp_path):
        out = tmp_path / "sweep.csv"
        run_cli("sweep", "--shapes", "2,2", "--mods", "4", "--target-per", "0.2",
                "--snr-lo", "0", "--snr-hi", "4", "--resolution", "2",
                "--trials", "40", "--seed", "3", "--stop-errors", "0",
                "--out", str(out))
        first = out.read_bytes()
        out2 = tmp_path / "again.csv"
        assert run_cli("replay", "--manifest", str(out) + ".manifest.json",
                       "--out", str(out2)) == 0
        assert out2.read_bytes() == first
