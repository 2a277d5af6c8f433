import json
import subprocess
import sys

import numpy as np
import pytest

from fedkmeans.cli import load_csv, main
from fedkmeans.errors import DataError


def run_cli(*args):
    return main(list(args))


class TestLoadCsv:
    def test_plain_matrix(self, tmp_path):
        f = tmp_path / "a.csv"
        f.write_text("0,0\n1,1\n2,2\n")
        pts, labels = load_csv(f)
        assert pts.shape == (3, 2) and labels is None

    def test_header_and_label_column(self, tmp_path):
        f = tmp_path / "b.csv"
        f.write_text("x,y,label\n0,0,0\n1,1,1\n2,2,0\n")
        pts, labels = load_csv(f)
        assert pts.shape == (3, 2)
        assert labels.tolist() == [0, 1, 0]

    def test_header_without_label_keeps_columns(self, tmp_path):
        f = tmp_path / "c.csv"
        f.write_text("x,y\n0,1\n2,3\n")
        pts, labels = load_csv(f)
        assert pts.shape == (2, 2) and labels is None

    def test_forced_label_column(self, tmp_path):
        f = tmp_path / "d.csv"
        f.write_text("0,1,0\n2,3,1\n")
        pts, labels = load_csv(f, label_column=True)
        assert pts.shape == (2, 2) and labels.tolist() == [0, 1]

    def test_bad_cell_names_row(self, tmp_path):
        f = tmp_path / "e.csv"
        f.write_text("0,0\nabc,1\n2,2\n")
        with pytest.raises(DataError, match="row 2"):
            load_csv(f)

    def test_ragged_rows_rejected(self, tmp_path):
        f = tmp_path / "f.csv"
        f.write_text("0,0\n1\n")
        with pytest.raises(DataError, match="row 2"):
            load_csv(f)

    def test_nonfinite_rejected(self, tmp_path):
        f = tmp_path / "g.csv"
        f.write_text("0,0\nnan,1\n")
        with pytest.raises(DataError, match="row 2"):
            load_csv(f)

    def test_non_integer_label_rejected(self, tmp_path):
        f = tmp_path / "h.csv"
        f.write_text("x,label\n0,0.5\n")
        with pytest.raises(DataError, match="label"):
            load_csv(f)


GAUSS_ARGS = ["--gaussian", "4:3:50:0.05", "--clients", "5", "--k", "4",
              "--kprime", "2", "--seed", "11", "--reference-runs", "2"]


class TestTrain:
    def test_determinism_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert run_cli("--command", "train", *GAUSS_ARGS, "--out", str(a)) == 0
        assert run_cli("--command", "train", *GAUSS_ARGS, "--out", str(b)) == 0
        for name in ("checkpoint.json", "metrics.csv"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_worker_count_invariance(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        run_cli("--command", "train", *GAUSS_ARGS, "--out", str(a), "--workers", "1")
        run_cli("--command", "train", *GAUSS_ARGS, "--out", str(b), "--workers", "3")
        assert (a / "checkpoint.json").read_bytes() == (b / "checkpoint.json").read_bytes()
        assert (a / "metrics.csv").read_bytes() == (b / "metrics.csv").read_bytes()

    def test_manifest_reproduces_run(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        run_cli("--command", "train", *GAUSS_ARGS, "--out", str(a))
        run_cli("--command", "train", "--config", str(a / "manifest.json"),
                "--out", str(b))
        assert (a / "checkpoint.json").read_bytes() == (b / "checkpoint.json").read_bytes()

    def test_manifest_records_derived_parameters(self, tmp_path):
        out = tmp_path / "a"
        run_cli("--command", "train", *GAUSS_ARGS, "--out", str(out))
        doc = json.loads((out / "manifest.json").read_text())
        assert doc["resolved"]["k"] == 4
        for key in ("gamma", "total_bins", "modulus", "backend", "version"):
            assert key in doc["derived"]

    def test_csv_train(self, tmp_path):
        f = tmp_path / "data.csv"
        rng = np.random.default_rng(0)
        rows = ["f1,f2,label"]
        pts = rng.random((60, 2))
        for i, p in enumerate(pts):
            rows.append(f"{p[0]},{p[1]},{i % 3}")
        f.write_text("\n".join(rows) + "\n")
        out = tmp_path / "out"
        rc = run_cli("--command", "train", "--data", str(f), "--clients", "3",
                     "--k", "3", "--seed", "1", "--out", str(out),
                     "--reference-runs", "2")
        assert rc == 0 and (out / "checkpoint.json").exists()


class TestUnlearnBench:
    @pytest.fixture()
    def checkpoint(self, tmp_path):
        out = tmp_path / "train"
        run_cli("--command", "train", *GAUSS_ARGS, "--out", str(out))
        return out / "checkpoint.json"

    def test_unlearn_replay_rows_match_stream(self, checkpoint, tmp_path):
        out = tmp_path / "u1"
        rc = run_cli("--command", "unlearn", "--checkpoint", str(checkpoint),
                     "--removals", "5", "--seed", "3", "--out", str(out),
                     "--reference-runs", "2")
        assert rc == 0
        lines = (out / "metrics.csv").read_text().strip().splitlines()
        assert len(lines) == 6
        reqs = json.loads((out / "requests.json").read_text())
        assert len(reqs) == 5
        # replaying the recorded stream reproduces metrics + checkpoint
        out2 = tmp_path / "u2"
        run_cli("--command", "unlearn", "--checkpoint", str(checkpoint),
                "--requests", str(out / "requests.json"), "--seed", "3",
                "--out", str(out2), "--reference-runs", "2")
        assert (out / "metrics.csv").read_bytes() == (out2 / "metrics.csv").read_bytes()
        assert (out / "checkpoint.json").read_bytes() == (out2 / "checkpoint.json").read_bytes()

    def test_bench_emits_baseline_columns(self, checkpoint, tmp_path):
        out = tmp_path / "bench"
        rc = run_cli("--command", "bench", "--checkpoint", str(checkpoint),
                     "--removals", "4", "--seed", "3", "--out", str(out),
                     "--reference-runs", "2", "--baseline-samples", "2")
        assert rc == 0
        header = (out / "timings.csv").read_text().splitlines()[0]
        assert "retrain_seconds_est" in header and "accum_retrain_seconds" in header
        summary = json.loads((out / "summary.json").read_text())
        assert "speedup_noretrain" in summary

    def test_adversarial_stream(self, checkpoint, tmp_path):
        out = tmp_path / "adv"
        rc = run_cli("--command", "unlearn", "--checkpoint", str(checkpoint),
                     "--removals", "3", "--adversarial", "--seed", "4",
                     "--out", str(out), "--no-loss")
        assert rc == 0
        lines = (out / "metrics.csv").read_text().strip().splitlines()
        assert len(lines) == 4


class TestExperiments:
    def test_retrain_prob_table(self, tmp_path):
        out = tmp_path / "exp"
        rc = run_cli("--command", "experiment", "--experiment-name", "retrain_prob",
                     "--n", "60", "--k", "3", "--trials", "400", "--seed", "1",
                     "--out", str(out))
        assert rc == 0
        lines = (out / "metrics.csv").read_text().strip().splitlines()
        assert lines[0].startswith("mode,")
        assert len(lines) == 3

    def test_gamma_sweep_table(self, tmp_path):
        out = tmp_path / "sweep"
        rc = run_cli("--command", "experiment", "--experiment-name", "gamma_sweep",
                     "--gaussian", "3:2:30:0.05", "--clients", "3", "--k", "3",
                     "--seed", "2", "--out", str(out), "--reference-runs", "2")
        assert rc == 0
        assert (out / "metrics.csv").read_text().startswith("gamma,")


class TestErrors:
    def test_missing_data_source_exit_code(self, tmp_path, capsys):
        rc = run_cli("--command", "train", "--out", str(tmp_path / "x"))
        assert rc == 2
        assert "error" in capsys.readouterr().err

    def test_bad_csv_exit_code(self, tmp_path, capsys):
        f = tmp_path / "bad.csv"
        f.write_text("0,0\nabc,1\n")
        rc = run_cli("--command", "train", "--data", str(f),
                     "--out", str(tmp_path / "y"))
        assert rc == 2
        assert "row 2" in capsys.readouterr().err

    def test_console_entrypoint(self):
        out = subprocess.run([sys.executable, "-m", "fedkmeans.cli", "--help"],
                             capture_output=True, text=True)
        assert out.returncode == 0
        assert "--command" in out.stdout
