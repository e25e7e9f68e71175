import json
import subprocess
import sys

import numpy as np
import pytest

from charpca import experiments
from charpca.cli import main
from charpca.io import load_csv, save_csv
from charpca.simulate import FactorSpec, RngStream, gen_factor_data, gen_two_class


@pytest.fixture
def data_csv(tmp_path):
    Y, _ = gen_factor_data(6, 40, FactorSpec(), RngStream(0, 0))
    path = tmp_path / "y.csv"
    save_csv(path, Y)
    return path, Y


@pytest.fixture
def labelled_csv(tmp_path):
    Y, labels = gen_two_class(5, 60, RngStream(1, 0))
    path = tmp_path / "lab.csv"
    rows = ["a,b,c,d,e,group"] + [
        ",".join("%.17g" % v for v in Y[:, j]) + ("," + ("ctl" if labels[j] else "trt")) for j in range(60)
    ]
    path.write_text("\n".join(rows) + "\n")
    return path


class TestCommands:
    def test_transform(self, data_csv, tmp_path):
        path, Y = data_csv
        assert main(["transform", str(path), "--out", str(tmp_path / "o")]) == 0
        R = load_csv(tmp_path / "o" / "lifted.csv").matrix
        np.testing.assert_array_equal(R, np.vstack([np.cos(Y), np.sin(Y)]))

    def test_fit_json(self, data_csv, capsys):
        path, _ = data_csv
        assert main(["fit", str(path), "--method", "cpca"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["method"] == "cpca" and len(out["eigenvalues"]) == 6

    @pytest.mark.parametrize("method", ["cpca", "rpca"])
    def test_reconstruct(self, data_csv, tmp_path, method):
        path, Y = data_csv
        assert main(["reconstruct", str(path), "--method", method, "--out", str(tmp_path),
                     "--gamma", "1.0", "--path", "covariance", "--branch", "per-coordinate"]) == 0
        Y_hat = load_csv(tmp_path / f"{method}_reconstruction.csv").matrix
        np.testing.assert_allclose(Y_hat, Y, atol=1e-8)

    def test_eigvals(self, data_csv, tmp_path):
        path, _ = data_csv
        assert main(["eigvals", str(path), "--out", str(tmp_path), "--format", "csv"]) == 0
        lines = (tmp_path / "eigvals.csv").read_text().splitlines()
        assert lines[0] == "index,cpca,rpca" and len(lines) == 13

    def test_classify(self, labelled_csv, capsys):
        assert main(["classify", str(labelled_csv), "--label-column", "group", "--replicates", "5"]) == 0
        assert "rpca: mean accuracy" in capsys.readouterr().out

    def test_bench(self, tmp_path, capsys):
        code = main(["bench", "example1", "--replicates", "2", "--sizes", "10,12;20,30",
                     "--out", str(tmp_path), "--format", "json"])
        assert code == 0
        assert (tmp_path / "example1.json").exists()
        assert not (tmp_path / "example1.csv").exists()
        assert "P=20,N=30" in capsys.readouterr().out


class TestExitCodes:
    def test_config_error(self):
        assert main(["bench", "example1", "--sizes", "11,20"]) == 2
        assert main(["bench", "example1", "--gamma", "1.5"]) == 2
        assert main(["classify", "x.csv"]) == 2

    def test_argparse_error(self):
        with pytest.raises(SystemExit) as info:
            main(["bench", "nonsense"])
        assert info.value.code == 2

    def test_ingestion_error(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b\n1,\n2,3\n")
        assert main(["fit", str(bad)]) == 3
        assert main(["fit", str(bad), "--impute-mean"]) == 0

    def test_failure_threshold(self, tmp_path):
        assert main(["bench", "example2", "--replicates", "2", "--sizes", "4,5"]) == 0
        real = experiments.run_replicate
        try:
            experiments.run_replicate = lambda *a: (_ for _ in ()).throw(ArithmeticError("boom"))
            assert main(["bench", "example1", "--replicates", "3", "--sizes", "4,5"]) == 4
        finally:
            experiments.run_replicate = real


def test_deterministic_subprocess(tmp_path):
    outs = []
    for d in ("a", "b"):
        subprocess.run([sys.executable, "-m", "charpca.cli", "bench", "example1", "--replicates", "1",
                        "--sizes", "20,30", "--seed", "42", "--out", str(tmp_path / d)], check=True,
                       capture_output=True)
        doc = json.loads((tmp_path / d / "example1.json").read_text())
        doc.pop("runtime_seconds")
        outs.append(doc)
    assert outs[0] == outs[1]
