import json

import numpy as np
import pytest

from charpca import experiments
from charpca.errors import DegenerateSpectrumError
from charpca.experiments import (
    ConfigError,
    ExperimentConfig,
    format_table,
    run_experiment,
    separated_count,
    settings_for,
    table_to_csv,
    worker_count,
)


def strip_runtime(doc):
    d = doc.to_dict()
    d.pop("runtime_seconds")
    return d


class TestConfig:
    def test_defaults(self):
        cfg = ExperimentConfig("example1")
        assert cfg.sizes == [[50, 40], [50, 100], [100, 100], [100, 200], [200, 190]]
        assert cfg.gamma == 0.8 and cfg.replicates == 100
        assert ExperimentConfig("example3").sizes == [[100, 100], [200, 190]]

    @pytest.mark.parametrize("kw", [
        {"scenario": "table9"},
        {"scenario": "example1", "gamma": 0.0},
        {"scenario": "example1", "replicates": 0},
        {"scenario": "example1", "sizes": [[51, 40]]},
        {"scenario": "example1", "branch": "global"},
        {"scenario": "example2", "outliers": [[1.5, 6]]},
        {"scenario": "excess-bound", "xi": -1.0},
        {"scenario": "classify"},
        {"scenario": "example3", "dists": ["laplace"]},
    ])
    def test_invalid(self, kw):
        with pytest.raises(ConfigError):
            ExperimentConfig(**kw)

    def test_settings_layout(self):
        s = settings_for(ExperimentConfig("example2", sizes=[[100, 100]]))
        assert [x["label"] for x in s] == [
            "P=100,N=100,2.5%~N(0,6)", "P=100,N=100,6.4%~N(0,6)",
            "P=100,N=100,2.5%~N(0,36)", "P=100,N=100,14.4%~N(0,36)",
        ]


class TestRunExperiment:
    def test_deterministic(self):
        cfg = dict(scenario="example1", replicates=1, sizes=[[20, 30]], seed=5)
        a = run_experiment(ExperimentConfig(**cfg))
        b = run_experiment(ExperimentConfig(**cfg))
        assert strip_runtime(a) == strip_runtime(b)

    def test_aggregates_match_records(self):
        doc = run_experiment(ExperimentConfig("example3", replicates=4, sizes=[[20, 30]], dists=["normal", "cauchy"]))
        for label, methods in doc.aggregates.items():
            for method, agg in methods.items():
                vals = [r["mse"] for r in doc.replicates if r["setting"] == label and r["method"] == method]
                assert len(vals) == 4
                assert abs(agg["mse_mean"] - np.mean(vals)) <= 1e-12

    def test_worker_independent(self, monkeypatch):
        monkeypatch.delenv("CHARPCA_THREADS", raising=False)
        cfg = dict(scenario="eigen-normal", replicates=3, p=10, ns=[20, 40], pop_n=200, pop_reps=2)
        a = run_experiment(ExperimentConfig(**cfg, workers=1))
        b = run_experiment(ExperimentConfig(**cfg, workers=2))
        assert a.replicates == b.replicates
        assert a.aggregates == b.aggregates

    def test_replicate_regenerable(self):
        cfg = ExperimentConfig("example1", replicates=3, sizes=[[10, 12]], seed=11)
        doc = run_experiment(cfg)
        again = experiments.run_replicate(ExperimentConfig(**doc.config), settings_for(cfg)[0], 2)
        rec = [r for r in doc.replicates if r["id"] == 2 and r["method"] == "rpca"][0]
        assert dict(again)["rpca"]["mse"] == rec["mse"]

    def test_failures_recorded(self, monkeypatch):
        real = experiments.run_replicate

        def flaky(cfg, setting, r):
            if r in (0, 1):
                raise DegenerateSpectrumError("forced")
            return real(cfg, setting, r)

        monkeypatch.setattr(experiments, "run_replicate", flaky)
        doc = run_experiment(ExperimentConfig("example1", replicates=10, sizes=[[10, 12]]))
        assert doc.failures == 2
        assert doc.failed
        assert sum(1 for r in doc.replicates if r.get("error")) == 2
        doc = run_experiment(ExperimentConfig("example1", replicates=20, sizes=[[10, 12]]))
        assert doc.failures == 2 and not doc.failed

    def test_population_spectrum(self):
        doc = run_experiment(ExperimentConfig("population-spectrum", p=20, pop_n=500, pop_reps=2))
        spec = doc.extras["spectra"]
        assert len(spec["cpca"]) == 20 and len(spec["rpca"]) == 40

    def test_excess_bound(self):
        doc = run_experiment(ExperimentConfig("excess-bound", replicates=2, p=20, ns=[50], holdout=2000))
        agg = doc.aggregates["n=50"]["rpca"]
        assert agg["excess_mean"] >= -1e-12
        assert agg["bound_excess_mean"] > 0

    def test_classify(self, tmp_path):
        from charpca.simulate import RngStream, gen_two_class
        Y, labels = gen_two_class(6, 40, RngStream(0, 0))
        path = tmp_path / "d.csv"
        rows = ["f1,f2,f3,f4,f5,f6,y"] + [",".join("%.17g" % v for v in Y[:, j]) + f",{'ab'[labels[j]]}" for j in range(40)]
        path.write_text("\n".join(rows) + "\n")
        doc = run_experiment(ExperimentConfig("classify", replicates=5, data=str(path), label_column="y"))
        assert doc.aggregates["cv"]["rpca"]["accuracy_mean"] >= 0.9

    def test_write(self, tmp_path):
        doc = run_experiment(ExperimentConfig("example1", replicates=2, sizes=[[10, 12], [10, 20]]))
        paths = doc.write(tmp_path)
        data = json.loads((tmp_path / "example1.json").read_text())
        assert set(data) >= {"config", "replicates", "aggregates", "version", "runtime_seconds"}
        assert data["config"]["seed"] == 0
        csv = (tmp_path / "example1.csv").read_text().splitlines()
        assert csv[0] == 'row,"P=10,N=12","P=10,N=20"'
        assert csv[1].startswith("cpca,") and csv[2].startswith("rpca,")
        assert len(paths) == 2


def test_table_format():
    table = [("cpca", {"a": 0.35712, "b": 1.0}), ("rpca", {"a": 0.2})]
    assert table_to_csv(table) == "row,a,b\ncpca,0.357,1.000\nrpca,0.200,\n"
    assert "0.357" in format_table(table)


def test_separated_count():
    count, bulk = separated_count([10.0, 5.0, 2.0, 1.0, 1.0, 1.0, 0.9])
    assert bulk == 1.0 and count == 2


def test_worker_count(monkeypatch):
    monkeypatch.setenv("CHARPCA_THREADS", "2")
    assert worker_count(8) == 2
    assert worker_count(None) == 2
    monkeypatch.delenv("CHARPCA_THREADS")
    assert worker_count(3) == 3


def test_eigen_normal_references():
    doc = run_experiment(ExperimentConfig("eigen-normal", replicates=3, p=12, ns=[30]))
    recs = [r for r in doc.replicates if r["method"] == "cpca"]
    np.testing.assert_allclose([r["lambda_ref"] for r in recs], 50.0)
    rp = [r for r in doc.replicates if r["method"] == "rpca"]
    assert len({r["lambda_ref"] for r in rp}) == 3
    agg = doc.aggregates["n=30"]["rpca"]
    assert agg["bias"] == pytest.approx(np.mean([r["lambda1"] / r["lambda_ref"] - 1 for r in rp]), abs=1e-12)
