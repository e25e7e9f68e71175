"""Seeded Monte-Carlo runner for the reconstruction, eigenvalue and classification studies.

Replicate ``r`` of every setting draws from ``RngStream(seed, r)``, so a row
of any report can be regenerated from the embedded config alone. Settings of
one run share replicate streams (common random numbers). Population
approximations use stream indices starting at ``POPULATION_STREAM``.
"""
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .classify import LabeledDataset, cross_validate
from .errors import CharPCAError
from .io import load_csv
from .linalg import mean_and_covariance, sym_eigen
from .metrics import (
    eigen_stats,
    empirical_recon_error,
    estimate_dk,
    excess_error_bound,
    mse,
    second_moment_sum,
    spiked_ratio,
)
from .pca import fit_pca, leading_basis, reconstruct
from .rpca import PATHS, rpca_fit, rpca_reconstruct
from .simulate import (
    Dist,
    FactorSpec,
    OutlierSpec,
    RngStream,
    gen_example1,
    gen_factor_data,
    inject_outliers,
    lifted_gaussian_covariance,
)
from .transform import BranchMode, char_transform

log = logging.getLogger(__name__)

SCENARIOS = (
    "example1",
    "example2",
    "example3",
    "eigen-normal",
    "eigen-t2",
    "population-spectrum",
    "excess-bound",
    "classify",
)
METHODS = ("cpca", "rpca")
POPULATION_STREAM = 1_000_000_000
FAILURE_LIMIT = 0.10
BULK_FACTOR = 3.0

PN_GRID = ((50, 40), (50, 100), (100, 100), (100, 200), (200, 190))
EXAMPLE3_GRID = ((100, 100), (200, 190))
EIGEN_NS = (50, 100, 500, 1000, 5000)
# (proportion, variance)
OUTLIER_GRID = ((0.025, 6.0), (0.064, 6.0), (0.025, 36.0), (0.144, 36.0))


class ConfigError(CharPCAError, ValueError):
    pass


@dataclass
class ExperimentConfig:
    scenario: str
    replicates: int = 100
    seed: int = 0
    gamma: float = 0.8
    branch: str = "per-coordinate"
    path: str = "auto"
    sizes: Optional[list] = None
    p: int = 100
    ns: list = field(default_factory=lambda: list(EIGEN_NS))
    dists: list = field(default_factory=lambda: ["normal", "t2", "pareto", "cauchy"])
    dist: str = "normal"
    outliers: list = field(default_factory=lambda: [list(o) for o in OUTLIER_GRID])
    pop_n: int = 20000
    pop_reps: int = 10
    holdout: int = 100000
    k: int = 3
    xi: float = 10.0
    c: float = 1.0
    data: Optional[str] = None
    label_column: Optional[str] = None
    columns_are_samples: bool = False
    impute_mean: bool = False
    test_frac: float = 0.25
    lenient: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.sizes is None:
            grid = EXAMPLE3_GRID if self.scenario == "example3" else PN_GRID
            self.sizes = [list(s) for s in grid]
        self.sizes = [[int(a), int(b)] for a, b in self.sizes]
        self.ns = [int(n) for n in self.ns]
        self.outliers = [[float(a), float(b)] for a, b in self.outliers]
        self.validate()

    def validate(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; choose from {SCENARIOS}")
        for name in ("replicates", "p", "pop_n", "pop_reps", "holdout", "workers"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be positive")
        if self.seed < 0 or self.seed >= 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if not 0.0 < self.gamma <= 1.0:
            raise ConfigError("gamma must lie in (0, 1]")
        try:
            BranchMode.parse(self.branch)
            for d in list(self.dists) + [self.dist]:
                Dist.parse(d)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.path not in PATHS:
            raise ConfigError(f"path must be one of {PATHS}")
        if any(p < 1 or n < 2 for p, n in self.sizes) or any(n < 2 for n in self.ns):
            raise ConfigError("need p >= 1 and n >= 2 in every setting")
        if self.scenario == "example1" and any(p % 2 for p, _ in self.sizes):
            raise ConfigError("example1 needs even p")
        for prop, var in self.outliers:
            if not 0.0 <= prop < 1.0 or var < 0:
                raise ConfigError(f"invalid outlier setting {(prop, var)}")
        if self.xi <= 0 or self.c <= 0 or not 0 <= self.k <= self.p:
            raise ConfigError("need xi > 0, c > 0 and 0 <= k <= p")
        if not 0.0 < self.test_frac < 1.0:
            raise ConfigError("test_frac must lie in (0, 1)")
        if self.scenario == "classify" and (not self.data or not self.label_column):
            raise ConfigError("classify needs a data file and a label column")


@dataclass
class ReportDocument:
    config: dict
    replicates: list
    aggregates: dict
    table: list
    version: str = __version__
    runtime_seconds: float = 0.0
    failures: int = 0
    extras: dict = field(default_factory=dict)

    @property
    def failure_fraction(self):
        ids = {(r["setting"], r["id"]) for r in self.replicates}
        return self.failures / max(len(ids), 1)

    @property
    def failed(self):
        return self.failure_fraction > FAILURE_LIMIT

    def to_dict(self):
        return asdict(self)

    def write(self, out_dir, formats=("json", "csv")):
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        stem = self.config["scenario"]
        written = []
        if "json" in formats:
            path = out / f"{stem}.json"
            path.write_text(json.dumps(self.to_dict(), indent=2, default=_json_default))
            written.append(path)
        if "csv" in formats:
            path = out / f"{stem}.csv"
            path.write_text(table_to_csv(self.table))
            written.append(path)
            spectra = self.extras.get("spectra")
            if spectra:
                path = out / f"{stem}_spectra.csv"
                path.write_text(_spectra_csv(spectra))
                written.append(path)
        return written


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serialisable: {type(obj)}")


def table_to_csv(table, precision=3):
    """Rows are ``(label, {column: value})``; values printed with ``precision`` decimals."""
    cols = []
    for _, vals in table:
        cols.extend(c for c in vals if c not in cols)
    lines = [",".join(["row"] + [f'"{c}"' if "," in c else c for c in cols])]
    for label, vals in table:
        cells = [label]
        for c in cols:
            v = vals.get(c)
            cells.append("" if v is None else f"{v:.{precision}f}")
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def format_table(table, precision=3):
    cols = []
    for _, vals in table:
        cols.extend(c for c in vals if c not in cols)
    width = max([len(c) for c in cols] + [precision + 6])
    lw = max([len(lbl) for lbl, _ in table] + [4])
    out = [" " * lw + "  " + "  ".join(c.rjust(width) for c in cols)]
    for label, vals in table:
        cells = []
        for c in cols:
            v = vals.get(c)
            cells.append(("-" if v is None else f"{v:.{precision}f}").rjust(width))
        out.append(label.ljust(lw) + "  " + "  ".join(cells))
    return "\n".join(out)


def _spectra_csv(spectra):
    cp, rp = spectra["cpca"], spectra["rpca"]
    lines = ["index,cpca,rpca"]
    for i in range(max(len(cp), len(rp))):
        a = "%.17g" % cp[i] if i < len(cp) else ""
        b = "%.17g" % rp[i] if i < len(rp) else ""
        lines.append(f"{i + 1},{a},{b}")
    return "\n".join(lines) + "\n"


# -- settings ---------------------------------------------------------------

def settings_for(cfg):
    """List of setting dicts; each carries a human-readable ``label``."""
    s = cfg.scenario
    if s == "example1":
        return [{"label": f"P={p},N={n}", "P": p, "N": n} for p, n in cfg.sizes]
    if s == "example2":
        return [
            {
                "label": f"P={p},N={n},{prop * 100:g}%~N(0,{var:g})",
                "P": p, "N": n, "proportion": prop, "variance": var,
            }
            for prop, var in cfg.outliers
            for p, n in cfg.sizes
        ]
    if s == "example3":
        return [
            {"label": f"P={p},N={n},{Dist.parse(d).value}", "P": p, "N": n, "dist": Dist.parse(d).value}
            for p, n in cfg.sizes
            for d in cfg.dists
        ]
    if s in ("eigen-normal", "eigen-t2", "excess-bound"):
        dist = {"eigen-normal": "normal", "eigen-t2": "t2"}.get(s, Dist.parse(cfg.dist).value)
        return [{"label": f"n={n}", "P": cfg.p, "N": n, "dist": dist} for n in cfg.ns]
    if s == "population-spectrum":
        return [{"label": f"n={cfg.pop_n}", "P": cfg.p, "N": cfg.pop_n, "dist": Dist.parse(cfg.dist).value}]
    return []


def _replicate_count(cfg):
    return cfg.pop_reps if cfg.scenario == "population-spectrum" else cfg.replicates


# -- per-replicate work -----------------------------------------------------

def _reconstruction_records(Y, cfg):
    mode = BranchMode.parse(cfg.branch)
    cp = fit_pca(Y, cfg.gamma)
    rp = rpca_fit(Y, cfg.gamma, path=cfg.path)
    return [
        ("cpca", {"mse": mse(Y, reconstruct(cp, Y)), "k": cp.selected_rank}),
        ("rpca", {"mse": mse(Y, rpca_reconstruct(rp, Y, mode, lenient=cfg.lenient)),
                  "k": rp.selected_rank}),
    ]


def _top_eigenvalue(X):
    _, cov = mean_and_covariance(X)
    return float(sym_eigen(cov).eigenvalues[0])


def _excess_records(setting, cfg, rng):
    spec = FactorSpec(factor_dist=setting["dist"])
    Y, B = gen_factor_data(setting["P"], setting["N"], spec, rng)
    H, _ = gen_factor_data(setting["P"], cfg.holdout, spec, rng, loadings=B)
    out = []
    for method in METHODS:
        X_tr, X_ho = (Y, H) if method == "cpca" else (char_transform(Y), char_transform(H))
        k = cfg.k
        mean_tr, B_hat = leading_basis(X_tr, k)
        mean_ho, B_opt = leading_basis(X_ho, k)
        r_n_hat = empirical_recon_error(X_tr, B_hat, mean_tr)
        r_hat = empirical_recon_error(X_ho, B_hat, mean_ho)
        r_opt = empirical_recon_error(X_ho, B_opt, mean_ho)
        r_n_opt = empirical_recon_error(X_tr, B_opt, mean_tr)
        dk = estimate_dk(X_ho, B_opt, mean_ho)
        m2 = second_moment_sum(X_ho)
        bound = excess_error_bound(dk, m2, setting["N"], cfg.xi, cfg.c)
        out.append((method, {
            "k": k,
            "R_n_hat": r_n_hat,
            "R_hat": r_hat,
            "R_opt": r_opt,
            "R_n_opt": r_n_opt,
            "excess": r_hat - r_opt,
            "empirical_gap": r_n_opt - r_n_hat,
            "generalisation_gap": abs(r_hat - r_n_hat),
            "d_k": dk,
            "second_moments": m2,
            "bound_one_sided": bound.one_sided,
            "bound_excess": bound.excess,
            "within_one_sided": float(abs(r_hat - r_n_hat) <= bound.one_sided),
            "within_excess": float(0.0 <= r_hat - r_opt <= bound.excess),
            "second_moment_nonconvergent": float(method == "cpca" and Dist.parse(setting["dist"]).heavy_tailed),
        }))
    return out


def run_replicate(cfg, setting, r):
    """All records of replicate ``r`` in ``setting``; a pure function of its arguments."""
    rng = RngStream(cfg.seed, r)
    s = cfg.scenario
    if s == "example1":
        Y = gen_example1(setting["P"], setting["N"], rng)
        return _reconstruction_records(Y, cfg)
    if s == "example2":
        Y, _ = gen_factor_data(setting["P"], setting["N"], FactorSpec(), rng)
        Y = inject_outliers(Y, OutlierSpec.from_variance(setting["proportion"], setting["variance"]), rng)
        return _reconstruction_records(Y, cfg)
    if s == "example3":
        Y, _ = gen_factor_data(setting["P"], setting["N"], FactorSpec(factor_dist=setting["dist"]), rng)
        return _reconstruction_records(Y, cfg)
    if s in ("eigen-normal", "eigen-t2"):
        spec = FactorSpec(factor_dist=setting["dist"])
        Y, B = gen_factor_data(setting["P"], setting["N"], spec, rng)
        cp = {"lambda1": _top_eigenvalue(Y)}
        rp = {"lambda1": _top_eigenvalue(char_transform(Y))}
        if spec.factor_dist.gaussian_variance is not None:
            # exact population values for this replicate's loadings
            cov = spec.covariance(B)
            cp["lambda_ref"] = float(sym_eigen(cov).eigenvalues[0])
            rp["lambda_ref"] = float(sym_eigen(lifted_gaussian_covariance(cov)).eigenvalues[0])
        return [("cpca", cp), ("rpca", rp)]
    if s == "population-spectrum":
        rng = RngStream(cfg.seed, POPULATION_STREAM + r)
        Y, _ = gen_factor_data(setting["P"], setting["N"], FactorSpec(factor_dist=setting["dist"]), rng)
        out = []
        for method, X in (("cpca", Y), ("rpca", char_transform(Y))):
            _, cov = mean_and_covariance(X)
            out.append((method, {"spectrum": sym_eigen(cov).eigenvalues.tolist()}))
        return out
    if s == "excess-bound":
        return _excess_records(setting, cfg, rng)
    raise ConfigError(f"scenario {s!r} has no replicate runner")


def _task(args):
    cfg, setting, r = args
    try:
        return setting["label"], r, run_replicate(cfg, setting, r), None
    except (CharPCAError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        return setting["label"], r, None, f"{type(exc).__name__}: {exc}"


def worker_count(requested=None):
    env = os.environ.get("CHARPCA_THREADS")
    n = requested or 1
    if env:
        try:
            n = min(n, int(env)) if requested else int(env)
        except ValueError:
            log.warning("ignoring non-integer CHARPCA_THREADS=%r", env)
    return max(1, n)


def _run_tasks(cfg, settings, reps):
    tasks = [(cfg, s, r) for s in settings for r in range(reps)]
    workers = worker_count(cfg.workers)
    if workers == 1 or len(tasks) == 1:
        results = [_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    records, failures = [], 0
    for label, r, recs, err in results:
        if err is not None:
            failures += 1
            log.warning("replicate %d of %s failed: %s", r, label, err)
            records.append({"id": r, "setting": label, "method": None, "error": err})
            continue
        for method, metrics in recs:
            records.append({"id": r, "setting": label, "method": method, **metrics})
    return records, failures


# -- aggregation ------------------------------------------------------------

def _values(records, label, method, key):
    return [rec[key] for rec in records
            if rec["setting"] == label and rec["method"] == method and key in rec]


def _mean_sd(vals):
    a = np.asarray(vals, dtype=float)
    return float(a.mean()), float(a.std(ddof=1)) if a.size > 1 else 0.0


def population_lambda1(cfg, dist, p=None):
    """Population top eigenvalue of the lifted data, averaged over ``pop_reps`` draws of size ``pop_n``."""
    p = p or cfg.p
    vals = []
    for j in range(cfg.pop_reps):
        rng = RngStream(cfg.seed, POPULATION_STREAM + j)
        Y, _ = gen_factor_data(p, cfg.pop_n, FactorSpec(factor_dist=dist), rng)
        vals.append(_top_eigenvalue(char_transform(Y)))
    return float(np.mean(vals))


def _aggregate_reconstruction(records, settings):
    agg, table = {}, []
    for method in METHODS:
        row = {}
        for s in settings:
            vals = _values(records, s["label"], method, "mse")
            ks = _values(records, s["label"], method, "k")
            if not vals:
                continue
            m, sd = _mean_sd(vals)
            agg.setdefault(s["label"], {})[method] = {
                "mse_mean": m, "mse_sd": sd, "k_mean": float(np.mean(ks)), "count": len(vals),
            }
            row[s["label"]] = m
        table.append((method, row))
    return agg, table


def _aggregate_eigen(records, settings, lambda_ref):
    agg, table = {}, []
    rows = {f"{m} {k}": {} for m in METHODS for k in ("bias", "sd", "ratio")}
    for s in settings:
        for method in METHODS:
            vals = _values(records, s["label"], method, "lambda1")
            if len(vals) < 2:
                continue
            refs = _values(records, s["label"], method, "lambda_ref")
            st = eigen_stats(vals, refs if len(refs) == len(vals) else lambda_ref.get(method))
            agg.setdefault(s["label"], {})[method] = {
                "mean": st.mean, "sd": st.sd, "variation_ratio": st.variation_ratio,
                "bias": st.bias, "bias_sd": st.bias_sd, "lambda_ref": st.lambda_ref,
                "count": len(vals),
            }
            if st.bias is not None:
                rows[f"{method} bias"][s["label"]] = st.bias
                rows[f"{method} sd"][s["label"]] = st.bias_sd
            rows[f"{method} ratio"][s["label"]] = st.variation_ratio
    table = [(k, v) for k, v in rows.items() if v]
    return agg, table


def separated_count(spectrum, factor=BULK_FACTOR):
    """Eigenvalues exceeding ``factor`` times the bulk level (the median eigenvalue)."""
    w = np.asarray(spectrum, dtype=float)
    bulk = float(np.median(w))
    return int(np.sum(w > factor * bulk)), bulk


def _aggregate_population(records, settings):
    label = settings[0]["label"]
    agg, spectra = {label: {}}, {}
    table = []
    for method in METHODS:
        specs = _values(records, label, method, "spectrum")
        if not specs:
            continue
        mean_spec = np.mean(np.asarray(specs, dtype=float), axis=0)
        count, bulk = separated_count(mean_spec)
        spectra[method] = mean_spec.tolist()
        agg[label][method] = {
            "top": mean_spec[:10].tolist(), "bulk_median": bulk, "separated": count,
            "count": len(specs),
        }
        table.append((method, {f"lambda{i + 1}": float(v) for i, v in enumerate(mean_spec[:6])}))
    return agg, table, spectra


def _aggregate_excess(records, settings):
    agg, rows = {}, {}
    keys = ("R_n_hat", "R_opt", "excess", "bound_excess", "within_excess")
    for s in settings:
        for method in METHODS:
            entry = {}
            for key in keys + ("d_k", "second_moments", "generalisation_gap",
                               "bound_one_sided", "within_one_sided", "empirical_gap"):
                vals = _values(records, s["label"], method, key)
                if vals:
                    entry[f"{key}_mean"], entry[f"{key}_sd"] = _mean_sd(vals)
            if entry:
                agg.setdefault(s["label"], {})[method] = entry
                for key in keys:
                    rows.setdefault(f"{method} {key}", {})[s["label"]] = entry[f"{key}_mean"]
    return agg, list(rows.items())


# -- classification ---------------------------------------------------------

def _run_classify(cfg):
    data = load_csv(cfg.data, columns_are_samples=cfg.columns_are_samples,
                    label_column=cfg.label_column, impute_mean=cfg.impute_mean)
    ds = LabeledDataset(data.matrix, data.labels, data.label_names)
    records, agg, table_row = [], {}, {}
    whole = {}
    Y = ds.features
    mode = BranchMode.parse(cfg.branch)
    cp = fit_pca(Y, cfg.gamma)
    rp = rpca_fit(Y, cfg.gamma, path=cfg.path)
    p, n = Y.shape
    for method, model, Yhat in (
        ("cpca", cp, reconstruct(cp, Y)),
        ("rpca", rp, rpca_reconstruct(rp, Y, mode, lenient=cfg.lenient)),
    ):
        k = model.selected_rank
        lam_k = float(model.eigenvalues[k - 1])
        whole[method] = {
            "mse": mse(Y, Yhat), "k": k, "lambda_k": lam_k,
            "spiked_ratio": spiked_ratio(p, n, lam_k) if lam_k > 0 else None,
        }
    for method in METHODS:
        res = cross_validate(ds, method, cfg.gamma, cfg.test_frac, cfg.replicates, cfg.seed, cfg.path)
        for r, acc in enumerate(res.accuracies):
            records.append({"id": r, "setting": "cv", "method": method, "accuracy": acc})
        m, sd = _mean_sd(res.accuracies)
        agg[method] = {"accuracy_mean": m, "accuracy_sd": sd, "redraws": res.redraws,
                       "whole_data": whole[method]}
        table_row[method] = m
    table = [("accuracy", table_row)] + [
        (f"whole {key}", {m: whole[m][key] for m in METHODS if whole[m][key] is not None})
        for key in ("mse", "k", "lambda_k", "spiked_ratio")
    ]
    return records, {"cv": agg}, table


# -- entry point ------------------------------------------------------------

def run_experiment(cfg):
    """Run a scenario and return its :class:`ReportDocument` (nothing is written)."""
    if isinstance(cfg, dict):
        cfg = ExperimentConfig(**cfg)
    start = time.perf_counter()
    extras, failures = {}, 0
    if cfg.scenario == "classify":
        records, agg, table = _run_classify(cfg)
    else:
        settings = settings_for(cfg)
        records, failures = _run_tasks(cfg, settings, _replicate_count(cfg))
        if cfg.scenario in ("example1", "example2", "example3"):
            agg, table = _aggregate_reconstruction(records, settings)
        elif cfg.scenario in ("eigen-normal", "eigen-t2"):
            if cfg.scenario == "eigen-t2":
                # no closed form for t(2) factors: pooled large-sample approximation
                lam_ref = {"rpca": population_lambda1(cfg, "t2")}
            else:
                lam_ref = {}
            agg, table = _aggregate_eigen(records, settings, lam_ref)
            extras["lambda_ref"] = {m: a["lambda_ref"] for m, a in next(iter(agg.values()), {}).items()
                                    if a["lambda_ref"] is not None}
        elif cfg.scenario == "population-spectrum":
            agg, table, spectra = _aggregate_population(records, settings)
            extras["spectra"] = spectra
        else:
            agg, table = _aggregate_excess(records, settings)
    return ReportDocument(
        config=asdict(cfg),
        replicates=records,
        aggregates=agg,
        table=[[label, row] for label, row in table],
        runtime_seconds=time.perf_counter() - start,
        failures=failures,
        extras=extras,
    )
