"""Command-line entry point: ``charpca <command> [options]``.

Exit codes: 0 success, 2 configuration error, 3 ingestion error,
4 more than 10% of experiment replicates failed, 1 any other model error.
"""
import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .classify import LabeledDataset, cross_validate
from .errors import CharPCAError, IngestionError
from .experiments import SCENARIOS, ConfigError, ExperimentConfig, format_table, run_experiment
from .io import load_csv, save_csv
from .metrics import mse
from .pca import fit_pca, reconstruct
from .rpca import PATHS, rpca_fit, rpca_reconstruct
from .transform import BranchMode, char_transform

log = logging.getLogger("charpca")

EXIT_OK = 0
EXIT_MODEL = 1
EXIT_CONFIG = 2
EXIT_INGEST = 3
EXIT_FAILURES = 4


def _formats(value):
    parts = [v.strip().lower() for v in value.split(",") if v.strip()]
    bad = [v for v in parts if v not in ("csv", "json")]
    if not parts or bad:
        raise argparse.ArgumentTypeError(f"format must be csv, json or csv,json; got {value!r}")
    return tuple(parts)


def _common_parser():
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("common options")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--gamma", type=float, default=0.8, help="cumulative variance threshold")
    g.add_argument("--replicates", type=int, default=100)
    g.add_argument("--branch", choices=[m.value for m in BranchMode], default=None,
                   help="branch estimation (default per-sample; bench defaults to per-coordinate)")
    g.add_argument("--path", choices=PATHS, default="auto")
    g.add_argument("--out", default=None, help="output directory")
    g.add_argument("--format", type=_formats, default=("csv", "json"), help="csv, json or csv,json")
    g.add_argument("--columns-are-samples", action="store_true")
    g.add_argument("--label-column", default=None)
    g.add_argument("--impute-mean", action="store_true")
    g.add_argument("--lenient", action="store_true",
                   help="use angle 0 for degenerate reconstructions instead of failing")
    g.add_argument("--workers", type=int, default=1)
    g.add_argument("-v", "--verbose", action="store_true")
    return common


def build_parser():
    common = _common_parser()
    parser = argparse.ArgumentParser(prog="charpca", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("transform", parents=[common], help="write the lifted (cos; sin) data")
    p.add_argument("input")

    for name, help_ in (("fit", "fit cpca or rpca and report the model"),
                        ("reconstruct", "fit and write the low-rank reconstruction")):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("input")
        p.add_argument("--method", choices=("cpca", "rpca"), default="rpca")

    p = sub.add_parser("eigvals", parents=[common], help="eigenvalues of both methods")
    p.add_argument("input")

    p = sub.add_parser("bench", parents=[common], help="run a simulation scenario")
    p.add_argument("scenario", choices=SCENARIOS)
    p.add_argument("--data", default=None, help="labelled CSV for the classify scenario")
    p.add_argument("--dist", default="normal", help="factor distribution for single-distribution scenarios")
    p.add_argument("--p", dest="dim", type=int, default=None)
    p.add_argument("--sizes", default=None, help='P,N pairs such as "100,100;200,190"')
    p.add_argument("--ns", default=None, help="comma separated sample sizes")
    p.add_argument("--pop-n", type=int, default=None)
    p.add_argument("--pop-reps", type=int, default=None)
    p.add_argument("--holdout", type=int, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--xi", type=float, default=None)
    p.add_argument("--c", type=float, default=None)

    p = sub.add_parser("classify", parents=[common], help="principal logistic regression with repeated splits")
    p.add_argument("input")
    p.add_argument("--test-frac", type=float, default=0.25)
    return parser


def _load(args):
    return load_csv(args.input, columns_are_samples=args.columns_are_samples,
                    label_column=args.label_column, impute_mean=args.impute_mean)


def _out_dir(args):
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _emit_json(obj, args, stem):
    text = json.dumps(obj, indent=2)
    if args.out:
        path = _out_dir(args) / f"{stem}.json"
        path.write_text(text)
        log.info("wrote %s", path)
    else:
        print(text)


def _fit(method, Y, args):
    if method == "cpca":
        return fit_pca(Y, args.gamma)
    return rpca_fit(Y, args.gamma, path=args.path)


def _model_summary(method, model):
    lifted = model if method == "cpca" else model.lifted_model
    return {
        "method": method,
        "selected_rank": int(model.selected_rank),
        "gamma": lifted.threshold,
        "path": lifted.path,
        "total_variance": lifted.total_variance,
        "eigenvalues": lifted.eigenvalues.tolist(),
        "mean": lifted.mean.tolist(),
        "basis": lifted.basis.tolist(),
    }


def cmd_transform(args):
    data = _load(args)
    R = char_transform(data.matrix)
    names = None
    if not args.columns_are_samples:
        names = [f"cos_{v}" for v in data.names] + [f"sin_{v}" for v in data.names]
    path = _out_dir(args) / "lifted.csv"
    save_csv(path, R, names, args.columns_are_samples)
    print(path)
    return EXIT_OK


def cmd_fit(args):
    data = _load(args)
    model = _fit(args.method, data.matrix, args)
    _emit_json(_model_summary(args.method, model), args, f"{args.method}_model")
    return EXIT_OK


def cmd_reconstruct(args):
    data = _load(args)
    Y = data.matrix
    model = _fit(args.method, Y, args)
    if args.method == "cpca":
        Y_hat = reconstruct(model, Y)
    else:
        mode = BranchMode.parse(args.branch or BranchMode.PER_SAMPLE)
        Y_hat = rpca_reconstruct(model, Y, mode, lenient=args.lenient)
    path = _out_dir(args) / f"{args.method}_reconstruction.csv"
    save_csv(path, Y_hat, data.names, args.columns_are_samples)
    print(f"{args.method} k={model.selected_rank} mse={mse(Y, Y_hat):.3f} -> {path}")
    return EXIT_OK


def cmd_eigvals(args):
    data = _load(args)
    Y = data.matrix
    out = {}
    for method in ("cpca", "rpca"):
        model = _fit(method, Y, args)
        out[method] = {"selected_rank": int(model.selected_rank),
                       "eigenvalues": model.eigenvalues.tolist()}
    if args.out and "csv" in args.format:
        cp, rp = out["cpca"]["eigenvalues"], out["rpca"]["eigenvalues"]
        path = _out_dir(args) / "eigvals.csv"
        rows = ["index,cpca,rpca"]
        for i in range(len(rp)):
            a = "%.17g" % cp[i] if i < len(cp) else ""
            rows.append(f"{i + 1},{a},{'%.17g' % rp[i]}")
        path.write_text("\n".join(rows) + "\n")
    if not args.out or "json" in args.format:
        _emit_json(out, args, "eigvals")
    return EXIT_OK


def _pairs(text):
    out = []
    for chunk in text.split(";"):
        a, b = chunk.split(",")
        out.append([int(a), int(b)])
    return out


def config_from_args(args):
    kw = dict(scenario=args.scenario, replicates=args.replicates, seed=args.seed,
              gamma=args.gamma, path=args.path, lenient=args.lenient, workers=args.workers,
              dist=args.dist, data=args.data, label_column=args.label_column,
              columns_are_samples=args.columns_are_samples, impute_mean=args.impute_mean)
    if args.branch:
        kw["branch"] = args.branch
    try:
        if args.sizes:
            kw["sizes"] = _pairs(args.sizes)
        if args.ns:
            kw["ns"] = [int(v) for v in args.ns.split(",")]
    except ValueError as exc:
        raise ConfigError(f"cannot parse size list: {exc}") from None
    for src, dst in (("dim", "p"), ("pop_n", "pop_n"), ("pop_reps", "pop_reps"),
                     ("holdout", "holdout"), ("k", "k"), ("xi", "xi"), ("c", "c")):
        v = getattr(args, src)
        if v is not None:
            kw[dst] = v
    return ExperimentConfig(**kw)


def cmd_bench(args):
    cfg = config_from_args(args)
    report = run_experiment(cfg)
    print(format_table([tuple(r) for r in report.table]))
    print(f"replicates failed: {report.failures}; runtime {report.runtime_seconds:.1f}s")
    if args.out:
        for path in report.write(args.out, args.format):
            log.info("wrote %s", path)
    if report.failed:
        log.error("%.1f%% of replicates failed", 100 * report.failure_fraction)
        return EXIT_FAILURES
    return EXIT_OK


def cmd_classify(args):
    if not args.label_column:
        raise ConfigError("classify needs --label-column")
    if not 0.0 < args.test_frac < 1.0:
        raise ConfigError("--test-frac must lie in (0, 1)")
    data = _load(args)
    ds = LabeledDataset(data.matrix, data.labels, data.label_names)
    result = {}
    for method in ("cpca", "rpca"):
        cv = cross_validate(ds, method, args.gamma, args.test_frac, args.replicates,
                            args.seed, args.path)
        result[method] = {"accuracy_mean": cv.mean,
                          "accuracy_sd": float(np.std(cv.accuracies, ddof=1)) if len(cv.accuracies) > 1 else 0.0,
                          "redraws": cv.redraws, "accuracies": list(cv.accuracies)}
        print(f"{method}: mean accuracy {cv.mean:.3f} over {len(cv.accuracies)} splits")
    if args.out:
        _emit_json(result, args, "classify")
    return EXIT_OK


COMMANDS = {
    "transform": cmd_transform,
    "fit": cmd_fit,
    "reconstruct": cmd_reconstruct,
    "eigvals": cmd_eigvals,
    "bench": cmd_bench,
    "classify": cmd_classify,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.replicates < 1 or args.workers < 1:
        print("error: --replicates and --workers must be positive", file=sys.stderr)
        return EXIT_CONFIG
    if not 0.0 < args.gamma <= 1.0:
        print("error: --gamma must lie in (0, 1]", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IngestionError as exc:
        print(f"ingestion error: {exc}", file=sys.stderr)
        return EXIT_INGEST
    except CharPCAError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MODEL


if __name__ == "__main__":
    sys.exit(main())
