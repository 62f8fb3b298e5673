"""Command-line entry point: ``quatrep run | check | info``.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 numerical
failure (including a failed ``check``).
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError, NumericalError
from .experiment import METHODS, OUTPUT_ENV, RunConfig, resolve_dataset, run_experiment, write_outputs
from .qar import SolverConfig

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

# Keys accepted in a --config file (flat ``key = value``); flags override them.
CONFIG_KEYS = (
    "dataset", "methods", "n_train", "percent", "trials", "seed", "lam", "u0", "rho", "u_max",
    "eps", "max_iter", "delta", "mu", "noise", "size", "grayscale", "qar_normalize", "jobs",
    "output", "verbose", "timing",
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def read_config_file(path) -> dict:
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc}") from exc
    for n, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep:
            raise ConfigError(f"{path}:{n}: expected 'key = value'")
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{path}:{n}: unknown key {key!r}")
        out[key] = value.strip()
    return out


def _bool(value) -> bool:
    if isinstance(value, bool):
        return value
    v = str(value).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {value!r}")


def _numbers(text, cast):
    try:
        return tuple(cast(v) for v in str(text).split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"bad number list {text!r}") from exc


def build_run_config(args: argparse.Namespace) -> RunConfig:
    """Merge config file values with command-line flags (flags win)."""
    values = read_config_file(args.config) if args.config else {}
    for key in CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None and flag is not False:
            values[key] = flag

    try:
        if "n_train" in values and "percent" in values:
            raise ConfigError("give either n_train or percent, not both")
        if "percent" in values:
            split = ("p", _numbers(values["percent"], float))
        else:
            split = ("n", _numbers(values.get("n_train", "5"), int))
        solver_kw = {}
        for key, cast in (("lam", float), ("u0", float), ("rho", float), ("u_max", float),
                          ("eps", float), ("max_iter", int)):
            if key in values:
                solver_kw[key] = cast(values[key])
        solver = SolverConfig(**solver_kw)
        delta = values.get("delta", "median")
        if delta != "median":
            delta = float(delta)
        size = values.get("size", "32x32")
        if isinstance(size, str):
            h, _, w = size.lower().partition("x")
            size = (int(h), int(w or h))
        methods = values.get("methods", "qar")
        if isinstance(methods, str):
            methods = tuple(m.strip() for m in methods.split(",") if m.strip())
        noise = values.get("noise")
        return RunConfig(
            dataset=str(values.get("dataset", "synth")),
            methods=tuple(methods),
            split=split,
            trials=int(values.get("trials", 1)),
            seed=int(values.get("seed", 0)),
            solver=solver,
            delta=delta,
            mu=float(values.get("mu", 1e-3)),
            noise=None if noise in (None, "", "none") else float(noise),
            size=size,
            grayscale=_bool(values.get("grayscale", False)),
            qar_normalize=_bool(values.get("qar_normalize", False)),
            jobs=int(values.get("jobs", 1)),
            output=values.get("output"),
            verbose=_bool(values.get("verbose", False)),
            timing=_bool(values.get("timing", False)),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def cmd_run(args) -> int:
    cfg = build_run_config(args)
    t0 = time.perf_counter()
    report = run_experiment(cfg)
    out = write_outputs(report, cfg)
    for method, s in report.summary().items():
        print(f"{method:6s} mean accuracy {100 * s['mean']:6.2f}%  std {100 * s['std']:5.2f}  "
              f"({s['trials']} trials, {s['mean_iters']:.1f} mean iterations)")
    noncon = sum(t.nonconverged for t in report.trials)
    if noncon:
        print(f"note: {noncon} solver runs stopped at max_iter without converging")
    print(f"report written to {out} in {time.perf_counter() - t0:.1f}s")
    return EXIT_OK


def cmd_info(args) -> int:
    cfg = build_run_config(args)
    ds = resolve_dataset(cfg)
    print(f"dataset: {cfg.dataset}")
    print(f"samples: {len(ds)}  classes: {ds.n_classes}  q (pixels): {ds.q}  image: {ds.image_shape}")
    splits = {s: int(np.sum(ds.splits == s)) for s in ("train", "test", "auto")}
    print("splits: " + "  ".join(f"{k}={v}" for k, v in splits.items()))
    counts = ds.class_counts()
    sizes = np.array(list(counts.values()))
    print(f"per class: min {sizes.min()}  max {sizes.max()}  mean {sizes.mean():.2f}")
    for c, n in counts.items():
        print(f"  {ds.class_names[c]}: {n}")
    return EXIT_OK


def cmd_check(args) -> int:
    from . import checks

    results = checks.run_all(args.instances, args.seed)
    ok = True
    for name, passed, detail in results:
        ok &= passed
        print(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")
    return EXIT_OK if ok else EXIT_NUMERIC


def make_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="quatrep", description="Quaternion adaptive representation classifiers.")
    p.add_argument("-q", "--quiet", action="store_true", help="only print warnings")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def dataset_args(sp):
        sp.add_argument("--config", help="flat key=value config file; flags override it")
        sp.add_argument("--dataset", help="manifest CSV path or synth:classes=..,per_class=..,q=..,corr=..")
        sp.add_argument("--size", help="image size HxW for manifest datasets (default 32x32)")
        sp.add_argument("--grayscale", action="store_true", default=None,
                        help="collapse colour channels to their mean before coding")
        sp.add_argument("--jobs", type=int, help="worker threads for loading and coding")

    run = sub.add_parser("run", help="run repeated recognition trials")
    dataset_args(run)
    run.add_argument("--methods", help=f"comma list from {','.join(METHODS)}")
    g = run.add_mutually_exclusive_group()
    g.add_argument("--n-train", dest="n_train", help="training images per class (comma list sweeps)")
    g.add_argument("--percent", help="training percentage per class (comma list sweeps)")
    run.add_argument("--trials", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--lam", type=float, help="trace-norm weight")
    run.add_argument("--u0", type=float)
    run.add_argument("--rho", type=float)
    run.add_argument("--u-max", dest="u_max", type=float)
    run.add_argument("--eps", type=float)
    run.add_argument("--max-iter", dest="max_iter", type=int)
    run.add_argument("--delta", help="RBF bandwidth or 'median'")
    run.add_argument("--mu", type=float, help="ridge weight for crc/qcrc")
    run.add_argument("--noise", type=float, help="Gaussian noise sigma added to test images")
    run.add_argument("--qar-normalize", dest="qar_normalize", action="store_true", default=None,
                     help="divide QAR class residuals by the class code norm")
    run.add_argument("--output", help=f"output directory (default ${OUTPUT_ENV} or ./quatrep-out)")
    run.add_argument("--verbose", action="store_true", default=None,
                     help="also write per-sample prediction logs")
    run.add_argument("--timing", action="store_true", default=None,
                     help="record wall times in the report (breaks byte-identical reruns)")
    run.set_defaults(func=cmd_run)

    info = sub.add_parser("info", help="print dataset statistics")
    dataset_args(info)
    info.set_defaults(func=cmd_info)

    check = sub.add_parser("check", help="run the invariant suite on random instances")
    check.add_argument("--instances", type=int, default=100)
    check.add_argument("--seed", type=int, default=0)
    check.set_defaults(func=cmd_check)
    return p


def main(argv=None) -> int:
    try:
        args = make_parser().parse_args(argv)
    except ConfigError as exc:
        print(f"quatrep: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"quatrep: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"quatrep: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"quatrep: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
