"""Repeated randomized recognition trials and their reports.

One trial draws a train/test split, optionally corrupts the test images
with Gaussian noise, builds each method's dictionary (or Gram matrix) from
the training half and classifies every test sample.  Reports are written
without wall-clock data unless timing is requested, so a fixed seed gives
byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .baselines import QsrcCoder, RidgeCoder, RidgeConfig
from .data import (
    RNG_ALGORITHM,
    Dataset,
    add_gaussian_noise,
    build_dictionary,
    load_dataset,
    normalized_stack,
    read_manifest,
    split_per_class,
    split_percent,
    synth_correlated,
    to_grayscale,
)
from .errors import ClassificationError, ConfigError
from .hdqar import HdqarCoder
from .kernel import KernelParams, gram, kvec, median_bandwidth
from .qar import QarCoder, SolverConfig

log = logging.getLogger(__name__)

__all__ = [
    "METHODS",
    "OUTPUT_ENV",
    "SynthSpec",
    "RunConfig",
    "Prediction",
    "TrialResult",
    "RunReport",
    "parse_dataset",
    "resolve_dataset",
    "run_experiment",
    "emit_report",
    "write_outputs",
]

METHODS = ("qar", "hdqar", "qcrc", "qsrc", "crc")
DISPLAY = {"qar": "QAR", "hdqar": "HD-QAR", "qcrc": "QCRC", "qsrc": "QSRC", "crc": "CRC"}
OUTPUT_ENV = "QUATREP_OUTPUT_DIR"


@dataclass(frozen=True)
class SynthSpec:
    classes: int = 4
    per_class: int = 20
    q: int = 32
    corr: float = 0.9
    seed: int = 0
    separation: float = 1.0
    noise: float = 0.05

    def to_string(self) -> str:
        return "synth:" + ",".join(f"{k}={v}" for k, v in asdict(self).items())


def parse_dataset(text: str):
    """``synth:key=value,...`` becomes a :class:`SynthSpec`; anything else is a manifest path."""
    if not text.startswith("synth"):
        return Path(text)
    body = text[len("synth"):].lstrip(":")
    kwargs = {}
    types = {k: type(v) for k, v in asdict(SynthSpec()).items()}
    for item in filter(None, (s.strip() for s in body.split(","))):
        key, _, value = item.partition("=")
        key = key.strip()
        if key not in types:
            raise ConfigError(f"unknown synthetic dataset key {key!r}")
        try:
            kwargs[key] = types[key](value)
        except ValueError as exc:
            raise ConfigError(f"bad value for synthetic key {key!r}: {value!r}") from exc
    return SynthSpec(**kwargs)


@dataclass(frozen=True)
class RunConfig:
    """Everything one ``run`` needs.

    ``split`` is ``("n", values)`` for per-class counts or ``("p", values)``
    for percentages; each value is run for ``trials`` trials.
    """

    dataset: str = "synth"
    methods: tuple[str, ...] = ("qar",)
    split: tuple[str, tuple[float, ...]] = ("n", (5,))
    trials: int = 1
    seed: int = 0
    solver: SolverConfig = field(default_factory=SolverConfig)
    delta: float | str = "median"
    mu: float = 1e-3
    noise: float | None = None
    size: tuple[int, int] = (32, 32)
    grayscale: bool = False
    qar_normalize: bool = False
    jobs: int = 1
    output: str | None = None
    verbose: bool = False
    timing: bool = False

    def __post_init__(self):
        if not self.methods:
            raise ConfigError("at least one method is required")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ConfigError(f"unknown method(s) {bad}; choose from {METHODS}")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        kind, values = self.split
        if kind not in ("n", "p") or not values:
            raise ConfigError(f"bad split specification {self.split!r}")
        if kind == "n" and any(v < 1 or int(v) != v for v in values):
            raise ConfigError("per-class training counts must be positive integers")
        if kind == "p" and any(not 0 < v < 100 for v in values):
            raise ConfigError("percentages must lie in (0, 100)")
        if self.delta != "median" and not (isinstance(self.delta, (int, float)) and self.delta > 0):
            raise ConfigError("delta must be 'median' or a positive number")
        if self.mu < 0:
            raise ConfigError("mu must be non-negative")
        if self.noise is not None and self.noise < 0:
            raise ConfigError("noise sigma must be non-negative")
        if self.jobs < 1:
            raise ConfigError("jobs must be at least 1")

    def output_dir(self) -> Path:
        return Path(self.output or os.environ.get(OUTPUT_ENV) or "quatrep-out")

    def echo(self) -> dict:
        kind, values = self.split
        return {
            "dataset": self.dataset,
            "methods": list(self.methods),
            "split": {"kind": kind, "values": [float(v) if kind == "p" else int(v) for v in values]},
            "trials": self.trials,
            "seed": self.seed,
            "rng": RNG_ALGORITHM,
            "solver": asdict(self.solver),
            "delta": self.delta,
            "mu": self.mu,
            "noise": self.noise,
            "size": list(self.size),
            "grayscale": self.grayscale,
            "qar_normalize": self.qar_normalize,
        }


@dataclass(frozen=True)
class Prediction:
    sample_index: int
    true_label: int
    predicted_label: int
    best_distance: float
    iterations: int
    converged: bool


@dataclass
class TrialResult:
    method: str
    trial: int
    setting: float
    accuracy: float
    mean_iters: float
    wall_ms: float
    n_test: int
    nonconverged: int
    failures: int
    delta: float | None = None
    predictions: list[Prediction] = field(default_factory=list, repr=False)


@dataclass
class RunReport:
    config: dict
    trials: list[TrialResult] = field(default_factory=list)

    @property
    def methods(self) -> list[str]:
        seen = []
        for t in self.trials:
            if t.method not in seen:
                seen.append(t.method)
        return seen

    def summary(self) -> dict[str, dict[str, float]]:
        """Mean and population standard deviation of accuracy per method."""
        out = {}
        for m in self.methods:
            acc = np.array([t.accuracy for t in self.trials if t.method == m])
            its = np.array([t.mean_iters for t in self.trials if t.method == m])
            out[m] = {
                "mean": float(acc.mean()),
                "std": float(acc.std()),
                "mean_iters": float(its.mean()),
                "trials": int(acc.size),
            }
        return out

    def to_dict(self, timing: bool = False) -> dict:
        rows = []
        for t in self.trials:
            row = {k: v for k, v in asdict(t).items() if k != "predictions"}
            if not timing:
                row.pop("wall_ms")
            rows.append(row)
        return {"config": self.config, "trials": rows, "summary": self.summary()}


def resolve_dataset(cfg: RunConfig) -> Dataset:
    spec = parse_dataset(cfg.dataset)
    if isinstance(spec, SynthSpec):
        ds = synth_correlated(spec.classes, spec.per_class, spec.q, spec.corr, spec.seed,
                              separation=spec.separation, noise=spec.noise)
    else:
        ds = load_dataset(read_manifest(spec, cfg.size), jobs=cfg.jobs)
    return to_grayscale(ds) if cfg.grayscale else ds


def _split(ds: Dataset, kind: str, value: float, rng) -> tuple[Dataset, Dataset]:
    """Fixed train/test rows are kept; ``auto`` rows go through the split operation."""
    fixed_train = ds.subset(np.flatnonzero(ds.splits == "train"), "train")
    fixed_test = ds.subset(np.flatnonzero(ds.splits == "test"), "test")
    auto = np.flatnonzero(ds.splits == "auto")
    if auto.size == 0:
        return fixed_train, fixed_test
    pool = ds.subset(auto)
    if kind == "n":
        tr, te = split_per_class(pool, int(value), rng)
    else:
        tr, te = split_percent(pool, float(value), rng)
    return Dataset.concat(fixed_train, tr), Dataset.concat(fixed_test, te)


def _make_predictor(method: str, train: Dataset, cfg: RunConfig):
    """Return ``(predict(i, y_stack), delta)`` for one method and training set."""
    if method in ("qar", "qsrc", "qcrc"):
        D = build_dictionary(train)
        if method == "qar":
            coder = QarCoder(D, cfg.solver, normalize=cfg.qar_normalize)
        elif method == "qsrc":
            coder = QsrcCoder(D, cfg.solver)
        else:
            coder = RidgeCoder(D, RidgeConfig(cfg.mu), normalized=True)
        return coder.predict, None
    if method == "crc":
        X = train.parts[:, 1:, :].reshape(len(train), -1)
        X = X / np.maximum(np.linalg.norm(X, axis=1, keepdims=True), np.finfo(float).tiny)
        coder = RidgeCoder(X.T, RidgeConfig(cfg.mu), labels=train.labels, normalized=True)
        q = train.q

        def predict_crc(y):
            return coder.predict(y.reshape(4, q)[1:].ravel())
        return predict_crc, None
    # hdqar
    Xtr = normalized_stack(train)
    params = median_bandwidth(Xtr) if cfg.delta == "median" else KernelParams(float(cfg.delta))
    coder = HdqarCoder(gram(Xtr, params, train.labels), cfg.solver)

    def predict_hd(y):
        return coder.predict(kvec(Xtr, y, params))
    return predict_hd, params.delta


def _classify_all(predict, test: Dataset, jobs: int) -> list[Prediction]:
    Y = normalized_stack(test)

    def one(i: int) -> Prediction:
        try:
            label, distances, trace = predict(Y[i])
        except ClassificationError:
            return Prediction(i, int(test.labels[i]), -1, math.inf, 0, False)
        iters = trace.iterations if trace is not None else 0
        conv = trace.converged if trace is not None else True
        return Prediction(i, int(test.labels[i]), int(label), float(distances[label]), iters, conv)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(one, range(len(test))))
    return [one(i) for i in range(len(test))]


def run_experiment(cfg: RunConfig, ds: Dataset | None = None) -> RunReport:
    """Run every (split setting, trial, method) combination.

    Trial seeds come from ``SeedSequence([seed, setting_index, trial])`` so
    results do not depend on execution order.
    """
    ds = resolve_dataset(cfg) if ds is None else ds
    if ds.n_classes < 2:
        raise ConfigError("classification needs at least two classes")
    report = RunReport(cfg.echo())
    kind, values = cfg.split
    trial_no = 0
    for s_idx, value in enumerate(values):
        for t in range(cfg.trials):
            split_ss, noise_ss = np.random.SeedSequence([cfg.seed, s_idx, t]).spawn(2)
            train, test = _split(ds, kind, value, np.random.Generator(np.random.PCG64(split_ss)))
            if len(train) == 0 or len(test) == 0:
                raise ConfigError(f"split {kind}={value} leaves an empty train or test set")
            if cfg.noise:
                test = add_gaussian_noise(test, cfg.noise, np.random.Generator(np.random.PCG64(noise_ss)))
            for method in cfg.methods:
                t0 = time.perf_counter()
                predict, delta = _make_predictor(method, train, cfg)
                preds = _classify_all(predict, test, cfg.jobs)
                wall = (time.perf_counter() - t0) * 1e3
                correct = sum(p.predicted_label == p.true_label for p in preds)
                res = TrialResult(
                    method=method,
                    trial=trial_no,
                    setting=float(value),
                    accuracy=correct / len(preds),
                    mean_iters=float(np.mean([p.iterations for p in preds])),
                    wall_ms=wall,
                    n_test=len(preds),
                    nonconverged=sum(not p.converged for p in preds),
                    failures=sum(p.predicted_label == -1 for p in preds),
                    delta=delta,
                    predictions=preds,
                )
                log.info("%s %s=%s trial %d: accuracy %.4f (%d/%d), %d non-converged",
                         method, kind, value, t, res.accuracy, correct, len(preds), res.nonconverged)
                report.trials.append(res)
            trial_no += 1
    return report


def _csv_text(report: RunReport, timing: bool) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["method", "trial", "accuracy", "mean_iters", "wall_ms"])
    for t in report.trials:
        w.writerow([t.method, t.trial, f"{t.accuracy:.6f}", f"{t.mean_iters:.2f}",
                    f"{t.wall_ms:.1f}" if timing else ""])
    for m, s in report.summary().items():
        walls = [t.wall_ms for t in report.trials if t.method == m]
        w.writerow([m, "mean", f"{s['mean']:.6f}", f"{s['mean_iters']:.2f}",
                    f"{np.mean(walls):.1f}" if timing else ""])
    return buf.getvalue()


def _markdown_text(report: RunReport) -> str:
    settings = []
    for t in report.trials:
        if t.setting not in settings:
            settings.append(t.setting)
    kind = report.config.get("split", {}).get("kind", "n")
    fmt = (lambda v: f"n={int(v)}") if kind == "n" else (lambda v: f"p={v:g}%")
    head = ["Methods"] + [fmt(v) for v in settings] + ["Mean Recognition Rate", "Std"]
    lines = ["| " + " | ".join(head) + " |", "|" + "|".join(["---"] + [":---:"] * (len(head) - 1)) + "|"]
    for m, s in report.summary().items():
        cells = [DISPLAY.get(m, m)]
        for v in settings:
            acc = [t.accuracy for t in report.trials if t.method == m and t.setting == v]
            cells.append(f"{100 * np.mean(acc):.2f}")
        cells += [f"{100 * s['mean']:.2f}", f"{100 * s['std']:.2f}"]
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def emit_report(report: RunReport, path, fmt: str = "csv", timing: bool = False) -> Path:
    """Write the report as ``csv`` or ``markdown`` and return the path."""
    path = Path(path)
    if fmt == "csv":
        text = _csv_text(report, timing)
    elif fmt in ("markdown", "md"):
        text = _markdown_text(report)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    path.write_text(text, encoding="utf-8")
    return path


def write_outputs(report: RunReport, cfg: RunConfig) -> Path:
    """Write ``report.csv``, ``report.md``, ``report.json`` and, in verbose
    mode, one prediction log per (method, trial)."""
    out = cfg.output_dir()
    out.mkdir(parents=True, exist_ok=True)
    emit_report(report, out / "report.csv", "csv", cfg.timing)
    emit_report(report, out / "report.md", "markdown")
    (out / "report.json").write_text(
        json.dumps(report.to_dict(cfg.timing), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    if cfg.verbose:
        for t in report.trials:
            with open(out / f"predictions_{t.method}_trial{t.trial}.csv", "w", newline="",
                      encoding="utf-8") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["sample_index", "true_label", "predicted_label", "best_distance"])
                for p in t.predictions:
                    w.writerow([p.sample_index, p.true_label, p.predicted_label, f"{p.best_distance:.10g}"])
    return out
