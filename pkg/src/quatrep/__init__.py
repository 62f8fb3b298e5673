"""Quaternion adaptive representation classifiers for colour images.

Quaternion algebra and its real embedding (:mod:`quatrep.quat_core`),
proximal operators (:mod:`quatrep.prox`), the QAR and kernel HD-QAR coders
(:mod:`quatrep.qar`, :mod:`quatrep.hdqar`), ridge and basis-pursuit
baselines (:mod:`quatrep.baselines`), dataset handling (:mod:`quatrep.data`)
and the experiment runner (:mod:`quatrep.experiment`, :mod:`quatrep.cli`).
"""

from __future__ import annotations

from .baselines import QsrcCoder, RidgeCoder, RidgeConfig, classify_baseline, crc_solve, qcrc_solve, qsrc_solve
from .data import (
    Dataset,
    Manifest,
    add_gaussian_noise,
    build_dictionary,
    load_dataset,
    load_image,
    read_manifest,
    split_per_class,
    split_percent,
    synth_correlated,
    to_grayscale,
)
from .errors import ClassificationError, ConfigError, DataError, NumericalError
from .experiment import RunConfig, RunReport, emit_report, run_experiment
from .hdqar import HdqarCoder, classify_hdqar, solve_hdqar
from .kernel import GramMatrix, KernelParams, gram, kvec, median_bandwidth, rbf
from .prox import ProxTolerance, frobenius, l1, l2, linf, nuclear_norm, soft_threshold, svt
from .qar import QarCoder, SolverConfig, SolverTrace, classify_qar, solve_qar
from .quat_core import (
    Quaternion,
    QuaternionMatrix,
    QuaternionVector,
    RealBlockMatrix,
    RealStackVector,
    embed_matrix,
    embed_vector,
    encode_rgb,
    gather_class,
    qadd,
    qconj,
    qmatvec,
    qmod,
    qmul,
    unembed_vector,
)

__all__ = [
    "QsrcCoder",
    "RidgeCoder",
    "RidgeConfig",
    "classify_baseline",
    "crc_solve",
    "qcrc_solve",
    "qsrc_solve",
    "Dataset",
    "Manifest",
    "add_gaussian_noise",
    "build_dictionary",
    "load_dataset",
    "load_image",
    "read_manifest",
    "split_per_class",
    "split_percent",
    "synth_correlated",
    "to_grayscale",
    "ClassificationError",
    "ConfigError",
    "DataError",
    "NumericalError",
    "RunConfig",
    "RunReport",
    "emit_report",
    "run_experiment",
    "HdqarCoder",
    "classify_hdqar",
    "solve_hdqar",
    "GramMatrix",
    "KernelParams",
    "gram",
    "kvec",
    "median_bandwidth",
    "rbf",
    "ProxTolerance",
    "frobenius",
    "l1",
    "l2",
    "linf",
    "nuclear_norm",
    "soft_threshold",
    "svt",
    "QarCoder",
    "SolverConfig",
    "SolverTrace",
    "classify_qar",
    "solve_qar",
    "Quaternion",
    "QuaternionMatrix",
    "QuaternionVector",
    "RealBlockMatrix",
    "RealStackVector",
    "embed_matrix",
    "embed_vector",
    "encode_rgb",
    "gather_class",
    "qadd",
    "qconj",
    "qmatvec",
    "qmod",
    "qmul",
    "unembed_vector",
]

__version__ = "0.1.0"
