"""Datasets of colour images encoded as pure quaternions.

Images are listed in a CSV manifest with header ``path,label,split``.
Relative paths resolve against the manifest's directory; ``split`` is
``train``, ``test`` or ``auto`` (left to the run's split operation).  Each
image is converted to RGB, resized bilinearly, scaled to ``[0, 1]`` and
flattened row-major into the ``i``, ``j``, ``k`` parts of a quaternion
vector with zero real part.
"""

from __future__ import annotations

import csv
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DataError
from .quat_core import QuaternionMatrix, QuaternionVector, RealBlockMatrix, embed_matrix, encode_rgb

__all__ = [
    "RNG_ALGORITHM",
    "ManifestRow",
    "Manifest",
    "Dataset",
    "read_manifest",
    "load_image",
    "load_dataset",
    "split_per_class",
    "split_percent",
    "add_gaussian_noise",
    "to_grayscale",
    "synth_correlated",
    "build_dictionary",
    "normalized_stack",
    "make_rng",
]

RNG_ALGORITHM = "numpy.random.PCG64"
SPLITS = ("train", "test", "auto")
DEFAULT_SIZE = (32, 32)


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class ManifestRow:
    path: Path
    label: str
    split: str
    line: int


@dataclass(frozen=True)
class Manifest:
    rows: tuple[ManifestRow, ...]
    root: Path
    size: tuple[int, int] = DEFAULT_SIZE
    source: Path | None = None


def read_manifest(path, size: tuple[int, int] = DEFAULT_SIZE) -> Manifest:
    """Parse a ``path,label,split`` CSV manifest.

    Raises
    ------
    DataError
        On a missing header, an unknown split value or an empty manifest.
        Messages carry ``file:line`` context.
    """
    path = Path(path)
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"{path}: cannot open manifest: {exc}") from exc
    rows = []
    with fh:
        reader = csv.DictReader(fh)
        header = [h.strip() for h in (reader.fieldnames or [])]
        if header[:3] != ["path", "label", "split"]:
            raise DataError(f"{path}:1: expected header 'path,label,split', got {','.join(header)!r}")
        for rec in reader:
            line = reader.line_num
            split = (rec.get("split") or "").strip().lower()
            if split not in SPLITS:
                raise DataError(f"{path}:{line}: split must be one of {SPLITS}, got {split!r}")
            rel = (rec.get("path") or "").strip()
            label = (rec.get("label") or "").strip()
            if not rel or not label:
                raise DataError(f"{path}:{line}: empty path or label")
            rows.append(ManifestRow(Path(rel), label, split, line))
    if not rows:
        raise DataError(f"{path}: manifest lists no images")
    h, w = size
    if h < 1 or w < 1:
        raise DataError(f"image size must be positive, got {size}")
    return Manifest(tuple(rows), path.parent, (int(h), int(w)), path)


@dataclass(frozen=True)
class Dataset:
    """Labelled quaternion samples.

    Attributes
    ----------
    parts : ndarray, shape (n, 4, q)
        Quaternion parts of every sample (part 0 is the real part).
    labels : ndarray of int, shape (n,)
        Contiguous class indices ``0 .. M-1``.
    splits : ndarray of str, shape (n,)
        ``train``, ``test`` or ``auto`` per sample.
    class_names : tuple of str
        Original label of each class index.
    """

    parts: np.ndarray
    labels: np.ndarray
    splits: np.ndarray
    class_names: tuple[str, ...]
    image_shape: tuple[int, int] | None = None
    seed: int | None = None
    paths: tuple[str, ...] | None = field(default=None, repr=False)

    def __post_init__(self):
        parts = np.array(self.parts, dtype=float)
        if parts.ndim != 3 or parts.shape[1] != 4:
            raise ValueError(f"parts must have shape (n, 4, q), got {parts.shape}")
        labels = np.array(self.labels, dtype=int)
        splits = np.array(self.splits, dtype="<U5")
        if labels.shape != (parts.shape[0],) or splits.shape != (parts.shape[0],):
            raise ValueError("labels and splits need one entry per sample")
        for a in (parts, labels, splits):
            a.setflags(write=False)
        object.__setattr__(self, "parts", parts)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "splits", splits)

    def __len__(self) -> int:
        return self.parts.shape[0]

    @property
    def q(self) -> int:
        return self.parts.shape[2]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    @property
    def samples(self) -> list[tuple[QuaternionVector, int]]:
        return [(self.sample(i), int(self.labels[i])) for i in range(len(self))]

    def sample(self, i: int) -> QuaternionVector:
        return QuaternionVector(self.parts[i])

    def stacked(self) -> np.ndarray:
        """``(n, 4q)`` array of stacked real vectors."""
        return self.parts.reshape(len(self), -1)

    def class_counts(self) -> dict[int, int]:
        return {c: int(np.sum(self.labels == c)) for c in range(self.n_classes)}

    def subset(self, idx, split: str | None = None) -> "Dataset":
        idx = np.asarray(idx, dtype=int)
        splits = self.splits[idx] if split is None else np.full(idx.size, split)
        paths = None if self.paths is None else tuple(self.paths[i] for i in idx)
        return replace(self, parts=self.parts[idx], labels=self.labels[idx], splits=splits, paths=paths)

    def with_parts(self, parts) -> "Dataset":
        return replace(self, parts=parts)

    @staticmethod
    def concat(a: "Dataset", b: "Dataset") -> "Dataset":
        if a.class_names != b.class_names or a.q != b.q:
            raise ValueError("datasets are not compatible")
        paths = None if a.paths is None or b.paths is None else a.paths + b.paths
        return replace(a, parts=np.concatenate([a.parts, b.parts]),
                       labels=np.concatenate([a.labels, b.labels]),
                       splits=np.concatenate([a.splits, b.splits]), paths=paths)


def load_image(path, size: tuple[int, int]) -> QuaternionVector:
    """Decode one image file into a pure-quaternion vector of length h*w."""
    try:
        with Image.open(path) as img:
            img.load()
            if img.mode != "RGB":
                img = img.convert("RGB")
            h, w = size
            if img.size != (w, h):
                img = img.resize((w, h), Image.Resampling.BILINEAR)
            arr = np.asarray(img, dtype=np.uint8)
    except (OSError, UnidentifiedImageError, ValueError) as exc:
        raise DataError(f"cannot read image {path}: {exc}") from exc
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise DataError(f"{path}: decoded to shape {arr.shape}, expected RGB")
    rgb = arr.astype(float) / 255.0
    return encode_rgb(rgb[:, :, 0].ravel(), rgb[:, :, 1].ravel(), rgb[:, :, 2].ravel())


def load_dataset(manifest: Manifest, jobs: int = 1) -> Dataset:
    """Decode every image in a manifest.

    Labels are remapped to contiguous indices in sorted order of their
    string value.  Atom normalisation is not applied here; see
    :func:`build_dictionary`.
    """
    names = tuple(sorted({r.label for r in manifest.rows}))
    index = {n: i for i, n in enumerate(names)}
    src = manifest.source or manifest.root

    def _load(row: ManifestRow):
        p = row.path if row.path.is_absolute() else manifest.root / row.path
        if not p.is_file():
            raise DataError(f"{src}:{row.line}: image not found: {p}")
        try:
            return load_image(p, manifest.size).parts
        except DataError as exc:
            raise DataError(f"{src}:{row.line}: {exc}") from exc

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_load, manifest.rows))
    else:
        parts = [_load(r) for r in manifest.rows]
    return Dataset(
        parts=np.stack(parts),
        labels=np.array([index[r.label] for r in manifest.rows]),
        splits=np.array([r.split for r in manifest.rows]),
        class_names=names,
        image_shape=manifest.size,
        paths=tuple(str(r.path) for r in manifest.rows),
    )


def _per_class_split(ds: Dataset, counts: dict[int, int], seed):
    rng = make_rng(seed)
    train_idx, test_idx = [], []
    for c in range(ds.n_classes):
        idx = np.flatnonzero(ds.labels == c)
        if idx.size == 0:
            continue
        chosen = np.sort(rng.choice(idx, size=counts[c], replace=False))
        train_idx.append(chosen)
        test_idx.append(np.setdiff1d(idx, chosen))
    train_idx = np.concatenate(train_idx) if train_idx else np.array([], dtype=int)
    test_idx = np.concatenate(test_idx) if test_idx else np.array([], dtype=int)
    return ds.subset(train_idx, "train"), ds.subset(test_idx, "test")


def split_per_class(ds: Dataset, n_train: int, seed=None):
    """Draw ``n_train`` training samples per class; the rest are test samples.

    Raises
    ------
    DataError
        If some class has ``n_train`` samples or fewer.
    """
    if n_train < 1:
        raise DataError("n_train must be at least 1")
    counts = ds.class_counts()
    for c, n in counts.items():
        if 0 < n <= n_train:
            raise DataError(f"class {ds.class_names[c]!r} has {n} samples; need more than {n_train}")
    return _per_class_split(ds, {c: n_train for c in counts}, seed)


def split_percent(ds: Dataset, p: float, seed=None):
    """Per-class percentage split.

    Each class contributes ``round(p * Nc / 100)`` training samples (halves
    rounded up), clamped to ``[1, Nc - 1]``.
    """
    if not 0 < p < 100:
        raise DataError(f"percentage must lie in (0, 100), got {p}")
    counts = {}
    for c, n in ds.class_counts().items():
        if n == 0:
            continue
        if n < 2:
            raise DataError(f"class {ds.class_names[c]!r} has {n} sample; cannot split")
        counts[c] = min(max(math.floor(p * n / 100 + 0.5), 1), n - 1)
    return _per_class_split(ds, counts, seed)


def add_gaussian_noise(ds: Dataset, sigma: float, seed=None) -> Dataset:
    """Add N(0, sigma^2) noise to the colour channels of test samples.

    Training samples are returned untouched; noisy values are clamped to
    ``[0, 1]``.
    """
    if not sigma >= 0:
        raise ValueError("sigma must be non-negative")
    if sigma == 0:
        return ds
    rng = make_rng(seed)
    parts = ds.parts.copy()
    test = np.flatnonzero(ds.splits == "test")
    noisy = parts[test, 1:, :] + rng.normal(0.0, sigma, size=(test.size, 3, ds.q))
    parts[test, 1:, :] = np.clip(noisy, 0.0, 1.0)
    return ds.with_parts(parts)


def to_grayscale(ds: Dataset) -> Dataset:
    """Replace every colour channel by the mean of the three."""
    parts = ds.parts.copy()
    parts[:, 1:, :] = parts[:, 1:, :].mean(axis=1, keepdims=True)
    return ds.with_parts(parts)


def synth_correlated(classes: int, per_class: int, q: int, channel_corr: float, seed=None,
                     separation: float = 1.0, noise: float = 0.05) -> Dataset:
    """Synthetic colour data with tunable cross-channel correlation.

    Every class has a shared mean (common to the three channels) and a
    chroma offset per channel that sums to zero over the channels, so it is
    invisible after averaging to grey.  Channel ``c`` of a sample is

        shared + (1 - corr) * chroma[c] + noise * (corr * xi + (1 - corr) * e[c])

    with one latent ``xi`` shared by the channels and independent ``e[c]``,
    clipped to ``[0, 1]``.  ``separation`` scales how far apart the shared
    class means lie; at ``channel_corr = 1`` the three channels coincide.
    """
    if classes < 1 or per_class < 1 or q < 1:
        raise ValueError("classes, per_class and q must be positive")
    if not 0 <= channel_corr <= 1:
        raise ValueError("channel_corr must lie in [0, 1]")
    if per_class < 2:
        warnings.warn("per_class=1 leaves no sample to test on; splits will fail", UserWarning,
                      stacklevel=2)
    rng = make_rng(seed)
    corr = float(channel_corr)
    base = rng.uniform(0.3, 0.7, size=q)
    parts = np.zeros((classes * per_class, 4, q))
    labels = np.repeat(np.arange(classes), per_class)
    for m in range(classes):
        shared = base + separation * 0.15 * rng.standard_normal(q)
        chroma = 0.15 * rng.standard_normal((3, q))
        chroma -= chroma.mean(axis=0)
        mean = shared + (1.0 - corr) * chroma
        for n in range(per_class):
            xi = rng.standard_normal(q)
            e = rng.standard_normal((3, q))
            x = mean + noise * (corr * xi + (1.0 - corr) * e)
            parts[m * per_class + n, 1:, :] = np.clip(x, 0.0, 1.0)
    return Dataset(parts, labels, np.full(labels.size, "auto"),
                   tuple(f"class{m}" for m in range(classes)), (1, q),
                   seed if isinstance(seed, int) else None)


def normalized_stack(ds: Dataset) -> np.ndarray:
    """Stacked sample vectors scaled to unit l2 norm (zero vectors kept)."""
    X = ds.stacked()
    norms = np.linalg.norm(X, axis=1, keepdims=True)
    return np.divide(X, norms, out=np.zeros_like(X), where=norms > 0)


def build_dictionary(train: Dataset) -> RealBlockMatrix:
    """Block embedding of the training samples with unit-norm atoms.

    Every embedded column of a quaternion atom has the norm of the atom,
    so scaling atoms to unit norm makes all 4L real columns unit vectors.
    """
    X = normalized_stack(train).reshape(len(train), 4, train.q)
    return embed_matrix(QuaternionMatrix(np.transpose(X, (1, 2, 0)), train.labels))
