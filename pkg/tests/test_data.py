from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from PIL import Image

from quatrep.data import (
    RNG_ALGORITHM,
    Dataset,
    add_gaussian_noise,
    build_dictionary,
    load_dataset,
    load_image,
    make_rng,
    normalized_stack,
    read_manifest,
    split_per_class,
    split_percent,
    synth_correlated,
    to_grayscale,
)
from quatrep.errors import DataError

DATA = Path(__file__).parent / "data"

# Pixel table of the committed 2x2 fixture, row-major:
#   (0,0) = (255, 0, 0)    (0,1) = (0, 128, 255)
#   (1,0) = (10, 20, 30)   (1,1) = (255, 255, 255)
FIXTURE_R = [1.0, 0.0, 10 / 255, 1.0]
FIXTURE_G = [0.0, 128 / 255, 20 / 255, 1.0]
FIXTURE_B = [0.0, 1.0, 30 / 255, 1.0]


def make_dataset(counts, q=3, seed=0):
    rng = np.random.default_rng(seed)
    labels = np.repeat(np.arange(len(counts)), counts)
    parts = np.zeros((labels.size, 4, q))
    parts[:, 1:, :] = rng.uniform(0.2, 0.8, size=(labels.size, 3, q))
    return Dataset(parts, labels, np.full(labels.size, "auto"), tuple(f"c{i}" for i in range(len(counts))))


def write_image(path, pixels, mode="RGB"):
    Image.fromarray(np.asarray(pixels, dtype=np.uint8), mode).save(path)
    return path


# -- image decoding ---------------------------------------------------------

@pytest.mark.parametrize("name", ["fixture_2x2.png", "fixture_2x2.ppm"])
def test_fixture_pixel_table(name):
    v = load_image(DATA / name, (2, 2))
    np.testing.assert_array_equal(v.v0, 0.0)
    np.testing.assert_allclose(v.v1, FIXTURE_R, atol=1e-15)
    np.testing.assert_allclose(v.v2, FIXTURE_G, atol=1e-15)
    np.testing.assert_allclose(v.v3, FIXTURE_B, atol=1e-15)


def test_pure_red_pixel(tmp_path):
    v = load_image(write_image(tmp_path / "red.png", [[(255, 0, 0)]]), (1, 1))
    assert (list(v.v0), list(v.v1), list(v.v2), list(v.v3)) == ([0.0], [1.0], [0.0], [0.0])


def test_grayscale_input_replicated():
    v = load_image(DATA / "gray_1x2.png", (1, 2))
    for part in (v.v1, v.v2, v.v3):
        np.testing.assert_allclose(part, [0.0, 0.2], atol=1e-15)


def test_resize_is_bilinear(tmp_path):
    px = np.random.default_rng(3).integers(0, 256, size=(6, 8, 3))
    path = write_image(tmp_path / "big.png", px)
    v = load_image(path, (3, 4))
    ref = np.asarray(Image.fromarray(px.astype(np.uint8)).resize((4, 3), Image.Resampling.BILINEAR)) / 255
    np.testing.assert_allclose(v.v1, ref[:, :, 0].ravel(), atol=1e-15)
    np.testing.assert_allclose(v.v3, ref[:, :, 2].ravel(), atol=1e-15)


def test_unreadable_image(tmp_path):
    bad = tmp_path / "bad.png"
    bad.write_bytes(b"not an image")
    with pytest.raises(DataError):
        load_image(bad, (2, 2))


# -- manifests --------------------------------------------------------------

def write_manifest(tmp_path, rows, header="path,label,split"):
    path = tmp_path / "manifest.csv"
    path.write_text("\n".join([header] + rows) + "\n", encoding="utf-8")
    return path


def image_set(tmp_path, counts, size=(2, 2), seed=0):
    rng = np.random.default_rng(seed)
    (tmp_path / "img").mkdir(exist_ok=True)
    rows = []
    for c, n in enumerate(counts):
        for i in range(n):
            name = f"img/{'zyx'[c]}_{i}.png"
            write_image(tmp_path / name, rng.integers(0, 256, size=(*size, 3)))
            rows.append(f"{name},{'zyx'[c]},auto")
    return rows


def test_manifest_roundtrip_and_label_remap(tmp_path):
    rows = image_set(tmp_path, [2, 3])
    ds = load_dataset(read_manifest(write_manifest(tmp_path, rows), (2, 2)))
    assert len(ds) == 5 and ds.q == 4
    assert ds.class_names == ("y", "z")
    np.testing.assert_array_equal(ds.labels, [1, 1, 0, 0, 0])
    assert set(ds.splits) == {"auto"}


def test_manifest_paths_resolve_against_manifest_dir(tmp_path, monkeypatch):
    rows = image_set(tmp_path, [2, 2])
    manifest = write_manifest(tmp_path, rows)
    monkeypatch.chdir("/")
    assert len(load_dataset(read_manifest(manifest, (2, 2)))) == 4


def test_load_is_deterministic_and_parallel_safe(tmp_path):
    rows = image_set(tmp_path, [3, 3, 3])
    m = read_manifest(write_manifest(tmp_path, rows), (2, 2))
    a, b, c = load_dataset(m), load_dataset(m), load_dataset(m, jobs=4)
    assert a.parts.tobytes() == b.parts.tobytes() == c.parts.tobytes()
    np.testing.assert_array_equal(a.labels, c.labels)


def test_manifest_errors_carry_line(tmp_path):
    with pytest.raises(DataError, match="manifest.csv:1"):
        read_manifest(write_manifest(tmp_path, ["a.png,x,auto"], header="file,label,split"))
    with pytest.raises(DataError, match="manifest.csv:3"):
        read_manifest(write_manifest(tmp_path, ["a.png,x,auto", "b.png,y,validation"]))
    with pytest.raises(DataError):
        read_manifest(write_manifest(tmp_path, []))
    with pytest.raises(DataError):
        read_manifest(tmp_path / "missing.csv")
    m = read_manifest(write_manifest(tmp_path, ["a.png,x,auto", "gone.png,y,train"]), (2, 2))
    with pytest.raises(DataError, match="manifest.csv:2"):
        load_dataset(m)


def test_dataset_is_immutable():
    ds = make_dataset([2, 2])
    with pytest.raises(ValueError):
        ds.parts[0, 0, 0] = 1.0


# -- splits -----------------------------------------------------------------

def test_split_all_but_one():
    train, test = split_per_class(make_dataset([4, 4, 4]), 3, seed=1)
    assert test.class_counts() == {0: 1, 1: 1, 2: 1}
    assert len(train) == 9


def test_split_deterministic():
    ds = make_dataset([5, 6, 7])
    a = split_per_class(ds, 2, seed=11)
    b = split_per_class(ds, 2, seed=11)
    for x, y in zip(a, b):
        assert x.parts.tobytes() == y.parts.tobytes()


def test_split_counts_ten_by_six():
    train, test = split_per_class(make_dataset([6] * 10), 2, seed=0)
    assert (len(train), len(test)) == (20, 40)
    assert set(train.class_counts().values()) == {2}
    assert set(test.class_counts().values()) == {4}
    assert set(train.splits) == {"train"} and set(test.splits) == {"test"}


def test_split_class_too_small():
    with pytest.raises(DataError):
        split_per_class(make_dataset([3, 2]), 2, seed=0)


def test_percent_split_examples():
    train, test = split_percent(make_dataset([5, 5]), 80, seed=0)
    assert test.class_counts() == {0: 1, 1: 1}
    a, b = split_percent(make_dataset([7, 9]), 30, seed=4), split_percent(make_dataset([7, 9]), 30, seed=4)
    assert a[0].parts.tobytes() == b[0].parts.tobytes()
    train, test = split_percent(make_dataset([10] * 5), 30, seed=0)
    assert (len(train), len(test)) == (15, 35)


def test_percent_split_rounding_and_clamping():
    # round(20 * 6 / 100) = round(1.2) = 1, round(50 * 5 / 100) = round(2.5) = 3,
    # round(5 * 4 / 100) = 0 -> clamped to 1, round(99 * 4 / 100) = 4 -> clamped to 3
    assert split_percent(make_dataset([6]), 20, 0)[0].class_counts() == {0: 1}
    assert split_percent(make_dataset([5]), 50, 0)[0].class_counts() == {0: 3}
    assert split_percent(make_dataset([4]), 5, 0)[0].class_counts() == {0: 1}
    assert split_percent(make_dataset([4]), 99, 0)[0].class_counts() == {0: 3}
    with pytest.raises(DataError):
        split_percent(make_dataset([1, 4]), 50, 0)
    with pytest.raises(DataError):
        split_percent(make_dataset([4]), 100, 0)


@settings(max_examples=40)
@given(st.lists(st.integers(2, 9), min_size=1, max_size=5), st.integers(0, 2**31), st.booleans())
def test_splits_partition_each_class(counts, seed, by_percent):
    ds = make_dataset(counts, q=2, seed=seed % 97)
    if by_percent:
        train, test = split_percent(ds, 40, seed)
    else:
        train, test = split_per_class(ds, 1, seed)
    rows = lambda d: {tuple(p.ravel()) for p in d.parts}  # noqa: E731
    assert rows(train) | rows(test) == rows(ds)
    assert not rows(train) & rows(test)
    for c, n in ds.class_counts().items():
        assert train.class_counts()[c] + test.class_counts()[c] == n


# -- noise and colour -------------------------------------------------------

def test_noise_sigma_zero_is_identity():
    ds = make_dataset([3, 3])
    assert add_gaussian_noise(ds, 0.0, seed=0) is ds


def test_noise_only_touches_test_rows():
    train, test = split_per_class(make_dataset([5, 5]), 2, seed=0)
    both = Dataset.concat(train, test)
    noisy = add_gaussian_noise(both, 0.1, seed=1)
    assert noisy.parts[:len(train)].tobytes() == train.parts.tobytes()
    assert not np.array_equal(noisy.parts[len(train):], test.parts)
    np.testing.assert_array_equal(noisy.parts[:, 0], 0.0)
    assert noisy.parts.min() >= 0 and noisy.parts.max() <= 1


def test_noise_variance():
    n, q, sigma = 1000, 100, 0.05
    parts = np.zeros((n, 4, q))
    parts[:, 1:, :] = 0.5
    ds = Dataset(parts, np.zeros(n, dtype=int), np.full(n, "test"), ("a",))
    noisy = add_gaussian_noise(ds, sigma, seed=7)
    for ch in (1, 2, 3):
        values = noisy.parts[:, ch, :].ravel() - 0.5
        assert values.size == 10**5
        assert abs(values.var() / sigma**2 - 1) <= 0.05


def test_noise_rejects_negative_sigma():
    with pytest.raises(ValueError):
        add_gaussian_noise(make_dataset([2]), -0.1)


def test_grayscale_collapse():
    ds = make_dataset([3])
    g = to_grayscale(ds)
    mean = ds.parts[:, 1:, :].mean(axis=1)
    for ch in (1, 2, 3):
        np.testing.assert_allclose(g.parts[:, ch, :], mean, atol=1e-15)


# -- synthetic data ---------------------------------------------------------

def test_synth_full_correlation_channels_identical():
    ds = synth_correlated(3, 4, 10, 1.0, seed=0)
    np.testing.assert_array_equal(ds.parts[:, 1], ds.parts[:, 2])
    np.testing.assert_array_equal(ds.parts[:, 1], ds.parts[:, 3])


def test_synth_single_sample_per_class_flagged():
    with pytest.warns(UserWarning):
        ds = synth_correlated(3, 1, 5, 0.5, seed=0)
    with pytest.raises(DataError):
        split_per_class(ds, 1, 0)


def test_synth_deterministic_and_shaped():
    a = synth_correlated(4, 20, 32, 0.9, seed=5)
    b = synth_correlated(4, 20, 32, 0.9, seed=5)
    assert a.parts.tobytes() == b.parts.tobytes()
    assert a.parts.shape == (80, 4, 32) and a.n_classes == 4
    np.testing.assert_array_equal(a.parts[:, 0], 0.0)
    with pytest.raises(ValueError):
        synth_correlated(2, 2, 2, 1.5)


def nearest_mean_accuracy(train, test):
    X, Y = normalized_stack(train), normalized_stack(test)
    means = np.stack([X[train.labels == c].mean(axis=0) for c in range(train.n_classes)])
    pred = np.argmin(((Y[:, None, :] - means[None]) ** 2).sum(axis=2), axis=1)
    return float(np.mean(pred == test.labels))


def test_synth_separable_by_class_means():
    ds = synth_correlated(4, 20, 32, 0.9, seed=0)
    train, test = split_per_class(ds, 5, seed=0)
    assert nearest_mean_accuracy(train, test) == 1.0


def test_synth_chroma_invisible_in_grey():
    # with low correlation and overlapping shared means the colour offsets
    # carry the class information and the grey collapse removes it
    ds = synth_correlated(4, 20, 32, 0.5, seed=0, separation=0.1)
    train, test = split_per_class(ds, 5, seed=0)
    colour = nearest_mean_accuracy(train, test)
    grey = nearest_mean_accuracy(to_grayscale(train), to_grayscale(test))
    assert colour > grey


# -- dictionaries -----------------------------------------------------------

def test_unit_atoms():
    ds = synth_correlated(3, 6, 12, 0.7, seed=2)
    train, _ = split_per_class(ds, 3, seed=0)
    D = build_dictionary(train)
    assert D.shape == (48, 36)
    np.testing.assert_allclose(np.linalg.norm(D.data, axis=0), 1.0, atol=1e-12, rtol=0)
    np.testing.assert_array_equal(D.labels, train.labels)


def test_rng_is_named():
    assert RNG_ALGORITHM == "numpy.random.PCG64"
    assert isinstance(make_rng(3).bit_generator, np.random.PCG64)
    g = make_rng(1)
    assert make_rng(g) is g
