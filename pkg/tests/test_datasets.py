import numpy as np
import pytest

from securejscc.datasets import (DatasetSpec, read_image, synthesize_dataset,
                                 write_image)


def test_empty_dataset():
    assert synthesize_dataset(DatasetSpec("blob", 0, 8, 8, 1), 0) == []


def test_same_seed_identical():
    spec = DatasetSpec("gradient", 5, 8, 8, 3)
    a = synthesize_dataset(spec, 42)
    b = synthesize_dataset(spec, 42)
    for x, y in zip(a, b):
        assert np.array_equal(x, y)


def test_different_seed_differs():
    spec = DatasetSpec("checkerboard", 3, 8, 8, 1)
    a = synthesize_dataset(spec, 1)
    b = synthesize_dataset(spec, 2)
    assert any(not np.array_equal(x, y) for x, y in zip(a, b))


@pytest.mark.parametrize("kind", ["gradient", "checkerboard", "blob"])
def test_values_in_pixel_range(kind):
    for img in synthesize_dataset(DatasetSpec(kind, 8, 16, 16, 1), 7):
        assert img.shape == (16, 16, 1)
        assert img.min() >= 0.0
        assert img.max() <= 255.0


def test_blob_dataset_nondegenerate():
    images = synthesize_dataset(DatasetSpec("blob", 16, 16, 16, 1), 5)
    stacked = np.stack(images)
    assert stacked.var() > 0.0
    per_pixel_var = stacked.reshape(16, -1).var(axis=0)
    assert per_pixel_var.mean() > 0.0


def test_unknown_kind_rejected():
    with pytest.raises(ValueError):
        DatasetSpec("noise", 1, 8, 8, 1)


def test_pgm_round_trip(tmp_path):
    img = np.arange(48, dtype=np.float64).reshape(6, 8, 1)
    path = tmp_path / "img.pgm"
    write_image(path, img)
    back = read_image(path)
    assert back.shape == (6, 8, 1)
    assert np.array_equal(back, img)


def test_ppm_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    img = np.round(rng.uniform(0, 255, (5, 7, 3)))
    path = tmp_path / "img.ppm"
    write_image(path, img)
    assert np.array_equal(read_image(path), img)


def test_read_rejects_other_formats(tmp_path):
    path = tmp_path / "img.pbm"
    path.write_bytes(b"P1\n2 2\n0 1 1 0\n")
    with pytest.raises(ValueError):
        read_image(path)
