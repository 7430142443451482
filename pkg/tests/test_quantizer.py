import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from securejscc.quantizer import (QuantizerConfig, anneal_sigma_q,
                                  build_centroids, hard_quantize,
                                  soft_dequantize, soft_quantize,
                                  soft_quantize_jacobian)

REFERENCE_CENTROIDS = [0, 255, 511, 767, 1023, 1279, 1534, 1790, 2046, 2302,
                       2558, 2813, 3069, 3325, 3581, 3837]


def test_centroids_reference_grid():
    got = build_centroids(4093, 16)
    oracle = [(i * 4093) // 16 for i in range(16)]
    assert got.tolist() == oracle == REFERENCE_CENTROIDS


def test_centroids_small_cases():
    assert build_centroids(4, 4).tolist() == [0, 1, 2, 3]
    assert build_centroids(10, 2).tolist() == [0, 5]


def test_centroids_strictly_increasing_in_range():
    c = build_centroids(997, 13)
    assert np.all(np.diff(c) > 0)
    assert c[0] == 0 and c[-1] < 997


@pytest.mark.parametrize("p,n", [(10, 1), (10, 11), (4, 5)])
def test_centroids_invalid(p, n):
    with pytest.raises(ValueError):
        build_centroids(p, n)


# -- hard quantization -------------------------------------------------------


def test_hard_quantize_exact_centroid():
    cfg = QuantizerConfig(4093, 16)
    q = hard_quantize(cfg.centroids.astype(float), cfg)
    assert np.array_equal(q.values, cfg.centroids)
    assert np.array_equal(q.indices, np.arange(16))


def test_hard_quantize_nearest_oracle():
    cfg = QuantizerConfig(4093, 16)
    assert hard_quantize(np.array([127.0]), cfg).values[0] == 0  # 127 < 128
    assert hard_quantize(np.array([128.0]), cfg).values[0] == 255
    z = np.linspace(-50, 4200, 313)
    got = hard_quantize(z, cfg).values
    oracle = np.array([min(REFERENCE_CENTROIDS, key=lambda q: (zi - q) ** 2)
                       for zi in z])
    assert np.array_equal(got, oracle)


def test_hard_quantize_saturates():
    cfg = QuantizerConfig(4093, 16)
    assert hard_quantize(np.array([1e9]), cfg).values[0] == 3837
    assert hard_quantize(np.array([-1e9]), cfg).values[0] == 0


def test_hard_quantize_tie_to_lower_index():
    cfg = QuantizerConfig(4, 2)  # centroids [0, 2]
    assert hard_quantize(np.array([1.0]), cfg).values[0] == 0


def test_hard_quantize_rejects_nonfinite():
    with pytest.raises(ValueError):
        hard_quantize(np.array([np.inf]), QuantizerConfig(16, 4))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=32))
def test_hard_quantize_idempotent(values):
    cfg = QuantizerConfig(4093, 16)
    once = hard_quantize(np.array(values), cfg)
    twice = hard_quantize(once.values.astype(float), cfg)
    assert np.array_equal(once.values, twice.values)


# -- soft quantization -------------------------------------------------------


def test_soft_quantize_hard_limit():
    cfg = QuantizerConfig(4093, 16, sigma_q=1e4)
    rng = np.random.default_rng(0)
    z = rng.uniform(0, 4093, 200)
    hard = hard_quantize(z, cfg).values
    # keep points at least 1.0 away from the midpoints between centroids
    mids = (cfg.centroids[:-1] + cfg.centroids[1:]) / 2.0
    keep = np.all(np.abs(z[:, None] - mids[None, :]) >= 1.0, axis=1)
    soft = soft_quantize(z, cfg)
    assert np.all(np.abs(soft[keep] - hard[keep]) < 1e-6)


def test_soft_quantize_uniform_limit():
    cfg = QuantizerConfig(4093, 16, sigma_q=1e-12)
    z = np.array([0.0, 500.0, 4000.0])
    assert np.allclose(soft_quantize(z, cfg), cfg.centroids.mean(), atol=1e-6)


def test_soft_quantize_midpoint_two_centroids():
    cfg = QuantizerConfig(4093, 16, sigma_q=1.0)
    out = soft_quantize(np.array([127.5]), cfg)
    assert abs(out[0] - 127.5) < 1e-6


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e4, 1e4), min_size=1, max_size=16),
       st.floats(0.01, 100.0))
def test_soft_outputs_are_convex_combinations(values, sigma_q):
    cfg = QuantizerConfig(4093, 16, sigma_q=sigma_q)
    z = np.array(values)
    for out in (soft_quantize(z, cfg), soft_dequantize(z, cfg)):
        assert np.all(out >= cfg.centroids[0] - 1e-9)
        assert np.all(out <= cfg.centroids[-1] + 1e-9)


def test_monotone_hardness():
    rng = np.random.default_rng(3)
    cfg0 = QuantizerConfig(4093, 16)
    mids = (cfg0.centroids[:-1] + cfg0.centroids[1:]) / 2.0
    z = rng.uniform(0, 4000, 100)
    z = z[np.all(np.abs(z[:, None] - mids[None, :]) >= 5.0, axis=1)]
    hard = hard_quantize(z, cfg0).values
    prev = np.inf
    for sigma_q in (5.0, 25.0, 50.0, 100.0, 200.0):
        cfg = QuantizerConfig(4093, 16, sigma_q=sigma_q)
        dist = np.max(np.abs(soft_quantize(z, cfg) - hard))
        assert dist <= prev + 1e-12
        prev = dist


def central_difference_jacobian(z, cfg, h=1e-3):
    up = soft_quantize(z + h, cfg)
    down = soft_quantize(z - h, cfg)
    return (up - down) / (2 * h)


def test_jacobian_matches_finite_differences_small_scale():
    # a small modulus keeps distances O(1), so the softmax stays genuinely soft
    rng = np.random.default_rng(4)
    for sigma_q in (0.05, 0.2, 1.0):
        cfg = QuantizerConfig(16, 4, sigma_q=sigma_q)  # centroids [0, 4, 8, 12]
        z = rng.uniform(-2.0, 18.0, 200)
        jac = soft_quantize_jacobian(z, cfg)
        fd = central_difference_jacobian(z, cfg)
        assert np.allclose(jac, fd, rtol=1e-4, atol=1e-8)


def test_jacobian_matches_finite_differences_reference_scale():
    rng = np.random.default_rng(5)
    cfg = QuantizerConfig(4093, 16, sigma_q=5.0)
    mids = (cfg.centroids[:-1] + cfg.centroids[1:]) / 2.0
    z = rng.uniform(0, 4000, 100)
    z = z[np.all(np.abs(z[:, None] - mids[None, :]) >= 1.0, axis=1)]
    jac = soft_quantize_jacobian(z, cfg)
    fd = central_difference_jacobian(z, cfg)
    assert np.allclose(jac, fd, rtol=1e-4, atol=1e-8)


# -- annealing ---------------------------------------------------------------


def test_anneal_examples():
    assert anneal_sigma_q(1, 5.0) == 5.0
    assert anneal_sigma_q(2000, 5.0) == 10.0
    assert anneal_sigma_q(10 ** 6, 199.0) == 200.0


def test_anneal_caps_at_200():
    sigma = 5.0
    for step in range(1, 500_000, 997):
        sigma = anneal_sigma_q(step, sigma)
        assert sigma <= 200.0
    assert sigma == 200.0


# -- dequantization ----------------------------------------------------------


def test_dequantize_snaps_to_isolated_centroid():
    cfg = QuantizerConfig(4093, 16)
    out = soft_dequantize(cfg.centroids.astype(float), cfg)
    assert np.allclose(out, cfg.centroids, atol=1e-6)


def test_dequantize_midpoint_two_levels():
    cfg = QuantizerConfig(10, 2)  # centroids [0, 5]
    out = soft_dequantize(np.array([2.5]), cfg)
    assert np.allclose(out, 2.5)


def test_dequantize_no_hardness_parameter():
    # unit weighting: changing sigma_q must not change the result
    a = soft_dequantize(np.array([3.3]), QuantizerConfig(10, 2, sigma_q=5.0))
    b = soft_dequantize(np.array([3.3]), QuantizerConfig(10, 2, sigma_q=200.0))
    assert np.array_equal(a, b)
