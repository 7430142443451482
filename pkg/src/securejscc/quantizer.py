"""Uniform latent quantization onto centroids inside Z_p.

The centroid grid is ``floor(i * p / n_levels)`` for ``i = 0 .. n_levels-1``,
so quantized values are valid plaintext symbols. Hard quantization is the
nearest-centroid map; its differentiable surrogate is a softmax over
negative squared distances whose sharpness ``sigma_q`` is annealed during
training. Dequantization of noisy plaintexts uses the same softmax form
with unit sharpness.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SIGMA_Q_INITIAL = 5.0
SIGMA_Q_CAP = 200.0
SIGMA_Q_RAMP = 5.0
SIGMA_Q_PERIOD = 2000


def build_centroids(p: int, n_levels: int) -> np.ndarray:
    """The ``n_levels`` values ``floor(i * p / n_levels)``, strictly increasing."""
    if n_levels < 2:
        raise ValueError(f"need at least 2 levels, got {n_levels}")
    if n_levels > p:
        raise ValueError(f"n_levels={n_levels} exceeds modulus p={p}")
    i = np.arange(n_levels, dtype=np.int64)
    return (i * p) // n_levels


@dataclass
class QuantizerConfig:
    p: int
    n_levels: int
    sigma_q: float = SIGMA_Q_INITIAL
    centroids: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.centroids = build_centroids(self.p, self.n_levels)


@dataclass(frozen=True)
class QuantizedLatent:
    values: np.ndarray   # centroid values, int64
    indices: np.ndarray  # centroid indices in [0, n_levels)


def _check_finite(z: np.ndarray, what: str) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    if not np.all(np.isfinite(z)):
        raise ValueError(f"{what} must be finite")
    return z


def hard_quantize(z: np.ndarray, cfg: QuantizerConfig) -> QuantizedLatent:
    """Map each entry to the nearest centroid; ties go to the lower index."""
    z = _check_finite(z, "latent vector")
    d = np.abs(z[..., None] - cfg.centroids[None, :])
    idx = np.argmin(d, axis=-1)  # argmin returns the first (lower) index on ties
    return QuantizedLatent(values=cfg.centroids[idx], indices=idx)


def _softmax_rows(scores: np.ndarray) -> np.ndarray:
    # max subtraction is exact: softmax is shift invariant
    a = scores - scores.max(axis=-1, keepdims=True)
    w = np.exp(a)
    return w / w.sum(axis=-1, keepdims=True)


def soft_quantize(z: np.ndarray, cfg: QuantizerConfig) -> np.ndarray:
    """Softmax-weighted centroid sum with sharpness ``sigma_q``.

    Converges to :func:`hard_quantize` as sigma_q grows and to the centroid
    mean as sigma_q -> 0.
    """
    if not cfg.sigma_q > 0:
        raise ValueError(f"sigma_q must be positive, got {cfg.sigma_q}")
    z = _check_finite(z, "latent vector")
    q = cfg.centroids.astype(np.float64)
    d2 = (z[..., None] - q[None, :]) ** 2
    w = _softmax_rows(-cfg.sigma_q * d2)
    return w @ q


def soft_quantize_jacobian(z: np.ndarray, cfg: QuantizerConfig) -> np.ndarray:
    """Elementwise derivative of :func:`soft_quantize`.

    The map is separable, so the Jacobian is diagonal with entries
    ``2 * sigma_q * Var_w(q)``, the softmax-weighted centroid variance.
    """
    if not cfg.sigma_q > 0:
        raise ValueError(f"sigma_q must be positive, got {cfg.sigma_q}")
    z = _check_finite(z, "latent vector")
    q = cfg.centroids.astype(np.float64)
    d2 = (z[..., None] - q[None, :]) ** 2
    w = _softmax_rows(-cfg.sigma_q * d2)
    mean = w @ q
    second = w @ (q * q)
    return 2.0 * cfg.sigma_q * (second - mean * mean)


def anneal_sigma_q(step: int, sigma_prev: float) -> float:
    """Linear annealing toward the hard limit, capped at SIGMA_Q_CAP."""
    return min(SIGMA_Q_CAP, sigma_prev + SIGMA_Q_RAMP * (step // SIGMA_Q_PERIOD))


def soft_dequantize(z_prime: np.ndarray, cfg: QuantizerConfig) -> np.ndarray:
    """Softmax-weighted centroid sum of a noisy plaintext, unit sharpness.

    Distances are plain squared differences on ``[0, p)`` residues; noise
    that wraps past p lands far from the low centroids by construction.
    """
    z_prime = _check_finite(z_prime, "noisy plaintext")
    q = cfg.centroids.astype(np.float64)
    d2 = (z_prime[..., None] - q[None, :]) ** 2
    w = _softmax_rows(-d2)
    return w @ q
