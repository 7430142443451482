"""QAM constellation, AWGN channel and likelihood-based soft demodulation.

Integer symbols in ``[0, p)`` map one-to-one onto a power-normalized square
QAM grid. The receiver never hard-slices: it evaluates the complex
Gaussian likelihood of every constellation point and reconstructs a
real-valued symbol estimate as a softmax-weighted sum of the integer
values, which downstream stages treat as a noisy ciphertext.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MAX_CONSTELLATION = 4096
SIGMA_L_DEFAULT = 5.0


@dataclass(frozen=True)
class Constellation:
    points: np.ndarray  # complex, length p, ordered by integer value
    avg_power: float


@dataclass(frozen=True)
class ChannelModel:
    snr_db: float
    sigma2: float
    rng: np.random.Generator

    @classmethod
    def from_snr(cls, snr_db: float, avg_power: float,
                 rng: np.random.Generator) -> "ChannelModel":
        sigma2 = 0.0 if math.isinf(snr_db) else avg_power * 10.0 ** (-snr_db / 10.0)
        return cls(snr_db=snr_db, sigma2=sigma2, rng=rng)


def build_constellation(p: int, target_power: float = 1.0) -> Constellation:
    """Square QAM with the last grid points dropped and power normalized.

    Uses the smallest even grid side m with m*m >= p (m=64 for the 4093
    default, a 4096-QAM with its 3 final row-major points removed; m=2 for
    p=4 gives the familiar four-corner layout). Levels are the odd integers
    ``+-1 .. +-(m-1)`` per axis, points ordered row-major, then rescaled so
    the mean power over the retained p points equals ``target_power``.
    """
    if p < 1:
        raise ValueError(f"constellation order must be >= 1, got {p}")
    if p > MAX_CONSTELLATION:
        raise ValueError(f"constellation order {p} exceeds {MAX_CONSTELLATION}")
    if not target_power > 0:
        raise ValueError(f"target_power must be positive, got {target_power}")
    m = 2
    while m * m < p:
        m += 2
    levels = 2 * np.arange(m) - (m - 1)  # -(m-1), ..., -1, 1, ..., m-1
    re = np.tile(levels, m)
    im = np.repeat(levels, m)
    grid = (re + 1j * im).astype(np.complex128)
    points = grid[:p]
    scale = math.sqrt(target_power / float(np.mean(np.abs(points) ** 2)))
    return Constellation(points=points * scale, avg_power=float(target_power))


def modulate(values: np.ndarray, cons: Constellation) -> np.ndarray:
    """Look up the constellation point for each integer value."""
    v = np.asarray(values, dtype=np.int64)
    if np.any(v < 0) or np.any(v >= len(cons.points)):
        raise ValueError(f"symbol values must lie in [0, {len(cons.points)})")
    return cons.points[v]


def awgn(y: np.ndarray, sigma2: float, rng: np.random.Generator) -> np.ndarray:
    """y + n with n complex Gaussian, total variance sigma2 per symbol."""
    y = np.asarray(y, dtype=np.complex128)
    if not np.all(np.isfinite(y.real)) or not np.all(np.isfinite(y.imag)):
        raise ValueError("channel input must be finite")
    if sigma2 == 0.0:
        return y.copy()
    s = math.sqrt(sigma2 / 2.0)
    noise = s * (rng.standard_normal(y.shape) + 1j * rng.standard_normal(y.shape))
    return y + noise


def transmit_awgn(y: np.ndarray, ch: ChannelModel) -> np.ndarray:
    """Channel transfer function for a configured model."""
    return awgn(y, ch.sigma2, ch.rng)


def _point_distances_sq(y: np.ndarray, points: np.ndarray) -> np.ndarray:
    dre = y.real[:, None] - points.real[None, :]
    dim = y.imag[:, None] - points.imag[None, :]
    return dre * dre + dim * dim


def likelihoods(y_hat_i: complex, cons: Constellation, sigma2: float) -> np.ndarray:
    """Complex Gaussian density of one received value under every point."""
    if not sigma2 > 0:
        raise ValueError(f"sigma2 must be positive, got {sigma2}")
    d2 = np.abs(y_hat_i - cons.points) ** 2
    return np.exp(-d2 / sigma2) / (math.pi * sigma2)


def soft_symbol_estimate(likelihood_row: np.ndarray,
                         sigma_l: float = SIGMA_L_DEFAULT) -> float:
    """Softmax(sigma_l * likelihoods)-weighted mean of the integer values."""
    if not sigma_l > 0:
        raise ValueError(f"sigma_l must be positive, got {sigma_l}")
    scores = sigma_l * np.asarray(likelihood_row, dtype=np.float64)
    w = np.exp(scores - scores.max())
    w /= w.sum()
    return float(w @ np.arange(len(w)))


def soft_demodulate(y_hat: np.ndarray, cons: Constellation, sigma2: float,
                    sigma_l: float = SIGMA_L_DEFAULT,
                    block: int = 1024) -> np.ndarray:
    """Per-symbol softmax reconstruction of real-valued integer estimates.

    Output entries lie in ``[0, p-1]`` (convex combinations of the values).
    Processing is blocked to bound the k x p likelihood matrix.
    """
    if not sigma2 > 0:
        raise ValueError(f"sigma2 must be positive, got {sigma2}")
    if not sigma_l > 0:
        raise ValueError(f"sigma_l must be positive, got {sigma_l}")
    y_hat = np.asarray(y_hat, dtype=np.complex128)
    values = np.arange(len(cons.points), dtype=np.float64)
    inv = 1.0 / (math.pi * sigma2)
    out = np.empty(y_hat.shape[0], dtype=np.float64)
    for s in range(0, y_hat.shape[0], block):
        chunk = y_hat[s:s + block]
        d2 = _point_distances_sq(chunk, cons.points)
        lik = inv * np.exp(-d2 / sigma2)
        a = sigma_l * lik
        a -= a.max(axis=1, keepdims=True)
        w = np.exp(a)
        w /= w.sum(axis=1, keepdims=True)
        out[s:s + block] = w @ values
    return out


def nearest_point_demodulate(y_hat: np.ndarray, cons: Constellation,
                             block: int = 1024) -> np.ndarray:
    """Hard minimum-distance detection; ties pick the lower index."""
    y_hat = np.asarray(y_hat, dtype=np.complex128)
    out = np.empty(y_hat.shape[0], dtype=np.int64)
    for s in range(0, y_hat.shape[0], block):
        d2 = _point_distances_sq(y_hat[s:s + block], cons.points)
        out[s:s + block] = np.argmin(d2, axis=1)
    return out
