"""Lattice encryption over Z_p.

Implements discrete Gaussian sampling, key generation, public-key
encryption and both exact and noisy-ciphertext decryption. Decryption is
additive: it returns the plaintext plus a small structured residual
(``S^T e2 + U^T e1 + e3``), which the surrounding transmission chain
treats as one more noise source.

Representation conventions: public matrices and ciphertexts are stored as
least non-negative residues in ``[0, p)``; the secret ``S`` and decryption
residuals are handled as centered residues in ``(-p/2, p/2]`` so their
noise statistics are meaningful.

Simulation grade only: no constant-time hardening, no side-channel
resistance.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .rng import stream

KEY_FILE_VERSION = 1


@dataclass(frozen=True)
class LweParams:
    """Modulus, lattice dimensions, sampler width and plaintext length."""

    p: int
    n1: int
    n2: int
    sigma_s: float
    k: int

    def __post_init__(self):
        if self.p < 2:
            raise ValueError(f"modulus p must be >= 2, got {self.p}")
        if self.n1 < 1 or self.n2 < 1:
            raise ValueError(f"lattice dimensions must be >= 1, got {self.n1}x{self.n2}")
        if not self.sigma_s > 0:
            raise ValueError(f"sigma_s must be positive, got {self.sigma_s}")
        if self.k < 1:
            raise ValueError(f"plaintext length k must be >= 1, got {self.k}")


@dataclass(frozen=True)
class PublicKey:
    """Encryption-side key material: no secret fields."""

    params: LweParams
    B: np.ndarray  # n1 x k, residues in [0, p)
    A: np.ndarray  # n1 x n2, residues in [0, p)
    lattice_seed: int


@dataclass(frozen=True)
class KeyPair:
    """Full key material held by the legitimate receiver."""

    params: LweParams
    S: np.ndarray  # n2 x k, centered (signed) residues
    B: np.ndarray  # n1 x k, residues in [0, p)
    A: np.ndarray  # n1 x n2, residues in [0, p)
    key_seed: int
    lattice_seed: int

    def public(self) -> PublicKey:
        return PublicKey(params=self.params, B=self.B, A=self.A,
                         lattice_seed=self.lattice_seed)


@dataclass(frozen=True)
class ErrorTriple:
    """Per-message encryption noise (e1, e2, e3), discrete Gaussian."""

    e1: np.ndarray  # length n1
    e2: np.ndarray  # length n2
    e3: np.ndarray  # length k


@dataclass(frozen=True)
class Ciphertext:
    """Encrypted message: c carries the plaintext, d is plaintext-free."""

    c: np.ndarray  # length k, residues in [0, p)
    d: np.ndarray  # length n2, residues in [0, p)
    message_index: int = 0


def round_half_away(x: np.ndarray) -> np.ndarray:
    """Round to nearest integer, halves away from zero (keeps zero mean)."""
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def sample_discrete_gaussian(sigma_s: float, count: int,
                             rng: np.random.Generator) -> np.ndarray:
    """Draw ``count`` integers: continuous N(0, sigma_s^2 / 2pi), rounded.

    The rounding adds roughly 1/12 to the continuous variance, so the
    samples have variance close to ``sigma_s**2 / (2*pi) + 1/12``.
    """
    if not sigma_s > 0:
        raise ValueError(f"sigma_s must be positive, got {sigma_s}")
    if count < 0:
        raise ValueError(f"count must be >= 0, got {count}")
    x = rng.normal(0.0, sigma_s / math.sqrt(2.0 * math.pi), size=count)
    return round_half_away(x).astype(np.int64)


def public_matrix(U: np.ndarray, A: np.ndarray, S: np.ndarray, p: int) -> np.ndarray:
    """B = (U - A @ S) mod p."""
    return (U - A @ S) % p


def keygen(params: LweParams, key_seed: int, lattice_seed: int) -> KeyPair:
    """Generate a key pair deterministically from two seeds.

    ``S`` then ``U`` are drawn from the key_seed stream (discrete Gaussian);
    ``A`` is drawn uniformly over ``[0, p)`` from the lattice_seed stream.
    """
    krng = stream(key_seed)
    S = sample_discrete_gaussian(params.sigma_s, params.n2 * params.k,
                                 krng).reshape(params.n2, params.k)
    U = sample_discrete_gaussian(params.sigma_s, params.n1 * params.k,
                                 krng).reshape(params.n1, params.k)
    A = stream(lattice_seed).integers(0, params.p,
                                      size=(params.n1, params.n2), dtype=np.int64)
    B = public_matrix(U, A, S, params.p)
    return KeyPair(params=params, S=S, B=B, A=A,
                   key_seed=int(key_seed), lattice_seed=int(lattice_seed))


def derive_errors(shared_error_seed: int, message_index: int,
                  params: LweParams) -> ErrorTriple:
    """Derive the (e1, e2, e3) triple for one message.

    The stream is keyed by ``(shared_error_seed, message_index)``; reusing
    a triple across messages leaks plaintext differences (the ciphertext is
    affine in the plaintext), so every message must use a fresh index.
    """
    if message_index < 0:
        raise ValueError(f"message_index must be >= 0, got {message_index}")
    rng = stream(shared_error_seed, message_index)
    e1 = sample_discrete_gaussian(params.sigma_s, params.n1, rng)
    e2 = sample_discrete_gaussian(params.sigma_s, params.n2, rng)
    e3 = sample_discrete_gaussian(params.sigma_s, params.k, rng)
    return ErrorTriple(e1=e1, e2=e2, e3=e3)


def encrypt(plaintext: np.ndarray, key: KeyPair | PublicKey,
            errors: ErrorTriple, message_index: int = 0) -> Ciphertext:
    """Encrypt a plaintext vector in Z_p^k with the public part of ``key``.

    c = (B^T e1 + e3 + plaintext) mod p
    d = (A^T e1 + e2) mod p

    ``d`` does not depend on the plaintext, so a receiver that shares the
    error seed can precompute it.
    """
    p = key.params.p
    z = np.asarray(plaintext, dtype=np.int64)
    if z.shape != (key.params.k,):
        raise ValueError(f"plaintext must have length k={key.params.k}, got shape {z.shape}")
    if np.any(z < 0) or np.any(z >= p):
        raise ValueError("plaintext entries must lie in [0, p)")
    c = (key.B.T @ errors.e1 + errors.e3 + z) % p
    d = (key.A.T @ errors.e1 + errors.e2) % p
    return Ciphertext(c=c, d=d, message_index=int(message_index))


def decrypt(ct: Ciphertext, key: KeyPair) -> np.ndarray:
    """Exact decryption: (S^T d + c) mod p = plaintext + residual mod p."""
    if ct.c.shape != (key.params.k,) or ct.d.shape != (key.params.n2,):
        raise ValueError(
            f"ciphertext shapes {ct.c.shape}/{ct.d.shape} do not match "
            f"params k={key.params.k}, n2={key.params.n2}")
    return (key.S.T @ ct.d + ct.c) % key.params.p


def decrypt_noisy(c_hat: np.ndarray, d: np.ndarray, key: KeyPair) -> np.ndarray:
    """Decrypt a real-valued noisy ciphertext.

    Returns ``real_mod(S^T d + c_hat, p)`` with floor-based reduction to
    ``[0, p)``, so on integer inputs this coincides with :func:`decrypt`.
    """
    c_hat = np.asarray(c_hat, dtype=np.float64)
    if not np.all(np.isfinite(c_hat)):
        raise ValueError("noisy ciphertext entries must be finite")
    r = key.S.T @ np.asarray(d, dtype=np.int64) + c_hat
    return np.mod(r, float(key.params.p))


def centered(x: np.ndarray, p: int) -> np.ndarray:
    """Map residues (or reals) to the centered range around zero."""
    half = p // 2
    return np.mod(np.asarray(x) + half, p) - half


# -- key files ---------------------------------------------------------------
#
# Structured JSON, matrices base-10 row-major. The public file holds the
# public matrices explicitly and omits both S and key_seed: key_seed
# regenerates S, so it is secret material and never leaves the secret file.


def _params_dict(params: LweParams) -> dict:
    return {"p": params.p, "n1": params.n1, "n2": params.n2,
            "sigma_s": params.sigma_s, "k": params.k}


def save_key_files(key: KeyPair, public_path: str | Path,
                   secret_path: str | Path) -> None:
    public = {
        "format": "securejscc-key",
        "version": KEY_FILE_VERSION,
        "kind": "public",
        "params": _params_dict(key.params),
        "lattice_seed": key.lattice_seed,
        "B": key.B.tolist(),
        "A": key.A.tolist(),
    }
    secret = {
        "format": "securejscc-key",
        "version": KEY_FILE_VERSION,
        "kind": "secret",
        "params": _params_dict(key.params),
        "key_seed": key.key_seed,
        "lattice_seed": key.lattice_seed,
        "S": key.S.tolist(),
    }
    Path(public_path).write_text(json.dumps(public))
    Path(secret_path).write_text(json.dumps(secret))


def _load_key_json(path: str | Path, kind: str) -> dict:
    data = json.loads(Path(path).read_text())
    if data.get("format") != "securejscc-key" or data.get("kind") != kind:
        raise ValueError(f"{path} is not a securejscc {kind} key file")
    if data.get("version") != KEY_FILE_VERSION:
        raise ValueError(f"unsupported key file version {data.get('version')}")
    return data


def load_public_key(path: str | Path) -> PublicKey:
    data = _load_key_json(path, "public")
    params = LweParams(**data["params"])
    return PublicKey(params=params,
                     B=np.asarray(data["B"], dtype=np.int64),
                     A=np.asarray(data["A"], dtype=np.int64),
                     lattice_seed=int(data["lattice_seed"]))


def load_secret_key(path: str | Path) -> KeyPair:
    """Rebuild the full key pair from the secret file.

    The pair is regenerated from the stored seeds; the stored S acts as an
    integrity check against seed or parameter mismatches.
    """
    data = _load_key_json(path, "secret")
    params = LweParams(**data["params"])
    key = keygen(params, int(data["key_seed"]), int(data["lattice_seed"]))
    stored_S = np.asarray(data["S"], dtype=np.int64)
    if not np.array_equal(stored_S, key.S):
        raise ValueError(f"secret file {path} is inconsistent with its seeds")
    return key
