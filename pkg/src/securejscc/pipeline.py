"""End-to-end transmission chain and SNR sweeps.

One message runs encode -> hard quantize -> encrypt -> modulate -> AWGN ->
soft demodulate -> noisy decrypt -> soft dequantize -> decode. Every stage
draws from an explicitly seeded stream, so a (config, seeds) pair pins the
output byte for byte.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import codec, metrics
from .lwe import (ErrorTriple, KeyPair, centered, decrypt, decrypt_noisy,
                  derive_errors, encrypt)
from .modem import Constellation, awgn, modulate, soft_demodulate
from .quantizer import QuantizerConfig, hard_quantize, soft_dequantize
from .rng import stream

CSV_SCHEMA_VERSION = 1
CSV_COLUMNS = ("schema_version", "row_kind", "image_index", "message_index",
               "snr_db", "rho", "mse", "psnr", "ssim", "ms_ssim",
               "crypto_noise_std", "channel_noise_std", "compound_noise_std")
MS_SSIM_MIN_SIDE = 64  # below this the multi-scale metric is not reported


@dataclass(frozen=True)
class TransmissionRecord:
    image_index: int
    message_index: int
    snr_db: float
    rho: float
    mse: float
    psnr: float
    ssim: float
    ms_ssim: float | None
    crypto_noise_std: float
    channel_noise_std: float
    compound_noise_std: float


@dataclass(frozen=True)
class LatentTrace:
    """Intermediates of one latent round trip, for records and training."""

    z_prime: np.ndarray       # noisy plaintext after decryption
    exact_plain: np.ndarray   # decrypt of the exact ciphertext
    c: np.ndarray             # transmitted ciphertext values
    c_hat: np.ndarray         # soft-demodulated ciphertext estimate


def transmit_latent(z_bar: np.ndarray, keys: KeyPair, cons: Constellation,
                    sigma2: float, sigma_l: float, error_seed: int,
                    channel_seed: int, message_index: int,
                    zero_errors: bool = False) -> LatentTrace:
    """Carry one quantized latent through encryption, channel and decryption.

    ``sigma2 == 0`` short-circuits the modem with its exact noiseless limit
    (the demodulator output converges to the transmitted integers).
    ``zero_errors`` substitutes an all-zero error triple. Both are test
    hooks; production paths use positive noise and derived errors.
    """
    params = keys.params
    if zero_errors:
        errors = ErrorTriple(e1=np.zeros(params.n1, dtype=np.int64),
                             e2=np.zeros(params.n2, dtype=np.int64),
                             e3=np.zeros(params.k, dtype=np.int64))
    else:
        errors = derive_errors(error_seed, message_index, params)
    ct = encrypt(z_bar, keys, errors, message_index=message_index)
    if sigma2 > 0:
        y = modulate(ct.c, cons)
        y_hat = awgn(y, sigma2, stream(channel_seed, message_index))
        c_hat = soft_demodulate(y_hat, cons, sigma2, sigma_l)
    else:
        c_hat = ct.c.astype(np.float64)
    z_prime = decrypt_noisy(c_hat, ct.d, keys)
    return LatentTrace(z_prime=z_prime, exact_plain=decrypt(ct, keys),
                       c=ct.c, c_hat=c_hat)


def transmit(x: np.ndarray, spec: codec.CodecSpec, params: dict,
             keys: KeyPair, qcfg: QuantizerConfig, cons: Constellation,
             snr_db: float, sigma_l: float, error_seed: int, channel_seed: int,
             message_index: int, image_index: int = 0,
             zero_errors: bool = False) -> tuple[np.ndarray, TransmissionRecord]:
    """Send one image through the full chain and score the reconstruction."""
    h, w, c = spec.input_shape
    if x.shape != (h, w, c):
        raise ValueError(f"image shape {x.shape} does not match codec {spec.input_shape}")
    sigma2 = 0.0 if math.isinf(snr_db) else cons.avg_power * 10.0 ** (-snr_db / 10.0)

    z, _ = codec.encode(x.reshape(1, -1), spec, params)
    z_bar = hard_quantize(z[0], qcfg).values
    trace = transmit_latent(z_bar, keys, cons, sigma2, sigma_l,
                            error_seed, channel_seed, message_index,
                            zero_errors=zero_errors)
    z_hat = soft_dequantize(trace.z_prime, qcfg)
    x_hat_flat, _ = codec.decode(z_hat[None, :], spec, params)
    x_hat = x_hat_flat[0].reshape(h, w, c)

    p = keys.params.p
    crypto_std = float(np.std(centered(trace.exact_plain - z_bar, p)))
    channel_std = float(np.std(trace.c_hat - trace.c))
    compound_std = float(np.std(centered(trace.z_prime - z_bar, p)))
    report_ms = min(h, w) >= MS_SSIM_MIN_SIDE
    record = TransmissionRecord(
        image_index=image_index,
        message_index=message_index,
        snr_db=snr_db,
        rho=spec.k / (h * w * c),
        mse=metrics.mse(x, x_hat),
        psnr=metrics.psnr(x, x_hat),
        ssim=metrics.ssim(x, x_hat),
        ms_ssim=metrics.ms_ssim(x, x_hat) if report_ms else None,
        crypto_noise_std=crypto_std,
        channel_noise_std=channel_std,
        compound_noise_std=compound_std,
    )
    return x_hat, record


def _fmt(value: float | int | None) -> str:
    if value is None:
        return ""
    if isinstance(value, int):
        return str(value)
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.6f}"


def records_to_csv(records: list[TransmissionRecord],
                   aggregate: bool = True) -> str:
    """Fixed-order CSV: per-image rows, then mean/std rows per SNR."""
    lines = [",".join(CSV_COLUMNS)]
    for r in records:
        lines.append(",".join([
            str(CSV_SCHEMA_VERSION), "image", str(r.image_index),
            str(r.message_index), _fmt(r.snr_db), _fmt(r.rho), _fmt(r.mse),
            _fmt(r.psnr), _fmt(r.ssim), _fmt(r.ms_ssim),
            _fmt(r.crypto_noise_std), _fmt(r.channel_noise_std),
            _fmt(r.compound_noise_std),
        ]))
    if aggregate:
        snrs = sorted({r.snr_db for r in records})
        numeric = ("rho", "mse", "psnr", "ssim", "ms_ssim",
                   "crypto_noise_std", "channel_noise_std", "compound_noise_std")
        for snr in snrs:
            group = [r for r in records if r.snr_db == snr]
            for kind, reducer in (("mean", np.mean), ("std", np.std)):
                row = [str(CSV_SCHEMA_VERSION), kind, "", "", _fmt(snr)]
                for name in numeric:
                    vals = [getattr(r, name) for r in group]
                    vals = [v for v in vals if v is not None and math.isfinite(v)]
                    row.append(_fmt(float(reducer(vals))) if vals else "")
                lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def sweep(images: list[np.ndarray], spec: codec.CodecSpec, params: dict,
          keys: KeyPair, qcfg: QuantizerConfig, cons: Constellation,
          snr_grid_db: list[float], sigma_l: float, error_seed: int,
          channel_seed: int) -> list[TransmissionRecord]:
    """Transmit every image at every SNR; message indices never repeat."""
    if not snr_grid_db:
        raise ValueError("SNR grid must be non-empty")
    records = []
    message_index = 0
    for snr_db in snr_grid_db:
        for image_index, x in enumerate(images):
            _, record = transmit(x, spec, params, keys, qcfg, cons, snr_db,
                                 sigma_l, error_seed, channel_seed,
                                 message_index, image_index=image_index)
            records.append(record)
            message_index += 1
    return records
