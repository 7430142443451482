"""Training a codec through the full encrypted transmission chain.

The forward pass runs the real chain: hard quantization, encryption,
modulation, channel noise, soft demodulation, noisy decryption and soft
dequantization. None of that middle segment is differentiable, so the
backward pass treats everything between the quantized latent and the
dequantized estimate as the identity and substitutes the soft-quantization
Jacobian for the hard quantizer. The decoder therefore learns to undo the
compound crypto-plus-channel noise while the encoder is steered by the
differentiable surrogate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import codec
from .lwe import KeyPair
from .modem import Constellation
from .pipeline import transmit_latent
from .quantizer import (QuantizerConfig, anneal_sigma_q, hard_quantize,
                        soft_dequantize, soft_quantize, soft_quantize_jacobian)
from .rng import stream


@dataclass
class TrainContext:
    """Everything a training step needs besides the mutable state."""

    spec: codec.CodecSpec
    keys: KeyPair
    qcfg: QuantizerConfig
    cons: Constellation
    snr_db: float
    sigma_l: float
    error_seed: int
    channel_seed: int
    loss: str = "mse"  # "mse" or "ssim"
    zero_errors: bool = False

    @property
    def sigma2(self) -> float:
        if math.isinf(self.snr_db):
            return 0.0
        return self.cons.avg_power * 10.0 ** (-self.snr_db / 10.0)


@dataclass
class TrainState:
    params: dict
    step: int = 0
    sigma_q: float = 5.0
    learning_rate: float = codec.ADAM_LR
    messages_sent: int = 0
    opt: codec.AdamState = field(default_factory=codec.AdamState)


def init_train_state(spec: codec.CodecSpec, seed: int,
                     learning_rate: float = codec.ADAM_LR) -> TrainState:
    return TrainState(params=codec.init_params(spec, stream(seed)),
                      learning_rate=learning_rate)


def _loss_fn(kind: str):
    if kind == "mse":
        return codec.mse_loss
    if kind == "ssim":
        return codec.ssim_loss
    raise ValueError(f"unknown loss {kind!r}")


def compute_gradients(batch: np.ndarray, state: TrainState,
                      ctx: TrainContext) -> tuple[float, dict]:
    """Loss and parameter gradients for one batch of flattened images."""
    x = np.asarray(batch, dtype=np.float64)
    qcfg = QuantizerConfig(ctx.qcfg.p, ctx.qcfg.n_levels, sigma_q=state.sigma_q)

    z, enc_cache = codec.encode(x, ctx.spec, state.params)
    z_bar = hard_quantize(z.ravel(), qcfg).values.reshape(z.shape)
    z_hat = np.empty_like(z)
    for i in range(x.shape[0]):
        trace = transmit_latent(z_bar[i], ctx.keys, ctx.cons, ctx.sigma2,
                                ctx.sigma_l, ctx.error_seed, ctx.channel_seed,
                                message_index=state.messages_sent + i,
                                zero_errors=ctx.zero_errors)
        z_hat[i] = soft_dequantize(trace.z_prime, qcfg)
    x_hat, dec_cache = codec.decode(z_hat, ctx.spec, state.params)

    loss, grad_x = _loss_fn(ctx.loss)(x, x_hat)
    if not math.isfinite(loss):
        raise RuntimeError(
            f"non-finite loss at step {state.step} "
            f"(sigma_q={state.sigma_q}, snr_db={ctx.snr_db})")

    grads, grad_zhat = codec.decode_backward(grad_x, ctx.spec, state.params,
                                             dec_cache)
    # gradient skip: the whole quantized-latent -> dequantized segment is
    # treated as identity, then the soft-quantizer Jacobian maps back to z
    grad_z = grad_zhat * soft_quantize_jacobian(z.ravel(), qcfg).reshape(z.shape)
    grads.update(codec.encode_backward(grad_z, ctx.spec, state.params, enc_cache))
    return loss, grads


def train_step(batch: np.ndarray, state: TrainState,
               ctx: TrainContext) -> tuple[TrainState, float]:
    """One optimizer update; advances the step counter and anneals sigma_q."""
    loss, grads = compute_gradients(batch, state, ctx)
    step = state.step + 1
    params = codec.adam_step(state.params, grads, state.opt, step,
                             lr=state.learning_rate)
    return TrainState(params=params, step=step,
                      sigma_q=anneal_sigma_q(step, state.sigma_q),
                      learning_rate=state.learning_rate,
                      messages_sent=state.messages_sent + batch.shape[0],
                      opt=state.opt), loss


def surrogate_gradients(batch: np.ndarray, state: TrainState,
                        ctx: TrainContext) -> tuple[float, dict]:
    """Gradients with the crypto/channel segment replaced by the identity.

    Forward uses the hard-quantized latent directly; backward is identical
    to :func:`compute_gradients`. With zero errors and a noiseless channel
    the two agree exactly, which pins down the gradient-routing contract.
    """
    x = np.asarray(batch, dtype=np.float64)
    qcfg = QuantizerConfig(ctx.qcfg.p, ctx.qcfg.n_levels, sigma_q=state.sigma_q)
    z, enc_cache = codec.encode(x, ctx.spec, state.params)
    z_bar = hard_quantize(z.ravel(), qcfg).values.reshape(z.shape).astype(np.float64)
    x_hat, dec_cache = codec.decode(z_bar, ctx.spec, state.params)
    loss, grad_x = _loss_fn(ctx.loss)(x, x_hat)
    grads, grad_zhat = codec.decode_backward(grad_x, ctx.spec, state.params,
                                             dec_cache)
    grad_z = grad_zhat * soft_quantize_jacobian(z.ravel(), qcfg).reshape(z.shape)
    grads.update(codec.encode_backward(grad_z, ctx.spec, state.params, enc_cache))
    return loss, grads


def soft_surrogate_loss(batch: np.ndarray, params: dict,
                        ctx: TrainContext, sigma_q: float) -> float:
    """Differentiable stand-in chain: encode -> soft quantize -> decode.

    Scalar-valued on purpose; finite differences of this function are the
    reference for the analytic backward pass.
    """
    x = np.asarray(batch, dtype=np.float64)
    qcfg = QuantizerConfig(ctx.qcfg.p, ctx.qcfg.n_levels, sigma_q=sigma_q)
    z, _ = codec.encode(x, ctx.spec, params)
    z_tilde = soft_quantize(z.ravel(), qcfg).reshape(z.shape)
    x_hat, _ = codec.decode(z_tilde, ctx.spec, params)
    loss, _ = _loss_fn(ctx.loss)(x, x_hat)
    return loss


def soft_surrogate_gradients(batch: np.ndarray, params: dict,
                             ctx: TrainContext,
                             sigma_q: float) -> tuple[float, dict]:
    """Analytic gradients of :func:`soft_surrogate_loss`."""
    x = np.asarray(batch, dtype=np.float64)
    qcfg = QuantizerConfig(ctx.qcfg.p, ctx.qcfg.n_levels, sigma_q=sigma_q)
    z, enc_cache = codec.encode(x, ctx.spec, params)
    z_tilde = soft_quantize(z.ravel(), qcfg).reshape(z.shape)
    x_hat, dec_cache = codec.decode(z_tilde, ctx.spec, params)
    loss, grad_x = _loss_fn(ctx.loss)(x, x_hat)
    grads, grad_zt = codec.decode_backward(grad_x, ctx.spec, params, dec_cache)
    grad_z = grad_zt * soft_quantize_jacobian(z.ravel(), qcfg).reshape(z.shape)
    grads.update(codec.encode_backward(grad_z, ctx.spec, params, enc_cache))
    return loss, grads


def evaluate(images: np.ndarray, params: dict, ctx: TrainContext,
             sigma_q: float, message_base: int = 0) -> float:
    """Mean loss of the evaluation chain (identical forward path)."""
    x = np.asarray(images, dtype=np.float64)
    qcfg = QuantizerConfig(ctx.qcfg.p, ctx.qcfg.n_levels, sigma_q=sigma_q)
    z, _ = codec.encode(x, ctx.spec, params)
    z_bar = hard_quantize(z.ravel(), qcfg).values.reshape(z.shape)
    z_hat = np.empty_like(z)
    for i in range(x.shape[0]):
        trace = transmit_latent(z_bar[i], ctx.keys, ctx.cons, ctx.sigma2,
                                ctx.sigma_l, ctx.error_seed, ctx.channel_seed,
                                message_index=message_base + i,
                                zero_errors=ctx.zero_errors)
        z_hat[i] = soft_dequantize(trace.z_prime, qcfg)
    x_hat, _ = codec.decode(z_hat, ctx.spec, params)
    loss, _ = _loss_fn(ctx.loss)(x, x_hat)
    return loss


@dataclass
class TrainResult:
    state: TrainState
    train_losses: list[float]
    val_losses: list[float]
    stopped_early: bool


def train_codec(train_images: list[np.ndarray], val_images: list[np.ndarray],
                ctx: TrainContext, state: TrainState, *, max_steps: int,
                batch_size: int, shuffle_seed: int, eval_ctx: TrainContext | None = None,
                patience: int = 10, decay_patience: int = 5,
                lr_decay: float = 0.8) -> TrainResult:
    """Epoch loop with early stopping and stagnation-triggered LR decay.

    An epoch is one pass over the training set. Validation runs after each
    epoch on a dedicated context (fresh noise seeds, same chain); training
    stops after ``patience`` epochs without improvement and the learning
    rate shrinks by ``lr_decay`` after ``decay_patience`` stagnant epochs.
    """
    x_train = np.stack([im.reshape(-1) for im in train_images])
    x_val = np.stack([im.reshape(-1) for im in val_images])
    ectx = eval_ctx if eval_ctx is not None else ctx
    shuffle_rng = stream(shuffle_seed)

    best_val = math.inf
    stagnant = 0
    train_losses: list[float] = []
    val_losses: list[float] = []
    stopped_early = False
    while state.step < max_steps:
        order = shuffle_rng.permutation(len(x_train))
        epoch_losses = []
        for start in range(0, len(order), batch_size):
            if state.step >= max_steps:
                break
            batch = x_train[order[start:start + batch_size]]
            state, loss = train_step(batch, state, ctx)
            epoch_losses.append(loss)
        train_losses.append(float(np.mean(epoch_losses)))
        val = evaluate(x_val, state.params, ectx, state.sigma_q)
        val_losses.append(val)
        if val < best_val - 1e-12:
            best_val = val
            stagnant = 0
        else:
            stagnant += 1
            if stagnant > 0 and stagnant % decay_patience == 0:
                state = replace(state, learning_rate=state.learning_rate * lr_decay)
            if stagnant >= patience:
                stopped_early = True
                break
    return TrainResult(state=state, train_losses=train_losses,
                       val_losses=val_losses, stopped_early=stopped_early)
