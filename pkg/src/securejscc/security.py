"""Security harness: indistinguishability game and chosen-plaintext attack.

The game follows the standard public-key formulation: fresh keys per
trial, a fair hidden bit, an adversary-chosen plaintext pair, and a
distinguisher that sees only public material plus the challenge
ciphertext. The advantage estimate is ``2 * accuracy - 1`` with a binomial
confidence interval.

The chosen-plaintext attack trains a regression adversary on
(image, ciphertext) pairs collected at infinite eavesdropper SNR and
compares it against the mean-image baseline. A sabotage mode that reuses
one error triple across all messages must make the attack succeed; the
harness is only trusted because it demonstrably detects that broken
configuration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import codec, metrics
from .datasets import DatasetSpec, synthesize_dataset
from .lwe import (LweParams, PublicKey, centered, derive_errors, encrypt,
                  keygen, sample_discrete_gaussian)
from .modem import awgn, build_constellation, modulate, soft_demodulate
from .quantizer import QuantizerConfig, build_centroids, hard_quantize
from .rng import spawn_seed, stream

FEATURE_NOTE = ("features per symbol value v: [v/p, cos(2*pi*v/p), sin(2*pi*v/p)] "
                "(raw residue plus circular embedding)")
CLASSIFIER_NOTE = ("logistic model on centered ciphertext residues and their "
                   "differences with both candidate plaintexts, scaled by 1/p")


def default_plaintext_pair(params: LweParams,
                           n_levels: int) -> tuple[np.ndarray, np.ndarray]:
    """All-zeros versus all-top-centroid: the most distinguishable pair."""
    cents = build_centroids(params.p, n_levels)
    m0 = np.zeros(params.k, dtype=np.int64)
    m1 = np.full(params.k, cents[-1], dtype=np.int64)
    return m0, m1


def eve_channel_observe(y: np.ndarray, snr_e_db: float, avg_power: float,
                        rng: np.random.Generator) -> np.ndarray:
    """Eavesdropper's AWGN view of the channel input; inf SNR is lossless."""
    sigma2 = 0.0 if math.isinf(snr_e_db) else avg_power * 10.0 ** (-snr_e_db / 10.0)
    return awgn(y, sigma2, rng)


# -- distinguishers ----------------------------------------------------------


class FairCoin:
    """Guessing baseline; ignores the challenge entirely."""

    name = "fair_coin"

    def prepare(self, pk, m0, m1, rng):
        pass

    def guess(self, c, rng, true_bit=None):
        return int(rng.integers(0, 2))


class SyntheticOracle:
    """Test hook with a known accuracy; the game leaks it the true bit."""

    needs_true_bit = True

    def __init__(self, accuracy: float):
        self.accuracy = accuracy
        self.name = f"synthetic_q{accuracy}"

    def prepare(self, pk, m0, m1, rng):
        pass

    def guess(self, c, rng, true_bit=None):
        if true_bit is None:
            raise RuntimeError("synthetic oracle needs the leaked bit")
        if rng.random() < self.accuracy:
            return true_bit
        return 1 - true_bit


class MarginalChiSquare:
    """Pick the hypothesis whose shifted residues look more uniform.

    Coarse-bins ``(c - m_b) mod p`` and compares goodness-of-fit statistics
    against the uniform histogram; ties fall back to a coin flip.
    """

    name = "marginal_chisq"

    def __init__(self, n_bins: int = 16):
        self.n_bins = n_bins

    def prepare(self, pk, m0, m1, rng):
        self.p = pk.params.p
        self.m = (m0, m1)
        self.bins = min(self.n_bins, self.p)

    def _stat(self, residues: np.ndarray) -> float:
        idx = (residues * self.bins) // self.p
        counts = np.bincount(idx, minlength=self.bins)
        expected = len(residues) / self.bins
        return float(np.sum((counts - expected) ** 2) / expected)

    def guess(self, c, rng, true_bit=None):
        stats = [self._stat((c - m) % self.p) for m in self.m]
        if stats[0] == stats[1]:
            return int(rng.integers(0, 2))
        return int(np.argmin(stats))


class TrainedClassifier:
    """Logistic distinguisher fitted on self-generated ciphertexts.

    Knowing the public key, the adversary encrypts both candidate
    plaintexts many times with its own error samples and fits a logistic
    model; the challenge is then classified by that model.
    """

    name = "trained_classifier"
    feature_note = CLASSIFIER_NOTE

    def __init__(self, train_size: int = 256, epochs: int = 20,
                 lr: float = 0.5, l2: float = 1e-2):
        self.train_size = train_size
        self.epochs = epochs
        self.lr = lr
        self.l2 = l2

    def _features(self, c: np.ndarray) -> np.ndarray:
        p = self.p
        cols = [centered(c, p), centered(c - self.m[0], p), centered(c - self.m[1], p)]
        return np.concatenate([np.asarray(col, dtype=np.float64) / p
                               for col in cols], axis=-1)

    def prepare(self, pk, m0, m1, rng):
        self.p = pk.params.p
        self.m = (m0, m1)
        params = pk.params
        n = self.train_size
        rows = []
        labels = np.tile([0, 1], n // 2 + 1)[:n]
        e1 = sample_discrete_gaussian(params.sigma_s, n * params.n1,
                                      rng).reshape(n, params.n1)
        e3 = sample_discrete_gaussian(params.sigma_s, n * params.k,
                                      rng).reshape(n, params.k)
        base = (e1 @ pk.B + e3) % params.p
        for i in range(n):
            c = (base[i] + self.m[labels[i]]) % params.p
            rows.append(self._features(c))
        x = np.stack(rows)
        y = labels.astype(np.float64)
        w = np.zeros(x.shape[1])
        b = 0.0
        for _ in range(self.epochs):
            logits = x @ w + b
            prob = 1.0 / (1.0 + np.exp(-logits))
            err = prob - y
            w -= self.lr * (x.T @ err / n + self.l2 * w)
            b -= self.lr * float(err.mean())
        self.w, self.b = w, b

    def guess(self, c, rng, true_bit=None):
        logit = float(self._features(c) @ self.w + self.b)
        return int(logit >= 0.0)


DISTINGUISHERS = {
    "fair_coin": FairCoin,
    "marginal_chisq": MarginalChiSquare,
    "trained_classifier": TrainedClassifier,
}


# -- the game ----------------------------------------------------------------


@dataclass(frozen=True)
class GameConfig:
    trials: int
    params: LweParams
    n_levels: int = 16
    seed: int = 0
    distinguisher: str = "marginal_chisq"

    def __post_init__(self):
        if self.trials < 100:
            raise ValueError(f"need at least 100 trials, got {self.trials}")


@dataclass(frozen=True)
class GameResult:
    distinguisher: str
    trials: int
    correct: int
    accuracy: float
    advantage: float
    ci_low: float
    ci_high: float

    def summary(self) -> str:
        return (f"distinguisher={self.distinguisher} trials={self.trials} "
                f"accuracy={self.accuracy:.4f} advantage={self.advantage:+.4f} "
                f"ci95=[{self.ci_low:+.4f}, {self.ci_high:+.4f}]")

    def csv_row(self) -> str:
        return (f"{self.distinguisher},{self.trials},{self.correct},"
                f"{self.accuracy:.6f},{self.advantage:.6f},"
                f"{self.ci_low:.6f},{self.ci_high:.6f}")


GAME_CSV_HEADER = "distinguisher,trials,correct,accuracy,advantage,ci_low,ci_high"


def run_ind_cpa_game(cfg: GameConfig, distinguisher=None) -> GameResult:
    """Estimate the distinguisher's advantage over ``cfg.trials`` games.

    Each trial draws fresh keys, a fair bit, and a fresh error triple for
    the challenge encryption. Trials are keyed by ``(seed, trial)`` so they
    are independent and order-insensitive.
    """
    if distinguisher is None:
        distinguisher = DISTINGUISHERS[cfg.distinguisher]()
    m0, m1 = default_plaintext_pair(cfg.params, cfg.n_levels)
    needs_bit = getattr(distinguisher, "needs_true_bit", False)
    correct = 0
    for t in range(cfg.trials):
        trial_rng = stream(cfg.seed, t)
        keys = keygen(cfg.params, spawn_seed(trial_rng), spawn_seed(trial_rng))
        pk = keys.public()
        error_seed = spawn_seed(trial_rng)
        adv_seed = spawn_seed(trial_rng)
        b = int(trial_rng.integers(0, 2))
        distinguisher.prepare(pk, m0, m1, stream(adv_seed))
        errors = derive_errors(error_seed, 0, cfg.params)
        ct = encrypt(m1 if b else m0, pk, errors)
        guess = distinguisher.guess(ct.c, stream(adv_seed, 1),
                                    true_bit=b if needs_bit else None)
        correct += int(guess == b)
    acc = correct / cfg.trials
    se = math.sqrt(max(acc * (1.0 - acc), 0.0) / cfg.trials)
    return GameResult(
        distinguisher=getattr(distinguisher, "name", cfg.distinguisher),
        trials=cfg.trials, correct=correct, accuracy=acc,
        advantage=2.0 * acc - 1.0,
        ci_low=2.0 * (acc - 1.96 * se) - 1.0,
        ci_high=2.0 * (acc + 1.96 * se) - 1.0)


# -- chosen-plaintext attack -------------------------------------------------


ERROR_MODES = ("fresh", "reused", "known_seed")
ADVERSARIES = ("mean_predictor", "linear", "mlp")


@dataclass(frozen=True)
class AttackConfig:
    adversary: str
    pairs: int
    dataset: DatasetSpec
    epochs: int = 30
    metric: str = "mse"
    error_mode: str = "fresh"
    snr_e_db: float = math.inf
    test_fraction: float = 0.2
    seed: int = 0
    mlp_hidden: int = 64

    def __post_init__(self):
        if self.adversary not in ADVERSARIES:
            raise ValueError(f"unknown adversary {self.adversary!r}")
        if self.error_mode not in ERROR_MODES:
            raise ValueError(f"unknown error mode {self.error_mode!r}")
        if self.pairs < 1:
            raise ValueError("need at least one (image, ciphertext) pair")
        if self.metric not in ("mse", "psnr", "ssim"):
            raise ValueError(f"unknown metric {self.metric!r}")


@dataclass(frozen=True)
class AttackReport:
    adversary: str
    error_mode: str
    snr_e_db: float
    n_train: int
    n_test: int
    adversary_mse: float
    baseline_mse: float
    adversary_psnr: float
    baseline_psnr: float
    adversary_ssim: float
    baseline_ssim: float
    feature_note: str

    @property
    def mse_ratio(self) -> float:
        return self.adversary_mse / self.baseline_mse

    def summary(self) -> str:
        return (f"adversary={self.adversary} errors={self.error_mode} "
                f"snr_e={self.snr_e_db} dB pairs={self.n_train}+{self.n_test}\n"
                f"  adversary: mse={self.adversary_mse:.2f} "
                f"psnr={self.adversary_psnr:.2f} dB ssim={self.adversary_ssim:.4f}\n"
                f"  mean-image baseline: mse={self.baseline_mse:.2f} "
                f"psnr={self.baseline_psnr:.2f} dB ssim={self.baseline_ssim:.4f}\n"
                f"  mse ratio adversary/baseline = {self.mse_ratio:.3f}\n"
                f"  {self.feature_note}")

    def csv_row(self) -> str:
        return (f"{self.adversary},{self.error_mode},{self.snr_e_db},"
                f"{self.n_train},{self.n_test},{self.adversary_mse:.6f},"
                f"{self.baseline_mse:.6f},{self.mse_ratio:.6f}")


ATTACK_CSV_HEADER = ("adversary,error_mode,snr_e_db,n_train,n_test,"
                     "adversary_mse,baseline_mse,mse_ratio")


def _require_public(key) -> None:
    # audit: the attack path must never receive secret material
    if not isinstance(key, PublicKey) or hasattr(key, "S") or hasattr(key, "key_seed"):
        raise TypeError("the chosen-plaintext attack accepts public keys only")


def _circular_features(values: np.ndarray, p: int) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    angle = 2.0 * np.pi * v / p
    return np.concatenate([v / p, np.cos(angle), np.sin(angle)], axis=-1)


def _fit_linear(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    xb = np.hstack([x, np.ones((x.shape[0], 1))])
    lam = 1e-3 * x.shape[0]
    gram = xb.T @ xb + lam * np.eye(xb.shape[1])
    return np.linalg.solve(gram, xb.T @ y)


def _predict_linear(w: np.ndarray, x: np.ndarray) -> np.ndarray:
    return np.hstack([x, np.ones((x.shape[0], 1))]) @ w


def _fit_mlp(x, y, hidden, epochs, rng):
    params = codec.dense_init([x.shape[1], hidden, y.shape[1]], "adv", rng)
    opt = codec.AdamState()
    step = 0
    batch = 64
    for _ in range(epochs):
        order = rng.permutation(x.shape[0])
        for s in range(0, len(order), batch):
            sel = order[s:s + batch]
            out, cache = codec.dense_forward(params, "adv", x[sel], 2)
            _, grad_out = codec.mse_loss(y[sel], out)
            grads, _ = codec.dense_backward(params, "adv", cache, grad_out, 2)
            step += 1
            params = codec.adam_step(params, grads, opt, step, lr=1e-3)
    return params


def run_cpa_attack(cfg: AttackConfig, spec: codec.CodecSpec, codec_params: dict,
                   public_key: PublicKey, qcfg: QuantizerConfig, *,
                   sigma_l: float = 5.0, avg_power: float = 1.0) -> AttackReport:
    """Train the configured adversary on (image, ciphertext) pairs.

    In ``fresh`` mode every message uses an independent error triple the
    adversary does not know. ``reused`` freezes one triple for the whole
    run (the sabotage control). ``known_seed`` keeps fresh errors but hands
    the adversary the shared error seed, letting it strip the error layer
    off each ciphertext before fitting.
    """
    _require_public(public_key)
    params = public_key.params
    rng = stream(cfg.seed)
    data_seed = spawn_seed(rng)
    error_seed = spawn_seed(rng)
    eve_seed = spawn_seed(rng)
    fit_seed = spawn_seed(rng)

    dataset = DatasetSpec(kind=cfg.dataset.kind, count=cfg.pairs,
                          height=cfg.dataset.height, width=cfg.dataset.width,
                          channels=cfg.dataset.channels)
    images = synthesize_dataset(dataset, data_seed)
    x = np.stack([im.reshape(-1) for im in images])

    z, _ = codec.encode(x, spec, codec_params)
    z_bar = hard_quantize(z.ravel(), qcfg).values.reshape(z.shape)
    observations = np.empty_like(z)
    cons = None if math.isinf(cfg.snr_e_db) else build_constellation(params.p, avg_power)
    for i in range(cfg.pairs):
        index = 0 if cfg.error_mode == "reused" else i
        errors = derive_errors(error_seed, index, params)
        ct = encrypt(z_bar[i], public_key, errors, message_index=index)
        if cons is None:
            observed = ct.c.astype(np.float64)
        else:
            y_eve = eve_channel_observe(modulate(ct.c, cons), cfg.snr_e_db,
                                        avg_power, stream(eve_seed, i))
            sigma2_e = avg_power * 10.0 ** (-cfg.snr_e_db / 10.0)
            observed = soft_demodulate(y_eve, cons, sigma2_e, sigma_l)
        if cfg.error_mode == "known_seed":
            # the seed lets the adversary remove the error layer exactly
            observed = (observed - (public_key.B.T @ errors.e1 + errors.e3)) % params.p
        observations[i] = observed

    n_test = max(1, int(round(cfg.pairs * cfg.test_fraction)))
    n_train = cfg.pairs - n_test
    if n_train < 1:
        raise ValueError("test fraction leaves no training pairs")
    feats = _circular_features(observations, params.p)
    x_train, x_test = x[:n_train], x[n_train:]
    f_train, f_test = feats[:n_train], feats[n_train:]

    mean_image = x_train.mean(axis=0)
    baseline_pred = np.tile(mean_image, (n_test, 1))
    if cfg.adversary == "mean_predictor":
        pred = baseline_pred
    elif cfg.adversary == "linear":
        w = _fit_linear(f_train, x_train)
        pred = np.clip(_predict_linear(w, f_test), 0.0, 255.0)
    else:
        net = _fit_mlp(f_train, x_train / 255.0, cfg.mlp_hidden, cfg.epochs,
                       stream(fit_seed))
        out, _ = codec.dense_forward(net, "adv", f_test, 2)
        pred = np.clip(255.0 * out, 0.0, 255.0)

    shape = (dataset.height, dataset.width, dataset.channels)

    def _scores(predicted):
        mses, psnrs, ssims = [], [], []
        for i in range(n_test):
            a = x_test[i].reshape(shape)
            b = predicted[i].reshape(shape)
            mses.append(metrics.mse(a, b))
            psnrs.append(metrics.psnr(a, b))
            ssims.append(metrics.ssim(a, b))
        return float(np.mean(mses)), float(np.mean(psnrs)), float(np.mean(ssims))

    adv_mse, adv_psnr, adv_ssim = _scores(pred)
    base_mse, base_psnr, base_ssim = _scores(baseline_pred)
    return AttackReport(
        adversary=cfg.adversary, error_mode=cfg.error_mode,
        snr_e_db=cfg.snr_e_db, n_train=n_train, n_test=n_test,
        adversary_mse=adv_mse, baseline_mse=base_mse,
        adversary_psnr=adv_psnr, baseline_psnr=base_psnr,
        adversary_ssim=adv_ssim, baseline_ssim=base_ssim,
        feature_note=FEATURE_NOTE)
