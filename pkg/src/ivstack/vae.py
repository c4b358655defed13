"""VAE assembly: encoder/decoder pairs, losses, training, multi-pass autoencode.

Two concrete models are built here. The image model flattens 80x80 rasters
scaled to [0, 1], carries 30 latent variables, and reconstructs through a
sigmoid output with binary cross-entropy. The curve model takes the 51-point
normalized curves, carries 10 latent variables, and reconstructs through a
linear output with squared error. Latent vectors handed to other components
are always the posterior means, never samples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nn
from .errors import DomainError, NonFiniteLoss, ShapeMismatch

BCE_CLAMP = 1e-7

IMAGE_INPUT_DIM = 6400
IMAGE_LATENT_DIM = 30
IMAGE_HIDDEN = (1024, 256)
CURVE_INPUT_DIM = 51
CURVE_LATENT_DIM = 10
CURVE_HIDDEN = (64, 32)


@dataclass
class VaeModel:
    """Encoder emits 2*latent_dim values (mu, then log-variance)."""

    encoder: nn.NetParams
    decoder: nn.NetParams
    latent_dim: int
    recon_loss: str  # 'bce' | 'mse'
    input_dim: int
    init_seed: int = 0

    def validate(self) -> None:
        if self.recon_loss not in ("bce", "mse"):
            raise DomainError(f"unknown reconstruction loss {self.recon_loss!r}")
        if self.encoder.input_dim != self.input_dim:
            raise ShapeMismatch("encoder fan_in != input_dim")
        if self.encoder.output_dim != 2 * self.latent_dim:
            raise ShapeMismatch("encoder must emit 2*latent_dim values")
        if self.decoder.input_dim != self.latent_dim:
            raise ShapeMismatch("decoder fan_in != latent_dim")
        if self.decoder.output_dim != self.input_dim:
            raise ShapeMismatch("decoder fan_out != input_dim")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int
    batch_size: int = 64
    kl_warmup_fraction: float = 0.2
    rng_seed: int = 0
    learning_rate: float = 1e-3
    kl_scale: float = 1.0  # diagnostic knob; 1.0 is the standard objective

    def validate(self) -> None:
        if self.epochs < 1:
            raise DomainError("epochs must be >= 1")
        if self.batch_size < 1:
            raise DomainError("batch_size must be >= 1")
        if not (0.0 <= self.kl_warmup_fraction <= 1.0):
            raise DomainError("kl_warmup_fraction must be in [0, 1]")


def _mlp_specs(dims, hidden_act, last_act):
    specs = []
    for i, (a, b) in enumerate(zip(dims, dims[1:])):
        act = last_act if i == len(dims) - 2 else hidden_act
        specs.append(nn.LayerSpec(a, b, act))
    return specs


def build_vae(input_dim: int, hidden, latent_dim: int, recon_loss: str,
              rng_seed: int = 0) -> VaeModel:
    """Mirror-symmetric VAE: relu hidden layers, linear encoder heads,
    sigmoid decoder output for bce, linear output for mse."""
    hidden = tuple(hidden)
    enc = nn.init_params(
        _mlp_specs((input_dim, *hidden, 2 * latent_dim), "relu", "linear"),
        rng_seed,
    )
    out_act = "sigmoid" if recon_loss == "bce" else "linear"
    dec = nn.init_params(
        _mlp_specs((latent_dim, *hidden[::-1], input_dim), "relu", out_act),
        rng_seed + 1,
    )
    m = VaeModel(encoder=enc, decoder=dec, latent_dim=latent_dim,
                 recon_loss=recon_loss, input_dim=input_dim, init_seed=rng_seed)
    m.validate()
    return m


def build_image_vae(rng_seed: int = 0, hidden=IMAGE_HIDDEN,
                    latent_dim: int = IMAGE_LATENT_DIM) -> VaeModel:
    return build_vae(IMAGE_INPUT_DIM, hidden, latent_dim, "bce", rng_seed)


def build_curve_vae(rng_seed: int = 0, hidden=CURVE_HIDDEN,
                    latent_dim: int = CURVE_LATENT_DIM) -> VaeModel:
    return build_vae(CURVE_INPUT_DIM, hidden, latent_dim, "mse", rng_seed)


def encode(m: VaeModel, x: np.ndarray):
    """Posterior heads (mu, logvar) of the encoder, deterministic."""
    out, _ = nn.forward(m.encoder, x)
    return out[..., : m.latent_dim], out[..., m.latent_dim:]


def decode(m: VaeModel, z: np.ndarray) -> np.ndarray:
    out, _ = nn.forward(m.decoder, z)
    return out


def reparameterize(mu: np.ndarray, logvar: np.ndarray, rng_seed: int) -> np.ndarray:
    """z = mu + exp(logvar/2) * eps with eps ~ N(0, I) drawn from the seed."""
    mu = np.asarray(mu, dtype=float)
    logvar = np.asarray(logvar, dtype=float)
    if mu.shape != logvar.shape:
        raise ShapeMismatch(f"mu {mu.shape} vs logvar {logvar.shape}")
    eps = np.random.default_rng(rng_seed).standard_normal(mu.shape)
    return mu + np.exp(0.5 * logvar) * eps


def kl_divergence(mu: np.ndarray, logvar: np.ndarray):
    """KL(N(mu, exp(logvar)) || N(0, I)) = -0.5*sum(1 + lv - mu^2 - e^lv).

    Summed over the trailing (latent) axis: scalar for one vector,
    per-sample array for a batch.
    """
    mu = np.asarray(mu, dtype=float)
    logvar = np.asarray(logvar, dtype=float)
    if mu.shape != logvar.shape:
        raise ShapeMismatch(f"mu {mu.shape} vs logvar {logvar.shape}")
    kl = -0.5 * np.sum(1.0 + logvar - mu ** 2 - np.exp(logvar), axis=-1)
    return float(kl) if kl.ndim == 0 else kl


def recon_loss(m: VaeModel, x: np.ndarray, x_hat: np.ndarray):
    """Per-sample reconstruction loss, summed over features.

    bce: -sum(x*ln(x_hat) + (1-x)*ln(1-x_hat)), x_hat clamped away from
    {0, 1}; raises DomainError if inputs leave [0, 1].
    mse: sum((x - x_hat)^2).
    """
    x = np.asarray(x, dtype=float)
    x_hat = np.asarray(x_hat, dtype=float)
    if x.shape != x_hat.shape:
        raise ShapeMismatch(f"x {x.shape} vs x_hat {x_hat.shape}")
    if m.recon_loss == "mse":
        loss = np.sum((x - x_hat) ** 2, axis=-1)
    else:
        if np.any(x < 0.0) or np.any(x > 1.0) or np.any(x_hat < 0.0) or np.any(x_hat > 1.0):
            raise DomainError("bce requires values in [0, 1]")
        c = np.clip(x_hat, BCE_CLAMP, 1.0 - BCE_CLAMP)
        loss = -np.sum(x * np.log(c) + (1.0 - x) * np.log(1.0 - c), axis=-1)
    return float(loss) if loss.ndim == 0 else loss


def _recon_grad(m: VaeModel, x: np.ndarray, x_hat: np.ndarray) -> np.ndarray:
    if m.recon_loss == "mse":
        return 2.0 * (x_hat - x)
    c = np.clip(x_hat, BCE_CLAMP, 1.0 - BCE_CLAMP)
    g = (c - x) / (c * (1.0 - c))
    # outside the clamp the loss is constant in x_hat
    g[(x_hat < BCE_CLAMP) | (x_hat > 1.0 - BCE_CLAMP)] = 0.0
    return g


def batch_loss_and_grads(m: VaeModel, xb: np.ndarray, eps: np.ndarray, beta: float):
    """Mean ELBO loss over one batch and exact gradients for both nets.

    eps is the frozen reparameterization draw for the batch, shape
    (batch, latent_dim). Returns (total, recon_mean, kl_mean, enc_grads,
    dec_grads). Single source of truth for the training objective, so it is
    also what the finite-difference checks exercise.
    """
    xb = np.atleast_2d(np.asarray(xb, dtype=float))
    b = xb.shape[0]
    enc_out, enc_cache = nn.forward(m.encoder, xb)
    mu = enc_out[:, : m.latent_dim]
    logvar = enc_out[:, m.latent_dim:]
    sigma = np.exp(0.5 * logvar)
    z = mu + sigma * eps
    x_hat, dec_cache = nn.forward(m.decoder, z)

    rec = recon_loss(m, xb, x_hat)
    kl = kl_divergence(mu, logvar)
    rec_mean = float(np.mean(rec))
    kl_mean = float(np.mean(kl))
    total = rec_mean + beta * kl_mean

    d_xhat = _recon_grad(m, xb, x_hat) / b
    dec_grads, dz = nn.backward(m.decoder, dec_cache, d_xhat)
    d_mu = dz + beta * mu / b
    d_logvar = dz * eps * 0.5 * sigma - beta * 0.5 * (1.0 - np.exp(logvar)) / b
    d_enc_out = np.concatenate([d_mu, d_logvar], axis=1)
    enc_grads, _ = nn.backward(m.encoder, enc_cache, d_enc_out)
    return total, rec_mean, kl_mean, enc_grads, dec_grads


def train(m: VaeModel, data: np.ndarray, cfg: TrainConfig):
    """Train a fresh copy of the model; returns (model, per-epoch trace).

    All randomness (parameter init, epoch shuffles, reparameterization
    draws) derives from cfg.rng_seed, so identical calls produce identical
    models and traces. The KL weight ramps linearly from ~0 to kl_scale over
    the first kl_warmup_fraction of the epochs and is then held.
    """
    cfg.validate()
    data = np.asarray(data, dtype=float)
    if data.ndim != 2 or data.shape[0] == 0:
        raise ShapeMismatch(f"expected non-empty (n, {m.input_dim}) data, got {data.shape}")
    if data.shape[1] != m.input_dim:
        raise ShapeMismatch(f"data dim {data.shape[1]} != input_dim {m.input_dim}")

    seeds = np.random.SeedSequence(cfg.rng_seed).generate_state(3)
    model = VaeModel(
        encoder=nn.init_params([*m.encoder.specs], int(seeds[0])),
        decoder=nn.init_params([*m.decoder.specs], int(seeds[1])),
        latent_dim=m.latent_dim, recon_loss=m.recon_loss,
        input_dim=m.input_dim, init_seed=cfg.rng_seed,
    )
    rng = np.random.default_rng(int(seeds[2]))
    opt_enc = nn.init_adam(model.encoder, alpha=cfg.learning_rate)
    opt_dec = nn.init_adam(model.decoder, alpha=cfg.learning_rate)

    n = data.shape[0]
    warmup = round(cfg.kl_warmup_fraction * cfg.epochs)
    trace = []
    for epoch in range(cfg.epochs):
        if warmup == 0:
            beta = cfg.kl_scale
        else:
            beta = cfg.kl_scale * min(1.0, (epoch + 1) / warmup)
        order = rng.permutation(n)
        tot_sum = rec_sum = kl_sum = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            xb = data[idx]
            eps = rng.standard_normal((len(idx), model.latent_dim))
            total, rec, kl, g_enc, g_dec = batch_loss_and_grads(model, xb, eps, beta)
            if not np.isfinite(total):
                raise NonFiniteLoss(
                    f"non-finite loss at epoch {epoch}, batch offset {start}: "
                    f"recon={rec}, kl={kl}"
                )
            nn.adam_step(model.encoder, g_enc, opt_enc)
            nn.adam_step(model.decoder, g_dec, opt_dec)
            tot_sum += total * len(idx)
            rec_sum += rec * len(idx)
            kl_sum += kl * len(idx)
        trace.append({
            "epoch": epoch,
            "total": tot_sum / n,
            "recon": rec_sum / n,
            "kl": kl_sum / n,
            "beta": beta,
        })
    return model, trace


def autoencode(m: VaeModel, x: np.ndarray, k: int) -> np.ndarray:
    """k rounds of decode(mu-encode(x)); k = 0 returns x unchanged.

    Uses the posterior mean only, so the result is deterministic and
    repeated calls compose: autoencode(autoencode(x, a), b) equals
    autoencode(x, a + b).
    """
    if k < 0:
        raise DomainError(f"pass count must be >= 0, got {k}")
    out = np.asarray(x, dtype=float).copy()
    for _ in range(k):
        mu, _ = encode(m, out)
        out = decode(m, mu)
    return out
