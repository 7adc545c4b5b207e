"""Attribute-conditioned variational autoencoder on feature vectors.

Encoder: concat(x, a) -> 512 ReLU -> dropout(0.3) -> 512 ReLU -> two
linear heads producing the 50-dim posterior mean and log-variance.
Decoder: concat(z, a) -> 1024 ReLU -> linear head back to feature space.
Default widths follow that layout; toy experiments may shrink them.

The loss is the batch-mean squared-L2 reconstruction error plus a weighted
batch-mean KL divergence of the diagonal-Gaussian posterior against N(0, I).
All gradients are computed by hand through the reparameterization.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import nn
from .errors import ConfigError, DataError, DimensionError

LATENT_DIM_DEFAULT = 50


@dataclass(frozen=True)
class CvaeArchitecture:
    """Layer widths; defaults match the 512/512 -> 50 -> 1024 layout."""

    feature_dim: int
    attribute_dim: int
    encoder_hidden: int = 512
    latent_dim: int = LATENT_DIM_DEFAULT
    decoder_hidden: int = 1024
    dropout_rate: float = 0.3


@dataclass
class LatentDistribution:
    """Per-sample diagonal Gaussian: mean and log-variance rows."""

    mu: np.ndarray
    logvar: np.ndarray

    def __post_init__(self):
        if self.mu.shape != self.logvar.shape:
            raise DimensionError(
                f"mu shape {self.mu.shape} != logvar shape {self.logvar.shape}"
            )


@dataclass
class DecoderParams:
    """Standalone decoder; sufficient for sample generation and replay."""

    hidden: nn.DenseLayer
    output: nn.DenseLayer
    latent_dim: int
    attribute_dim: int

    @property
    def feature_dim(self) -> int:
        return self.output.out_dim


@dataclass
class CvaeParams:
    """Encoder and decoder layers plus the architecture they realize."""

    arch: CvaeArchitecture
    enc1: nn.DenseLayer
    enc2: nn.DenseLayer
    mu_head: nn.DenseLayer
    logvar_head: nn.DenseLayer
    dec1: nn.DenseLayer
    dec_out: nn.DenseLayer

    def blocks(self) -> dict:
        return {
            "enc1": self.enc1,
            "enc2": self.enc2,
            "mu_head": self.mu_head,
            "logvar_head": self.logvar_head,
            "dec1": self.dec1,
            "dec_out": self.dec_out,
        }

    def flat(self) -> dict:
        """Parameter blocks as a flat name -> array dict (shared storage)."""
        out = {}
        for name, layer in self.blocks().items():
            out[f"{name}.W"] = layer.weights
            out[f"{name}.b"] = layer.bias
        return out

    def decoder(self) -> DecoderParams:
        return DecoderParams(
            hidden=self.dec1,
            output=self.dec_out,
            latent_dim=self.arch.latent_dim,
            attribute_dim=self.arch.attribute_dim,
        )

    def copy(self) -> "CvaeParams":
        layers = {
            name: nn.DenseLayer(layer.weights.copy(), layer.bias.copy(),
                                layer.activation)
            for name, layer in self.blocks().items()
        }
        return CvaeParams(arch=self.arch, **layers)


def init_cvae(arch: CvaeArchitecture, rng: np.random.Generator) -> CvaeParams:
    enc_in = arch.feature_dim + arch.attribute_dim
    dec_in = arch.latent_dim + arch.attribute_dim
    return CvaeParams(
        arch=arch,
        enc1=nn.init_dense(arch.encoder_hidden, enc_in, nn.RELU, rng),
        enc2=nn.init_dense(arch.encoder_hidden, arch.encoder_hidden, nn.RELU, rng),
        mu_head=nn.init_dense(arch.latent_dim, arch.encoder_hidden, nn.LINEAR, rng),
        logvar_head=nn.init_dense(arch.latent_dim, arch.encoder_hidden, nn.LINEAR, rng),
        dec1=nn.init_dense(arch.decoder_hidden, dec_in, nn.RELU, rng),
        dec_out=nn.init_dense(arch.feature_dim, arch.decoder_hidden, nn.LINEAR, rng),
    )


def _check_pair(x: np.ndarray, a: np.ndarray, arch: CvaeArchitecture):
    if x.shape[1] != arch.feature_dim:
        raise DimensionError(
            f"feature dim {x.shape[1]} != architecture feature_dim {arch.feature_dim}"
        )
    if a.shape[1] != arch.attribute_dim:
        raise DimensionError(
            f"attribute dim {a.shape[1]} != architecture attribute_dim "
            f"{arch.attribute_dim}"
        )
    if x.shape[0] != a.shape[0]:
        raise DimensionError(
            f"batch mismatch: {x.shape[0]} feature rows vs {a.shape[0]} attribute rows"
        )


def encode(params: CvaeParams, x: np.ndarray, a: np.ndarray,
           rng=None, training: bool = False) -> LatentDistribution:
    """Posterior (mu, logvar); dropout active only in training mode."""
    _check_pair(x, a, params.arch)
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    h = np.concatenate([x, a], axis=1)
    h1 = nn.affine_forward(params.enc1, h)
    h1 = nn.dropout_apply(h1, params.arch.dropout_rate, gen, training)
    h2 = nn.affine_forward(params.enc2, h1)
    mu = nn.affine_forward(params.mu_head, h2)
    logvar = nn.affine_forward(params.logvar_head, h2)
    return LatentDistribution(mu=mu, logvar=logvar)


def reparameterize(dist: LatentDistribution, noise: np.ndarray) -> np.ndarray:
    """z = mu + exp(logvar / 2) * noise, with noise ~ N(0, I)."""
    if noise.shape != dist.mu.shape:
        raise DimensionError(
            f"noise shape {noise.shape} != distribution shape {dist.mu.shape}"
        )
    return dist.mu + np.exp(0.5 * dist.logvar) * noise


def decode(decoder: DecoderParams | CvaeParams, z: np.ndarray,
           a: np.ndarray) -> np.ndarray:
    """Deterministic reconstruction from latent codes and attributes."""
    if isinstance(decoder, CvaeParams):
        decoder = decoder.decoder()
    if z.shape[1] != decoder.latent_dim:
        raise DimensionError(
            f"latent dim {z.shape[1]} != decoder latent_dim {decoder.latent_dim}"
        )
    if a.shape[1] != decoder.attribute_dim:
        raise DimensionError(
            f"attribute dim {a.shape[1]} != decoder attribute_dim "
            f"{decoder.attribute_dim}"
        )
    h = np.concatenate([z, a], axis=1)
    h1 = nn.affine_forward(decoder.hidden, h)
    return nn.affine_forward(decoder.output, h1)


def kl_divergence(dist: LatentDistribution) -> float:
    """KL(N(mu, diag(exp(logvar))) || N(0, I)), averaged over batch rows.

    Closed form per row: 0.5 * sum_j (mu_j^2 + exp(logvar_j) - logvar_j - 1).
    """
    per_row = 0.5 * np.sum(
        dist.mu ** 2 + np.exp(dist.logvar) - dist.logvar - 1.0, axis=1
    )
    return float(np.mean(per_row))


def reconstruction_loss(x: np.ndarray, x_hat: np.ndarray) -> float:
    """Batch mean of the squared Euclidean distance per row."""
    if x.shape != x_hat.shape:
        raise DimensionError(f"shape mismatch: {x.shape} vs {x_hat.shape}")
    return float(np.mean(np.sum((x - x_hat) ** 2, axis=1)))


def cvae_loss(params: CvaeParams, x: np.ndarray, a: np.ndarray,
              kl_weight: float = 1.0, rng=None, training: bool = True):
    """Total loss and its gradients through the reparameterization.

    ``rng`` may be a Generator (consumed for the dropout mask and the latent
    noise) or an int seed, which makes the call a deterministic function of
    its arguments -- that is what the finite-difference checks rely on.

    Returns (loss, grads, parts) where grads is keyed like
    ``CvaeParams.flat()`` and parts is {"reconstruction", "kl"}.
    """
    _check_pair(x, a, params.arch)
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    arch = params.arch
    n = x.shape[0]

    # forward, keeping each layer's input for the backward pass
    h = np.concatenate([x, a], axis=1)
    h1 = nn.affine_forward(params.enc1, h)
    if training and arch.dropout_rate > 0.0:
        mask = nn.dropout_mask(h1.shape, arch.dropout_rate, gen)
    else:
        mask = np.ones_like(h1)
    h1d = h1 * mask
    h2 = nn.affine_forward(params.enc2, h1d)
    mu = nn.affine_forward(params.mu_head, h2)
    logvar = nn.affine_forward(params.logvar_head, h2)
    eps = gen.standard_normal(mu.shape)
    std = np.exp(0.5 * logvar)
    z = mu + std * eps
    hd = np.concatenate([z, a], axis=1)
    h3 = nn.affine_forward(params.dec1, hd)
    x_hat = nn.affine_forward(params.dec_out, h3)

    recon = float(np.mean(np.sum((x - x_hat) ** 2, axis=1)))
    kl = 0.5 * float(np.mean(np.sum(mu ** 2 + np.exp(logvar) - logvar - 1.0, axis=1)))
    loss = recon + kl_weight * kl

    # backward: decoder
    d_xhat = 2.0 * (x_hat - x) / n
    dW_out, db_out, d_h3 = nn.affine_backward(params.dec_out, h3, d_xhat)
    dW_dec1, db_dec1, d_hd = nn.affine_backward(params.dec1, hd, d_h3)
    d_z = d_hd[:, : arch.latent_dim]

    # through the reparameterization, plus the KL terms
    d_mu = d_z + kl_weight * mu / n
    d_logvar = d_z * eps * 0.5 * std + kl_weight * 0.5 * (np.exp(logvar) - 1.0) / n

    # encoder heads share h2
    dW_mu, db_mu, d_h2_mu = nn.affine_backward(params.mu_head, h2, d_mu)
    dW_lv, db_lv, d_h2_lv = nn.affine_backward(params.logvar_head, h2, d_logvar)
    d_h2 = d_h2_mu + d_h2_lv
    dW_e2, db_e2, d_h1d = nn.affine_backward(params.enc2, h1d, d_h2)
    d_h1 = d_h1d * mask
    dW_e1, db_e1, _ = nn.affine_backward(params.enc1, h, d_h1)

    grads = {
        "enc1.W": dW_e1, "enc1.b": db_e1,
        "enc2.W": dW_e2, "enc2.b": db_e2,
        "mu_head.W": dW_mu, "mu_head.b": db_mu,
        "logvar_head.W": dW_lv, "logvar_head.b": db_lv,
        "dec1.W": dW_dec1, "dec1.b": db_dec1,
        "dec_out.W": dW_out, "dec_out.b": db_out,
    }
    return loss, grads, {"reconstruction": recon, "kl": kl}


def generate(decoder: DecoderParams | CvaeParams, attribute: np.ndarray,
             n: int, rng) -> np.ndarray:
    """n feature vectors decoded from standard-normal latents and one attribute."""
    if n < 1:
        raise ConfigError(f"sample count must be >= 1, got {n}")
    if isinstance(decoder, CvaeParams):
        decoder = decoder.decoder()
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    attribute = np.asarray(attribute, dtype=float).reshape(1, -1)
    z = gen.standard_normal((n, decoder.latent_dim))
    a = np.repeat(attribute, n, axis=0)
    return decode(decoder, z, a)


# ---------------------------------------------------------------------------
# checkpointing

_CHECKPOINT_VERSION = 1
_DECODER_KEYS = ("dec1", "dec_out")


def save_checkpoint(path, params: CvaeParams, meta: dict | None = None,
                    decoder_only: bool = False) -> None:
    """Write layer shapes and weights plus metadata to an .npz file.

    The decoder blocks are stored under the same keys either way, so a
    decoder can always be loaded without the encoder.
    """
    arrays = {}
    names = _DECODER_KEYS if decoder_only else tuple(params.blocks())
    blocks = params.blocks()
    for name in names:
        arrays[f"{name}.W"] = blocks[name].weights
        arrays[f"{name}.b"] = blocks[name].bias
    header = {
        "version": _CHECKPOINT_VERSION,
        "decoder_only": decoder_only,
        "arch": {
            "feature_dim": params.arch.feature_dim,
            "attribute_dim": params.arch.attribute_dim,
            "encoder_hidden": params.arch.encoder_hidden,
            "latent_dim": params.arch.latent_dim,
            "decoder_hidden": params.arch.decoder_hidden,
            "dropout_rate": params.arch.dropout_rate,
        },
        "meta": meta or {},
    }
    arrays["header"] = np.frombuffer(
        json.dumps(header, sort_keys=True).encode(), dtype=np.uint8
    )
    np.savez(path, **arrays)


def _read_header(npz) -> dict:
    if "header" not in npz:
        raise DataError("not a CVAE checkpoint: missing header")
    header = json.loads(bytes(npz["header"]).decode())
    if header.get("version") != _CHECKPOINT_VERSION:
        raise DataError(f"unsupported checkpoint version {header.get('version')}")
    return header


def load_checkpoint(path) -> tuple[CvaeParams, dict]:
    """Load a full CVAE checkpoint; returns (params, meta)."""
    with np.load(Path(path)) as npz:
        header = _read_header(npz)
        if header["decoder_only"]:
            raise DataError(f"{path} holds only a decoder, not a full CVAE")
        arch = CvaeArchitecture(**header["arch"])
        acts = {"enc1": nn.RELU, "enc2": nn.RELU, "mu_head": nn.LINEAR,
                "logvar_head": nn.LINEAR, "dec1": nn.RELU, "dec_out": nn.LINEAR}
        layers = {
            name: nn.DenseLayer(npz[f"{name}.W"].copy(), npz[f"{name}.b"].copy(), act)
            for name, act in acts.items()
        }
        return CvaeParams(arch=arch, **layers), header["meta"]


def load_decoder(path) -> tuple[DecoderParams, dict]:
    """Load just the decoder from any checkpoint (full or decoder-only)."""
    with np.load(Path(path)) as npz:
        header = _read_header(npz)
        arch = header["arch"]
        decoder = DecoderParams(
            hidden=nn.DenseLayer(npz["dec1.W"].copy(), npz["dec1.b"].copy(), nn.RELU),
            output=nn.DenseLayer(npz["dec_out.W"].copy(), npz["dec_out.b"].copy(),
                                 nn.LINEAR),
            latent_dim=arch["latent_dim"],
            attribute_dim=arch["attribute_dim"],
        )
        return decoder, header["meta"]
