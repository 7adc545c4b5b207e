"""Continual CVAE training with generative replay.

Task 1 trains a plain CVAE.  From task 2 on, the previous task's decoder
is frozen, a replay set of synthetic features for every previously seen
class is generated once up front, and each optimizer step pairs one real
batch with one replay batch, combining the two gradients with the task
importance weight: alpha * real + (1 - alpha) * replay.

Randomness for the real-batch path and the replay path comes from separate
derived streams, so a run with replay disabled consumes exactly the same
real-path randomness as one with replay enabled -- that is what makes the
alpha = 1 no-replay baseline bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import cvae
from .cvae import CvaeArchitecture, CvaeParams, DecoderParams
from .data import LabeledSet
from .errors import ConfigError, SequencingError
from .nn import adam_update, init_adam
from .rng import STREAM_INIT, STREAM_REAL, STREAM_REPLAY, derive_rng


@dataclass
class TrainConfig:
    """CVAE training hyperparameters for one task stream."""

    alpha: float = 0.5
    epochs: int = 25
    batch_size: int = 50
    replay_batch_size: int = 50
    samples_per_class: int = 200
    learning_rate: float = 0.001
    kl_weight: float = 1.0
    seed: int = 0
    no_replay: bool = False   # sequential baseline: skip replay entirely

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must be in [0, 1], got {self.alpha}")
        for name in ("epochs", "batch_size", "replay_batch_size",
                     "samples_per_class"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")


@dataclass
class ReplaySet:
    """Synthetic features of past seen classes, balanced per class."""

    features: np.ndarray
    labels: np.ndarray
    attributes: np.ndarray
    source_tasks: np.ndarray | None = None  # task that introduced each row's class

    def __len__(self) -> int:
        return len(self.features)


class NetworkTracker:
    """Counts resident networks to audit the two-network memory contract."""

    def __init__(self):
        self.full_cvae = 0
        self.frozen_decoders = 0
        self.peak_full = 0
        self.peak_decoders = 0

    def acquire(self, kind: str):
        if kind == "full":
            self.full_cvae += 1
            self.peak_full = max(self.peak_full, self.full_cvae)
        else:
            self.frozen_decoders += 1
            self.peak_decoders = max(self.peak_decoders, self.frozen_decoders)

    def release(self, kind: str):
        if kind == "full":
            self.full_cvae -= 1
        else:
            self.frozen_decoders -= 1


def synthesize_replay(prev_decoder: DecoderParams,
                      class_attributes: dict[int, np.ndarray],
                      samples_per_class: int,
                      rng: np.random.Generator,
                      class_tasks: dict[int, int] | None = None) -> ReplaySet:
    """Generate samples_per_class rows per past seen class from the frozen
    previous decoder."""
    if not class_attributes:
        raise ConfigError("replay requires a non-empty past class list "
                          "(only valid from task 2 on)")
    feats, labels, attrs, sources = [], [], [], []
    for class_id in sorted(class_attributes):
        attribute = np.asarray(class_attributes[class_id], dtype=float)
        feats.append(cvae.generate(prev_decoder, attribute, samples_per_class, rng))
        labels.append(np.full(samples_per_class, class_id, dtype=int))
        attrs.append(np.repeat(attribute.reshape(1, -1), samples_per_class, axis=0))
        if class_tasks is not None:
            sources.append(np.full(samples_per_class, class_tasks[class_id],
                                   dtype=int))
    return ReplaySet(
        features=np.concatenate(feats),
        labels=np.concatenate(labels),
        attributes=np.concatenate(attrs),
        source_tasks=np.concatenate(sources) if sources else None,
    )


def combined_task_loss(real_loss: float, replay_loss: float, alpha: float) -> float:
    """alpha-weighted convex combination of the real and replay losses."""
    if not 0.0 <= alpha <= 1.0:
        raise ConfigError(f"alpha must be in [0, 1], got {alpha}")
    return alpha * real_loss + (1.0 - alpha) * replay_loss


def _resolve_prev(prev_checkpoint) -> tuple[CvaeParams, DecoderParams]:
    """Previous task's weights for warm start plus a frozen decoder copy."""
    if isinstance(prev_checkpoint, (str, Path)):
        params, _ = cvae.load_checkpoint(prev_checkpoint)
        frozen, _ = cvae.load_decoder(prev_checkpoint)
        return params, frozen
    params = prev_checkpoint.copy()
    decoder = params.decoder()
    frozen = DecoderParams(
        hidden=type(decoder.hidden)(decoder.hidden.weights.copy(),
                                    decoder.hidden.bias.copy(),
                                    decoder.hidden.activation),
        output=type(decoder.output)(decoder.output.weights.copy(),
                                    decoder.output.bias.copy(),
                                    decoder.output.activation),
        latent_dim=decoder.latent_dim,
        attribute_dim=decoder.attribute_dim,
    )
    return params, frozen


def train_task(t: int, train_set: LabeledSet, prev_checkpoint,
               config: TrainConfig, arch: CvaeArchitecture,
               past_class_attributes: dict[int, np.ndarray] | None = None,
               class_tasks: dict[int, int] | None = None,
               tracker: NetworkTracker | None = None):
    """Train the task-t CVAE; returns (params, per-epoch loss records).

    Task 1 must come with no previous checkpoint and trains on the plain
    CVAE loss.  Later tasks warm-start from the previous weights and mix
    in replay unless ``config.no_replay`` is set.  ``prev_checkpoint`` may
    be a checkpoint path or an in-memory CvaeParams; either way the
    previous weights are never mutated.
    """
    tracker = tracker or NetworkTracker()
    if t == 1:
        if prev_checkpoint is not None:
            raise SequencingError("task 1 must not have a previous checkpoint")
        params = cvae.init_cvae(arch, derive_rng(config.seed, STREAM_INIT))
        frozen = None
    else:
        if prev_checkpoint is None:
            raise SequencingError(f"task {t} requires the task {t - 1} checkpoint")
        params, frozen = _resolve_prev(prev_checkpoint)

    use_replay = t >= 2 and not config.no_replay
    tracker.acquire("full")
    replay_rng = derive_rng(config.seed, STREAM_REPLAY, t)
    replay_set = None
    if use_replay:
        if not past_class_attributes:
            raise SequencingError(
                f"task {t} replay requires the past seen classes and attributes"
            )
        tracker.acquire("decoder")
        replay_set = synthesize_replay(frozen, past_class_attributes,
                                       config.samples_per_class, replay_rng,
                                       class_tasks)

    real_rng = derive_rng(config.seed, STREAM_REAL, t)
    flat = params.flat()
    state = init_adam(flat, config.learning_rate)
    n = len(train_set)
    records = []
    alpha = config.alpha if use_replay else 1.0
    for epoch in range(1, config.epochs + 1):
        order = real_rng.permutation(n)
        real_losses, replay_losses, combined_losses = [], [], []
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            real_loss, real_grads, _ = cvae.cvae_loss(
                params, train_set.features[idx], train_set.attributes[idx],
                kl_weight=config.kl_weight, rng=real_rng, training=True,
            )
            if use_replay:
                ridx = replay_rng.integers(0, len(replay_set),
                                           size=config.replay_batch_size)
                replay_loss, replay_grads, _ = cvae.cvae_loss(
                    params, replay_set.features[ridx], replay_set.attributes[ridx],
                    kl_weight=config.kl_weight, rng=replay_rng, training=True,
                )
                grads = {
                    name: alpha * real_grads[name]
                    + (1.0 - alpha) * replay_grads[name]
                    for name in real_grads
                }
            else:
                replay_loss = 0.0
                grads = real_grads
            adam_update(flat, grads, state)
            real_losses.append(real_loss)
            replay_losses.append(replay_loss)
            combined_losses.append(
                combined_task_loss(real_loss, replay_loss, alpha)
                if use_replay else real_loss
            )
        records.append({
            "task": t,
            "epoch": epoch,
            "real_loss": float(np.mean(real_losses)),
            "replay_loss": float(np.mean(replay_losses)),
            "combined_loss": float(np.mean(combined_losses)),
        })
    if use_replay:
        tracker.release("decoder")
    tracker.release("full")
    return params, records
