"""Experiment configuration: defaults per (dataset, setting), YAML round-trip."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from pathlib import Path

import yaml

from .classifier import ClassifierConfig
from .errors import ConfigError
from .replay import TrainConfig
from .taskstream import DYNAMIC, FIXED

# Published per-dataset hyperparameters.  Keys: dataset -> setting-dependent
# fields; values shared by both settings are stored once.
_COMMON = {
    "learning_rate": 0.001,
    "batch_size": 50,
    "epochs": 25,
    "clf_learning_rate": 0.0001,
    "clf_weight_decay": 0.001,
    "clf_batch_size": 100,
}

_PER_DATASET = {
    # samples/seen class, replay batch (fixed, dynamic), hidden units, clf epochs
    "aPY": {"samples": {FIXED: 125, DYNAMIC: 125},
            "replay_batch": {FIXED: 15, DYNAMIC: 15},
            "hidden": 1024, "clf_epochs": 30},
    "AWA1": {"samples": {FIXED: 200, DYNAMIC: 200},
             "replay_batch": {FIXED: 20, DYNAMIC: 800},
             "hidden": 1024, "clf_epochs": 30},
    "AWA2": {"samples": {FIXED: 200, DYNAMIC: 250},
             "replay_batch": {FIXED: 50, DYNAMIC: 20},
             "hidden": 1024, "clf_epochs": 30},
    "CUB": {"samples": {FIXED: 50, DYNAMIC: 50},
            "replay_batch": {FIXED: 100, DYNAMIC: 100},
            "hidden": 1024, "clf_epochs": 10},
    "SUN": {"samples": {FIXED: 50, DYNAMIC: 50},
            "replay_batch": {FIXED: 100, DYNAMIC: 100},
            "hidden": 512, "clf_epochs": 25},
}


@dataclass
class ArchConfig:
    """CVAE widths; feature/attribute dims come from the dataset at runtime."""

    encoder_hidden: int = 512
    latent_dim: int = 50
    decoder_hidden: int = 1024
    dropout_rate: float = 0.3


@dataclass
class ExperimentConfig:
    dataset: str = "synthetic"         # known name or path to a dataset container
    dataset_path: str | None = None
    setting: str = FIXED
    seed: int = 0
    output_dir: str = "runs/out"
    alpha: float = 0.5
    normalize_attributes: bool = False
    no_replay: bool = False
    classes_per_task: int | None = None          # custom fixed recipe
    seen_unseen_per_task: list | None = None     # custom dynamic recipe
    classifier_samples_per_class: int | None = None
    train: TrainConfig = field(default_factory=TrainConfig)
    classifier: ClassifierConfig = field(default_factory=ClassifierConfig)
    arch: ArchConfig = field(default_factory=ArchConfig)

    def __post_init__(self):
        if self.setting not in (FIXED, DYNAMIC):
            raise ConfigError(f"setting must be 'fixed' or 'dynamic', "
                              f"got {self.setting!r}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must be in [0, 1], got {self.alpha}")

    def resolved_train(self) -> TrainConfig:
        cfg = TrainConfig(**{**asdict(self.train),
                             "alpha": self.alpha,
                             "seed": self.seed,
                             "no_replay": self.no_replay})
        return cfg


def defaults_for(dataset: str, setting: str) -> "ExperimentConfig":
    """Config pre-filled with the published hyperparameters for a benchmark
    dataset, or plain defaults for anything else."""
    if setting not in (FIXED, DYNAMIC):
        raise ConfigError(f"setting must be 'fixed' or 'dynamic', got {setting!r}")
    cfg = ExperimentConfig(dataset=dataset, setting=setting)
    row = _PER_DATASET.get(dataset)
    if row is None:
        return cfg
    cfg.train = TrainConfig(
        learning_rate=_COMMON["learning_rate"],
        batch_size=_COMMON["batch_size"],
        epochs=_COMMON["epochs"],
        samples_per_class=row["samples"][setting],
        replay_batch_size=row["replay_batch"][setting],
    )
    cfg.classifier = ClassifierConfig(
        hidden_units=row["hidden"],
        learning_rate=_COMMON["clf_learning_rate"],
        weight_decay=_COMMON["clf_weight_decay"],
        batch_size=_COMMON["clf_batch_size"],
        epochs=row["clf_epochs"],
    )
    return cfg


def to_dict(cfg: ExperimentConfig) -> dict:
    return asdict(cfg)


def from_dict(doc: dict) -> ExperimentConfig:
    doc = dict(doc)
    try:
        train = TrainConfig(**doc.pop("train", {}))
        clf = ClassifierConfig(**doc.pop("classifier", {}))
        arch = ArchConfig(**doc.pop("arch", {}))
        return ExperimentConfig(train=train, classifier=clf, arch=arch, **doc)
    except TypeError as exc:
        raise ConfigError(f"bad config field: {exc}") from exc


def load_config(path) -> ExperimentConfig:
    try:
        doc = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path} does not hold a config mapping")
    return from_dict(doc)


def dump_config(cfg: ExperimentConfig, path) -> None:
    Path(path).write_text(yaml.safe_dump(to_dict(cfg), sort_keys=True))
