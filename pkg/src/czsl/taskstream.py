"""Task-sequence construction for continual zero-shot streams.

Two stream layouts are supported:

* fixed: every task introduces a block of classes; at task t all classes of
  tasks <= t count as seen and all later classes as unseen.  20% of each
  class's samples are held out as test data.
* dynamic: each task reveals a block of seen classes (80/20 train/test per
  class) and a block of unseen classes (all samples are test data).  Seen
  and unseen status, once assigned, never changes, and the cumulative
  test pool after the last task coincides with the standard offline
  generalized zero-shot split.

Classes are assigned to tasks in canonical (ascending id) order unless a
shuffle is requested, so the published recipes reproduce deterministically.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError
from .rng import STREAM_SPLIT, derive_rng

FIXED = "fixed"
DYNAMIC = "dynamic"

# classes per task, per dataset
FIXED_RECIPES = {
    "CUB": [10] * 20,
    "aPY": [4] * 8,
    "AWA1": [5] * 10,
    "AWA2": [5] * 10,
    "SUN": [47] * 3 + [48] * 12,
}

# (seen classes, unseen classes) per task, per dataset
DYNAMIC_RECIPES = {
    "CUB": [(7, 3)] * 10 + [(8, 2)] * 10,
    "aPY": [(2, 2)] * 4 + [(3, 1)] * 4,
    "AWA1": [(4, 1)] * 10,
    "AWA2": [(4, 1)] * 10,
    "SUN": [(43, 4)] * 3 + [(43, 5)] * 12,
}


@dataclass
class DatasetMeta:
    """Class inventory of a dataset: who is seen/unseen and which samples
    belong to each class."""

    name: str
    feature_dim: int
    attribute_dim: int
    total_classes: int
    seen_classes: list[int]
    unseen_classes: list[int]
    class_indices: dict[int, np.ndarray]  # class id -> sample indices

    def __post_init__(self):
        overlap = set(self.seen_classes) & set(self.unseen_classes)
        if overlap:
            raise DataError(f"classes both seen and unseen: {sorted(overlap)}")
        if len(self.seen_classes) + len(self.unseen_classes) != self.total_classes:
            raise DataError(
                f"seen ({len(self.seen_classes)}) + unseen "
                f"({len(self.unseen_classes)}) != total ({self.total_classes})"
            )


@dataclass
class TaskData:
    """One task of the stream, as index sets into the dataset."""

    task: int                      # 1-based
    classes: list[int]             # classes introduced at this task
    train_indices: np.ndarray
    test_indices: np.ndarray       # this task's own test contribution
    seen_classes: list[int]        # cumulative seen set at this task
    unseen_classes: list[int]      # unseen set at this task
    new_seen_classes: list[int] = field(default_factory=list)
    new_unseen_classes: list[int] = field(default_factory=list)

    @property
    def n_tr(self) -> int:
        return len(self.train_indices)

    @property
    def n_ts(self) -> int:
        return len(self.test_indices)


def partition_train_test(indices: np.ndarray, test_fraction: float,
                         rng: np.random.Generator):
    """Stratified per-class split helper for a single class's sample indices.

    The test count is round-half-up of test_fraction * n, at least 1.
    """
    indices = np.asarray(indices)
    n = len(indices)
    if n < 2:
        raise DataError(f"class has {n} sample(s); need at least 2 to split")
    n_test = max(1, int(np.floor(test_fraction * n + 0.5)))
    perm = rng.permutation(indices)
    return np.sort(perm[n_test:]), np.sort(perm[:n_test])


def _class_order(classes, rng: np.random.Generator | None):
    classes = list(classes)
    if rng is not None:
        classes = [classes[i] for i in rng.permutation(len(classes))]
    return classes


def _resolve_recipe(meta: DatasetMeta, recipe, table, label):
    if recipe is None:
        recipe = table.get(meta.name)
        if recipe is None:
            raise ConfigError(
                f"no built-in {label} recipe for dataset {meta.name!r}; "
                f"supply one explicitly"
            )
    return recipe


def split_fixed(meta: DatasetMeta, seed: int, recipe: list[int] | None = None,
                shuffle_classes: bool = False) -> list[TaskData]:
    """Partition all classes into tasks; hold out 20% of each class as test."""
    recipe = _resolve_recipe(meta, recipe, FIXED_RECIPES, FIXED)
    if sum(recipe) != meta.total_classes:
        raise ConfigError(
            f"recipe classes sum to {sum(recipe)}, dataset has {meta.total_classes}"
        )
    all_classes = sorted(meta.class_indices)
    order = _class_order(
        all_classes, derive_rng(seed, STREAM_SPLIT, 0) if shuffle_classes else None
    )
    split_rng = derive_rng(seed, STREAM_SPLIT, 1)

    tasks = []
    cursor = 0
    blocks = []
    for count in recipe:
        blocks.append(order[cursor:cursor + count])
        cursor += count
    for t, classes in enumerate(blocks, start=1):
        train, test = [], []
        for c in classes:
            tr, ts = partition_train_test(meta.class_indices[c], 0.2, split_rng)
            train.append(tr)
            test.append(ts)
        seen = [c for block in blocks[:t] for c in block]
        unseen = [c for block in blocks[t:] for c in block]
        tasks.append(TaskData(
            task=t,
            classes=list(classes),
            train_indices=np.concatenate(train),
            test_indices=np.concatenate(test),
            seen_classes=seen,
            unseen_classes=unseen,
            new_seen_classes=list(classes),
            new_unseen_classes=[],
        ))
    return tasks


def split_dynamic(meta: DatasetMeta, seed: int,
                  recipe: list[tuple[int, int]] | None = None,
                  shuffle_classes: bool = False) -> list[TaskData]:
    """Reveal seen/unseen class blocks incrementally.

    Seen classes contribute 80% train / 20% test; unseen classes contribute
    all their samples as test data.  Status is monotone: the cumulative sets
    only grow, and after the last task they equal the standard split.
    """
    recipe = _resolve_recipe(meta, recipe, DYNAMIC_RECIPES, DYNAMIC)
    n_seen = sum(s for s, _ in recipe)
    n_unseen = sum(u for _, u in recipe)
    if n_seen != len(meta.seen_classes) or n_unseen != len(meta.unseen_classes):
        raise ConfigError(
            f"recipe covers {n_seen} seen / {n_unseen} unseen classes; dataset "
            f"has {len(meta.seen_classes)} / {len(meta.unseen_classes)}"
        )
    shuffle_rng = derive_rng(seed, STREAM_SPLIT, 0) if shuffle_classes else None
    seen_order = _class_order(sorted(meta.seen_classes), shuffle_rng)
    unseen_order = _class_order(sorted(meta.unseen_classes), shuffle_rng)
    split_rng = derive_rng(seed, STREAM_SPLIT, 1)

    tasks = []
    si = ui = 0
    cum_seen: list[int] = []
    cum_unseen: list[int] = []
    for t, (s_count, u_count) in enumerate(recipe, start=1):
        new_seen = seen_order[si:si + s_count]
        new_unseen = unseen_order[ui:ui + u_count]
        si += s_count
        ui += u_count
        train, test = [], []
        for c in new_seen:
            tr, ts = partition_train_test(meta.class_indices[c], 0.2, split_rng)
            train.append(tr)
            test.append(ts)
        for c in new_unseen:
            test.append(np.asarray(meta.class_indices[c]))
        cum_seen = cum_seen + list(new_seen)
        cum_unseen = cum_unseen + list(new_unseen)
        tasks.append(TaskData(
            task=t,
            classes=list(new_seen) + list(new_unseen),
            train_indices=np.concatenate(train) if train else np.empty(0, dtype=int),
            test_indices=np.concatenate(test) if test else np.empty(0, dtype=int),
            seen_classes=list(cum_seen),
            unseen_classes=list(cum_unseen),
            new_seen_classes=list(new_seen),
            new_unseen_classes=list(new_unseen),
        ))
    return tasks


def save_manifest(path, setting: str, meta: DatasetMeta,
                  tasks: list[TaskData], seed: int) -> None:
    """Write the split as auditable JSON: task -> class lists -> index lists."""
    doc = {
        "dataset": meta.name,
        "setting": setting,
        "seed": seed,
        "tasks": [
            {
                "task": td.task,
                "classes": [int(c) for c in td.classes],
                "new_seen_classes": [int(c) for c in td.new_seen_classes],
                "new_unseen_classes": [int(c) for c in td.new_unseen_classes],
                "seen_classes": [int(c) for c in td.seen_classes],
                "unseen_classes": [int(c) for c in td.unseen_classes],
                "train_indices": [int(i) for i in td.train_indices],
                "test_indices": [int(i) for i in td.test_indices],
            }
            for td in tasks
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True))


def load_manifest(path) -> tuple[str, int, list[TaskData]]:
    """Inverse of save_manifest; returns (setting, seed, tasks)."""
    doc = json.loads(Path(path).read_text())
    tasks = [
        TaskData(
            task=entry["task"],
            classes=entry["classes"],
            train_indices=np.asarray(entry["train_indices"], dtype=int),
            test_indices=np.asarray(entry["test_indices"], dtype=int),
            seen_classes=entry["seen_classes"],
            unseen_classes=entry["unseen_classes"],
            new_seen_classes=entry["new_seen_classes"],
            new_unseen_classes=entry["new_unseen_classes"],
        )
        for entry in doc["tasks"]
    ]
    return doc["setting"], doc["seed"], tasks
