"""Dataset container, on-disk format, and synthetic fixtures.

The on-disk format is a small self-describing binary: a magic string, a
little-endian int64 header with the array dimensions, then row-major
float64 features, int64 labels, and float64 per-class attributes.  A JSON
sidecar (same stem, ``.json``) carries the dataset name and the standard
seen/unseen class split.  Converting the public benchmark feature
distributions into this format is a one-off external script and is
documented in the README rather than bundled.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError
from .taskstream import DatasetMeta

_MAGIC = b"CZSLDS01"

# attribute dim, seen, unseen, total for the standard benchmark inventories
KNOWN_DATASETS = {
    "CUB": (312, 150, 50, 200),
    "aPY": (64, 20, 12, 32),
    "AWA1": (85, 40, 10, 50),
    "AWA2": (85, 40, 10, 50),
    "SUN": (102, 645, 72, 717),
}

FEATURE_DIM_DEFAULT = 2048


@dataclass
class LabeledSet:
    """Feature rows with aligned attribute rows and integer class labels."""

    features: np.ndarray
    attributes: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        n = len(self.features)
        if len(self.attributes) != n or len(self.labels) != n:
            raise DataError(
                f"misaligned labeled set: {n} features, "
                f"{len(self.attributes)} attributes, {len(self.labels)} labels"
            )

    def __len__(self) -> int:
        return len(self.features)


@dataclass
class DatasetBundle:
    """A full dataset: features, labels, the class-attribute matrix, and
    the standard seen/unseen class split."""

    name: str
    features: np.ndarray        # (n, feature_dim)
    labels: np.ndarray          # (n,)
    attributes: np.ndarray      # (num_classes, attribute_dim)
    seen_classes: list[int]
    unseen_classes: list[int]

    def __post_init__(self):
        n = len(self.features)
        if len(self.labels) != n:
            raise DataError(f"{n} feature rows but {len(self.labels)} labels")
        if not np.all(np.isfinite(self.features)):
            raise DataError("non-finite feature values")
        if not np.all(np.isfinite(self.attributes)):
            raise DataError("non-finite attribute values")
        if n and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
            raise DataError(
                f"label range [{self.labels.min()}, {self.labels.max()}] outside "
                f"[0, {self.num_classes})"
            )
        if self.name in KNOWN_DATASETS:
            attr_dim, n_seen, n_unseen, total = KNOWN_DATASETS[self.name]
            if self.attribute_dim != attr_dim or self.num_classes != total:
                raise DataError(
                    f"{self.name}: expected {total} classes with {attr_dim}-dim "
                    f"attributes, got {self.num_classes} / {self.attribute_dim}"
                )

    @property
    def num_classes(self) -> int:
        return self.attributes.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    @property
    def attribute_dim(self) -> int:
        return self.attributes.shape[1]

    def class_attribute(self, class_id: int) -> np.ndarray:
        return self.attributes[class_id]

    def meta(self) -> DatasetMeta:
        class_indices = {
            int(c): np.flatnonzero(self.labels == c)
            for c in range(self.num_classes)
        }
        return DatasetMeta(
            name=self.name,
            feature_dim=self.feature_dim,
            attribute_dim=self.attribute_dim,
            total_classes=self.num_classes,
            seen_classes=list(self.seen_classes),
            unseen_classes=list(self.unseen_classes),
            class_indices=class_indices,
        )

    def subset(self, indices: np.ndarray) -> LabeledSet:
        """Labeled rows for the given sample indices, attributes attached."""
        labels = self.labels[indices]
        return LabeledSet(
            features=self.features[indices],
            attributes=self.attributes[labels],
            labels=labels,
        )

    def normalized_attributes(self) -> "DatasetBundle":
        """Copy with L2-normalized attribute rows."""
        norms = np.linalg.norm(self.attributes, axis=1, keepdims=True)
        norms[norms == 0.0] = 1.0
        return DatasetBundle(
            name=self.name,
            features=self.features,
            labels=self.labels,
            attributes=self.attributes / norms,
            seen_classes=self.seen_classes,
            unseen_classes=self.unseen_classes,
        )


def _sidecar_path(path: Path) -> Path:
    return path.with_suffix(".json")


def save_dataset(path, bundle: DatasetBundle) -> None:
    path = Path(path)
    n, fd = bundle.features.shape
    c, ad = bundle.attributes.shape
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<4q", n, fd, c, ad))
        fh.write(np.ascontiguousarray(bundle.features, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(bundle.labels, dtype="<i8").tobytes())
        fh.write(np.ascontiguousarray(bundle.attributes, dtype="<f8").tobytes())
    sidecar = {
        "name": bundle.name,
        "seen_classes": [int(v) for v in bundle.seen_classes],
        "unseen_classes": [int(v) for v in bundle.unseen_classes],
    }
    _sidecar_path(path).write_text(json.dumps(sidecar, indent=1, sort_keys=True))


def load_dataset(path) -> DatasetBundle:
    """Read a dataset container and its sidecar; fails closed on truncation."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"dataset file not found: {path}")
    raw = path.read_bytes()
    header_len = len(_MAGIC) + 8 * 4
    if len(raw) < header_len or raw[:len(_MAGIC)] != _MAGIC:
        raise DataError(f"{path}: not a dataset container (bad magic)")
    n, fd, c, ad = struct.unpack_from("<4q", raw, len(_MAGIC))
    if min(n, fd, c, ad) < 0:
        raise DataError(f"{path}: negative dimension in header")
    expected = header_len + 8 * (n * fd + n + c * ad)
    if len(raw) != expected:
        raise DataError(
            f"{path}: truncated or oversized; expected {expected} bytes, "
            f"found {len(raw)}"
        )
    offset = header_len
    features = np.frombuffer(raw, dtype="<f8", count=n * fd,
                             offset=offset).reshape(n, fd).copy()
    offset += 8 * n * fd
    labels = np.frombuffer(raw, dtype="<i8", count=n, offset=offset).copy()
    offset += 8 * n
    attributes = np.frombuffer(raw, dtype="<f8", count=c * ad,
                               offset=offset).reshape(c, ad).copy()

    sidecar_file = _sidecar_path(path)
    if not sidecar_file.exists():
        raise DataError(f"missing sidecar {sidecar_file}")
    sidecar = json.loads(sidecar_file.read_text())
    return DatasetBundle(
        name=sidecar.get("name", path.stem),
        features=features,
        labels=labels,
        attributes=attributes,
        seen_classes=sidecar["seen_classes"],
        unseen_classes=sidecar["unseen_classes"],
    )


def make_synthetic_bundle(num_classes: int, samples_per_class: int,
                          feature_dim: int, attribute_dim: int, seed: int,
                          num_seen: int | None = None,
                          centroid_scale: float = 5.0,
                          noise_scale: float = 0.5,
                          name: str = "synthetic") -> DatasetBundle:
    """Gaussian-cluster classes with random attribute vectors.

    Centroids are drawn independently of the attributes, so a model can
    only reproduce a class by remembering its attribute -> centroid
    association, not by interpolating a smooth map.
    """
    rng = np.random.default_rng(seed)
    centroids = rng.standard_normal((num_classes, feature_dim)) * centroid_scale
    attributes = rng.standard_normal((num_classes, attribute_dim))
    features = np.repeat(centroids, samples_per_class, axis=0) + \
        rng.standard_normal((num_classes * samples_per_class, feature_dim)) * noise_scale
    labels = np.repeat(np.arange(num_classes), samples_per_class)
    if num_seen is None:
        num_seen = num_classes
    return DatasetBundle(
        name=name,
        features=features,
        labels=labels,
        attributes=attributes,
        seen_classes=list(range(num_seen)),
        unseen_classes=list(range(num_seen, num_classes)),
    )
