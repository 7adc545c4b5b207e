"""Class-incremental softmax classifier trained on generated features.

After each task the classifier is retrained from scratch on synthetic
features decoded for every class in scope (all dataset classes in the
fixed setting, all revealed classes in the dynamic setting).  It is a
single-hidden-layer ReLU network with a softmax head; no task identity is
consumed at inference.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import cvae, nn
from .data import LabeledSet
from .errors import ConfigError, DataError, DimensionError


@dataclass(frozen=True)
class ClassifierConfig:
    hidden_units: int = 1024
    learning_rate: float = 0.0001
    weight_decay: float = 0.001
    batch_size: int = 100
    epochs: int = 30


@dataclass
class ClassifierParams:
    hidden: nn.DenseLayer
    output: nn.DenseLayer
    classes: np.ndarray  # global class id per output unit, ascending

    @property
    def feature_dim(self) -> int:
        return self.hidden.in_dim


def build_training_set(decoder, class_attributes: dict[int, np.ndarray],
                       samples_per_class, rng: np.random.Generator) -> LabeledSet:
    """Synthesize a balanced (or per-class-counted) labeled training set.

    ``samples_per_class`` is an int applied to every class, or a dict
    class id -> count.  Classes may be over-sampled relative to their real
    frequency; generation cost is the only limit.
    """
    if not class_attributes:
        raise ConfigError("classifier scope is empty")
    features, labels, attrs = [], [], []
    for class_id in sorted(class_attributes):
        attribute = class_attributes[class_id]
        if attribute is None:
            raise DataError(f"class {class_id} has no attribute vector")
        count = (samples_per_class[class_id]
                 if isinstance(samples_per_class, dict) else samples_per_class)
        x = cvae.generate(decoder, attribute, count, rng)
        features.append(x)
        labels.append(np.full(count, class_id, dtype=int))
        attrs.append(np.repeat(np.asarray(attribute).reshape(1, -1), count, axis=0))
    return LabeledSet(
        features=np.concatenate(features),
        attributes=np.concatenate(attrs),
        labels=np.concatenate(labels),
    )


def train_classifier(train_set: LabeledSet, config: ClassifierConfig,
                     rng: np.random.Generator) -> ClassifierParams:
    """Adam + softmax cross-entropy with L2 weight decay, from random init."""
    classes = np.unique(train_set.labels)
    if len(classes) < 2:
        raise ConfigError(f"need >= 2 classes to train, got {len(classes)}")
    local = {int(c): i for i, c in enumerate(classes)}
    y = np.asarray([local[int(v)] for v in train_set.labels])
    x = train_set.features
    feature_dim = x.shape[1]

    hidden = nn.init_dense(config.hidden_units, feature_dim, nn.RELU, rng)
    output = nn.init_dense(len(classes), config.hidden_units, nn.LINEAR, rng)
    params = {"hidden.W": hidden.weights, "hidden.b": hidden.bias,
              "output.W": output.weights, "output.b": output.bias}
    state = nn.init_adam(params, config.learning_rate)

    n = len(x)
    for _ in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            xb, yb = x[idx], y[idx]
            h = nn.affine_forward(hidden, xb)
            logits = nn.affine_forward(output, h)
            _, d_logits = nn.softmax_cross_entropy(logits, yb)
            dW_out, db_out, d_h = nn.affine_backward(output, h, d_logits)
            dW_hid, db_hid, _ = nn.affine_backward(hidden, xb, d_h)
            grads = {"hidden.W": dW_hid, "hidden.b": db_hid,
                     "output.W": dW_out, "output.b": db_out}
            for name in grads:
                grads[name] = grads[name] + config.weight_decay * params[name]
            nn.adam_update(params, grads, state)
    return ClassifierParams(hidden=hidden, output=output, classes=classes)


def logits(params: ClassifierParams, features: np.ndarray) -> np.ndarray:
    if features.shape[1] != params.feature_dim:
        raise DimensionError(
            f"feature dim {features.shape[1]} != classifier input "
            f"{params.feature_dim}"
        )
    return nn.affine_forward(params.output, nn.affine_forward(params.hidden, features))


def predict(params: ClassifierParams, features: np.ndarray) -> np.ndarray:
    """Global class ids via argmax; ties break to the lowest class id."""
    scores = logits(params, features)
    # classes are stored ascending, so argmax's first-max rule gives the
    # lowest-id class on exact ties
    return params.classes[np.argmax(scores, axis=1)]


def save_classifier(path, params: ClassifierParams, meta: dict | None = None) -> None:
    header = {"version": 1, "meta": meta or {}}
    np.savez(
        path,
        hidden_W=params.hidden.weights, hidden_b=params.hidden.bias,
        output_W=params.output.weights, output_b=params.output.bias,
        classes=params.classes,
        header=np.frombuffer(json.dumps(header, sort_keys=True).encode(),
                             dtype=np.uint8),
    )


def load_classifier(path) -> tuple[ClassifierParams, dict]:
    with np.load(Path(path)) as npz:
        header = json.loads(bytes(npz["header"]).decode())
        params = ClassifierParams(
            hidden=nn.DenseLayer(npz["hidden_W"].copy(), npz["hidden_b"].copy(),
                                 nn.RELU),
            output=nn.DenseLayer(npz["output_W"].copy(), npz["output_b"].copy(),
                                 nn.LINEAR),
            classes=npz["classes"].copy(),
        )
        return params, header["meta"]
