"""Minimal deterministic neural-network primitives.

Dense layers with hand-written backward passes, inverted dropout, Adam,
and softmax cross-entropy.  Everything is float64 and pure given
(parameters, input, generator state), which keeps the analytic gradients
checkable against central finite differences.

Shapes follow the row-major batch convention:

    forward:  Y = act(X @ W.T + b)        X: (batch, in), W: (out, in)
    backward: dX = dpre @ W
              dW = dpre.T @ X
              db = dpre.sum(axis=0)

with dpre = upstream * act'(pre).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DimensionError, NumericError

RELU = "relu"
LINEAR = "linear"


@dataclass
class DenseLayer:
    """A fully connected layer: weights (out, in), bias (out,), activation."""

    weights: np.ndarray
    bias: np.ndarray
    activation: str = LINEAR

    def __post_init__(self):
        if self.bias.shape != (self.weights.shape[0],):
            raise DimensionError(
                f"bias shape {self.bias.shape} does not match weight rows "
                f"{self.weights.shape}"
            )
        if self.activation not in (RELU, LINEAR):
            raise ConfigError(f"unknown activation {self.activation!r}")

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]


def init_dense(out_dim: int, in_dim: int, activation: str,
               rng: np.random.Generator) -> DenseLayer:
    """Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero bias."""
    limit = np.sqrt(6.0 / (in_dim + out_dim))
    weights = rng.uniform(-limit, limit, size=(out_dim, in_dim))
    return DenseLayer(weights=weights, bias=np.zeros(out_dim), activation=activation)


def _pre_activation(layer: DenseLayer, x: np.ndarray) -> np.ndarray:
    if x.ndim != 2 or x.shape[1] != layer.in_dim:
        raise DimensionError(
            f"input shape {x.shape} incompatible with layer weights "
            f"{layer.weights.shape}"
        )
    return x @ layer.weights.T + layer.bias


def affine_forward(layer: DenseLayer, x: np.ndarray) -> np.ndarray:
    """act(x @ W.T + b), one output row per input row."""
    pre = _pre_activation(layer, x)
    if layer.activation == RELU:
        return np.maximum(pre, 0.0)
    return pre


def affine_backward(layer: DenseLayer, x: np.ndarray, upstream: np.ndarray):
    """Gradients of the forward map; returns (d_weights, d_bias, d_input).

    The pre-activation is recomputed from (layer, x); the ReLU gradient is
    zero wherever the pre-activation is non-positive.
    """
    pre = _pre_activation(layer, x)
    if upstream.shape != pre.shape:
        raise DimensionError(
            f"upstream shape {upstream.shape} does not match output shape {pre.shape}"
        )
    if layer.activation == RELU:
        dpre = upstream * (pre > 0.0)
    else:
        dpre = upstream
    d_weights = dpre.T @ x
    d_bias = dpre.sum(axis=0)
    d_input = dpre @ layer.weights
    return d_weights, d_bias, d_input


def dropout_mask(shape, rate: float, rng: np.random.Generator) -> np.ndarray:
    """Inverted-dropout multiplier: 0 with probability ``rate``, else 1/(1-rate)."""
    if not 0.0 <= rate < 1.0:
        raise ConfigError(f"dropout rate must be in [0, 1), got {rate}")
    if rate == 0.0:
        return np.ones(shape)
    keep = rng.random(shape) >= rate
    return keep / (1.0 - rate)


def dropout_apply(x: np.ndarray, rate: float, rng: np.random.Generator,
                  training: bool) -> np.ndarray:
    """Inverted dropout; identity when not training or rate is 0."""
    if not 0.0 <= rate < 1.0:
        raise ConfigError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x
    return x * dropout_mask(x.shape, rate, rng)


@dataclass
class AdamState:
    """Per-parameter-block Adam moments plus shared step counter."""

    learning_rate: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def init_adam(params: dict, learning_rate: float, beta1: float = 0.9,
              beta2: float = 0.999, eps: float = 1e-8) -> AdamState:
    state = AdamState(learning_rate=learning_rate, beta1=beta1, beta2=beta2, eps=eps)
    for name, value in params.items():
        state.m[name] = np.zeros_like(value)
        state.v[name] = np.zeros_like(value)
    return state


def adam_update(params: dict, grads: dict, state: AdamState) -> dict:
    """One bias-corrected Adam step; mutates params and state in place."""
    state.step += 1
    t = state.step
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient in parameter block {name!r}")
        state.m[name] = state.beta1 * state.m[name] + (1.0 - state.beta1) * g
        state.v[name] = state.beta2 * state.v[name] + (1.0 - state.beta2) * g * g
        m_hat = state.m[name] / (1.0 - state.beta1 ** t)
        v_hat = state.v[name] / (1.0 - state.beta2 ** t)
        params[name] -= state.learning_rate * m_hat / (np.sqrt(v_hat) + state.eps)
    return params


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray):
    """Mean negative log softmax probability of the true class.

    Returns (loss, d_logits) with d_logits = (softmax - onehot) / batch.
    """
    labels = np.asarray(labels)
    n, k = logits.shape
    if labels.min(initial=0) < 0 or labels.max(initial=-1) >= k:
        raise IndexError(
            f"label out of range for {k} classes: "
            f"[{labels.min()}, {labels.max()}]"
        )
    probs = softmax(logits)
    loss = -np.mean(np.log(probs[np.arange(n), labels]))
    grad = probs.copy()
    grad[np.arange(n), labels] -= 1.0
    grad /= n
    return loss, grad
