import numpy as np
import pytest

import czsl
from czsl.config import ArchConfig, ExperimentConfig
from czsl.classifier import ClassifierConfig
from czsl.replay import TrainConfig


def central_difference(f, params: dict, h: float = 1e-4) -> dict:
    """Numerical gradient of a scalar function of a dict of arrays.

    Independent oracle for every analytic backward pass: perturbs one entry
    at a time and applies the central-difference quotient.
    """
    grads = {}
    for name, value in params.items():
        g = np.zeros_like(value)
        flat = value.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = f()
            flat[i] = orig - h
            down = f()
            flat[i] = orig
            gflat[i] = (up - down) / (2.0 * h)
        grads[name] = g
    return grads


def assert_grads_close(analytic: dict, numeric: dict, rtol: float = 1e-4):
    for name in numeric:
        a, n = analytic[name], numeric[name]
        scale = max(np.abs(a).max(), np.abs(n).max(), 1.0)
        np.testing.assert_allclose(a, n, atol=rtol * scale, err_msg=name)


@pytest.fixture
def toy_bundle():
    return czsl.make_synthetic_bundle(8, 40, 8, 3, seed=100)


def toy_experiment_config(alpha, seed, output_dir, setting="fixed",
                          no_replay=False) -> ExperimentConfig:
    """Desk-scale stream used across the replay and acceptance tests:
    4 tasks x 2 Gaussian-cluster classes, 8-dim features, 3-dim attributes."""
    return ExperimentConfig(
        dataset="toy", setting=setting, seed=seed, output_dir=str(output_dir),
        alpha=alpha, classes_per_task=2 if setting == "fixed" else None,
        seen_unseen_per_task=None if setting == "fixed" else [[1, 1]] * 4,
        no_replay=no_replay,
        train=TrainConfig(epochs=30, batch_size=32, replay_batch_size=32,
                          samples_per_class=100, learning_rate=0.005,
                          kl_weight=8.0),
        classifier=ClassifierConfig(hidden_units=64, epochs=25, batch_size=50,
                                    learning_rate=0.001),
        arch=ArchConfig(encoder_hidden=64, latent_dim=8, decoder_hidden=64),
    )
