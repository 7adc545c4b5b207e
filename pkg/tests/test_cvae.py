import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from czsl import cvae, nn
from czsl.cvae import CvaeArchitecture, LatentDistribution
from czsl.errors import ConfigError, DataError, DimensionError

from conftest import assert_grads_close, central_difference

TOY_ARCH = CvaeArchitecture(feature_dim=4, attribute_dim=2, encoder_hidden=5,
                            latent_dim=3, decoder_hidden=6, dropout_rate=0.3)


def toy_params(seed=0, arch=TOY_ARCH, random_bias=False):
    params = cvae.init_cvae(arch, np.random.default_rng(seed))
    if random_bias:
        # keeps ReLU pre-activations off the exact kink, where the
        # finite-difference oracle is invalid
        rng = np.random.default_rng(seed + 1000)
        for block in params.blocks().values():
            block.bias[:] = rng.uniform(0.05, 0.3, block.bias.shape)
    return params


def zero_params(arch=TOY_ARCH):
    params = toy_params(0, arch)
    for block in params.blocks().values():
        block.weights[:] = 0.0
        block.bias[:] = 0.0
    return params


class TestEncode:
    def test_zero_network(self):
        params = zero_params()
        dist = params and cvae.encode(params, np.ones((3, 4)), np.ones((3, 2)))
        assert not dist.mu.any() and not dist.logvar.any()

    def test_inference_deterministic(self):
        params = toy_params(1)
        x, a = np.ones((2, 4)), np.ones((2, 2))
        d1 = cvae.encode(params, x, a, rng=0, training=False)
        d2 = cvae.encode(params, x, a, rng=99, training=False)
        np.testing.assert_array_equal(d1.mu, d2.mu)
        np.testing.assert_array_equal(d1.logvar, d2.logvar)

    def test_matches_hand_composed_pipeline(self):
        params = toy_params(2)
        rng = np.random.default_rng(5)
        x = rng.standard_normal((3, 4))
        a = rng.standard_normal((3, 2))
        dist = cvae.encode(params, x, a, training=False)
        # independent layer-by-layer composition
        h = np.concatenate([x, a], axis=1)
        h1 = np.maximum(h @ params.enc1.weights.T + params.enc1.bias, 0.0)
        h2 = np.maximum(h1 @ params.enc2.weights.T + params.enc2.bias, 0.0)
        mu = h2 @ params.mu_head.weights.T + params.mu_head.bias
        lv = h2 @ params.logvar_head.weights.T + params.logvar_head.bias
        np.testing.assert_allclose(dist.mu, mu, atol=1e-12)
        np.testing.assert_allclose(dist.logvar, lv, atol=1e-12)

    def test_dimension_error_names_dim(self):
        params = toy_params(0)
        with pytest.raises(DimensionError, match="feature dim"):
            cvae.encode(params, np.ones((2, 7)), np.ones((2, 2)))


class TestReparameterize:
    def test_zero_variance_limit(self):
        dist = LatentDistribution(mu=np.full((1, 3), 2.0),
                                  logvar=np.full((1, 3), -100.0))
        z = cvae.reparameterize(dist, np.ones((1, 3)))
        np.testing.assert_allclose(z, 2.0, atol=1e-12)

    def test_standard_normal_passthrough(self):
        dist = LatentDistribution(mu=np.zeros((1, 3)), logvar=np.zeros((1, 3)))
        eps = np.array([[1.0, -2.0, 0.5]])
        np.testing.assert_array_equal(cvae.reparameterize(dist, eps), eps)

    def test_monte_carlo_moments(self):
        n = 100_000
        dist = LatentDistribution(mu=np.full((n, 1), 2.0),
                                  logvar=np.full((n, 1), np.log(4.0)))
        eps = np.random.default_rng(0).standard_normal((n, 1))
        z = cvae.reparameterize(dist, eps)
        assert abs(z.mean() - 2.0) < 0.05
        assert abs(z.var() - 4.0) < 0.2


class TestDecode:
    def test_zero_network(self):
        out = cvae.decode(zero_params(), np.ones((2, 3)), np.ones((2, 2)))
        assert not out.any()
        assert out.shape == (2, 4)

    def test_deterministic(self):
        params = toy_params(3)
        z, a = np.ones((2, 3)), np.ones((2, 2))
        np.testing.assert_array_equal(cvae.decode(params, z, a),
                                      cvae.decode(params, z, a))

    def test_matches_hand_composed_pipeline(self):
        params = toy_params(4)
        rng = np.random.default_rng(6)
        z, a = rng.standard_normal((3, 3)), rng.standard_normal((3, 2))
        h = np.concatenate([z, a], axis=1)
        h1 = np.maximum(h @ params.dec1.weights.T + params.dec1.bias, 0.0)
        expected = h1 @ params.dec_out.weights.T + params.dec_out.bias
        np.testing.assert_allclose(cvae.decode(params, z, a), expected,
                                   atol=1e-12)


class TestKlDivergence:
    def test_identical_distributions(self):
        dist = LatentDistribution(mu=np.zeros((1, 3)), logvar=np.zeros((1, 3)))
        assert cvae.kl_divergence(dist) == 0.0

    def test_unit_mean_closed_form(self):
        dist = LatentDistribution(mu=np.array([[1.0]]), logvar=np.array([[0.0]]))
        assert abs(cvae.kl_divergence(dist) - 0.5) < 1e-15

    def test_unit_logvar_closed_form(self):
        dist = LatentDistribution(mu=np.array([[0.0]]), logvar=np.array([[1.0]]))
        assert abs(cvae.kl_divergence(dist) - (np.e - 2.0) / 2.0) < 1e-12

    @given(st.integers(0, 2 ** 32 - 1))
    @settings(max_examples=200, deadline=None)
    def test_nonnegative(self, seed):
        rng = np.random.default_rng(seed)
        dist = LatentDistribution(mu=rng.normal(0, 3, (2, 4)),
                                  logvar=rng.normal(0, 2, (2, 4)))
        assert cvae.kl_divergence(dist) >= 0.0


class TestReconstructionLoss:
    def test_perfect(self):
        x = np.random.default_rng(0).standard_normal((3, 4))
        assert cvae.reconstruction_loss(x, x) == 0.0

    def test_unit_offset(self):
        assert cvae.reconstruction_loss(np.array([[1.0, 0.0]]),
                                        np.array([[0.0, 0.0]])) == 1.0

    def test_hand_average(self):
        x = np.array([[1.0, 0.0], [0.0, 0.0]])
        x_hat = np.array([[0.0, 0.0], [np.sqrt(3.0), 0.0]])
        assert abs(cvae.reconstruction_loss(x, x_hat) - 2.0) < 1e-12

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            cvae.reconstruction_loss(np.ones((2, 2)), np.ones((3, 2)))


class TestCvaeLoss:
    def test_decomposition(self):
        params = toy_params(7)
        rng = np.random.default_rng(8)
        x, a = rng.standard_normal((5, 4)), rng.standard_normal((5, 2))
        loss, _, parts = cvae.cvae_loss(params, x, a, kl_weight=2.5, rng=3)
        assert abs(loss - (parts["reconstruction"] + 2.5 * parts["kl"])) < 1e-12

    def test_zero_loss_at_perfect_reconstruction(self):
        # zero network reconstructs zero input with a standard-normal
        # posterior; both loss parts vanish
        params = zero_params()
        loss, _, parts = cvae.cvae_loss(params, np.zeros((3, 4)),
                                        np.zeros((3, 2)), rng=0)
        assert loss == 0.0 and parts["kl"] == 0.0

    @pytest.mark.parametrize("seed", range(3))
    def test_gradient_matches_finite_differences(self, seed):
        params = toy_params(seed + 10, random_bias=True)
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((3, 4))
        a = rng.standard_normal((3, 2))
        flat = params.flat()

        def loss():
            # fixed int seed: same dropout mask and latent noise every call
            return cvae.cvae_loss(params, x, a, kl_weight=1.0, rng=seed)[0]

        numeric = central_difference(loss, flat)
        _, grads, _ = cvae.cvae_loss(params, x, a, kl_weight=1.0, rng=seed)
        assert_grads_close(grads, numeric)


class TestGenerate:
    def test_zero_decoder(self):
        out = cvae.generate(zero_params().decoder(), np.ones(2), 5, rng=0)
        assert out.shape == (5, 4) and not out.any()

    def test_reproducible(self):
        decoder = toy_params(11).decoder()
        a = np.array([0.5, -0.5])
        np.testing.assert_array_equal(cvae.generate(decoder, a, 7, rng=4),
                                      cvae.generate(decoder, a, 7, rng=4))

    def test_rejects_zero_count(self):
        with pytest.raises(ConfigError):
            cvae.generate(toy_params(0).decoder(), np.ones(2), 0, rng=0)

    def test_trained_decoder_separates_classes(self):
        # 2-class 2-dim synthetic set; class-conditional means land nearer
        # their own centroid after training
        import czsl
        from czsl.replay import TrainConfig, train_task

        bundle = czsl.make_synthetic_bundle(2, 80, 2, 2, seed=5,
                                            centroid_scale=4.0)
        arch = CvaeArchitecture(feature_dim=2, attribute_dim=2,
                                encoder_hidden=32, latent_dim=4,
                                decoder_hidden=32)
        meta = bundle.meta()
        tasks = czsl.split_fixed(meta, 0, recipe=[2])
        train_set = bundle.subset(tasks[0].train_indices)
        cfg = TrainConfig(epochs=40, batch_size=32, learning_rate=0.005,
                          kl_weight=8.0, seed=2)
        params, _ = train_task(1, train_set, None, cfg, arch)
        centroids = [bundle.features[bundle.labels == c].mean(axis=0)
                     for c in (0, 1)]
        for c in (0, 1):
            mean = cvae.generate(params.decoder(), bundle.attributes[c],
                                 300, rng=c).mean(axis=0)
            own = np.linalg.norm(mean - centroids[c])
            other = np.linalg.norm(mean - centroids[1 - c])
            assert own < other


class TestTrainingDecreasesLoss:
    def test_epoch_mean_loss_decreases(self):
        import czsl
        from czsl.replay import TrainConfig, train_task

        bundle = czsl.make_synthetic_bundle(3, 60, 4, 2, seed=9)
        arch = CvaeArchitecture(feature_dim=4, attribute_dim=2,
                                encoder_hidden=24, latent_dim=4,
                                decoder_hidden=24)
        tasks = czsl.split_fixed(bundle.meta(), 0, recipe=[3])
        train_set = bundle.subset(tasks[0].train_indices)
        cfg = TrainConfig(epochs=25, batch_size=30, learning_rate=0.003, seed=1)
        _, records = train_task(1, train_set, None, cfg, arch)
        assert records[-1]["real_loss"] < records[0]["real_loss"]


class TestCheckpoints:
    def test_roundtrip_full(self, tmp_path):
        params = toy_params(12)
        path = tmp_path / "ckpt.npz"
        cvae.save_checkpoint(path, params, meta={"task": 3, "dataset": "toy",
                                                 "seed": 7})
        loaded, meta = cvae.load_checkpoint(path)
        assert meta == {"task": 3, "dataset": "toy", "seed": 7}
        for name, block in params.blocks().items():
            np.testing.assert_array_equal(block.weights,
                                          loaded.blocks()[name].weights)

    def test_decoder_loads_independently(self, tmp_path):
        params = toy_params(13)
        path = tmp_path / "dec.npz"
        cvae.save_checkpoint(path, params, decoder_only=True)
        decoder, _ = cvae.load_decoder(path)
        np.testing.assert_array_equal(decoder.hidden.weights,
                                      params.dec1.weights)
        with pytest.raises(DataError, match="decoder"):
            cvae.load_checkpoint(path)

    def test_generation_identical_after_roundtrip(self, tmp_path):
        params = toy_params(14)
        path = tmp_path / "c.npz"
        cvae.save_checkpoint(path, params)
        decoder, _ = cvae.load_decoder(path)
        a = np.array([1.0, 2.0])
        np.testing.assert_array_equal(
            cvae.generate(params.decoder(), a, 5, rng=1),
            cvae.generate(decoder, a, 5, rng=1),
        )
