"""Tests for the numpy layers, autoencoder architectures, Adam and the training loop."""

import numpy as np
import pytest

from lowdim_xray.errors import NumericalError, ShapeError, StaleCacheError, TrainingDivergenceError, ValidationError
from lowdim_xray.neural.layers import BatchNorm, Conv1d, ConvTranspose1d, Dense, MaxPool1d, ReLU, Reshape, Upsample1d
from lowdim_xray.neural.network import ArchKind, Mode, Network, NetworkArch, init_network
from lowdim_xray.neural.optim import AdamState, adam_step
from lowdim_xray.neural.training import TrainConfig, mse, train_denoising

EPS = 1e-6
# smaller step keeps ReLU and max-pool switches out of the whole-network differences
NETWORK_EPS = 1e-7
# coordinates checked per parameter tensor
GRADIENT_SAMPLES = 10


def numeric_gradient(f, array: np.ndarray) -> np.ndarray:
    """Central differences of scalar ``f()`` with respect to every entry of ``array`` (modified in place)."""
    grad = np.zeros_like(array)
    for index in np.ndindex(array.shape):
        original = array[index]
        array[index] = original + EPS
        plus = f()
        array[index] = original - EPS
        minus = f()
        array[index] = original
        grad[index] = (plus - minus) / (2 * EPS)
    return grad


def check_layer(layer, x: np.ndarray, training: bool = True) -> None:
    rng = np.random.default_rng(0)
    out, cache = layer.forward(x, training)
    upstream = rng.normal(size=out.shape)
    grad_in, grads = layer.backward(cache, upstream)

    def loss() -> float:
        return float(np.sum(layer.forward(x, training)[0] * upstream))

    np.testing.assert_allclose(grad_in, numeric_gradient(loss, x), rtol=1e-5, atol=1e-7)
    for name, param in layer.params.items():
        np.testing.assert_allclose(grads[name], numeric_gradient(loss, param), rtol=1e-5, atol=1e-7)


def initialized(layer):
    layer.init_params(np.random.default_rng(1))
    return layer


class TestLayerGradients:
    """Finite-difference checks of every layer's backward pass."""

    def test_dense(self):
        check_layer(initialized(Dense(6, 4)), np.random.default_rng(2).normal(size=(3, 6)))

    def test_relu(self):
        rng = np.random.default_rng(3)
        x = rng.uniform(0.1, 1.0, size=(3, 5)) * rng.choice([-1.0, 1.0], size=(3, 5))
        check_layer(ReLU(), x)

    def test_batchnorm_dense_training(self):
        layer = BatchNorm(4)
        layer.params["gamma"] = np.array([0.5, 1.5, 1.0, 2.0])
        layer.params["beta"] = np.array([0.1, -0.2, 0.0, 0.3])
        check_layer(layer, np.random.default_rng(4).normal(size=(5, 4)))

    def test_batchnorm_conv_training(self):
        check_layer(BatchNorm(3), np.random.default_rng(5).normal(size=(4, 3, 6)))

    def test_batchnorm_eval(self):
        layer = BatchNorm(3)
        layer.buffers["running_mean"] = np.array([0.1, 0.2, 0.3])
        layer.buffers["running_var"] = np.array([0.5, 1.0, 2.0])
        check_layer(layer, np.random.default_rng(6).normal(size=(4, 3)), training=False)

    def test_conv1d(self):
        check_layer(initialized(Conv1d(2, 3, 3, stride=1, padding=1)), np.random.default_rng(7).normal(size=(2, 2, 8)))

    def test_strided_conv1d(self):
        check_layer(initialized(Conv1d(2, 3, 3, stride=2, padding=1)), np.random.default_rng(8).normal(size=(2, 2, 9)))

    def test_conv_transpose1d(self):
        layer = initialized(ConvTranspose1d(3, 2, 3, stride=2, padding=1, out_len=13))
        check_layer(layer, np.random.default_rng(9).normal(size=(2, 3, 7)))

    def test_maxpool(self):
        """Test max pooling on distinct values, dropping a trailing odd element."""
        x = (np.random.default_rng(10).permutation(2 * 3 * 7).reshape(2, 3, 7) * 0.1).astype(float)
        check_layer(MaxPool1d(2), x)

    def test_upsample(self):
        check_layer(Upsample1d(13), np.random.default_rng(11).normal(size=(2, 3, 6)))


class TestLayerShapes:
    """Tests for layer output shapes and shape errors."""

    def test_conv_lengths(self):
        assert Conv1d(1, 1, 3, stride=2, padding=1).output_length(26) == 13
        assert MaxPool1d(2).output_length(13) == 6

    def test_maxpool_drops_trailing_window(self):
        out, _ = MaxPool1d(2).forward(np.arange(5.0).reshape(1, 1, 5), training=False)
        assert out.tolist() == [[[1.0, 3.0]]]

    def test_upsample_nearest(self):
        out, _ = Upsample1d(5).forward(np.array([[[1.0, 2.0]]]), training=False)
        assert out.tolist() == [[[1.0, 1.0, 1.0, 2.0, 2.0]]]

    def test_dense_shape_error(self):
        with pytest.raises(ShapeError):
            Dense(4, 2).forward(np.ones((3, 5)), training=False)

    def test_reshape_shape_error(self):
        with pytest.raises(ShapeError):
            Reshape(2, 3).forward(np.ones((1, 5)), training=False)


ALL_ARCHS = list(ArchKind)


class TestNetwork:
    """Tests for the autoencoder architectures."""

    @pytest.mark.parametrize("kind", ALL_ARCHS)
    def test_output_and_code_shapes(self, kind):
        network = init_network(NetworkArch(kind=kind), seed=0)
        x = np.random.default_rng(0).normal(size=(4, 26))

        assert network.reconstruct(x).shape == (4, 26)
        assert network.encode(x).shape == (4, 5)

    @pytest.mark.parametrize("kind", ALL_ARCHS)
    def test_decode_of_encode_is_reconstruct(self, kind):
        network = init_network(NetworkArch(kind=kind), seed=1)
        x = np.random.default_rng(1).normal(size=(3, 26))

        np.testing.assert_allclose(network.decode(network.encode(x)), network.reconstruct(x), atol=1e-12)

    @pytest.mark.parametrize("kind", ALL_ARCHS)
    def test_parameter_gradients(self, kind):
        """Test backward against central differences on a sample of parameters."""
        network = init_network(NetworkArch(kind=kind), seed=2)
        rng = np.random.default_rng(2)
        x = rng.normal(size=(6, 26))
        target = rng.normal(size=(6, 26))

        def loss() -> float:
            return mse(network.forward(x, Mode.TRAIN)[0], target)[0]

        output, cache = network.forward(x, Mode.TRAIN)
        grads = network.backward(cache, mse(output, target)[1])

        for layer_index, layer in enumerate(network.layers):
            for name, param in layer.params.items():
                for flat in rng.choice(param.size, size=min(GRADIENT_SAMPLES, param.size), replace=False):
                    index = np.unravel_index(flat, param.shape)
                    original = param[index]
                    param[index] = original + NETWORK_EPS
                    plus = loss()
                    param[index] = original - NETWORK_EPS
                    minus = loss()
                    param[index] = original
                    numeric = (plus - minus) / (2 * NETWORK_EPS)
                    assert grads[layer_index][name][index] == pytest.approx(numeric, rel=1e-4, abs=1e-7)

    def test_fcnn1_parameter_count(self):
        assert init_network(NetworkArch(kind=ArchKind.FCNN1), seed=0).n_parameters == 1055

    def test_fcnn1_layout(self):
        network = init_network(NetworkArch(kind=ArchKind.FCNN1), seed=0)
        shapes = [layer.params["weight"].shape for layer in network.layers if "weight" in layer.params]

        assert shapes == [(26, 16), (16, 5), (5, 16), (16, 26)]
        assert isinstance(network.layers[network.code_index], Dense)
        assert not isinstance(network.layers[network.code_index + 1], ReLU)

    def test_custom_widths(self):
        network = init_network(NetworkArch(kind=ArchKind.FCNN3, widths=(10, 6), latent_dim=3), seed=0)
        assert network.encode(np.zeros((1, 26))).shape == (1, 3)

    def test_fine_grid(self):
        network = init_network(NetworkArch(kind=ArchKind.CNN2_DEEP, input_len=131), seed=0)
        assert network.reconstruct(np.zeros((2, 131))).shape == (2, 131)

    def test_input_too_short(self):
        with pytest.raises(ValidationError):
            init_network(NetworkArch(kind=ArchKind.CNN2_DEEP, input_len=8), seed=0)

    def test_even_kernel_rejected(self):
        with pytest.raises(ValueError):
            NetworkArch(kind=ArchKind.CNN1, kernel_size=4)

    def test_init_deterministic(self):
        arch = NetworkArch(kind=ArchKind.CNN2)
        first, second, other = init_network(arch, 5), init_network(arch, 5), init_network(arch, 6)

        for a, b, c in zip(first.parameters(), second.parameters(), other.parameters(), strict=True):
            for name in a:
                np.testing.assert_array_equal(a[name], b[name])
        assert not np.array_equal(first.layers[1].params["weight"], other.layers[1].params["weight"])

    def test_stale_cache(self):
        network = init_network(NetworkArch(kind=ArchKind.FCNN1), seed=0)
        output, cache = network.forward(np.ones((2, 26)), Mode.TRAIN)
        network.mark_updated()

        with pytest.raises(StaleCacheError):
            network.backward(cache, output)

    def test_non_finite_activations(self):
        network = init_network(NetworkArch(kind=ArchKind.FCNN1), seed=0)
        network.layers[0].params["weight"][0, 0] = np.inf

        with pytest.raises(NumericalError):
            network.reconstruct(np.ones((1, 26)))

    def test_wrong_width(self):
        network = init_network(NetworkArch(kind=ArchKind.FCNN1), seed=0)
        with pytest.raises(ShapeError):
            network.reconstruct(np.ones((1, 20)))
        with pytest.raises(ShapeError):
            network.decode(np.ones((1, 4)))

    @pytest.mark.parametrize("kind", [ArchKind.FCNN2, ArchKind.CNN1])
    def test_dict_round_trip(self, kind):
        network = init_network(NetworkArch(kind=kind), seed=3)
        network.forward(np.random.default_rng(3).normal(size=(8, 26)), Mode.TRAIN)
        x = np.random.default_rng(4).normal(size=(2, 26))

        loaded = Network.from_dict(network.to_dict())

        np.testing.assert_array_equal(loaded.reconstruct(x), network.reconstruct(x))


class TestAdam:
    """Tests for adam_step against hand-computed updates."""

    @staticmethod
    def single_weight() -> Network:
        layer = Dense(1, 1)
        layer.params = {"weight": np.zeros((1, 1)), "bias": np.zeros(1)}
        return Network(NetworkArch(kind=ArchKind.FCNN1), [layer], 0)

    @staticmethod
    def grads(value: float) -> list[dict[str, np.ndarray]]:
        return [{"weight": np.full((1, 1), value), "bias": np.full(1, value)}]

    def test_constant_gradient(self):
        """Test that bias correction makes every step with a constant gradient equal to the learning rate."""
        network = self.single_weight()
        state = AdamState.zeros_like(network)
        for _ in range(2):
            adam_step(network, self.grads(0.5), state, learning_rate=0.1)

        assert network.layers[0].params["weight"][0, 0] == pytest.approx(-0.2, abs=1e-6)
        assert state.step == 2

    def test_sign_flip(self):
        network = self.single_weight()
        state = AdamState.zeros_like(network)
        adam_step(network, self.grads(1.0), state, learning_rate=0.1)
        assert network.layers[0].params["weight"][0, 0] == pytest.approx(-0.1, abs=1e-6)

        adam_step(network, self.grads(-1.0), state, learning_rate=0.1)
        # m_hat = -0.01 / 0.19, v_hat = 1
        assert network.layers[0].params["weight"][0, 0] == pytest.approx(-0.1 + 0.01 / 1.9, abs=1e-6)

    def test_step_invalidates_caches(self):
        network = self.single_weight()
        version = network.params_version
        adam_step(network, self.grads(1.0), AdamState())
        assert network.params_version == version + 1

    def test_gradient_shape_mismatch(self):
        network = self.single_weight()
        with pytest.raises(ShapeError):
            adam_step(network, [{"weight": np.ones((2, 1)), "bias": np.ones(1)}], AdamState())
        with pytest.raises(ShapeError):
            adam_step(network, [], AdamState())


class TestTraining:
    """Tests for mse and train_denoising."""

    def test_mse(self):
        loss, grad = mse(np.array([[1.0, 2.0]]), np.zeros((1, 2)))

        assert loss == 2.5
        assert grad.tolist() == [[1.0, 2.0]]

    @pytest.fixture
    def pairs(self, toy_dataset):
        train = (toy_dataset.noisy[:120], toy_dataset.clean[:120])
        val = (toy_dataset.noisy[120:160], toy_dataset.clean[120:160])
        return train, val

    def test_history_length(self, pairs):
        network = init_network(NetworkArch(kind=ArchKind.FCNN1), seed=0)
        _, history = train_denoising(network, pairs[0], pairs[1], TrainConfig(epochs=3, batch_size=32))

        assert len(history.train_loss) == 3
        assert len(history.val_loss) == 3
        assert all(np.isfinite(history.val_loss))

    def test_deterministic(self, pairs):
        config = TrainConfig(epochs=2, batch_size=50, seed=4)
        first, h1 = train_denoising(init_network(NetworkArch(kind=ArchKind.CNN2), 4), pairs[0], pairs[1], config)
        second, h2 = train_denoising(init_network(NetworkArch(kind=ArchKind.CNN2), 4), pairs[0], pairs[1], config)

        assert h1.train_loss == h2.train_loss
        x = pairs[1][0]
        np.testing.assert_array_equal(first.reconstruct(x), second.reconstruct(x))

    def test_without_validation(self, pairs):
        network = init_network(NetworkArch(kind=ArchKind.FCNN1), seed=0)
        _, history = train_denoising(network, pairs[0], None, TrainConfig(epochs=2))

        assert all(np.isnan(history.val_loss))
        assert history.to_dict()["val_loss"] == [None, None]

    def test_loss_decreases(self, pairs):
        network = init_network(NetworkArch(kind=ArchKind.FCNN1), seed=1)
        _, history = train_denoising(network, pairs[0], pairs[1], TrainConfig(epochs=20, batch_size=32, learning_rate=1e-2))

        assert history.train_loss[-1] < history.train_loss[0]

    def test_divergence(self):
        network = init_network(NetworkArch(kind=ArchKind.FCNN1), seed=0)
        huge = np.full((32, 26), 1e308)

        with pytest.raises(TrainingDivergenceError) as excinfo:
            train_denoising(network, (huge, np.zeros((32, 26))), None, TrainConfig(epochs=1))

        assert excinfo.value.epoch == 0
        assert excinfo.value.batch == 0

    def test_mismatched_pairs(self):
        network = init_network(NetworkArch(kind=ArchKind.FCNN1), seed=0)
        with pytest.raises(ShapeError):
            train_denoising(network, (np.zeros((4, 26)), np.zeros((3, 26))), None, TrainConfig(epochs=1))
