"""Stacked model forward, loss and whole-model gradients."""

import numpy as np
import pytest

from py_lstm_returns.gradcheck import check_model_gradients, numerical_gradient, max_relative_error
from py_lstm_returns.init import build_model
from py_lstm_returns.layers import dense_backward, dense_forward, lstm_backward, lstm_forward
from py_lstm_returns.model import (
    Model, ModelConfig, expected_parameter_count, model_forward, model_gradients, mse_loss,
)
from py_lstm_returns.ndmath import RngState
from py_lstm_returns.utils import ContractError


def small_model(seed: int, config: ModelConfig, scale: float = 0.3) -> Model:
    """Gaussian weights small enough that no gate saturates"""
    rng = np.random.default_rng(seed)
    model = Model.zeros(config)
    for _, value in model.named_tensors():
        value[...] = scale * rng.standard_normal(value.shape)
    return model


class TestModelForward:

    def test_zero_model_predicts_dense_bias(self):
        model = Model.zeros(ModelConfig(1, 6))
        model.lstm_layers[0].b_f[:] = 1.0
        model.dense.b[:] = [0.1, -0.2, 0.3, 0.4]
        result = model_forward(model, np.random.default_rng(0).standard_normal((9, 5)))
        np.testing.assert_array_equal(result.hidden, 0.0)
        np.testing.assert_array_equal(result.preds, np.tile(model.dense.b, (9, 1)))

    def test_output_shape_large_config(self):
        model = Model.zeros(ModelConfig(3, 250))
        result = model_forward(model, np.zeros((256, 5)))
        assert result.preds.shape == (256, 4)
        assert len(result.traces) == 3

    def test_two_layers_equal_manual_chain(self):
        model = small_model(1, ModelConfig(2, 5))
        x = np.random.default_rng(1).standard_normal((8, 5))
        h1, _ = lstm_forward(model.lstm_layers[0], x)
        h2, _ = lstm_forward(model.lstm_layers[1], h1)
        np.testing.assert_array_equal(model_forward(model, x).preds, dense_forward(model.dense, h2))

    def test_batched_shape(self):
        model = small_model(2, ModelConfig(2, 3))
        assert model_forward(model, np.zeros((4, 7, 5))).preds.shape == (4, 7, 4)

    def test_deterministic(self):
        model = small_model(3, ModelConfig(1, 4))
        x = np.random.default_rng(3).standard_normal((6, 5))
        np.testing.assert_array_equal(model_forward(model, x).preds, model_forward(model, x).preds)

    def test_input_width_mismatch(self):
        with pytest.raises(ContractError):
            model_forward(Model.zeros(ModelConfig(1, 4)), np.zeros((6, 3)))


class TestMseLoss:

    def test_equal_inputs(self):
        preds = np.ones((3, 4))
        loss, grad = mse_loss(preds, preds.copy())
        assert loss == 0.0
        np.testing.assert_array_equal(grad, 0.0)

    def test_scalar_hand_values(self):
        loss, grad = mse_loss(np.array([[0.02]]), np.array([[0.01]]))
        assert loss == pytest.approx(1e-4, rel=1e-12)
        assert grad[0, 0] == pytest.approx(0.02, rel=1e-12)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(4)
        preds, targets = rng.standard_normal((5, 4)), rng.standard_normal((5, 4))
        _, grad = mse_loss(preds, targets)
        numeric = numerical_gradient(lambda: mse_loss(preds, targets)[0], preds)
        assert max_relative_error(grad, numeric) < 1e-6

    def test_non_negative(self):
        rng = np.random.default_rng(5)
        assert mse_loss(rng.standard_normal((4, 4)), rng.standard_normal((4, 4)))[0] > 0.0

    def test_shape_mismatch(self):
        with pytest.raises(ContractError):
            mse_loss(np.zeros((3, 4)), np.zeros((4, 4)))


class TestModelGradients:

    @pytest.mark.parametrize('seed', range(20))
    def test_matches_finite_differences(self, seed):
        rng = np.random.default_rng(1000 + seed)
        input_dim = int(rng.integers(3, 6))
        config = ModelConfig(int(rng.integers(1, 3)), int(rng.integers(4, 9)), input_dim=input_dim)
        steps = int(rng.integers(5, 8))
        model = small_model(seed, config)
        # Outputs and targets at daily-return scale
        model.dense.W *= 0.1
        model.dense.b *= 0.1
        x = rng.standard_normal((steps, input_dim))
        targets = 0.01 * rng.standard_normal((steps, 4))
        errors = check_model_gradients(model, x, targets)
        assert max(errors.values()) < 1e-4, errors

    def test_two_layer_reference_case(self):
        config = ModelConfig(2, 6)
        rng = np.random.default_rng(7)
        errors = check_model_gradients(small_model(7, config), rng.standard_normal((7, 5)),
                                       0.1 * rng.standard_normal((7, 4)))
        assert set(errors) == {name for name, _ in Model.zeros(config).named_tensors()}
        assert max(errors.values()) < 1e-4

    def test_zero_error_gives_zero_gradients(self):
        model = small_model(8, ModelConfig(2, 4))
        x = np.random.default_rng(8).standard_normal((5, 5))
        _, grads = model_gradients(model, x, model_forward(model, x).preds)
        for _, value in grads.named_tensors():
            np.testing.assert_array_equal(value, 0.0)

    def test_one_layer_equals_hand_composition(self):
        model = small_model(9, ModelConfig(1, 4))
        rng = np.random.default_rng(9)
        x, targets = rng.standard_normal((6, 5)), rng.standard_normal((6, 4))
        _, grads = model_gradients(model, x, targets)

        h, trace = lstm_forward(model.lstm_layers[0], x)
        _, dpreds = mse_loss(dense_forward(model.dense, h), targets)
        dense_grads, dh = dense_backward(model.dense, h, dpreds)
        lstm_grads, _ = lstm_backward(model.lstm_layers[0], trace, dh)
        np.testing.assert_array_equal(grads.dense.W, dense_grads.W)
        np.testing.assert_array_equal(grads.dense.b, dense_grads.b)
        for name, value in lstm_grads.named_tensors():
            np.testing.assert_array_equal(grads.lstm[0][name], value)

    def test_batch_gradient_is_mean_of_sequences(self):
        model = small_model(10, ModelConfig(1, 3))
        rng = np.random.default_rng(10)
        x, targets = rng.standard_normal((4, 3, 5)), rng.standard_normal((4, 3, 4))
        loss, grads = model_gradients(model, x, targets)
        singles = [model_gradients(model, x[:, b], targets[:, b]) for b in range(3)]
        assert loss == pytest.approx(np.mean([s[0] for s in singles]), rel=1e-12)
        for name, value in grads.named_tensors():
            mean = sum(s[1].as_dict()[name] for s in singles) / 3.0
            np.testing.assert_allclose(value, mean, rtol=1e-10, atol=1e-14)


class TestParameterCount:

    @pytest.mark.parametrize('layers', [1, 2, 3])
    @pytest.mark.parametrize('size', [50, 100, 250, 500])
    def test_formula_matches_constructed_model(self, layers, size):
        config = ModelConfig(layers, size)
        assert Model.zeros(config).parameter_count() == expected_parameter_count(config)

    def test_hand_value(self):
        # 4·(50·5 + 50·50 + 50) + 4·50 + 4
        assert expected_parameter_count(ModelConfig(1, 50)) == 11404

    def test_built_model_matches(self):
        config = ModelConfig(2, 7)
        assert build_model(config, RngState(0)).parameter_count() == expected_parameter_count(config)


class TestModelConfig:

    def test_rejects_non_positive(self):
        with pytest.raises(ContractError):
            ModelConfig(0, 50)

    def test_layer_chain_validated(self):
        model = Model.zeros(ModelConfig(2, 4))
        with pytest.raises(ContractError):
            Model(ModelConfig(2, 5), model.lstm_layers, model.dense)
