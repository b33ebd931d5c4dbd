import numpy as np
import pytest

from helpers import finite_diff_param_grads

from ftca.errors import ConfigError, ShapeError
from ftca.mlp import (
    BCE_FAKE,
    BCE_REAL,
    GENERATOR_NONSATURATING,
    SQUARED,
    MlpParams,
    init_mlp,
    mlp_backprop,
    mlp_forward,
    mlp_gradient,
    mlp_loss,
    sgd_step,
)

BCE_TAGS = (BCE_REAL, BCE_FAKE, GENERATOR_NONSATURATING)


def identity_net(d):
    return MlpParams((np.eye(d),), (np.zeros(d),), "relu", "identity")


def test_forward_identity_layer():
    net = identity_net(3)
    X = np.arange(6.0).reshape(2, 3)
    np.testing.assert_array_equal(mlp_forward(net, X), X)


def test_forward_relu_clips_negative():
    net = MlpParams((np.eye(2), np.eye(2)), (np.zeros(2), np.zeros(2)), "relu", "identity")
    out = mlp_forward(net, np.array([[-1.0, 2.0]]))
    np.testing.assert_array_equal(out, [[0.0, 2.0]])


def test_forward_sigmoid_at_zero():
    net = MlpParams((np.zeros((2, 1)),), (np.zeros(1),), "relu", "sigmoid")
    out = mlp_forward(net, np.array([[3.0, -4.0]]))
    assert out[0, 0] == 0.5


def test_param_count_and_layer_sizes():
    rng = np.random.default_rng(0)
    net = init_mlp((3, 8, 2), rng)
    assert net.layer_sizes == (3, 8, 2)
    assert net.param_count == 3 * 8 + 8 + 8 * 2 + 2


def _safe_bce_instance(rng, tag, hidden_act):
    """Random net + batch whose outputs stay away from clamp boundaries
    and whose relu pre-activations stay away from the kink."""
    while True:
        sizes = (int(rng.integers(1, 4)), int(rng.integers(2, 6)), 1)
        net = init_mlp(sizes, rng, hidden_act, "sigmoid")
        X = rng.normal(size=(int(rng.integers(1, 5)), sizes[0]))
        out = mlp_forward(net, X)
        if np.any(out < 1e-4) or np.any(out > 1.0 - 1e-4):
            continue
        if hidden_act == "relu":
            pre = X @ net.weights[0] + net.biases[0]
            if np.min(np.abs(pre)) < 1e-3:
                continue
        return net, X


@pytest.mark.parametrize("tag", BCE_TAGS)
@pytest.mark.parametrize("hidden_act", ["tanh", "relu"])
def test_bce_gradients_match_finite_differences(tag, hidden_act):
    rng = np.random.default_rng(hash((tag, hidden_act)) % 2**32)
    for _ in range(30):
        net, X = _safe_bce_instance(rng, tag, hidden_act)
        grads = mlp_gradient(net, X, tag)
        fd_w, fd_b = finite_diff_param_grads(lambda p: mlp_loss(p, X, tag), net)
        for a, f in zip(grads.weights, fd_w):
            np.testing.assert_allclose(a, f, rtol=1e-4, atol=1e-6)
        for a, f in zip(grads.biases, fd_b):
            np.testing.assert_allclose(a, f, rtol=1e-4, atol=1e-6)


def test_squared_gradients_match_finite_differences():
    rng = np.random.default_rng(77)
    for _ in range(30):
        sizes = (int(rng.integers(1, 4)), int(rng.integers(2, 6)), int(rng.integers(1, 3)))
        net = init_mlp(sizes, rng, "tanh", "identity")
        X = rng.normal(size=(int(rng.integers(1, 5)), sizes[0]))
        t = rng.normal(size=(X.shape[0], sizes[-1]))
        grads = mlp_gradient(net, X, SQUARED, t)
        fd_w, fd_b = finite_diff_param_grads(lambda p: mlp_loss(p, X, SQUARED, t), net)
        for a, f in zip(grads.weights, fd_w):
            np.testing.assert_allclose(a, f, rtol=1e-4, atol=1e-6)
        for a, f in zip(grads.biases, fd_b):
            np.testing.assert_allclose(a, f, rtol=1e-4, atol=1e-6)


def test_input_gradient_matches_finite_differences():
    rng = np.random.default_rng(78)
    net = init_mlp((3, 5, 1), rng, "tanh", "sigmoid")
    X = rng.normal(size=(2, 3))
    out = mlp_forward(net, X)
    assert np.all((out > 1e-4) & (out < 1 - 1e-4))
    grads = mlp_gradient(net, X, BCE_REAL)
    h = 1e-6
    fd = np.zeros_like(X)
    for idx in np.ndindex(X.shape):
        Xp, Xm = X.copy(), X.copy()
        Xp[idx] += h
        Xm[idx] -= h
        fd[idx] = (mlp_loss(net, Xp, BCE_REAL) - mlp_loss(net, Xm, BCE_REAL)) / (2 * h)
    np.testing.assert_allclose(grads.input, fd, rtol=1e-4, atol=1e-8)


def test_gradient_zero_at_saturated_real_optimum():
    # D(x) = 1 exactly: the clamped log makes every gradient vanish.
    net = MlpParams((np.zeros((2, 1)),), (np.array([50.0]),), "relu", "sigmoid")
    X = np.array([[0.3, -0.4], [1.0, 2.0]])
    assert np.all(mlp_forward(net, X) == 1.0)
    grads = mlp_gradient(net, X, BCE_REAL)
    for g in grads.weights + grads.biases:
        np.testing.assert_array_equal(g, 0.0)


def test_symmetric_units_get_equal_bias_gradients():
    net = MlpParams(
        (np.zeros((2, 4)), np.ones((4, 1))),
        (np.full(4, 0.1), np.zeros(1)),
        "tanh",
        "sigmoid",
    )
    X = np.array([[0.5, -0.5], [1.5, 0.25]])
    grads = mlp_gradient(net, X, BCE_REAL)
    np.testing.assert_allclose(grads.biases[0], grads.biases[0][0])


def test_backprop_chain_matches_joint_finite_difference():
    # Composite f = D(G(z)) with the non-saturating loss: gradients w.r.t.
    # G's parameters via the chained input gradient match finite differences.
    rng = np.random.default_rng(79)
    gen = init_mlp((2, 4, 3), rng, "tanh", "tanh")
    disc = init_mlp((3, 4, 1), rng, "tanh", "sigmoid")
    Z = rng.normal(size=(3, 2))

    def gen_loss(g):
        return mlp_loss(disc, mlp_forward(g, Z), GENERATOR_NONSATURATING)

    fake = mlp_forward(gen, Z)
    through = mlp_gradient(disc, fake, GENERATOR_NONSATURATING)
    grads = mlp_backprop(gen, Z, through.input)
    fd_w, fd_b = finite_diff_param_grads(gen_loss, gen)
    for a, f in zip(grads.weights, fd_w):
        np.testing.assert_allclose(a, f, rtol=1e-4, atol=1e-6)
    for a, f in zip(grads.biases, fd_b):
        np.testing.assert_allclose(a, f, rtol=1e-4, atol=1e-6)


def test_sgd_step_moves_against_gradient():
    rng = np.random.default_rng(80)
    net = init_mlp((2, 3, 1), rng, "tanh", "identity")
    X = rng.normal(size=(8, 2))
    t = rng.normal(size=(8, 1))
    before = mlp_loss(net, X, SQUARED, t)
    after = mlp_loss(sgd_step(net, mlp_gradient(net, X, SQUARED, t), 0.05), X, SQUARED, t)
    assert after < before


def test_shape_and_config_errors():
    net = identity_net(2)
    with pytest.raises(ShapeError):
        mlp_forward(net, np.zeros((1, 3)))
    with pytest.raises(ConfigError):
        mlp_loss(net, np.zeros((1, 2)), "nonsense")
    with pytest.raises(ConfigError):
        mlp_loss(net, np.zeros((1, 2)), SQUARED)  # targets missing
    with pytest.raises(ConfigError):
        MlpParams((np.eye(2),), (np.zeros(2),), "swish", "identity")
    with pytest.raises(ShapeError):
        MlpParams((np.eye(2), np.eye(3)), (np.zeros(2), np.zeros(3)), "relu", "identity")
