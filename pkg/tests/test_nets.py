import numpy as np
import pytest

from nomasched.nets import Adam, DenseNet, gradient_check, orthogonal_init


def squared_loss(target):
    def fn(out):
        diff = out - target
        return float((diff ** 2).sum()), 2.0 * diff
    return fn


def linear_loss(coeffs):
    def fn(out):
        return float((out * coeffs).sum()), np.broadcast_to(coeffs, out.shape).copy()
    return fn


class TestForward:
    def test_shapes(self, rng):
        for arch, n_layers in (("linear", 1), ("single", 2), ("d2rl", 5)):
            net = DenseNet(6, 3, width=8, arch=arch, rng=rng)
            assert net.n_layers == n_layers
            out = net.forward(rng.normal(size=(4, 6)))
            assert out.shape == (4, 3)

    def test_d2rl_hidden_inputs_include_raw_features(self, rng):
        net = DenseNet(6, 3, width=8, arch="d2rl", rng=rng)
        assert net.weights[0].shape == (8, 6)
        for i in (1, 2, 3):
            assert net.weights[i].shape == (8, 8 + 6)
        assert net.weights[4].shape == (3, 8)

    def test_relu_blocks_negative_preactivations(self, rng):
        net = DenseNet(2, 1, width=4, arch="single", rng=rng)
        net.weights[0][...] = -np.abs(net.weights[0])
        net.biases[1][...] = 0.0
        out = net.forward(np.array([[1.0, 2.0]]))
        # all hidden pre-activations negative -> output is just the bias
        assert out[0, 0] == 0.0

    def test_unknown_arch_rejected(self, rng):
        with pytest.raises(ValueError):
            DenseNet(2, 1, width=4, arch="resnet", rng=rng)

    def test_init_deterministic(self):
        a = DenseNet(5, 2, 16, "d2rl", np.random.default_rng(3))
        b = DenseNet(5, 2, 16, "d2rl", np.random.default_rng(3))
        for x, y in zip(a.parameters(), b.parameters()):
            assert np.array_equal(x, y)

    def test_orthogonal_rows(self, rng):
        w = orthogonal_init(4, 9, gain=1.0, rng=rng)
        assert np.allclose(w @ w.T, np.eye(4), atol=1e-10)


class TestGradients:
    def test_linear_net_squared_loss(self, rng):
        net = DenseNet(5, 3, width=1, arch="linear", rng=rng)
        x = rng.normal(size=(4, 5))
        err = gradient_check(net, x, squared_loss(rng.normal(size=(4, 3))), rng)
        assert err < 1e-8

    @pytest.mark.parametrize("arch", ["single", "d2rl"])
    def test_hidden_architectures(self, arch, rng):
        for trial in range(5):
            net = DenseNet(7, 4, width=12, arch=arch, rng=rng)
            x = rng.normal(size=(3, 7))
            loss = squared_loss(rng.normal(size=(3, 4))) if trial % 2 else linear_loss(
                rng.normal(size=4))
            assert gradient_check(net, x, loss, rng) < 1e-4

    def test_zero_net_zero_input_bias_path(self, rng):
        net = DenseNet(3, 2, width=4, arch="single", rng=rng)
        for p in net.parameters():
            p[...] = 0.0
        x = np.zeros((1, 3))
        y = np.array([[1.0, -2.0]])
        out = net.forward(x)
        assert np.array_equal(out, np.zeros((1, 2)))
        grads = net.backward(2.0 * (out - y))
        dW1, db1, dW2, db2 = grads
        # only the final bias sees gradient: hidden activations are zero and
        # the relu mask kills the upstream path
        assert np.allclose(db2, -2.0 * y[0])
        assert np.all(dW2 == 0.0)
        assert np.all(dW1 == 0.0) and np.all(db1 == 0.0)

    def test_backward_before_forward_rejected(self, rng):
        net = DenseNet(2, 1, 4, "single", rng)
        with pytest.raises(RuntimeError):
            net.backward(np.ones((1, 1)))


class TestAdam:
    def test_matches_reference_recursion(self):
        p = [np.array([1.0])]
        opt = Adam(p, lr=0.1, eps=1e-5)
        m = v = 0.0
        expected = 1.0
        for t in range(1, 6):
            g = 0.5 / t
            opt.step(p, [np.array([g])])
            m = 0.9 * m + 0.1 * g
            v = 0.999 * v + 0.001 * g * g
            mhat = m / (1 - 0.9 ** t)
            vhat = v / (1 - 0.999 ** t)
            expected -= 0.1 * mhat / (np.sqrt(vhat) + 1e-5)
            assert p[0][0] == pytest.approx(expected, rel=1e-12)

    def test_updates_reduce_squared_loss(self, rng):
        net = DenseNet(4, 1, width=8, arch="single", rng=rng)
        opt = Adam(net.parameters(), lr=1e-2)
        x = rng.normal(size=(16, 4))
        y = rng.normal(size=(16, 1))
        first = None
        for _ in range(200):
            out = net.forward(x)
            loss, dout = squared_loss(y)(out)
            if first is None:
                first = loss
            opt.step(net.parameters(), net.backward(dout))
        assert loss < first * 0.1


class TestWeightIO:
    def test_roundtrip(self, rng):
        net = DenseNet(3, 2, 4, "d2rl", rng)
        stash = net.get_weights()
        other = DenseNet(3, 2, 4, "d2rl", np.random.default_rng(999))
        other.set_weights(stash)
        x = rng.normal(size=(2, 3))
        assert np.array_equal(net.forward(x), other.forward(x))

    def test_shape_mismatch_rejected(self, rng):
        net = DenseNet(3, 2, 4, "single", rng)
        bad = net.get_weights()
        bad[0] = np.zeros((1, 1))
        with pytest.raises(ValueError):
            net.set_weights(bad)
