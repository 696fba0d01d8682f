import math

import numpy as np
import pytest

import oracles
from arc.errors import InvalidLabel, NumericalError, ShapeError
from arc.nn import (
    BatchNorm,
    Checkpoint,
    Conv2D,
    Dense,
    Dropout,
    Flatten,
    MaxPool,
    Network,
    PReLU,
    Softmax,
    batchnorm_forward,
    build_arc_network,
    checkpoint_from_network,
    conv2d_backward,
    conv2d_forward,
    cross_entropy,
    dropout,
    fc_forward,
    he_init,
    maxpool,
    maxpool_backward,
    network_from_checkpoint,
    prelu,
    softmax,
)


class TestConv:
    def test_table_shape(self):
        layer = Conv2D(3, 8)
        x = np.random.default_rng(0).random((3, 150, 150)).astype(np.float32)
        assert conv2d_forward(x, layer).shape == (8, 148, 148)

    def test_delta_kernel_is_identity_crop(self):
        layer = Conv2D(1, 1)
        layer.params["kernels"][0, 0, 1, 1] = 1.0
        x = np.random.default_rng(1).random((1, 7, 9)).astype(np.float32)
        out = conv2d_forward(x, layer)
        assert np.allclose(out[0], x[0, 1:-1, 1:-1])

    def test_hand_sum(self):
        layer = Conv2D(1, 1, dtype=np.float64)
        layer.params["kernels"][:] = 1.0
        layer.params["bias"][:] = 0.5
        x = np.ones((1, 3, 3))
        out = conv2d_forward(x, layer)
        assert out.shape == (1, 1, 1)
        assert out[0, 0, 0] == pytest.approx(9.5)

    def test_channel_mismatch(self):
        layer = Conv2D(3, 8)
        with pytest.raises(ShapeError):
            conv2d_forward(np.zeros((2, 10, 10), np.float32), layer)

    def test_backward_zero_grad(self):
        layer = Conv2D(2, 3, dtype=np.float64)
        he_init(layer, np.random.default_rng(0))
        x = np.random.default_rng(1).random((2, 6, 6))
        gx, gk, gb = conv2d_backward(x, layer, np.zeros((3, 4, 4)))
        assert not gx.any() and not gk.any() and not gb.any()

    def test_grad_bias_is_spatial_sum(self):
        layer = Conv2D(2, 3, dtype=np.float64)
        he_init(layer, np.random.default_rng(0))
        x = np.random.default_rng(1).random((2, 6, 6))
        g = np.random.default_rng(2).random((3, 4, 4))
        _, _, gb = conv2d_backward(x, layer, g)
        assert np.allclose(gb, g.sum(axis=(1, 2)))

    def test_backward_matches_finite_differences(self):
        rng = np.random.default_rng(3)
        layer = Conv2D(2, 2, dtype=np.float64)
        he_init(layer, rng)
        x = rng.random((2, 5, 5))
        g = rng.random((2, 3, 3))
        gx, gk, gb = conv2d_backward(x, layer, g)

        def loss():
            return float((conv2d_forward(x, layer) * g).sum())

        fd_k = oracles.fd_gradient(loss, layer.params["kernels"])
        assert oracles.max_rel_error(gk, fd_k) < 1e-4
        fd_x = oracles.fd_gradient(loss, x)
        assert oracles.max_rel_error(gx, fd_x) < 1e-4


class TestMaxPool:
    def test_table_shapes(self):
        x = np.zeros((8, 148, 148), np.float32)
        out, _ = maxpool(x, 4, 4)
        assert out.shape == (8, 37, 37)
        x2 = np.zeros((8, 35, 35), np.float32)
        out2, _ = maxpool(x2, 2, 2)
        assert out2.shape == (8, 17, 17)
        assert out2.size == 2312

    def test_constant_ties_route_to_first_cell(self):
        x = np.ones((1, 4, 4), np.float64)
        out, idx = maxpool(x, 2, 2)
        assert (out == 1).all()
        assert (idx == 0).all()
        g = np.ones((1, 2, 2))
        gx = maxpool_backward(g, idx, (1, 4, 4), 2, 2)
        expected = np.zeros((1, 4, 4))
        expected[0, ::2, ::2] = 1.0
        assert np.array_equal(gx, expected)

    def test_window_larger_than_input(self):
        with pytest.raises(ShapeError):
            maxpool(np.zeros((1, 3, 3), np.float32), 4, 4)

    def test_backward_routes_to_argmax(self):
        rng = np.random.default_rng(4)
        x = rng.random((2, 6, 6))
        out, idx = maxpool(x, 2, 2)
        g = rng.random(out.shape)
        gx = maxpool_backward(g, idx, x.shape, 2, 2)
        assert gx.sum() == pytest.approx(g.sum())
        # gradient lands only where the max was
        nz = gx != 0
        for c in range(2):
            for i in range(3):
                for j in range(3):
                    win = x[c, 2 * i : 2 * i + 2, 2 * j : 2 * j + 2]
                    w_nz = nz[c, 2 * i : 2 * i + 2, 2 * j : 2 * j + 2]
                    assert w_nz.sum() == 1
                    assert win[w_nz][0] == win.max()


class TestBatchNorm:
    def test_zero_variance_channel_outputs_beta(self):
        layer = BatchNorm(2, dtype=np.float64)
        layer.params["beta"][:] = (3.0, -1.0)
        x = np.full((4, 2, 3, 3), 7.0)
        y = batchnorm_forward(x, layer, training=True)
        assert np.allclose(y[:, 0], 3.0) and np.allclose(y[:, 1], -1.0)

    def test_normalizes_batch(self):
        rng = np.random.default_rng(5)
        layer = BatchNorm(3, dtype=np.float64)
        x = rng.random((8, 3, 5, 5)) * 4 + 2
        y = batchnorm_forward(x, layer, training=True)
        assert np.allclose(y.mean(axis=(0, 2, 3)), 0.0, atol=1e-6)
        assert np.allclose(y.var(axis=(0, 2, 3)), 1.0, atol=1e-3)

    def test_infer_mode_keeps_running_stats(self):
        layer = BatchNorm(2, dtype=np.float64)
        before = (layer.stats["running_mean"].copy(), layer.stats["running_var"].copy())
        batchnorm_forward(np.random.default_rng(0).random((4, 2, 3, 3)), layer, training=False)
        assert np.array_equal(layer.stats["running_mean"], before[0])
        assert np.array_equal(layer.stats["running_var"], before[1])

    def test_train_mode_updates_running_stats(self):
        layer = BatchNorm(2, dtype=np.float64)
        x = np.random.default_rng(1).random((4, 2, 3, 3)) + 5.0
        batchnorm_forward(x, layer, training=True)
        batch_mean = x.mean(axis=(0, 2, 3))
        assert np.allclose(layer.stats["running_mean"], 0.9 * 0.0 + 0.1 * batch_mean)

    def test_empty_batch(self):
        layer = BatchNorm(2)
        with pytest.raises(ShapeError):
            batchnorm_forward(np.zeros((0, 2, 3, 3), np.float32), layer, training=True)


class TestPReLU:
    def test_positive_passthrough(self):
        layer = PReLU(2, dtype=np.float64)
        x = np.abs(np.random.default_rng(6).random((1, 2, 3, 3)))
        assert np.array_equal(prelu(x, layer), x)

    def test_negative_scaled(self):
        layer = PReLU(1, dtype=np.float64)
        x = np.array([[-2.0]])
        assert prelu(x, layer)[0, 0] == pytest.approx(-0.5)

    def test_alpha_zero_is_relu(self):
        layer = PReLU(3, init=0.0, dtype=np.float64)
        x = np.random.default_rng(7).standard_normal((2, 3, 4, 4))
        assert np.array_equal(prelu(x, layer), np.maximum(x, 0))

    def test_channel_mismatch(self):
        layer = PReLU(3)
        with pytest.raises(ShapeError):
            prelu(np.zeros((1, 2, 4, 4), np.float32), layer)


class TestDropout:
    def test_infer_identity(self):
        layer = Dropout(0.1)
        x = np.random.default_rng(8).random((4, 10)).astype(np.float32)
        assert np.array_equal(dropout(x, layer, training=False), x)

    def test_rate_zero_identity(self):
        layer = Dropout(0.0)
        x = np.random.default_rng(9).random((4, 10))
        assert np.array_equal(dropout(x, layer, rng=np.random.default_rng(0), training=True), x)

    def test_empirical_drop_fraction(self):
        layer = Dropout(0.1)
        x = np.ones((1000, 1000))
        out = dropout(x, layer, rng=np.random.default_rng(10), training=True)
        frac = float((out == 0).mean())
        assert 0.099 <= frac <= 0.101

    def test_survivors_scaled(self):
        layer = Dropout(0.25)
        x = np.ones((100, 100))
        out = dropout(x, layer, rng=np.random.default_rng(11), training=True)
        kept = out[out != 0]
        assert np.allclose(kept, 1.0 / 0.75)

    def test_backward_reuses_mask(self):
        layer = Dropout(0.5)
        x = np.ones((20, 20))
        y = layer.forward(x, training=True, rng=np.random.default_rng(12))
        g = layer.backward(np.ones_like(x))
        assert np.array_equal(g != 0, y != 0)


class TestDense:
    def test_identity(self):
        layer = Dense(3, 3, dtype=np.float64)
        layer.params["weight"] = np.eye(3)
        x = np.array([1.0, 2.0, 3.0])
        assert np.array_equal(fc_forward(x, layer), x)

    def test_hand_matvec(self):
        layer = Dense(2, 2, dtype=np.float64)
        layer.params["weight"] = np.array([[1.0, 2.0], [3.0, 4.0]])
        layer.params["bias"] = np.array([0.1, 0.1])
        out = fc_forward(np.array([1.0, 1.0]), layer)
        assert np.allclose(out, [3.1, 7.1])

    def test_table_size(self):
        layer = Dense(2312, 512)
        out = fc_forward(np.zeros(2312, np.float32), layer)
        assert out.shape == (512,)

    def test_mismatch(self):
        with pytest.raises(ShapeError):
            fc_forward(np.zeros(5, np.float32), Dense(4, 2))


class TestSoftmaxCE:
    def test_symmetric_pair(self):
        assert np.allclose(softmax(np.array([0.0, 0.0])), [0.5, 0.5])

    def test_three_logits(self):
        out = softmax(np.array([1.0, 2.0, 3.0]))
        e = np.exp([1.0, 2.0, 3.0])
        assert np.allclose(out, e / e.sum(), atol=1e-12)
        assert np.allclose(out, [0.09003057, 0.24472847, 0.66524096], atol=1e-7)

    def test_constant_hundred(self):
        out = softmax(np.full(100, 3.7))
        assert np.allclose(out, 0.01, atol=1e-15)
        assert out.sum() == pytest.approx(1.0, abs=1e-12)

    def test_shift_invariance_bitwise_on_dyadic_logits(self):
        # dyadic inputs and shifts make the float arithmetic exact
        z = np.array([0.125, -2.5, 1.75, 0.0, 3.0])
        for c in (2.0, -8.0, 16.0):
            assert np.array_equal(softmax(z), softmax(z + c))

    def test_argmax_preserved(self):
        rng = np.random.default_rng(13)
        for _ in range(50):
            z = rng.standard_normal(10) * 5
            assert softmax(z).argmax() == z.argmax()

    def test_ce_perfect_prediction(self):
        y = np.zeros(4)
        y[2] = 1.0
        loss, _ = cross_entropy(y.copy(), y)
        assert loss == 0.0

    def test_ce_uniform_hundred(self):
        probs = np.full(100, 0.01)
        y = np.zeros(100)
        y[42] = 1.0
        loss, _ = cross_entropy(probs, y)
        assert loss == pytest.approx(math.log(100), abs=1e-12)

    def test_ce_rejects_non_onehot(self):
        with pytest.raises(InvalidLabel):
            cross_entropy(np.full(4, 0.25), np.array([0.5, 0.5, 0.0, 0.0]))

    def test_fused_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(14)
        z = rng.standard_normal(6)
        y = np.zeros(6)
        y[3] = 1.0
        _, grad = cross_entropy(softmax(z), y)

        def loss():
            l, _ = cross_entropy(softmax(z), y)
            return l

        fd = oracles.fd_gradient(loss, z)
        assert oracles.max_rel_error(grad, fd) < 1e-6


class TestHeInit:
    def test_fc_std(self):
        layer = Dense(2312, 512, dtype=np.float64)
        he_init(layer, np.random.default_rng(15))
        target = math.sqrt(2.0 / 2312)
        assert target == pytest.approx(0.02941, abs=5e-5)
        assert abs(layer.params["weight"].std() - target) / target < 0.02
        assert (layer.params["bias"] == 0.1).all()

    def test_conv_std_and_bias(self):
        layer = Conv2D(3, 64, dtype=np.float64)
        he_init(layer, np.random.default_rng(16))
        target = math.sqrt(2.0 / 27)
        assert target == pytest.approx(0.2722, abs=5e-5)
        assert abs(layer.params["kernels"].std() - target) / target < 0.02
        assert (layer.params["bias"] == 0.1).all()

    def test_prelu_and_bn_defaults(self):
        p = PReLU(5)
        he_init(p, np.random.default_rng(0))
        assert (p.params["alpha"] == 0.25).all()
        b = BatchNorm(4)
        he_init(b, np.random.default_rng(0))
        assert (b.params["gamma"] == 1).all() and (b.params["beta"] == 0).all()


class TestNetwork:
    def test_output_is_distribution(self):
        net = build_arc_network(rng=np.random.default_rng(17))
        x = np.random.default_rng(18).random((3, 150, 150)).astype(np.float32)
        out = net.forward(x)
        assert out.shape == (100,)
        assert out.sum() == pytest.approx(1.0, abs=1e-6)

    def test_batched_forward(self):
        net = build_arc_network(num_classes=10, rng=np.random.default_rng(19))
        x = np.random.default_rng(20).random((5, 3, 150, 150)).astype(np.float32)
        assert net.forward(x).shape == (5, 10)

    def test_parameter_count_fixed(self):
        net = build_arc_network(rng=np.random.default_rng(21))
        # conv1 224 + bn1 16 + prelu1 8 + conv2 584 + bn2 16 + prelu2 8
        # + fc1 1184256 + prelu 1 + fc2 131328 + prelu 1 + fc3 25700
        assert net.num_params() == 1342142
        assert build_arc_network(rng=np.random.default_rng(99)).num_params() == 1342142

    def test_infer_deterministic(self):
        net = build_arc_network(num_classes=7, rng=np.random.default_rng(22))
        x = np.random.default_rng(23).random((3, 150, 150)).astype(np.float32)
        a = net.forward(x)
        b = net.forward(x.copy())
        assert np.array_equal(a, b)

    def test_flatten_round_trip(self):
        layer = Flatten()
        x = np.random.default_rng(24).random((2, 3, 4, 5))
        y = layer.forward(x)
        assert y.shape == (2, 60)
        assert np.array_equal(layer.backward(y), x)

    def test_rejects_nonfinite_input(self):
        net = build_arc_network(num_classes=4, rng=np.random.default_rng(25))
        x = np.full((3, 150, 150), np.nan, np.float32)
        with pytest.raises(NumericalError):
            net.forward(x)


class TestCheckpoint:
    def _small_net(self):
        return build_arc_network(num_classes=5, rng=np.random.default_rng(26))

    def test_round_trip_is_byte_identical(self, tmp_path):
        net = self._small_net()
        p1 = tmp_path / "a.ckpt"
        p2 = tmp_path / "b.ckpt"
        checkpoint_from_network(net, epoch=3, seed=11, metrics={"val_acc": 0.875}).save(p1)
        Checkpoint.load(p1).save(p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_network_restores_forward(self, tmp_path):
        net = self._small_net()
        path = tmp_path / "m.ckpt"
        checkpoint_from_network(net).save(path)
        restored, meta = network_from_checkpoint(path)
        assert meta["num_classes"] == 5
        x = np.random.default_rng(27).random((3, 150, 150)).astype(np.float32)
        assert np.array_equal(net.eval().forward(x), restored.eval().forward(x))

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "junk.ckpt"
        path.write_bytes(b"garbage")
        with pytest.raises(ValueError):
            Checkpoint.load(path)
