"""Forward-pass oracles and contracts for the tensor primitives."""
import numpy as np
import pytest

from avscene.engine import ShapeError, Tensor, ops
from avscene.engine.init import rng_from_seed


def brute_force_conv2d(x, k, bias, padding="same"):
    """Nested-loop cross-correlation reference."""
    kh, kw, cin, cout = k.shape
    ph = (kh - 1) // 2 if padding == "same" else 0
    xp = np.pad(x, ((ph, ph), (ph, ph), (0, 0)))
    oh, ow = xp.shape[0] - kh + 1, xp.shape[1] - kw + 1
    out = np.zeros((oh, ow, cout))
    for i in range(oh):
        for j in range(ow):
            for o in range(cout):
                acc = bias[o]
                for di in range(kh):
                    for dj in range(kw):
                        for c in range(cin):
                            acc += xp[i + di, j + dj, c] * k[di, dj, c, o]
                out[i, j, o] = acc
    return out


class TestConv2d:
    def test_identity_kernel(self):
        x = Tensor(np.ones((3, 3, 1)))
        k = Tensor(np.ones((1, 1, 1, 1)))
        b = Tensor(np.zeros(1))
        out = ops.conv2d(x, k, b, "same")
        assert out.shape == (3, 3, 1)
        assert np.allclose(out.data, 1.0)

    def test_first_block_shape(self):
        rng = rng_from_seed(0)
        x = Tensor(rng.standard_normal((64, 50, 3)))
        k = Tensor(rng.standard_normal((3, 3, 3, 32)))
        b = Tensor(np.zeros(32))
        assert ops.conv2d(x, k, b, "same").shape == (64, 50, 32)

    def test_against_brute_force(self):
        rng = rng_from_seed(7)
        x = rng.standard_normal((5, 5, 2))
        k = rng.standard_normal((3, 3, 2, 4))
        b = rng.standard_normal(4)
        got = ops.conv2d(Tensor(x), Tensor(k), Tensor(b), "same").data
        want = brute_force_conv2d(x, k, b)
        assert np.max(np.abs(got - want)) / np.max(np.abs(want)) < 1e-10

    def test_valid_padding_shrinks(self):
        rng = rng_from_seed(3)
        x = Tensor(rng.standard_normal((6, 7, 2)))
        k = Tensor(rng.standard_normal((3, 3, 2, 1)))
        assert ops.conv2d(x, k, None, "valid").shape == (4, 5, 1)

    def test_channel_mismatch_names_axes(self):
        x = Tensor(np.zeros((4, 4, 5)))
        k = Tensor(np.zeros((3, 3, 2, 4)))
        with pytest.raises(ShapeError, match="axis -1 = 5"):
            ops.conv2d(x, k, None)

    def test_even_kernel_rejected(self):
        with pytest.raises(ShapeError, match="odd"):
            ops.conv2d(Tensor(np.zeros((4, 4, 1))),
                       Tensor(np.zeros((2, 2, 1, 1))), None)

    def test_batched_matches_stacked_single(self):
        rng = rng_from_seed(11)
        xs = rng.standard_normal((3, 5, 6, 2)).astype(np.float32)
        k = Tensor(rng.standard_normal((3, 3, 2, 4)).astype(np.float32))
        b = Tensor(rng.standard_normal(4).astype(np.float32))
        batched = ops.conv2d(Tensor(xs), k, b).data
        singles = np.stack([ops.conv2d(Tensor(x), k, b).data for x in xs])
        assert np.allclose(batched, singles, atol=1e-6)


class TestSoftmaxLoss:
    def test_softmax_of_zeros_is_uniform(self):
        out = ops.softmax(Tensor(np.zeros(10)))
        assert np.allclose(out.data, 0.1)

    def test_rows_sum_to_one_and_positive(self, rng):
        x = Tensor(rng.standard_normal((20, 10)) * 8)
        out = ops.softmax(x).data
        assert np.allclose(out.sum(axis=1), 1.0, atol=1e-6)
        assert np.all(out > 0)

    def test_cross_entropy_uniform_vs_onehot(self):
        probs = Tensor(np.full((1, 10), 0.1))
        target = Tensor(np.eye(10)[[3]])
        loss = ops.cross_entropy(probs, target)
        assert abs(loss.item() - np.log(10)) < 1e-9

    def test_cross_entropy_shape_mismatch(self):
        with pytest.raises(ShapeError):
            ops.cross_entropy(Tensor(np.full((2, 10), 0.1)),
                              Tensor(np.eye(10)[[1]]))


class TestPooling:
    def test_max_pool_time_axis_only(self, rng):
        x = Tensor(rng.standard_normal((64, 50, 8)))
        out = ops.max_pool(x, (1, 2))
        assert out.shape == (64, 25, 8)

    def test_max_pool_floor_on_odd_length(self, rng):
        x = Tensor(rng.standard_normal((4, 7, 2)))
        assert ops.max_pool(x, (1, 2)).shape == (4, 3, 2)

    def test_pool_preserves_untouched_axes(self, rng):
        x = rng.standard_normal((2, 8, 10, 3))
        out = ops.avg_pool(Tensor(x), (1, 2)).data
        # frequency rows must be untouched: pooled value comes only from
        # columns 2j, 2j+1 of the same row
        want = 0.5 * (x[:, :, 0::2, :] + x[:, :, 1::2, :])
        assert np.allclose(out, want)

    def test_global_avg_pool(self, rng):
        x = rng.standard_normal((3, 4, 5, 6))
        out = ops.global_avg_pool(Tensor(x), (1, 2)).data
        assert out.shape == (3, 6)
        assert np.allclose(out, x.mean(axis=(1, 2)))

    def test_adaptive_pool_bins(self):
        x = np.arange(12, dtype=np.float64).reshape(12, 1)
        out = ops.adaptive_avg_pool_to(Tensor(x), 5, axis=0).data
        bounds = [0, 2, 4, 7, 9, 12]
        want = [x[a:b].mean() for a, b in zip(bounds[:-1], bounds[1:])]
        assert np.allclose(out[:, 0], want)

    def test_adaptive_pool_too_short(self):
        with pytest.raises(ShapeError):
            ops.adaptive_avg_pool_to(Tensor(np.zeros((3, 1))), 5, axis=0)


class TestDropout:
    def test_inference_is_identity(self, rng):
        x = Tensor(rng.standard_normal((10, 10)).astype(np.float32))
        out = ops.dropout(x, 0.5, None, training=False)
        assert out is x

    def test_rate_validation(self):
        with pytest.raises(ValueError):
            ops.dropout(Tensor(np.zeros(3)), 1.0, rng_from_seed(0), True)

    def test_zero_fraction_and_scaling(self):
        rng = rng_from_seed(99)
        rate = 0.3
        x = Tensor(np.ones(10_000, dtype=np.float32))
        out = ops.dropout(x, rate, rng, training=True).data
        zeros = (out == 0).sum()
        # binomial 99.99% bounds around rate * n
        sd = np.sqrt(10_000 * rate * (1 - rate))
        assert abs(zeros - 10_000 * rate) < 4 * sd
        survivors = out[out != 0]
        assert np.allclose(survivors, 1 / (1 - rate), atol=1e-6)
        # expectation preserved
        assert abs(out.mean() - 1.0) < 4 * sd / 10_000 / (1 - rate) + 0.02


class TestBatchNorm:
    def _bn_params(self, c, dtype=np.float64):
        g = Tensor(np.ones(c, dtype=dtype), requires_grad=True)
        b = Tensor(np.zeros(c, dtype=dtype), requires_grad=True)
        mm = Tensor(np.zeros(c, dtype=dtype))
        mv = Tensor(np.ones(c, dtype=dtype))
        return g, b, mm, mv

    def test_train_normalizes(self, rng):
        x = rng.standard_normal((8, 5, 6, 3)) * 4 + 2
        g, b, mm, mv = self._bn_params(3)
        out = ops.batch_norm(Tensor(x), g, b, mm, mv, training=True).data
        assert np.allclose(out.mean(axis=(0, 1, 2)), 0, atol=1e-10)
        assert np.allclose(out.var(axis=(0, 1, 2)), 1, atol=1e-2)

    def test_inference_is_deterministic_affine(self, rng):
        x = rng.standard_normal((4, 5, 6, 3))
        g, b, mm, mv = self._bn_params(3)
        mm.data = rng.standard_normal(3)
        mv.data = rng.random(3) + 0.5
        out1 = ops.batch_norm(Tensor(x), g, b, mm, mv, training=False).data
        out2 = ops.batch_norm(Tensor(x), g, b, mm, mv, training=False).data
        assert np.array_equal(out1, out2)
        # affine in x: f(2x) - f(0) == 2 (f(x) - f(0))
        f0 = ops.batch_norm(Tensor(np.zeros_like(x)), g, b, mm, mv, False).data
        f2 = ops.batch_norm(Tensor(2 * x), g, b, mm, mv, False).data
        assert np.allclose(f2 - f0, 2 * (out1 - f0), atol=1e-9)

    def test_running_update_order_independent(self, rng):
        x = rng.standard_normal((16, 3, 3, 2))
        for perm_seed in (0, 1):
            g, b, mm, mv = self._bn_params(2)
            order = rng_from_seed(perm_seed).permutation(16)
            ops.batch_norm(Tensor(x[order]), g, b, mm, mv, training=True)
            if perm_seed == 0:
                first = (mm.data.copy(), mv.data.copy())
        assert np.allclose(first[0], mm.data) and np.allclose(first[1], mv.data)


class TestElementwise:
    def test_maximum_forward(self, rng):
        a, b = rng.standard_normal((4, 4)), rng.standard_normal((4, 4))
        out = ops.maximum(Tensor(a), Tensor(b)).data
        assert np.array_equal(out, np.maximum(a, b))

    def test_concat_empty_rejected(self):
        with pytest.raises(ShapeError):
            ops.concat([], axis=0)

    def test_concat_narrow_roundtrip(self, rng):
        a = rng.standard_normal((3, 4))
        b = rng.standard_normal((3, 2))
        cat = ops.concat([Tensor(a), Tensor(b)], axis=1)
        assert np.array_equal(ops.narrow(cat, 1, 4, 2).data, b)

    def test_elu_matches_definition(self, rng):
        x = rng.standard_normal(100)
        out = ops.elu(Tensor(x)).data
        want = np.where(x < 0, np.exp(x) - 1, x)
        assert np.allclose(out, want, atol=1e-12)


class TestTensorInvariants:
    def test_data_row_major_and_size(self, rng):
        t = Tensor(rng.standard_normal((3, 4, 5)))
        assert t.data.flags["C_CONTIGUOUS"]
        assert t.size == 60 and np.prod(t.shape) == t.size

    def test_finite_after_forward_backward(self, rng):
        x = Tensor(rng.standard_normal((4, 6)).astype(np.float64), requires_grad=True)
        w = Tensor(rng.standard_normal((6, 3)), requires_grad=True)
        out = ops.softmax(ops.matmul(ops.tanh(x), w))
        loss = ops.cross_entropy(out, Tensor(np.eye(3)[[0, 1, 2, 0]]))
        loss.backward()
        loss.assert_finite("loss")
        assert np.all(np.isfinite(x.grad)) and np.all(np.isfinite(w.grad))

    def test_grad_shape_matches_data(self, rng):
        x = Tensor(rng.standard_normal((5, 2)), requires_grad=True)
        ops.sum_axes(ops.mul(x, x), (0, 1)).backward()
        assert x.grad.shape == x.data.shape
