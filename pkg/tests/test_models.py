"""Network modules: shapes, parameter budgets, degenerate-weight traces."""
import numpy as np
import pytest

from avscene.engine import ShapeError, Tensor, count_params, rng_from_seed
from avscene.engine.params import ParamSet
from avscene.models import (AudioNet, AudioNetConfig, BiGRU, Dense, GRU,
                            SpatialChannelSE, TinyBackbone, VGG16Backbone,
                            VisualNet)
from avscene.models.visual_net import normalize_frames

AUDIO_TRAINABLE_EXACT = 322_269  # layer-by-layer oracle, frozen in test below


def audio_param_oracle(filters=(32, 64, 128), r=2, n_classes=10) -> int:
    """Independent arithmetic count of the audio net's trainable scalars."""
    total = 0
    c_in = 3
    for c in filters:
        total += 9 * c_in * c + c          # conv1 + bias
        total += 2 * c                     # bn1 gamma/beta
        total += 9 * c * c + c             # conv2 + bias
        total += 2 * c                     # bn2
        if c_in != c:
            total += c_in * c + c + 2 * c  # 1x1 projection + bn
        total += c * (c // r) + c // r     # cSE squeeze
        total += (c // r) * c + c          # cSE expand
        total += c + 1                     # sSE 1x1 conv
        c_in = c
    total += filters[-1] * n_classes + n_classes
    return total


class TestParameterBudgets:
    def test_audio_oracle_matches_build(self):
        assert audio_param_oracle() == AUDIO_TRAINABLE_EXACT
        net = AudioNet()
        assert net.count(trainable_only=True) == AUDIO_TRAINABLE_EXACT

    def test_audio_within_published_budget(self):
        trainable = AudioNet().count(trainable_only=True)
        assert 316_540 <= trainable <= 329_460  # 323k +- 2%

    def test_visual_trainable_exact(self):
        backbone = TinyBackbone(seed=0)
        backbone.freeze()
        net = VisualNet(backbone)
        # 2 directions * 3 gates * (512*32 + 32*32 + 2*32) + (64*10 + 10)
        want = 2 * 3 * (512 * 32 + 32 * 32 + 2 * 32) + (64 * 10 + 10)
        assert want == 105_482
        assert net.count(trainable_only=True) == 105_482

    def test_tiny_backbone_documented_budget(self):
        from avscene.models.visual_net import TINY_BACKBONE_PARAMS
        counts = {TinyBackbone(seed=s).count() for s in range(3)}
        assert counts == {TINY_BACKBONE_PARAMS}

    def test_vgg16_budget_and_frozen(self):
        from avscene.models.visual_net import VGG16_BACKBONE_PARAMS
        bb = VGG16Backbone()
        assert bb.count() == VGG16_BACKBONE_PARAMS == 14_714_688
        assert bb.count(trainable_only=True) == 0

    def test_count_params_trivial(self):
        assert count_params(ParamSet()) == 0
        dense = Dense(128, 10, rng_from_seed(0))
        assert dense.count() == 1290


class TestAudioNet:
    def test_forward_shapes_one_second(self, rng):
        net = AudioNet()
        out = net.forward(Tensor(rng.standard_normal((64, 50, 3)).astype(np.float32)))
        assert out.feature_maps.shape == (64, 12, 128)  # 50 -> 25 -> 12
        assert out.probs.shape == (10,)
        assert abs(out.probs.data.sum() - 1.0) < 1e-6

    def test_frequency_axis_preserved(self, rng):
        net = AudioNet()
        out = net.forward(Tensor(rng.standard_normal((2, 64, 48, 3)).astype(np.float32)))
        assert out.feature_maps.shape[1] == 64

    def test_infer_mode_deterministic(self, rng):
        net = AudioNet()
        x = Tensor(rng.standard_normal((64, 50, 3)).astype(np.float32))
        p1 = net.forward(x, training=False).probs.data
        p2 = net.forward(x, training=False).probs.data
        assert p1.tobytes() == p2.tobytes()

    def test_wrong_band_count_rejected(self, rng):
        net = AudioNet()
        with pytest.raises(ShapeError, match="bands"):
            net.forward(Tensor(np.zeros((32, 50, 3), dtype=np.float32)))
        with pytest.raises(ShapeError, match="channels"):
            net.forward(Tensor(np.zeros((64, 50, 2), dtype=np.float32)))

    def test_config_validation(self):
        with pytest.raises(ValueError, match="128"):
            AudioNetConfig(block_filters=(32, 64, 64))
        with pytest.raises(ValueError, match="dropout"):
            AudioNetConfig(dropout_rate=1.0)

    def test_learnability_smoke(self, rng):
        # 64-example synthetic batch: loss halves within 200 Adam steps
        from avscene.engine import Adam
        from avscene.engine.ops import cross_entropy
        net = AudioNet(AudioNetConfig(seed=3))
        opt = Adam(net.param_set())
        x = rng.standard_normal((64, 64, 50, 3)).astype(np.float32)
        labels = np.arange(64) % 10
        x += labels[:, None, None, None] * 0.3  # class-dependent offset
        y = Tensor(np.eye(10, dtype=np.float32)[labels])
        xt = Tensor(x)
        first = None
        drng = rng_from_seed(0)
        for step in range(200):
            opt.zero_grad()
            out = net.forward(xt, training=True, rng=drng)
            loss = cross_entropy(out.probs, y)
            loss.backward()
            opt.step()
            if first is None:
                first = loss.item()
            if loss.item() < 0.5 * first:
                break
        assert loss.item() < 0.5 * first


class TestSqueezeExcite:
    def test_zero_params_halve_input(self, rng):
        mod = SpatialChannelSE(8, rng_from_seed(0), reduction=2)
        for layer in (mod.squeeze, mod.expand):
            layer.kernel.data[:] = 0
            layer.bias.data[:] = 0
        mod.spatial.kernel.data[:] = 0
        mod.spatial.bias.data[:] = 0
        x = rng.standard_normal((4, 4, 8)).astype(np.float32)
        out = mod(Tensor(x)).data
        assert np.allclose(out, 0.5 * x, atol=1e-7)

    def test_output_bounded_by_input(self, rng):
        mod = SpatialChannelSE(8, rng_from_seed(1), reduction=2)
        x = rng.standard_normal((5, 6, 8)).astype(np.float32)
        out = mod(Tensor(x)).data
        assert np.all(np.abs(out) <= np.abs(x) + 1e-7)

    def test_matches_two_branch_oracle(self):
        rng = rng_from_seed(2)
        mod = SpatialChannelSE(8, rng, reduction=2, dtype=np.float64)
        x = rng_from_seed(3).standard_normal((4, 4, 8))
        got = mod(Tensor(x)).data

        def sigmoid(v):
            return 1.0 / (1.0 + np.exp(-v))

        pooled = x.mean(axis=(0, 1))
        hidden = np.maximum(pooled @ mod.squeeze.kernel.data + mod.squeeze.bias.data, 0)
        gate_c = sigmoid(hidden @ mod.expand.kernel.data + mod.expand.bias.data)
        gate_s = sigmoid(np.einsum("hwc,co->hwo", x, mod.spatial.kernel.data[0, 0])
                         + mod.spatial.bias.data)
        want = np.maximum(x * gate_c[None, None, :], x * gate_s)
        assert np.max(np.abs(got - want)) < 1e-10

    def test_reduction_must_divide(self):
        with pytest.raises(ShapeError):
            SpatialChannelSE(6, rng_from_seed(0), reduction=4)


class TestResidualBlock:
    def test_first_block_shape(self, rng):
        from avscene.models import ResidualSEBlock
        blk = ResidualSEBlock(3, 32, rng_from_seed(0))
        out = blk(Tensor(rng.standard_normal((64, 50, 3)).astype(np.float32)),
                  training=False)
        assert out.shape == (64, 50, 32)

    def test_zero_weights_trace(self, rng):
        from avscene.models import ResidualSEBlock
        blk = ResidualSEBlock(8, 8, rng_from_seed(0))  # identity shortcut
        for conv in (blk.conv1, blk.conv2):
            conv.kernel.data[:] = 0
            conv.bias.data[:] = 0
        for bn in (blk.bn1, blk.bn2):
            bn.gamma.data[:] = 0
            bn.beta.data[:] = 0
        for layer in (blk.scse.squeeze, blk.scse.expand, blk.scse.spatial):
            layer.kernel.data[:] = 0
            layer.bias.data[:] = 0
        x = rng.standard_normal((6, 5, 8)).astype(np.float32)
        out = blk(Tensor(x), training=False).data
        elu = np.where(x < 0, np.expm1(x), x)
        assert np.allclose(out, 0.5 * elu, atol=1e-6)


class TestGRU:
    def test_zero_parameters_zero_output(self, rng):
        gru = GRU(4, 3, rng_from_seed(0))
        for t in (gru.kernel, gru.recurrent_kernel, gru.input_bias,
                  gru.recurrent_bias):
            t.data[:] = 0
        out = gru(Tensor(rng.standard_normal((6, 4)).astype(np.float32)))
        assert np.allclose(out.data, 0.0)

    def test_hand_evaluated_single_step(self):
        gru = GRU(1, 1, rng_from_seed(0), dtype=np.float64)
        wz, wr, wh = 0.7, -0.3, 1.1
        gru.kernel.data = np.array([[wz, wr, wh]])
        gru.recurrent_kernel.data = np.array([[0.2, 0.4, -0.5]])
        gru.input_bias.data = np.array([0.05, -0.02, 0.1])
        gru.recurrent_bias.data = np.array([0.01, 0.03, -0.04])
        x = 0.6
        out = gru(Tensor(np.array([[x]])))

        def sig(v):
            return 1 / (1 + np.exp(-v))
        # h_prev = 0: recurrent projection is just its bias
        z = sig(wz * x + 0.05 + 0.01)
        r = sig(wr * x - 0.02 + 0.03)
        h_cand = np.tanh(wh * x + 0.1 + r * (-0.04))
        h = z * 0.0 + (1 - z) * h_cand
        assert abs(out.data[0, 0] - h) < 1e-12

    def test_bidirectional_concat_shape(self, rng):
        bigru = BiGRU(512, 32, rng_from_seed(1))
        out = bigru(Tensor(rng.standard_normal((5, 512)).astype(np.float32)))
        assert out.shape == (5, 64)

    def test_reverse_direction_sees_future(self, rng):
        gru = GRU(2, 3, rng_from_seed(2))
        x = rng.standard_normal((4, 2)).astype(np.float32)
        fwd = gru(Tensor(x)).data
        rev = gru(Tensor(x), reverse=True).data
        # forward step 0 depends only on x[0]; reverse step -1 only on x[-1]
        x2 = x.copy()
        x2[-1] += 1.0
        fwd2 = gru(Tensor(x2)).data
        rev2 = gru(Tensor(x2), reverse=True).data
        assert np.allclose(fwd[0], fwd2[0])
        assert not np.allclose(rev[0], rev2[0])


class TestVisualNet:
    def test_tiny_backbone_map_shape(self, rng):
        bb = TinyBackbone(seed=0)
        frames = Tensor(rng.random((2, 224, 224, 3)).astype(np.float32))
        out = bb.spatial_map(frames)
        assert out.shape == (2, 14, 14, 512)

    def test_vgg16_map_shape(self, rng):
        bb = VGG16Backbone()
        frames = Tensor(rng.random((1, 224, 224, 3)).astype(np.float32))
        assert bb.spatial_map(frames).shape == (1, 7, 7, 512)

    def test_backbone_forward_time_distributed(self, rng):
        bb = TinyBackbone(seed=1)
        net = VisualNet(bb)
        pix = rng.random((5, 224, 224, 3)).astype(np.float32)
        pix[3] = pix[1]  # duplicate frame
        feats = net.backbone_forward(normalize_frames(pix, "unit_range")).data
        assert feats.shape == (5, 512)
        assert np.allclose(feats[3], feats[1])  # no cross-frame state

    def test_zero_frame_zero_features(self):
        bb = TinyBackbone(seed=2)
        for conv in bb.convs:
            conv.bias.data[:] = 0
        net = VisualNet(bb)
        seq = normalize_frames(np.zeros((1, 224, 224, 3), dtype=np.uint8),
                               "unit_range")
        feats = net.backbone_forward(seq).data
        assert np.allclose(feats, 0.0)

    def test_probs_is_mean_of_step_probs(self, rng):
        net = VisualNet(TinyBackbone(seed=0))
        feats = Tensor(rng.standard_normal((5, 512)).astype(np.float32))
        out = net.head_forward(feats)
        assert out.step_probs.shape == (5, 10)
        assert np.allclose(out.probs.data, out.step_probs.data.mean(axis=0),
                           atol=1e-7)
        assert abs(out.probs.data.sum() - 1.0) < 1e-6

    def test_normalization_tag_enforced(self, rng):
        net = VisualNet(VGG16Backbone())
        seq = normalize_frames(rng.random((1, 224, 224, 3)).astype(np.float32),
                               "unit_range")
        with pytest.raises(ValueError, match="vgg16_places365"):
            net.backbone_forward(seq)

    def test_batch_order_invariance(self, rng):
        net = VisualNet(TinyBackbone(seed=3))
        feats = rng.standard_normal((4, 5, 512)).astype(np.float32)
        probs = net.head_forward(Tensor(feats)).probs.data
        perm = [2, 0, 3, 1]
        probs_perm = net.head_forward(Tensor(feats[perm])).probs.data
        assert np.allclose(probs[perm], probs_perm, atol=1e-6)


class TestTinyBackboneLearnability:
    def test_loss_halves_in_200_steps(self, rng):
        from avscene.engine import Adam
        from avscene.engine.ops import cross_entropy, dense, global_avg_pool, softmax
        from avscene.models.layers import Dense as DenseLayer
        bb = TinyBackbone(seed=4)
        head = DenseLayer(512, 4, rng_from_seed(5))
        params = bb.param_set("bb/").merged(head.param_set(), "head/")
        opt = Adam(params)
        labels = np.arange(8) % 4
        frames = rng.random((8, 224, 224, 3)).astype(np.float32) * 0.2
        for i, lab in enumerate(labels):
            frames[i, :, :, lab % 3] += 0.4 + 0.1 * lab
        y = Tensor(np.eye(4, dtype=np.float32)[labels])
        x = Tensor(frames)
        first = None
        for step in range(200):
            opt.zero_grad()
            feats = global_avg_pool(bb.spatial_map(x), (1, 2))
            loss = cross_entropy(softmax(head(feats)), y)
            loss.backward()
            opt.step()
            if first is None:
                first = loss.item()
            if loss.item() < 0.5 * first:
                break
        assert loss.item() < 0.5 * first
