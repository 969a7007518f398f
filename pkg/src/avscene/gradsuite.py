"""Named finite-difference verification cases.

Primitives run at h=1e-4; composite networks at h=1e-5 because ELU kinks
and elementwise-max ties inside a batch-normalized graph inflate central
differences at the larger step (every parameter perturbs the batch
statistics, so near-tie activations cross their kink inside the h
window). Everything runs in double precision.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .engine import ParamSet, Tensor, grad_check, ops
from .engine.init import rng_from_seed
from .models.blocks import ResidualSEBlock, SpatialChannelSE
from .models.fusion import audio_to_sequence
from .models.layers import BiGRU, Dense

TOLERANCE = 1e-4
H_PRIMITIVE = 1e-4
H_COMPOSITE = 1e-5


def _t(rng, shape, scale=1.0):
    return Tensor(rng.standard_normal(shape) * scale, requires_grad=True)


def _onehot(rng, n, k):
    return Tensor(np.eye(k)[rng.integers(0, k, n)])


def _quad_loss(y: Tensor) -> Tensor:
    return ops.sum_axes(ops.mul(y, y), tuple(range(y.ndim)))


# -- case builders: each returns (params, scalar function) -----------------

def _case_dense(rng):
    ps = ParamSet()
    ps.add("x", _t(rng, (3, 5)))
    ps.add("w", _t(rng, (5, 4), 0.5))
    ps.add("b", _t(rng, (4,), 0.2))
    return ps, lambda p: _quad_loss(ops.dense(p["x"], p["w"], p["b"]))


def _case_conv(rng):
    ps = ParamSet()
    ps.add("x", _t(rng, (2, 5, 6, 2)))
    ps.add("k", _t(rng, (3, 3, 2, 3), 0.4))
    ps.add("b", _t(rng, (3,), 0.2))
    return ps, lambda p: _quad_loss(ops.conv2d(p["x"], p["k"], p["b"], "same"))


def _case_conv_valid(rng):
    ps = ParamSet()
    ps.add("x", _t(rng, (5, 6, 2)))
    ps.add("k", _t(rng, (3, 3, 2, 3), 0.4))
    ps.add("b", _t(rng, (3,), 0.2))
    return ps, lambda p: _quad_loss(ops.conv2d(p["x"], p["k"], p["b"], "valid"))


def _case_activations(rng):
    ps = ParamSet()
    ps.add("x", _t(rng, (4, 7)))
    def f(p):
        y = ops.elu(p["x"])
        y = ops.tanh(y)
        y = ops.sigmoid(y)
        y = ops.relu(ops.add(y, Tensor(np.full((4, 7), -0.4))))
        return _quad_loss(y)
    return ps, f


def _case_softmax_ce(rng):
    ps = ParamSet()
    ps.add("x", _t(rng, (4, 10)))
    t = _onehot(rng, 4, 10)
    return ps, lambda p: ops.cross_entropy(ops.softmax(p["x"]), t)


def _case_max_pool(rng):
    ps = ParamSet()
    ps.add("x", _t(rng, (2, 6, 8, 3)))
    return ps, lambda p: _quad_loss(ops.max_pool(p["x"], (1, 2)))


def _case_avg_pool(rng):
    ps = ParamSet()
    ps.add("x", _t(rng, (2, 6, 8, 3)))
    return ps, lambda p: _quad_loss(ops.avg_pool(p["x"], (2, 2)))


def _case_global_pool(rng):
    ps = ParamSet()
    ps.add("x", _t(rng, (2, 6, 8, 3)))
    return ps, lambda p: _quad_loss(ops.global_avg_pool(p["x"], (1, 2)))


def _case_adaptive_pool(rng):
    ps = ParamSet()
    ps.add("x", _t(rng, (2, 13, 4)))
    return ps, lambda p: _quad_loss(ops.adaptive_avg_pool_to(p["x"], 5, axis=1))


def _case_concat_narrow(rng):
    ps = ParamSet()
    ps.add("a", _t(rng, (3, 4)))
    ps.add("b", _t(rng, (3, 2)))
    def f(p):
        y = ops.concat([p["a"], p["b"]], axis=1)
        y = ops.narrow(y, 1, 1, 4)
        return _quad_loss(y)
    return ps, f


def _case_elementwise(rng):
    ps = ParamSet()
    ps.add("a", _t(rng, (4, 5)))
    ps.add("b", _t(rng, (4, 5)))
    def f(p):
        y = ops.maximum(ops.mul(p["a"], p["b"]), ops.sub(p["a"], p["b"]))
        return _quad_loss(y)
    return ps, f


def _case_batch_norm_train(rng):
    ps = ParamSet()
    ps.add("x", _t(rng, (3, 4, 5, 6)))
    ps.add("g", Tensor(rng.uniform(0.5, 1.5, 6), requires_grad=True))
    ps.add("b", _t(rng, (6,), 0.3))
    mm, mv = Tensor(np.zeros(6)), Tensor(np.ones(6))
    def f(p):
        y = ops.batch_norm(p["x"], p["g"], p["b"], mm, mv, training=True)
        return _quad_loss(y)
    return ps, f


def _case_batch_norm_infer(rng):
    ps = ParamSet()
    ps.add("x", _t(rng, (3, 4, 5, 6)))
    ps.add("g", Tensor(rng.uniform(0.5, 1.5, 6), requires_grad=True))
    ps.add("b", _t(rng, (6,), 0.3))
    mm = Tensor(rng.standard_normal(6) * 0.2)
    mv = Tensor(rng.uniform(0.5, 2.0, 6))
    def f(p):
        y = ops.batch_norm(p["x"], p["g"], p["b"], mm, mv, training=False)
        return _quad_loss(y)
    return ps, f


def _case_dropout_mask(rng):
    # fixed mask: dropout's jacobian is the mask itself
    ps = ParamSet()
    ps.add("x", _t(rng, (4, 6)))
    mask_rng_state = rng.integers(0, 2**31)
    def f(p):
        mask_rng = rng_from_seed(int(mask_rng_state))
        y = ops.dropout(p["x"], 0.3, mask_rng, training=True)
        return _quad_loss(y)
    return ps, f


def _case_scse(rng):
    mod = SpatialChannelSE(4, rng, reduction=2, dtype=np.float64)
    x = Tensor(rng.standard_normal((2, 5, 6, 4)))
    ps = mod.param_set("scse/")
    return ps, lambda p: _quad_loss(mod(x))


def _case_gru(rng):
    gru = BiGRU(6, 4, rng, dtype=np.float64)
    head = Dense(8, 3, rng, dtype=np.float64)
    x = Tensor(rng.standard_normal((2, 5, 6)))
    t = _onehot(rng, 2, 3)
    ps = gru.param_set("gru/").merged(head.param_set(), "head/")
    def f(p):
        pooled = ops.mean_axes(gru(x), (1,))
        return ops.cross_entropy(ops.softmax(head(pooled)), t)
    return ps, f


def _case_block(rng):
    blk = ResidualSEBlock(3, 4, rng, scse_reduction=2, dtype=np.float64)
    head = Dense(4, 3, rng, dtype=np.float64)
    x = Tensor(rng.standard_normal((2, 8, 10, 3)))
    t = _onehot(rng, 2, 3)
    ps = blk.param_set("blk/").merged(head.param_set(), "head/")
    ps = ps.subset(lambda path: "moving" not in path)
    def f(p):
        y = blk(x, training=True)
        pooled = ops.mean_axes(y, (1, 2))
        return ops.cross_entropy(ops.softmax(head(pooled)), t)
    return ps, f


def _case_fusion_stage(rng):
    # frozen feature extractors replaced by fixed random maps; the audio
    # map is trainable so the frequency/time pooling backward is exercised
    gru = BiGRU(16, 4, rng, dtype=np.float64)
    early_head = Dense(8, 3, rng, dtype=np.float64)
    late_head = Dense(9, 3, rng, dtype=np.float64)
    visual_seq = Tensor(rng.standard_normal((2, 5, 8)))
    p_audio = Tensor(np.full((2, 3), 1.0 / 3))
    p_visual = Tensor(np.full((2, 3), 1.0 / 3))
    t = _onehot(rng, 2, 3)
    ps = gru.param_set("gru/").merged(early_head.param_set(), "early/")
    ps = ps.merged(late_head.param_set(), "late/")
    ps.add("audio_maps", _t(rng, (2, 6, 11, 8)))
    def f(p):
        audio_seq = audio_to_sequence(p["audio_maps"], 5)
        fused = ops.concat([visual_seq, audio_seq], axis=-1)
        pooled = ops.mean_axes(gru(fused), (1,))
        p_early = ops.softmax(early_head(pooled))
        p_late = ops.softmax(late_head(ops.concat([p_audio, p_visual, p_early],
                                                  axis=-1)))
        return ops.add(ops.cross_entropy(p_early, t), ops.cross_entropy(p_late, t))
    return ps, f


@dataclass
class GradCase:
    name: str
    build: Callable
    h: float = H_PRIMITIVE


CASES = [
    GradCase("dense", _case_dense),
    GradCase("conv2d_same", _case_conv),
    GradCase("conv2d_valid", _case_conv_valid),
    GradCase("activations", _case_activations),
    GradCase("softmax_cross_entropy", _case_softmax_ce),
    GradCase("max_pool", _case_max_pool),
    GradCase("avg_pool", _case_avg_pool),
    GradCase("global_avg_pool", _case_global_pool),
    GradCase("adaptive_avg_pool", _case_adaptive_pool),
    GradCase("concat_narrow", _case_concat_narrow),
    GradCase("elementwise_max_mul", _case_elementwise),
    GradCase("batch_norm_train", _case_batch_norm_train),
    GradCase("batch_norm_infer", _case_batch_norm_infer),
    GradCase("dropout_fixed_mask", _case_dropout_mask),
    GradCase("squeeze_excite", _case_scse),
    GradCase("bigru_head", _case_gru, H_COMPOSITE),
    GradCase("residual_se_block", _case_block, H_COMPOSITE),
    GradCase("fusion_stage", _case_fusion_stage, H_COMPOSITE),
]


@dataclass
class GradResult:
    name: str
    max_error: float
    h: float
    seeds: int
    seconds: float

    @property
    def passed(self) -> bool:
        return self.max_error < TOLERANCE


def run_case(case: GradCase, n_seeds: int = 10, seed_base: int = 100) -> GradResult:
    worst = 0.0
    t0 = time.perf_counter()
    for s in range(n_seeds):
        rng = rng_from_seed(seed_base + s)
        params, f = case.build(rng)
        worst = max(worst, grad_check(f, params, h=case.h))
    return GradResult(case.name, worst, case.h, n_seeds,
                      time.perf_counter() - t0)


def run_suite(n_seeds: int = 10, names: list[str] | None = None) -> list[GradResult]:
    chosen = [c for c in CASES if names is None or c.name in names]
    return [run_case(c, n_seeds) for c in chosen]
