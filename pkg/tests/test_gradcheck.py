"""Gradient-check harness behavior plus a fast sweep of the case suite.

The full 10-seed sweep runs in the acceptance module; here each case gets
3 seeds to keep the loop tight.
"""
import numpy as np
import pytest

from avscene.engine import ParamSet, Tensor, grad_check, ops
from avscene.gradsuite import CASES, TOLERANCE, run_case


def test_quadratic_reference():
    ps = ParamSet()
    ps.add("x", Tensor(np.array([1.0, 2.0, 3.0]), requires_grad=True))
    err = grad_check(lambda p: ops.sum_axes(ops.mul(p["x"], p["x"]), (0,)), ps)
    assert err < 1e-8
    # analytic gradient is 2x
    ps.zero_grad()
    loss = ops.sum_axes(ops.mul(ps["x"], ps["x"]), (0,))
    loss.backward()
    assert np.allclose(ps["x"].grad, [2.0, 4.0, 6.0])


def test_rejects_single_precision():
    ps = ParamSet()
    ps.add("x", Tensor(np.ones(3, dtype=np.float32), requires_grad=True))
    with pytest.raises(TypeError, match="float64"):
        grad_check(lambda p: ops.sum_axes(p["x"], (0,)), ps)


def test_rejects_nonfinite_objective():
    ps = ParamSet()
    ps.add("x", Tensor(np.array([1.0]), requires_grad=True))

    def f(p):
        return ops.scale(ops.sum_axes(p["x"], (0,)), float("inf"))

    with pytest.raises(FloatingPointError):
        grad_check(f, ps)


def test_rejects_nonscalar_objective():
    ps = ParamSet()
    ps.add("x", Tensor(np.ones(3), requires_grad=True))
    with pytest.raises(ValueError, match="scalar"):
        grad_check(lambda p: p["x"], ps)


@pytest.mark.parametrize("case", CASES, ids=lambda c: c.name)
def test_suite_case_three_seeds(case):
    result = run_case(case, n_seeds=3)
    assert result.max_error < TOLERANCE, (
        f"{case.name}: max rel err {result.max_error:.3e} at h={case.h}")
