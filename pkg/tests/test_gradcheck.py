import math

import numpy as np
import pytest

from focalmargin.errors import ParameterError
from focalmargin.gradcheck import (
    central_difference,
    check,
    clamp_skip_mask,
    compare_gradients,
    finite_diff_grad,
    random_instance,
)
from focalmargin.losses import LossKind, LossParams, bce, loss_value_and_grad


def test_bce_single_pixel_half():
    g = finite_diff_grad(LossKind.BCE, [[0.0]], [[1.0]])
    assert g[0, 0] == pytest.approx(-0.5, abs=1e-8)


def test_harness_calibration_sum():
    z = np.arange(6.0).reshape(2, 3)
    g = central_difference(lambda zb: zb.sum(axis=(-2, -1)), z)
    np.testing.assert_allclose(g, np.ones_like(z), rtol=1e-10)


def test_step_must_be_positive():
    with pytest.raises(ParameterError):
        central_difference(lambda zb: zb.sum(axis=(-2, -1)), [[0.0]], h=0.0)


def test_ours_random_4x4():
    rng = np.random.default_rng(7)
    z, t = rng.uniform(-4, 4, (4, 4)), (rng.random((4, 4)) < 0.3).astype(float)
    a = loss_value_and_grad(LossKind.OURS, z, t).grad_logits
    n = finite_diff_grad(LossKind.OURS, z, t)
    rel, _, _ = compare_gradients(a, n, 1e-5, 1e-8)
    assert rel.max() < 1e-5


def test_central_difference_error_is_second_order():
    z = np.array([[0.7, -1.3], [2.1, 0.2]])
    t = np.array([[1.0, 0.0], [0.0, 1.0]])
    exact = bce(z, t).grad_logits
    e1 = np.abs(finite_diff_grad(LossKind.BCE, z, t, h=1e-2) - exact).max()
    e2 = np.abs(finite_diff_grad(LossKind.BCE, z, t, h=5e-3) - exact).max()
    assert 3.5 < e1 / e2 < 4.5


def test_skip_mask_uses_margin_shift():
    p = LossParams(margin=2.0)
    z = np.array([[17.0, -15.0, -15.0, 0.0]])
    t = np.array([[0.0, 0.0, 1.0, 0.0]])
    # sigmoid(17) is within 2*eps of 1; sigmoid(-15) is not within 2*eps of 0,
    # but on the foreground the margin pushes it to sigmoid(-17), which is
    assert clamp_skip_mask(z, t, p).tolist() == [[True, False, True, False]]


def test_compare_gradients_rule():
    a = np.array([[1.0, 1e-9, 5.0]])
    n = np.array([[1.0 + 1e-6, 2e-9, 6.0]])
    rel, ab, score = compare_gradients(a, n, 1e-5, 1e-8)
    assert (score < 1).tolist() == [[True, True, False]]


def test_report_is_deterministic():
    a = check(LossKind.ASYM_FOCAL_MARGIN, trials=5, seed=3)
    b = check(LossKind.ASYM_FOCAL_MARGIN, trials=5, seed=3)
    assert a == b
    assert a.checked + a.skipped == 5 * 64


def test_infinite_abs_tol_passes_trivially():
    r = check(LossKind.BCE, trials=2, rel_tol=0.0, abs_tol=math.inf)
    assert r.passed
    assert r.to_dict()["abs_tol"] is None


def test_tight_tolerance_fails():
    r = check(LossKind.OURS, trials=3, rel_tol=1e-14, abs_tol=1e-20)
    assert not r.passed
    d = r.to_dict()
    assert d["pass"] is False
    assert len(d["worst_index"]) == 2


def test_trials_must_be_positive():
    with pytest.raises(ParameterError):
        check(LossKind.BCE, trials=0)


def test_random_instance_ranges():
    rng = np.random.default_rng(0)
    for _ in range(20):
        z, t = random_instance(rng, (8, 8))
        assert z.min() >= -4 and z.max() <= 4
        assert set(np.unique(t)) <= {0.0, 1.0}


@pytest.mark.parametrize("kind", list(LossKind))
def test_every_kind_custom_params(kind):
    # non-default parameters, including a lambda-weighted compound and a margin
    p = LossParams(gamma_hat=1.3, delta=0.55, gamma_tv=0.6, margin=0.9, lam=0.35)
    assert check(kind, trials=10, shape=(5, 5), seed=11, params=p).passed
