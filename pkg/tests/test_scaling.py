import math

import numpy as np
import pytest

from jointmf.errors import FitError
from jointmf.measures import Measure, gen_binomial
from jointmf.measures import BinomialSpec
from jointmf.oracle import alpha_analytic, tau_xy_analytic, tau_y_analytic
from jointmf.partition import (
    MomentGrid,
    PartitionTable,
    ScaleSet,
    integrate_boxes,
    joint_partition,
    uni_partition,
)
from jointmf.scaling import direct_estimates, fit_line, fit_lines, fit_tau, tau_individual, uni_direct

TAU_22 = 0.8889687  # evaluated independently with mpmath, see test_oracle


def test_exact_power_law():
    s = np.array([2.0, 4.0, 8.0])
    r = fit_line(np.log(s), np.log(s**2))
    assert r.slope == pytest.approx(2.0, abs=1e-14)
    assert r.r_squared == 1.0
    assert r.n_points == 3
    assert r.stderr == pytest.approx(0.0, abs=1e-12)


def test_noisy_line_diagnostics(rng):
    x = np.linspace(0, 5, 50)
    y = 1.5 * x - 2 + rng.normal(0, 0.1, x.size)
    r = fit_line(x, y)
    ref = np.polyfit(x, y, 1)
    assert r.slope == pytest.approx(ref[0], rel=1e-12)
    assert r.intercept == pytest.approx(ref[1], rel=1e-12)
    resid = y - np.polyval(ref, x)
    assert r.r_squared == pytest.approx(1 - resid @ resid / np.sum((y - y.mean()) ** 2), rel=1e-12)
    assert 0 < r.r_squared < 1 and r.stderr > 0


def test_fit_needs_three_points():
    with pytest.raises(FitError):
        fit_line([0.0, 1.0], [0.0, 1.0])
    g = fit_lines(np.arange(4.0), np.array([[0.0, np.nan, np.nan, 3.0], [0.0, 1.0, 2.0, 3.0]]))
    assert math.isnan(g.slope[0]) and g.slope[1] == pytest.approx(1.0)


def test_fit_range_too_narrow(small_binomial_boxes):
    t = joint_partition(small_binomial_boxes, MomentGrid.symmetric(1, 1.0))
    with pytest.raises(FitError):
        fit_tau(t, (128, 256))


def test_undefined_cells_propagate():
    lc = np.log(np.array([[2.0, 4.0, 8.0], [1.0, np.nan, 1.0], [1.0, np.nan, np.nan]])).reshape(3, 1, 3)
    t = PartitionTable(lc, np.array([-1.0, 0.0, 1.0]), np.array([0.0]), ScaleSet((2, 4, 8)), np.zeros(3, int), 1.0)
    res = fit_tau(t)
    assert res.tau[0, 0] == pytest.approx(1.0)
    assert math.isnan(res.tau[1, 0]) and math.isnan(res.tau[2, 0])
    assert int(res.diagnostics.n_points[1, 0]) == 2


def test_binomial_tau_origin_and_22(binomial_boxes):
    g = MomentGrid.symmetric(2, 1.0)
    res = fit_tau(joint_partition(binomial_boxes, g))
    assert res.tau[g.index(0, 0)] == pytest.approx(-1.0, abs=1e-12)
    assert res.tau[g.index(2, 2)] == pytest.approx(TAU_22, abs=1e-6)


def test_binomial_r_squared(binomial_boxes):
    res = fit_tau(joint_partition(binomial_boxes, MomentGrid.symmetric(10, 0.5)))
    assert np.nanmin(res.diagnostics.r_squared) >= 1 - 1e-10
    assert np.all(res.diagnostics.n_points == len(binomial_boxes.scales))


def test_binomial_tau_matches_oracle(binomial_boxes, params):
    g = MomentGrid.symmetric(10, 1.0)
    res = fit_tau(joint_partition(binomial_boxes, g))
    P, Q = np.meshgrid(g.p_values, g.q_values, indexing="ij")
    assert np.max(np.abs(res.tau - tau_xy_analytic(params, P, Q))) <= 1e-6


def test_tau_monotone_and_concave(binomial_boxes):
    res = fit_tau(joint_partition(binomial_boxes, MomentGrid.symmetric(10, 0.5)))
    t = res.tau
    assert np.all(np.diff(t, axis=0) >= -1e-12)
    assert np.all(np.diff(t, axis=1) >= -1e-12)
    for second in (t[:-2] + t[2:] - 2 * t[1:-1], t[:, :-2] + t[:, 2:] - 2 * t[:, 1:-1],
                   t[:-2, :-2] + t[2:, 2:] - 2 * t[1:-1, 1:-1], t[:-2, 2:] + t[2:, :-2] - 2 * t[1:-1, 1:-1]):
        assert np.all(second <= 1e-10)


def test_tau_individual_examples():
    m = gen_binomial(BinomialSpec(0.4, 14))
    tau = tau_individual(m, [0.0, 1.0, 2.0])
    assert tau[0] == pytest.approx(-1.0, abs=1e-12)
    assert tau[1] == pytest.approx(0.0, abs=1e-12)
    assert tau[2] == pytest.approx(-math.log(0.52) / math.log(2), abs=1e-9)
    assert tau[2] == pytest.approx(0.9434165, abs=1e-6)


def test_tau_individual_is_diagonal_of_self_pair():
    m = gen_binomial(BinomialSpec(0.3, 12))
    q = np.linspace(-3, 3, 7)
    joint = fit_tau(joint_partition(integrate_boxes(m, m), MomentGrid(q, q, 1.0))).tau
    np.testing.assert_allclose(tau_individual(m, q), np.diag(joint), atol=1e-12)


def test_uni_fit_has_no_grid(small_binomial_boxes):
    res = fit_tau(uni_partition(small_binomial_boxes, [-1.0, 0.0, 1.0]))
    assert res.grid is None and res.tau.shape == (3,)


def test_direct_uniform_pair():
    u = Measure(np.full(2**10, 2.0**-10))
    d = direct_estimates(integrate_boxes(u, u), MomentGrid.symmetric(4, 1.0))
    for a in (d.alpha_x, d.alpha_y, d.f):
        np.testing.assert_allclose(a, 1.0, atol=1e-12)


def test_direct_alpha_y_matches_oracle(binomial_boxes, params):
    g = MomentGrid.symmetric(2, 1.0)
    d = direct_estimates(binomial_boxes, g)
    _, a_y = alpha_analytic(params, 2.0, 2.0)
    assert d.alpha_y[g.index(2, 2)] == pytest.approx(a_y, abs=1e-4)
    # the combined order of (2, 2) is beta + 1
    assert params.combined_order(2.0, 2.0) == pytest.approx(params.beta + 1)
    assert tau_xy_analytic(params, 0.0, 4.0) == pytest.approx(tau_y_analytic(params, 2.0), abs=1e-15)


def test_direct_matches_oracle_everywhere(binomial_boxes, params):
    g = MomentGrid.symmetric(10, 1.0)
    d = direct_estimates(binomial_boxes, g)
    P, Q = np.meshgrid(g.p_values, g.q_values, indexing="ij")
    a_x, a_y = alpha_analytic(params, P, Q)
    np.testing.assert_allclose(d.alpha_x, a_x, atol=1e-9)
    np.testing.assert_allclose(d.alpha_y, a_y, atol=1e-9)


def test_uni_direct_alpha_is_mean_of_joint_alphas(binomial_boxes):
    q = np.linspace(-5, 5, 11)
    uni = uni_direct(binomial_boxes, q)
    d = direct_estimates(binomial_boxes, MomentGrid(q, q, 1.0))
    idx = np.arange(q.size)
    np.testing.assert_allclose(uni.alpha, (d.alpha_x[idx, idx] + d.alpha_y[idx, idx]) / 2, atol=1e-12)
    np.testing.assert_allclose(uni.f, d.f[idx, idx], atol=1e-12)
    np.testing.assert_allclose(uni.tau, fit_tau(uni_partition(binomial_boxes, q)).tau, atol=1e-12)


def test_direct_window_respected(binomial_boxes):
    g = MomentGrid.symmetric(1, 1.0)
    d = direct_estimates(binomial_boxes, g, fit_range=(16, 1024))
    assert int(d.fits["f"].n_points[0, 0]) == 7
