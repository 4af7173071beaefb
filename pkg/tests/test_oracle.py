import math

import mpmath as mp
import numpy as np
import pytest

from jointmf.errors import DomainError, ParameterError, SingularParameterError
from jointmf.measures import gen_binomial_pair
from jointmf.oracle import (
    alpha_analytic,
    alpha_x_closed_form,
    alpha_y_of_Q,
    f_analytic,
    make_params,
    oracle_surfaces,
    q_from_alpha_y,
    relation_suite,
    tau_xy_analytic,
    tau_y_analytic,
)
from jointmf.partition import MomentGrid

mp.mp.dps = 40


def _mp_params(px, py):
    px, py = mp.mpf(px), mp.mpf(py)
    beta = (mp.log(px) - mp.log(1 - px)) / (mp.log(py) - mp.log(1 - py))
    gamma = beta * mp.log(1 - py) - mp.log(1 - px)
    return beta, gamma


def _mp_tau_xy(px, py, p, q):
    px, py = mp.mpf(px), mp.mpf(py)
    # one refinement step: the two halves carry (px, py) and (1-px, 1-py)
    s = px ** (mp.mpf(p) / 2) * py ** (mp.mpf(q) / 2) + (1 - px) ** (mp.mpf(p) / 2) * (1 - py) ** (mp.mpf(q) / 2)
    return -mp.log(s) / mp.log(2)


def test_params_against_high_precision():
    p = make_params(0.3, 0.4)
    beta, gamma = _mp_params("0.3", "0.4")
    assert p.beta == pytest.approx(float(beta), rel=1e-14)
    assert p.gamma == pytest.approx(float(gamma), rel=1e-14)
    assert p.beta == pytest.approx(2.0896936, abs=1e-7)
    assert p.gamma == pytest.approx(-0.7107941, abs=1e-7)


def test_params_special_cases():
    p = make_params(0.2, 0.2)
    assert p.beta == pytest.approx(1.0, abs=1e-15) and p.gamma == pytest.approx(0.0, abs=1e-15)
    assert make_params(0.3, 0.7).beta == pytest.approx(-1.0, abs=1e-15)


@pytest.mark.parametrize("px,py", [(0.3, 0.5), (0.0, 0.4), (0.3, 1.0), (1.2, 0.4)])
def test_params_rejected(px, py):
    with pytest.raises(ParameterError):
        make_params(px, py)


def test_half_is_singular():
    with pytest.raises(SingularParameterError):
        make_params(0.3, 0.5)


def test_tau_y_examples(params):
    assert tau_y_analytic(params, 0.0) == -1.0
    assert tau_y_analytic(params, 1.0) == pytest.approx(0.0, abs=1e-16)
    assert tau_y_analytic(params, 2.0) == pytest.approx(-math.log(0.52) / math.log(2), rel=1e-15)


def test_tau_xy_examples(params):
    assert tau_xy_analytic(params, 0.0, 0.0) == -1.0
    ref = _mp_tau_xy("0.3", "0.4", 2, 2)
    assert tau_xy_analytic(params, 2.0, 2.0) == pytest.approx(float(ref), abs=1e-13)
    assert float(ref) == pytest.approx(0.8889687, abs=1e-7)
    q = np.linspace(-10, 10, 21)
    np.testing.assert_allclose(tau_xy_analytic(params, 0 * q, q), tau_y_analytic(params, q / 2), atol=1e-15)


def test_tau_xy_matches_cell_sum_on_grid(params):
    for p in (-10, -3.5, 0, 4, 10):
        for q in (-10, -1, 0.5, 7, 10):
            ref = _mp_tau_xy("0.3", "0.4", p, q)
            assert tau_xy_analytic(params, p, q) == pytest.approx(float(ref), abs=1e-12)


def test_alpha_limits(params):
    assert alpha_y_of_Q(params, 1e4) == pytest.approx(-math.log2(0.6), abs=1e-12)
    assert alpha_y_of_Q(params, -1e4) == pytest.approx(-math.log2(0.4), abs=1e-12)
    assert params.alpha_y_min == pytest.approx(0.7369656, abs=1e-7)
    assert params.alpha_y_max == pytest.approx(1.3219281, abs=1e-7)
    assert params.alpha_y_width == pytest.approx(0.5849625, abs=1e-7)


def test_alpha_y_value_and_numeric_derivative(params):
    assert alpha_y_of_Q(params, 2.0) == pytest.approx(0.9169541, abs=1e-7)
    # alpha_y = -d tau_y / dQ * ... checked with a high-precision derivative
    py = mp.mpf("0.4")
    tau = lambda Q: -mp.log(py**Q + (1 - py) ** Q) / mp.log(2)
    assert alpha_y_of_Q(params, 2.0) == pytest.approx(float(mp.diff(tau, 2)), abs=1e-12)


def test_alpha_forms_agree(params):
    Q = np.linspace(-50, 50, 1001)
    p = 2 * (Q - 0.3) / params.beta
    q = np.full_like(Q, 0.6)
    a_x, _ = alpha_analytic(params, p, q)
    np.testing.assert_allclose(a_x, alpha_x_closed_form(params, p, q), atol=1e-12)


def test_alpha_x_is_twice_partial_derivative(params):
    px, py = mp.mpf("0.3"), mp.mpf("0.4")
    tau = lambda p: -mp.log(px ** (p / 2) * py ** mp.mpf("0.5") + (1 - px) ** (p / 2) * (1 - py) ** mp.mpf("0.5")) / mp.log(2)
    a_x, a_y = alpha_analytic(params, 1.5, 1.0)
    assert a_x == pytest.approx(float(2 * mp.diff(tau, mp.mpf("1.5"))), abs=1e-12)
    tau_q = lambda q: -mp.log(px ** mp.mpf("0.75") * py ** (q / 2) + (1 - px) ** mp.mpf("0.75") * (1 - py) ** (q / 2)) / mp.log(2)
    assert a_y == pytest.approx(float(2 * mp.diff(tau_q, 1)), abs=1e-12)


def test_f_examples(params):
    assert f_analytic(params, 0.0) == 1.0
    assert f_analytic(params, 3.0) == f_analytic(params, -3.0)
    assert f_analytic(params, 3.0) == pytest.approx(0.7755127, abs=1e-7)
    assert f_analytic(params, 50.0) < 1e-3
    assert f_analytic(params, -50.0) < 1e-3


def test_f_is_legendre_of_tau(params):
    Q = np.linspace(-20, 20, 81)
    f = Q * alpha_y_of_Q(params, Q) - tau_y_analytic(params, Q)
    np.testing.assert_allclose(f_analytic(params, Q), f, atol=1e-12)


def test_f_symmetry_exact(params):
    Q = np.linspace(0, 60, 601)
    np.testing.assert_array_equal(f_analytic(params, Q), f_analytic(params, -Q))


def test_large_orders_stay_finite(params):
    Q = np.array([-5000.0, -800.0, 800.0, 5000.0])
    tau = tau_y_analytic(params, Q)
    assert np.all(np.isfinite(tau))
    assert tau[-1] == pytest.approx(-5000 * math.log2(0.6), rel=1e-14)
    assert tau[0] == pytest.approx(5000 * math.log2(0.4), rel=1e-14)
    assert np.all(np.isfinite(alpha_y_of_Q(params, Q)))
    assert np.all(np.isfinite(f_analytic(params, Q)))
    assert np.isfinite(tau_xy_analytic(params, 1000.0, -1000.0))


def test_inverse_round_trip(params):
    a = alpha_y_of_Q(params, 2.0)
    assert q_from_alpha_y(params, a) == pytest.approx(2.0, abs=1e-10)
    Q = np.linspace(-15, 15, 31)
    np.testing.assert_allclose(q_from_alpha_y(params, alpha_y_of_Q(params, Q)), Q, atol=1e-8)
    # stated from the other side
    direct = -(0.16 * math.log(0.4) + 0.36 * math.log(0.6)) / (0.52 * math.log(2))
    assert q_from_alpha_y(params, direct) == pytest.approx(2.0, abs=1e-10)


@pytest.mark.parametrize("a", ["min", "max", 0.5, 1.5, float("nan")])
def test_inverse_domain(params, a):
    a = {"min": params.alpha_y_min, "max": params.alpha_y_max}.get(a, a)
    with pytest.raises(DomainError):
        q_from_alpha_y(params, a)


def test_relation_suite_monotonicity(params):
    r = relation_suite(params)
    assert r.alpha_y_decreasing
    assert r.alpha_x_slope_sign_ok
    assert r.f_unimodal
    assert r.f_max == 1.0
    assert r.f_min < 1e-3


def test_relation_suite_alpha_x_sign_negative_beta():
    r = relation_suite(make_params(0.3, 0.7))
    assert r.alpha_x_slope_sign_ok and r.alpha_y_decreasing


def test_relation_suite_averaging_equal_parameters():
    r = relation_suite(make_params(0.3, 0.3))
    assert r.tau_average_residual <= 1e-12
    assert r.f_average_residual <= 1e-12
    assert r.averaging_holds


def test_relation_suite_averaging_reported_for_distinct_parameters(params):
    # the diagonal sum factorizes as [sqrt(px py)^q + sqrt((1-px)(1-py))^q]^n, and by
    # Cauchy-Schwarz tau_xy(q) >= (tau_x(q) + tau_y(q)) / 2 with equality only at px = py
    r = relation_suite(params)
    q = 2.0
    exact = -math.log2(math.sqrt(0.12) ** q + math.sqrt(0.42) ** q)
    mean = -0.5 * (math.log2(0.09 + 0.49) + math.log2(0.16 + 0.36))
    assert tau_xy_analytic(params, q, q) == pytest.approx(exact, abs=1e-14)
    assert exact - mean == pytest.approx(0.0244, abs=1e-4)
    assert r.tau_average_residual >= exact - mean
    assert not r.averaging_holds


def test_oracle_concave_along_lines(params):
    g = MomentGrid.symmetric(10, 0.5)
    t = oracle_surfaces(params, g)["tau"]
    for second in (t[:-2] + t[2:] - 2 * t[1:-1], t[:, :-2] + t[:, 2:] - 2 * t[:, 1:-1],
                   t[:-2, :-2] + t[2:, 2:] - 2 * t[1:-1, 1:-1], t[:-2, 2:] + t[2:, :-2] - 2 * t[1:-1, 1:-1]):
        assert np.all(second <= 1e-12)


def test_cellwise_cascade_identity(params):
    mx, my = gen_binomial_pair(0.3, 0.4, 12)
    n = 12
    # every cell satisfies mx = C(s) my^beta with ln C = -n gamma at depth n
    np.testing.assert_allclose(np.log(mx.values), params.beta * np.log(my.values) - n * params.gamma, atol=1e-9)


def test_oracle_surfaces_shapes(params):
    g = MomentGrid.symmetric(2, 1.0)
    s = oracle_surfaces(params, g)
    assert set(s) == {"tau", "alpha_x", "alpha_y", "f"}
    assert all(v.shape == (5, 5) for v in s.values())
    assert s["f"][g.index(0, 0)] == 1.0
