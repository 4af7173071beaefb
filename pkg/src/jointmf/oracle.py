"""Closed-form multifractal quantities of paired deterministic binomial cascades.

Everything is a function of the combined order ``Q = beta*p/2 + q/2``.
Sums of the form ``a**Q + b**Q`` are evaluated in log space so that orders
well beyond |Q| ~ 700 stay finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParameterError, SingularParameterError

LN2 = math.log(2.0)


@dataclass(frozen=True)
class BinomialOracleParams:
    p_x: float
    p_y: float
    beta: float
    gamma: float

    def combined_order(self, p, q):
        return self.beta * np.asarray(p, dtype=float) / 2 + np.asarray(q, dtype=float) / 2

    @property
    def alpha_y_min(self) -> float:
        return min(-math.log2(self.p_y), -math.log2(1 - self.p_y))

    @property
    def alpha_y_max(self) -> float:
        return max(-math.log2(self.p_y), -math.log2(1 - self.p_y))

    @property
    def alpha_y_width(self) -> float:
        return abs(math.log(1 - self.p_y) - math.log(self.p_y)) / LN2


def make_params(p_x: float, p_y: float) -> BinomialOracleParams:
    for name, v in (("p_x", p_x), ("p_y", p_y)):
        if not 0.0 < v < 1.0:
            raise ParameterError(f"{name} must lie in (0, 1), got {v}")
    if p_y == 0.5:
        raise SingularParameterError("p_y = 0.5 makes beta undefined (uniform y measure)")
    beta = (math.log(p_x) - math.log1p(-p_x)) / (math.log(p_y) - math.log1p(-p_y))
    gamma = beta * math.log1p(-p_y) - math.log1p(-p_x)
    return BinomialOracleParams(float(p_x), float(p_y), beta, gamma)


def _weight_left(p_y: float, Q):
    """``p_y^Q / (p_y^Q + (1-p_y)^Q)``, overflow-free."""
    z = np.asarray(Q, dtype=float) * (math.log(p_y) - math.log1p(-p_y))
    return 0.5 * (1.0 + np.tanh(z / 2))


def tau_y_analytic(params: BinomialOracleParams, Q):
    """``-log2(p_y^Q + (1-p_y)^Q)``."""
    Q = np.asarray(Q, dtype=float)
    out = -np.logaddexp(Q * math.log(params.p_y), Q * math.log1p(-params.p_y)) / LN2
    return out if out.ndim else float(out)


def tau_xy_analytic(params: BinomialOracleParams, p, q):
    """Joint mass exponent ``p*gamma/(2 ln 2) + tau_y(Q)``."""
    p = np.asarray(p, dtype=float)
    out = p * params.gamma / (2 * LN2) + tau_y_analytic(params, params.combined_order(p, q))
    return out if np.ndim(out) else float(out)


def alpha_y_of_Q(params: BinomialOracleParams, Q):
    u = _weight_left(params.p_y, Q)
    out = -(u * math.log(params.p_y) + (1 - u) * math.log1p(-params.p_y)) / LN2
    return out if np.ndim(out) else float(out)


def alpha_analytic(params: BinomialOracleParams, p, q):
    """Singularity strengths ``(alpha_x, alpha_y)`` at moment orders ``(p, q)``;
    ``alpha_x`` follows from the linear relation ``gamma/ln2 + beta*alpha_y``."""
    a_y = np.asarray(alpha_y_of_Q(params, params.combined_order(p, q)))
    a_x = params.gamma / LN2 + params.beta * a_y
    if a_y.ndim == 0:
        return float(a_x), float(a_y)
    return a_x, a_y


def alpha_x_closed_form(params: BinomialOracleParams, p, q):
    """``alpha_x`` from the x cascade's own weights (no use of the linear relation)."""
    u = _weight_left(params.p_y, params.combined_order(p, q))
    out = -(u * math.log(params.p_x) + (1 - u) * math.log1p(-params.p_x)) / LN2
    return out if np.ndim(out) else float(out)


def f_analytic(params: BinomialOracleParams, Q):
    """Joint spectrum as a function of ``Q``; the binary entropy (in bits) of
    the left/right weighting, hence ``f(0) = 1``, ``f(Q) = f(-Q)`` and
    ``f -> 0`` as ``|Q| -> inf``."""
    z = np.abs(np.asarray(Q, dtype=float) * (math.log(params.p_y) - math.log1p(-params.p_y)))
    # weights w = sigmoid(-z) <= 1/2 and 1-w; -ln w = softplus(z), -ln(1-w) = softplus(-z)
    w = 0.5 * (1.0 - np.tanh(z / 2))
    out = (w * np.logaddexp(0.0, z) + (1 - w) * np.logaddexp(0.0, -z)) / LN2
    return out if out.ndim else float(out)


def f_xy_analytic(params: BinomialOracleParams, p, q):
    return f_analytic(params, params.combined_order(p, q))


def q_from_alpha_y(params: BinomialOracleParams, alpha_y):
    """Invert ``alpha_y(Q)``; defined only strictly inside ``(alpha_y_min, alpha_y_max)``."""
    a = np.asarray(alpha_y, dtype=float)
    if np.any(~(a > params.alpha_y_min)) or np.any(~(a < params.alpha_y_max)):
        raise DomainError(
            f"alpha_y must lie strictly inside ({params.alpha_y_min}, {params.alpha_y_max})"
        )
    py = params.p_y
    ratio = -math.log2((1 - py) / py) / (a + math.log2(py)) - 1
    out = np.log(ratio) / math.log(py / (1 - py))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class RelationReport:
    """Residuals of the structural relations evaluated on the oracle."""

    q_values: np.ndarray
    tau_average_residual: float  # max |tau_xy(q,q) - (tau_x(q) + tau_y(q))/2|
    f_average_residual: float  # max |f_xy(q,q) - (f_x(q) + f_y(q))/2|
    alpha_y_decreasing: bool
    alpha_x_slope_sign_ok: bool
    f_unimodal: bool
    f_max: float
    f_min: float

    @property
    def averaging_holds(self) -> bool:
        return self.tau_average_residual <= 1e-12 and self.f_average_residual <= 1e-12


def _single_measure(p: float, q):
    """Classical tau(q), alpha(q), f(q) of one binomial cascade."""
    q = np.asarray(q, dtype=float)
    tau = -np.logaddexp(q * math.log(p), q * math.log1p(-p)) / LN2
    u = _weight_left(p, q)
    alpha = -(u * math.log(p) + (1 - u) * math.log1p(-p)) / LN2
    return tau, alpha, q * alpha - tau


def relation_suite(params: BinomialOracleParams, q_values=None) -> RelationReport:
    """Evaluate the averaging relations and monotonicity properties on the oracle."""
    q = np.linspace(-10, 10, 201) if q_values is None else np.asarray(q_values, dtype=float)
    tau_xy = tau_xy_analytic(params, q, q)
    tau_x, _, f_x = _single_measure(params.p_x, q)
    tau_y, _, f_y = _single_measure(params.p_y, q)
    f_xy = f_xy_analytic(params, q, q)

    Q = np.linspace(-50, 50, 2001)
    a_y = alpha_y_of_Q(params, Q)
    a_x = params.gamma / LN2 + params.beta * a_y
    fq = f_analytic(params, Q)
    # strictness is only checkable where the logistic weight has not saturated in float64
    z = np.abs(Q * (math.log(params.p_y) - math.log1p(-params.p_y)))

    def decreasing(v, sel=slice(None)):
        d = np.diff(v[sel])
        zs = z[sel]
        live = np.maximum(zs[1:], zs[:-1]) < 30.0
        ulp = 8 * np.finfo(float).eps * max(1.0, float(np.max(np.abs(v))))
        return bool(np.all(d <= ulp) and np.all(d[live] < 0))

    return RelationReport(
        q_values=q,
        tau_average_residual=float(np.max(np.abs(tau_xy - (tau_x + tau_y) / 2))),
        f_average_residual=float(np.max(np.abs(f_xy - (f_x + f_y) / 2))),
        alpha_y_decreasing=decreasing(a_y),
        alpha_x_slope_sign_ok=decreasing(np.sign(params.beta) * a_x),
        f_unimodal=decreasing(-fq, Q <= 0) and decreasing(fq, Q >= 0),
        f_max=float(fq.max()),
        f_min=float(fq.min()),
    )


def oracle_surfaces(params: BinomialOracleParams, grid):
    """Exact ``tau``, ``alpha_x``, ``alpha_y`` and ``f`` on a moment grid."""
    P, Qm = np.meshgrid(grid.p_values, grid.q_values, indexing="ij")
    a_x, a_y = alpha_analytic(params, P, Qm)
    return {
        "tau": tau_xy_analytic(params, P, Qm),
        "alpha_x": a_x,
        "alpha_y": a_y,
        "f": f_xy_analytic(params, P, Qm),
    }
