"""Log-log regressions: mass exponents and direct canonical-measure estimates."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import FitError
from .measures import Measure
from .partition import (
    MAX_ZERO_FRACTION,
    BoxSums,
    MomentGrid,
    PartitionTable,
    ScaleSet,
    _moment_sums,
    integrate_boxes,
    uni_partition,
)

MIN_FIT_POINTS = 3


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r_squared: float
    stderr: float
    n_points: int


@dataclass(frozen=True)
class FitGrid:
    """Arrays of :class:`FitResult` fields, one entry per fitted cell."""

    slope: np.ndarray
    intercept: np.ndarray
    r_squared: np.ndarray
    stderr: np.ndarray
    n_points: np.ndarray

    def at(self, *index) -> FitResult:
        return FitResult(
            float(self.slope[index]),
            float(self.intercept[index]),
            float(self.r_squared[index]),
            float(self.stderr[index]),
            int(self.n_points[index]),
        )


def fit_lines(x: np.ndarray, y: np.ndarray) -> FitGrid:
    """Ordinary least squares of ``y[..., k]`` on ``x[k]`` for every leading index.

    NaN entries of ``y`` are dropped cell by cell. Cells left with fewer than
    three points come back as NaN.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = np.isfinite(y)
    n = ok.sum(axis=-1)
    w = ok.astype(float)
    yz = np.where(ok, y, 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        xm = (w * x).sum(axis=-1) / n
        ym = yz.sum(axis=-1) / n
        dx = np.where(ok, x - xm[..., None], 0.0)
        dy = np.where(ok, yz - ym[..., None], 0.0)
        sxx = (dx * dx).sum(axis=-1)
        sxy = (dx * dy).sum(axis=-1)
        syy = (dy * dy).sum(axis=-1)
        slope = sxy / sxx
        intercept = ym - slope * xm
        resid = np.where(ok, dy - slope[..., None] * dx, 0.0)
        sse = (resid * resid).sum(axis=-1)
        # y constant up to rounding: an exact (flat) fit
        flat = syy <= (64 * np.finfo(float).eps) ** 2 * np.maximum(yz * yz, 1.0).sum(axis=-1)
        r2 = np.where(flat, 1.0, 1.0 - sse / np.where(flat, 1.0, syy))
        r2 = np.clip(r2, 0.0, 1.0)
        stderr = np.where(n > 2, np.sqrt(sse / np.maximum(n - 2, 1) / sxx), np.nan)
    bad = (n < MIN_FIT_POINTS) | ~(sxx > 0)
    for a in (slope, intercept, r2, stderr):
        a[bad] = np.nan
    return FitGrid(slope, intercept, r2, stderr, n)


def fit_line(x, y) -> FitResult:
    g = fit_lines(np.asarray(x, dtype=float), np.asarray(y, dtype=float)[None, :])
    if g.n_points[0] < MIN_FIT_POINTS:
        raise FitError(f"need at least {MIN_FIT_POINTS} points, got {int(g.n_points[0])}")
    return g.at(0)


@dataclass
class ExponentSurfaces:
    """``tau(p, q)`` with per-cell fit diagnostics, plus derived surfaces when filled."""

    tau: np.ndarray
    grid: MomentGrid
    diagnostics: FitGrid
    alpha_x: np.ndarray | None = None
    alpha_y: np.ndarray | None = None
    f: np.ndarray | None = None
    fit_scales: tuple = field(default=())


def _log_scales(scales: ScaleSet, fit_range):
    mask = scales.window(fit_range)
    if mask.sum() < MIN_FIT_POINTS:
        raise FitError(f"only {int(mask.sum())} scales inside fit range {fit_range}; need {MIN_FIT_POINTS}")
    return np.log(np.array(scales.scales, dtype=float)[mask]), mask


def fit_tau(table: PartitionTable, fit_range: tuple | None = None) -> ExponentSurfaces:
    """Slope of ``ln chi`` against ``ln s`` for every moment cell."""
    lns, mask = _log_scales(table.scales, fit_range)
    fits = fit_lines(lns, table.log_chi[..., mask])
    if table.is_diagonal:
        grid = None
    else:
        grid = MomentGrid(table.p_values, table.q_values, table.spacing)
    return ExponentSurfaces(
        tau=fits.slope,
        grid=grid,
        diagnostics=fits,
        fit_scales=tuple(np.array(table.scales.scales)[mask].tolist()),
    )


@dataclass(frozen=True)
class DirectEstimates:
    alpha_x: np.ndarray
    alpha_y: np.ndarray
    f: np.ndarray
    fits: dict


def direct_estimates(
    boxes: BoxSums,
    grid: MomentGrid,
    fit_range: tuple | None = None,
    max_zero_fraction: float = MAX_ZERO_FRACTION,
) -> DirectEstimates:
    """Canonical-measure route: slopes of ``sum mu ln m_x``, ``sum mu ln m_y`` and
    ``sum mu ln mu`` against ``ln s``."""
    lns, mask = _log_scales(boxes.scales, fit_range)
    mom = _moment_sums(boxes, grid.p_values, grid.q_values, max_zero_fraction, with_direct=True)
    fits = {
        "alpha_x": fit_lines(lns, mom.mean_log_mx[..., mask]),
        "alpha_y": fit_lines(lns, mom.mean_log_my[..., mask]),
        "f": fit_lines(lns, mom.entropy[..., mask]),
    }
    return DirectEstimates(fits["alpha_x"].slope, fits["alpha_y"].slope, fits["f"].slope, fits)


@dataclass(frozen=True)
class UniOrderResult:
    """Diagonal (p = q) quantities of the uni-order method."""

    q_values: np.ndarray
    tau: np.ndarray
    alpha: np.ndarray  # direct alpha_xy = (alpha_x + alpha_y) / 2
    f: np.ndarray  # direct f_xy
    diagnostics: FitGrid


def uni_direct(
    boxes: BoxSums,
    q_values,
    fit_range: tuple | None = None,
    max_zero_fraction: float = MAX_ZERO_FRACTION,
) -> UniOrderResult:
    """Uni-order estimates with canonical weights ``(m_x m_y)^(q/2) / chi``.

    ``alpha`` is the slope of ``sum mu ln sqrt(m_x m_y)`` and ``f`` the slope
    of ``sum mu ln mu``.
    """
    q = np.asarray(q_values, dtype=float)
    lns, mask = _log_scales(boxes.scales, fit_range)
    mom = _moment_sums(boxes, q, q, max_zero_fraction, with_direct=True)
    idx = np.arange(q.size)
    half_log = 0.5 * (mom.mean_log_mx[idx, idx] + mom.mean_log_my[idx, idx])
    tau_fit = fit_lines(lns, mom.log_chi[idx, idx][:, mask])
    return UniOrderResult(
        q_values=q,
        tau=tau_fit.slope,
        alpha=fit_lines(lns, half_log[:, mask]).slope,
        f=fit_lines(lns, mom.entropy[idx, idx][:, mask]).slope,
        diagnostics=tau_fit,
    )


def tau_individual(
    m: Measure,
    q_values,
    fit_range: tuple | None = None,
    scales: ScaleSet | None = None,
) -> np.ndarray:
    """Classical mass exponents ``tau(q)`` of a single measure (``sum m^q ~ s^tau``)."""
    boxes = integrate_boxes(m, m, scales)
    table = uni_partition(boxes, q_values)
    return fit_tau(table, fit_range).tau
