"""Numerical Legendre transforms of mass-exponent surfaces."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ParameterError
from .scaling import ExponentSurfaces


@dataclass(frozen=True)
class JointSpectrum:
    p: np.ndarray  # (P, Q) meshes
    q: np.ndarray
    alpha_x: np.ndarray
    alpha_y: np.ndarray
    f: np.ndarray
    edge: np.ndarray  # cells whose derivative used a one-sided stencil

    def records(self):
        for idx in np.ndindex(self.f.shape):
            yield (self.p[idx], self.q[idx], self.alpha_x[idx], self.alpha_y[idx], self.f[idx])

    def write_csv(self, path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["p", "q", "alpha_x", "alpha_y", "f"])
            for rec in self.records():
                w.writerow([repr(float(v)) for v in rec])


def _derivative(values: np.ndarray, h: float, axis: int) -> np.ndarray:
    # second-order central differences, second-order one-sided at the ends
    return np.gradient(values, h, axis=axis, edge_order=2)


def double_legendre(surfaces: ExponentSurfaces) -> JointSpectrum:
    """``alpha_x = 2 dtau/dp``, ``alpha_y = 2 dtau/dq``, ``f = p alpha_x/2 + q alpha_y/2 - tau``.

    Fills ``surfaces.alpha_x``, ``alpha_y`` and ``f`` in place and returns the
    spectrum records. NaN cells of ``tau`` spread to their stencil neighbours.
    """
    grid = surfaces.grid
    tau = np.asarray(surfaces.tau, dtype=float)
    if grid is None or tau.ndim != 2:
        raise ParameterError("double Legendre transform needs a two-dimensional tau surface")
    if min(tau.shape) < 3:
        raise ParameterError(f"need at least 3 grid points per axis, got {tau.shape}")
    h = grid.spacing
    alpha_x = 2.0 * _derivative(tau, h, axis=0)
    alpha_y = 2.0 * _derivative(tau, h, axis=1)
    P, Q = np.meshgrid(grid.p_values, grid.q_values, indexing="ij")
    f = P * alpha_x / 2 + Q * alpha_y / 2 - tau

    edge = np.zeros(tau.shape, dtype=bool)
    edge[[0, -1], :] = True
    edge[:, [0, -1]] = True

    surfaces.alpha_x, surfaces.alpha_y, surfaces.f = alpha_x, alpha_y, f
    return JointSpectrum(P, Q, alpha_x, alpha_y, f, edge)


def uni_legendre(tau_q, q_values) -> tuple[np.ndarray, np.ndarray]:
    """``alpha(q) = dtau/dq`` and ``f(q) = q alpha - tau`` on a uniform q axis."""
    tau = np.asarray(tau_q, dtype=float)
    q = np.asarray(q_values, dtype=float)
    if tau.ndim != 1 or tau.size < 3 or q.shape != tau.shape:
        raise ParameterError("need at least 3 tau values matching the q axis")
    steps = np.diff(q)
    h = float(steps.mean())
    if not h > 0 or not np.allclose(steps, h, rtol=1e-9, atol=0):
        raise ParameterError("q axis must be uniformly increasing")
    alpha = _derivative(tau, h, axis=0)
    return alpha, q * alpha - tau


def monofractal_deviation(surfaces: ExponentSurfaces) -> tuple[np.ndarray, float]:
    """Deviation of ``tau`` from the monofractal plane ``p/2 + q/2 - 1`` and its
    largest absolute value over defined cells."""
    P, Q = np.meshgrid(surfaces.grid.p_values, surfaces.grid.q_values, indexing="ij")
    delta = surfaces.tau - (P / 2 + Q / 2 - 1)
    finite = delta[np.isfinite(delta)]
    return delta, float(np.max(np.abs(finite))) if finite.size else float("nan")
