"""Paired measures: deterministic binomial cascades, bivariate fBm paths,
and the conversion of empirical price or value series into normalized
box measures."""

from __future__ import annotations

import csv
import datetime as dt
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError, ModelError, ParameterError

log = logging.getLogger(__name__)

MAX_LEVELS = 24
MIN_LENGTH = 4
_SUM_RTOL = 1e-12


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Measure:
    """Nonnegative masses on consecutive cells, normalized to total 1."""

    values: np.ndarray

    def __post_init__(self):
        values = _frozen(self.values)
        if values.ndim != 1:
            raise ParameterError("measure values must be one-dimensional")
        if values.size < MIN_LENGTH:
            raise ParameterError(f"measure needs at least {MIN_LENGTH} cells, got {values.size}")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise DataError("measure values must be finite and nonnegative")
        total = math.fsum(values)
        if abs(total - 1.0) > _SUM_RTOL:
            raise DataError(f"measure mass sums to {total!r}, expected 1")
        object.__setattr__(self, "values", values)

    @property
    def length(self) -> int:
        return int(self.values.size)

    def __len__(self) -> int:
        return self.length


@dataclass(frozen=True)
class BinomialSpec:
    p: float
    levels: int

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise ParameterError(f"binomial multiplier must lie in (0, 1), got {self.p}")
        if int(self.levels) != self.levels or not 1 <= self.levels <= MAX_LEVELS:
            raise ParameterError(f"cascade depth must be an integer in [1, {MAX_LEVELS}], got {self.levels}")


@dataclass(frozen=True)
class BfbmSpec:
    h_x: float
    h_y: float
    rho: float
    length: int
    seed: int = 0

    def __post_init__(self):
        for name in ("h_x", "h_y"):
            h = getattr(self, name)
            if not 0.0 < h < 1.0:
                raise ParameterError(f"{name} must lie in (0, 1), got {h}")
        if not -1.0 <= self.rho <= 1.0:
            raise ParameterError(f"rho must lie in [-1, 1], got {self.rho}")
        if int(self.length) != self.length or self.length < 2:
            raise ParameterError(f"length must be an integer >= 2, got {self.length}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ParameterError("seed must be a nonnegative integer")


@dataclass(frozen=True)
class PriceSeries:
    timestamps: tuple
    closes: np.ndarray
    rejected: tuple = field(default=(), compare=False)

    def __post_init__(self):
        stamps = tuple(self.timestamps)
        closes = _frozen(self.closes)
        if len(stamps) != closes.size:
            raise DataError("timestamps and closes differ in length")
        for i in range(1, len(stamps)):
            if not stamps[i] > stamps[i - 1]:
                raise DataError(f"timestamps not strictly increasing at row {i + 1}")
        bad = np.flatnonzero(~(closes > 0))
        if bad.size:
            raise DataError(f"nonpositive close price at row {bad[0] + 1}: {closes[bad[0]]!r}")
        object.__setattr__(self, "timestamps", stamps)
        object.__setattr__(self, "closes", closes)

    def __len__(self) -> int:
        return len(self.timestamps)


# ---------------------------------------------------------------- generators


def gen_binomial(spec: BinomialSpec) -> Measure:
    """Deterministic p-model cascade of depth ``spec.levels``.

    At every refinement the left half of each interval receives ``p`` and
    the right half ``1 - p``, so cell ``i`` carries ``p**k * (1-p)**(L-k)``
    with ``k`` the number of left branches on its path.
    """
    if 2**spec.levels < MIN_LENGTH:
        raise ParameterError(f"a depth-{spec.levels} cascade has fewer than {MIN_LENGTH} cells")
    p = float(spec.p)
    m = np.ones(1)
    for _ in range(spec.levels):
        m = np.column_stack((m * p, m * (1.0 - p))).ravel()
    return Measure(m)


def gen_binomial_pair(p_x: float, p_y: float, levels: int) -> tuple[Measure, Measure]:
    """Two cascades sharing depth and branch orientation."""
    return gen_binomial(BinomialSpec(p_x, levels)), gen_binomial(BinomialSpec(p_y, levels))


def bfbm_coherence_bound(h_x: float, h_y: float) -> float:
    """Largest admissible |rho| for the symmetric (time-reversible) bivariate fBm."""
    h = h_x + h_y
    num = math.gamma(2 * h_x + 1) * math.gamma(2 * h_y + 1) * math.sin(math.pi * h_x) * math.sin(math.pi * h_y)
    den = math.gamma(h + 1) ** 2 * math.sin(math.pi * h / 2) ** 2
    return math.sqrt(num / den)


def _fgn_autocov(h: float, k: np.ndarray) -> np.ndarray:
    k = np.abs(k.astype(float))
    return 0.5 * (np.abs(k + 1) ** (2 * h) + np.abs(k - 1) ** (2 * h) - 2 * k ** (2 * h))


def _circulant_row(acov: np.ndarray) -> np.ndarray:
    # lags 0..n followed by n-1..1
    return np.concatenate((acov, acov[-2:0:-1]))


def gen_bfbm(spec: BfbmSpec) -> tuple[np.ndarray, np.ndarray]:
    """Sample a bivariate fractional Brownian motion by circulant embedding.

    The increments form a stationary bivariate fractional Gaussian noise with
    unit variances, lag-zero correlation ``rho`` and a symmetric
    cross-covariance ``rho/2 * (|k+1|^H + |k-1|^H - 2|k|^H)``, ``H = h_x + h_y``.
    Returns the two cumulative paths, each of length ``spec.length``.
    """
    bound = bfbm_coherence_bound(spec.h_x, spec.h_y)
    if abs(spec.rho) > bound * (1 + 1e-12):
        raise ModelError(
            f"|rho|={abs(spec.rho)} exceeds the admissible bound {bound:.6f} for "
            f"h_x={spec.h_x}, h_y={spec.h_y}; joint covariance is not positive semidefinite"
        )

    n = int(spec.length)
    lags = np.arange(n + 1)
    rows = (
        _circulant_row(_fgn_autocov(spec.h_x, lags)),
        _circulant_row(spec.rho * _fgn_autocov((spec.h_x + spec.h_y) / 2, lags)),
        _circulant_row(_fgn_autocov(spec.h_y, lags)),
    )
    lxx, lxy, lyy = (np.fft.fft(r).real for r in rows)
    m = lxx.size

    # per-frequency 2x2 spectral matrices and their symmetric square roots
    spec_mats = np.empty((m, 2, 2))
    spec_mats[:, 0, 0] = lxx
    spec_mats[:, 0, 1] = spec_mats[:, 1, 0] = lxy
    spec_mats[:, 1, 1] = lyy
    eigval, eigvec = np.linalg.eigh(spec_mats)
    tol = 1e-10 * max(float(np.max(np.abs(eigval))), 1.0)
    if eigval.min() < -tol:
        raise ParameterError(
            f"circulant embedding of length {m} is not positive semidefinite "
            f"(min eigenvalue {eigval.min():.3e}); length not supported"
        )
    root = np.einsum("fij,fj,fkj->fik", eigvec, np.sqrt(np.clip(eigval, 0.0, None)), eigvec)

    rng = np.random.default_rng(spec.seed)
    z = rng.standard_normal((m, 2)) + 1j * rng.standard_normal((m, 2))
    w = np.einsum("fij,fj->fi", root, z)
    incr = np.fft.fft(w, axis=0)[:n].real / math.sqrt(m)
    return np.cumsum(incr[:, 0]), np.cumsum(incr[:, 1])


# ------------------------------------------------------------- conversions


def volatility_from_prices(prices: PriceSeries) -> np.ndarray:
    """Absolute log-returns ``|ln P(t) - ln P(t-1)|`` of consecutive closes."""
    closes = np.asarray(prices.closes, dtype=float)
    if closes.size < 2:
        raise DataError("need at least two prices to form a volatility")
    bad = np.flatnonzero(~(closes > 0))
    if bad.size:
        raise DataError(f"nonpositive close price at row {bad[0] + 1}: {closes[bad[0]]!r}")
    return np.abs(np.diff(np.log(closes)))


def series_to_measure(series: Sequence[float]) -> Measure:
    """Normalize ``|series|`` by its grand total."""
    a = np.abs(np.asarray(series, dtype=float))
    if a.ndim != 1 or a.size < MIN_LENGTH:
        raise ParameterError(f"series needs at least {MIN_LENGTH} entries")
    if not np.all(np.isfinite(a)):
        raise DataError("series contains non-finite values")
    total = math.fsum(a)
    if total == 0.0:
        raise DataError("series is identically zero; cannot form a measure")
    m = a / total
    # absorb the last rounding error so the invariant holds to machine precision
    m = m / math.fsum(m)
    return Measure(m)


def path_to_measure(path: Sequence[float]) -> Measure:
    """Measure of absolute unit-lag increments of a path that starts at the origin."""
    return series_to_measure(np.diff(np.asarray(path, dtype=float), prepend=0.0))


def align_prices(a: PriceSeries, b: PriceSeries) -> tuple[PriceSeries, PriceSeries]:
    """Restrict two price series to their common timestamps."""
    common = sorted(set(a.timestamps) & set(b.timestamps))
    if len(common) < 2:
        raise DataError("price series share fewer than two timestamps")
    ia = {t: i for i, t in enumerate(a.timestamps)}
    ib = {t: i for i, t in enumerate(b.timestamps)}
    return (
        PriceSeries(tuple(common), a.closes[[ia[t] for t in common]]),
        PriceSeries(tuple(common), b.closes[[ib[t] for t in common]]),
    )


# ---------------------------------------------------------------------- CSV


def read_price_csv(path, strict: bool = False) -> PriceSeries:
    """Read a ``date,close`` CSV with ISO-8601 dates.

    Unparsable or nonpositive rows are dropped and listed (by file line) in
    ``PriceSeries.rejected``; with ``strict=True`` they raise instead.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:2]] != ["date", "close"]:
            raise DataError(f"{path}: expected header 'date,close', got {header!r}")
        stamps, closes, rejected = [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                if len(row) < 2:
                    raise ValueError("missing column")
                stamp = dt.date.fromisoformat(row[0].strip())
                close = float(row[1])
                if not math.isfinite(close) or close <= 0:
                    raise ValueError(f"nonpositive close {row[1]!r}")
            except ValueError as exc:
                rejected.append((lineno, str(exc)))
                continue
            stamps.append(stamp)
            closes.append(close)
    if rejected:
        lines = ", ".join(str(r[0]) for r in rejected)
        if strict:
            raise DataError(f"{path}: rejected rows at lines {lines}")
        log.warning("%s: rejected %d row(s) at lines %s", path, len(rejected), lines)
    order_ok = all(b > a for a, b in zip(stamps, stamps[1:]))
    if not order_ok:
        raise DataError(f"{path}: dates are not strictly increasing")
    return PriceSeries(tuple(stamps), np.array(closes), rejected=tuple(rejected))


def read_values_csv(path) -> np.ndarray:
    """Single-column numeric CSV; an optional non-numeric header line is skipped."""
    path = Path(path)
    values, bad = [], []
    with path.open(newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not row[0].strip():
                continue
            try:
                values.append(float(row[0]))
            except ValueError:
                if lineno == 1 and not values:
                    continue
                bad.append(lineno)
    if bad:
        raise DataError(f"{path}: unparsable values at lines {', '.join(map(str, bad))}")
    return np.array(values)


def write_values_csv(path, values, header: str = "value") -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for v in np.asarray(values, dtype=float):
            fh.write(repr(float(v)) + "\n")


def write_price_csv(path, prices: PriceSeries) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        fh.write("date,close\n")
        for t, c in zip(prices.timestamps, prices.closes):
            fh.write(f"{t.isoformat()},{float(c)!r}\n")
