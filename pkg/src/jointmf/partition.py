"""Box integration, joint partition functions and canonical measures."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DegenerateInputError, ParameterError
from .measures import Measure

MAX_ZERO_FRACTION = 0.01


@dataclass(frozen=True)
class MomentGrid:
    """Uniform, zero-centred grid of moment orders ``p`` and ``q``.

    Values are stored as integer multiples of ``spacing`` so that the grid is
    exactly symmetric and contains 0.
    """

    p_values: np.ndarray
    q_values: np.ndarray
    spacing: float

    def __post_init__(self):
        h = float(self.spacing)
        if not h > 0:
            raise ParameterError("grid spacing must be positive")
        for name in ("p_values", "q_values"):
            v = np.array(getattr(self, name), dtype=float)
            if v.ndim != 1 or v.size < 1:
                raise ParameterError(f"{name} must be a nonempty 1-d sequence")
            k = np.round(v / h)
            if not np.allclose(v, k * h, rtol=0, atol=1e-9 * h) or not np.array_equal(k, -k[::-1]):
                raise ParameterError(f"{name} must be uniform with spacing {h} and symmetric about 0")
            if v.size > 1 and not np.all(np.diff(k) == 1):
                raise ParameterError(f"{name} must be uniformly spaced by {h}")
            v = k * h
            v.setflags(write=False)
            object.__setattr__(self, name, v)
        object.__setattr__(self, "spacing", h)

    @classmethod
    def symmetric(cls, limit: float = 10.0, spacing: float = 0.1, q_limit: float | None = None) -> "MomentGrid":
        def axis(lim):
            n = int(round(lim / spacing))
            return np.arange(-n, n + 1) * spacing

        return cls(axis(limit), axis(limit if q_limit is None else q_limit), spacing)

    @property
    def shape(self) -> tuple[int, int]:
        return self.p_values.size, self.q_values.size

    def index(self, p: float, q: float) -> tuple[int, int]:
        i = int(np.argmin(np.abs(self.p_values - p)))
        j = int(np.argmin(np.abs(self.q_values - q)))
        if abs(self.p_values[i] - p) > 1e-9 or abs(self.q_values[j] - q) > 1e-9:
            raise ParameterError(f"({p}, {q}) is not on the grid")
        return i, j


@dataclass(frozen=True)
class ScaleSet:
    scales: tuple

    def __post_init__(self):
        s = tuple(int(x) for x in self.scales)
        if not s:
            raise ParameterError("scale set is empty")
        if any(x < 1 for x in s) or any(b <= a for a, b in zip(s, s[1:])):
            raise ParameterError(f"scales must be strictly increasing positive integers, got {s}")
        object.__setattr__(self, "scales", s)

    @classmethod
    def dyadic(cls, length: int, smallest: int = 4) -> "ScaleSet":
        """Powers of two from ``smallest`` up to ``length // 4``."""
        top = int(math.floor(math.log2(length / 4))) if length >= 4 else 0
        lo = int(round(math.log2(smallest)))
        if top < lo:
            raise ParameterError(f"length {length} too short for dyadic scales starting at {smallest}")
        return cls(tuple(2 ** l for l in range(lo, top + 1)))

    def validate_for(self, length: int) -> None:
        if self.scales[-1] > length / 4:
            raise ParameterError(f"largest scale {self.scales[-1]} exceeds length/4 = {length / 4}")

    def window(self, fit_range: tuple | None) -> np.ndarray:
        """Boolean mask of scales inside the inclusive ``(s_min, s_max)`` window."""
        s = np.array(self.scales)
        if fit_range is None:
            return np.ones(s.size, dtype=bool)
        lo, hi = fit_range
        lo = -np.inf if lo is None else lo
        hi = np.inf if hi is None else hi
        return (s >= lo) & (s <= hi)

    def __len__(self) -> int:
        return len(self.scales)

    def __iter__(self):
        return iter(self.scales)


@dataclass(frozen=True)
class BoxSums:
    """Box-integrated masses of both measures at each scale, aligned box-by-box."""

    scales: ScaleSet
    mx: tuple
    my: tuple
    length: int

    def retained_length(self, k: int) -> int:
        return self.mx[k].size * self.scales.scales[k]


def integrate_boxes(mx: Measure, my: Measure, scales: ScaleSet | Sequence[int] | None = None) -> BoxSums:
    """Sum both measures over non-overlapping boxes ``[t*s, (t+1)*s)``.

    Trailing cells that do not fill a whole box are discarded.
    """
    x = np.asarray(mx.values if isinstance(mx, Measure) else mx, dtype=float)
    y = np.asarray(my.values if isinstance(my, Measure) else my, dtype=float)
    if x.shape != y.shape:
        raise ParameterError(f"measures differ in length ({x.size} vs {y.size})")
    if scales is None:
        scales = ScaleSet.dyadic(x.size)
    elif not isinstance(scales, ScaleSet):
        scales = ScaleSet(tuple(scales))
    scales.validate_for(x.size)
    bx, by = [], []
    for s in scales:
        nb = x.size // s
        a = x[: nb * s].reshape(nb, s).sum(axis=1)
        b = y[: nb * s].reshape(nb, s).sum(axis=1)
        a.setflags(write=False)
        b.setflags(write=False)
        bx.append(a)
        by.append(b)
    return BoxSums(scales, tuple(bx), tuple(by), int(x.size))


def _usable_logs(boxes: BoxSums, k: int, max_zero_fraction: float):
    a, b = boxes.mx[k], boxes.my[k]
    keep = (a > 0) & (b > 0)
    n_zero = int(a.size - keep.sum())
    s = boxes.scales.scales[k]
    if keep.sum() == 0:
        raise DegenerateInputError(f"all boxes have zero mass at scale {s}")
    if n_zero > max_zero_fraction * a.size:
        raise DegenerateInputError(
            f"{n_zero} of {a.size} boxes have zero mass at scale {s} "
            f"(more than {max_zero_fraction:.0%}); negative moments would diverge"
        )
    return np.log(a[keep]), np.log(b[keep]), n_zero


def _weights(orders: np.ndarray, logm: np.ndarray):
    """Rows ``exp(o/2 * ln m - shift)`` with the per-row maximum factored out."""
    e = np.multiply.outer(orders / 2.0, logm)
    shift = e.max(axis=1)
    return np.exp(e - shift[:, None]), shift


@dataclass(frozen=True)
class _Moments:
    """Per-scale sums needed by both the partition function and the direct route."""

    log_chi: np.ndarray  # (P, Q, S)
    mean_log_mx: np.ndarray  # sum_t mu ln m_x
    mean_log_my: np.ndarray
    entropy: np.ndarray  # sum_t mu ln mu
    zero_boxes: np.ndarray


_UNDERFLOW_GUARD = 1e-150


def _moment_sums(boxes: BoxSums, p_values, q_values, max_zero_fraction: float, with_direct: bool) -> _Moments:
    p_values = np.asarray(p_values, dtype=float)
    q_values = np.asarray(q_values, dtype=float)
    shape = (p_values.size, q_values.size, len(boxes.scales))
    log_chi = np.empty(shape)
    mlx = np.full(shape, np.nan)
    mly = np.full(shape, np.nan)
    ent = np.full(shape, np.nan)
    zeros = np.zeros(len(boxes.scales), dtype=int)
    with np.errstate(over="ignore", under="ignore", divide="ignore", invalid="ignore"):
        for k in range(len(boxes.scales)):
            lx, ly, zeros[k] = _usable_logs(boxes, k, max_zero_fraction)
            a, sa = _weights(p_values, lx)
            b, sb = _weights(q_values, ly)
            total = a @ b.T
            log_chi[:, :, k] = np.log(total) + sa[:, None] + sb[None, :]
            if with_direct:
                ex = (a * lx) @ b.T / total
                ey = a @ (b * ly).T / total
            # the row shifts of p and q can peak in different boxes; redo those cells exactly
            for i, j in zip(*np.nonzero(~(total >= _UNDERFLOW_GUARD))):
                e = (p_values[i] / 2) * lx + (q_values[j] / 2) * ly
                top = e.max()
                w = np.exp(e - top)
                wsum = w.sum()
                log_chi[i, j, k] = np.log(wsum) + top
                if with_direct:
                    ex[i, j] = (w @ lx) / wsum
                    ey[i, j] = (w @ ly) / wsum
            if with_direct:
                mlx[:, :, k] = ex
                mly[:, :, k] = ey
                # sum mu ln mu = sum mu (p/2 ln mx + q/2 ln my) - ln chi
                ent[:, :, k] = (p_values[:, None] / 2) * ex + (q_values[None, :] / 2) * ey - log_chi[:, :, k]
    log_chi[~np.isfinite(log_chi)] = np.nan
    return _Moments(log_chi, mlx, mly, ent, zeros)


@dataclass(frozen=True)
class PartitionTable:
    """``ln chi(p, q, s)``; undefined cells are NaN."""

    log_chi: np.ndarray
    p_values: np.ndarray
    q_values: np.ndarray
    scales: ScaleSet
    zero_box_count: np.ndarray
    spacing: float | None = None

    @property
    def chi(self) -> np.ndarray:
        return np.exp(self.log_chi)

    @property
    def is_diagonal(self) -> bool:
        return self.log_chi.ndim == 2

    def to_json(self) -> str:
        def enc(a):
            return [None if not math.isfinite(v) else float(v) for v in np.ravel(a)]

        return json.dumps(
            {
                "p": enc(self.p_values),
                "q": enc(self.q_values),
                "scales": list(self.scales.scales),
                "zero_boxes": [int(z) for z in self.zero_box_count],
                "spacing": self.spacing,
                "shape": list(self.log_chi.shape),
                "log_chi": enc(self.log_chi),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "PartitionTable":
        d = json.loads(text)

        def dec(v):
            return np.array([np.nan if x is None else x for x in v], dtype=float)

        return cls(
            log_chi=dec(d["log_chi"]).reshape(d["shape"]),
            p_values=dec(d["p"]),
            q_values=dec(d["q"]),
            scales=ScaleSet(tuple(d["scales"])),
            zero_box_count=np.array(d["zero_boxes"], dtype=int),
            spacing=d["spacing"],
        )

    def write_csv(self, path) -> None:
        """Long form ``p,q,s,chi,zero_boxes``."""
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["p", "q", "s", "chi", "zero_boxes"])
            chi = self.chi
            for i, p in enumerate(self.p_values):
                for j, q in enumerate(self.q_values):
                    if self.is_diagonal and i != j:
                        continue
                    row = chi[i] if self.is_diagonal else chi[i, j]
                    for k, s in enumerate(self.scales.scales):
                        w.writerow([repr(float(p)), repr(float(q)), s, repr(float(row[k])), int(self.zero_box_count[k])])


def joint_partition(boxes: BoxSums, grid: MomentGrid, max_zero_fraction: float = MAX_ZERO_FRACTION) -> PartitionTable:
    """Joint partition function ``sum_t m_x^(p/2) m_y^(q/2)`` at every (p, q, s).

    Boxes in which either mass is zero are left out of every sum and counted
    per scale in ``zero_box_count``.
    """
    mom = _moment_sums(boxes, grid.p_values, grid.q_values, max_zero_fraction, with_direct=False)
    return PartitionTable(mom.log_chi, grid.p_values, grid.q_values, boxes.scales, mom.zero_boxes, grid.spacing)


def uni_partition(boxes: BoxSums, q_values, max_zero_fraction: float = MAX_ZERO_FRACTION) -> PartitionTable:
    """Uni-order partition function ``sum_t (m_x m_y)^(q/2)``, i.e. the p = q diagonal.

    Evaluated through the same kernel as :func:`joint_partition` on a square
    grid, so the diagonal matches it bit for bit.
    """
    q = np.asarray(q_values, dtype=float)
    mom = _moment_sums(boxes, q, q, max_zero_fraction, with_direct=False)
    idx = np.arange(q.size)
    return PartitionTable(mom.log_chi[idx, idx, :], q, q, boxes.scales, mom.zero_boxes)


def canonical_measures(boxes: BoxSums, p: float, q: float, s: int) -> np.ndarray:
    """Normalized weights ``m_x^(p/2) m_y^(q/2) / chi`` over the boxes at scale ``s``.

    Zero-mass boxes get weight 0.
    """
    try:
        k = boxes.scales.scales.index(int(s))
    except ValueError:
        raise ParameterError(f"scale {s} not in the scale set") from None
    a, b = boxes.mx[k], boxes.my[k]
    keep = (a > 0) & (b > 0)
    if not keep.any():
        raise DegenerateInputError(f"all boxes have zero mass at scale {s}")
    e = (p / 2.0) * np.log(a[keep]) + (q / 2.0) * np.log(b[keep])
    w = np.exp(e - e.max())
    total = math.fsum(w)
    if not (total > 0 and math.isfinite(total)):
        raise DegenerateInputError(f"partition function degenerate at (p={p}, q={q}, s={s})")
    mu = np.zeros(a.size)
    mu[keep] = w / total
    return mu
