"""Analysis pipelines, report bundles, moving windows and oracle comparison."""

from __future__ import annotations

import configparser
import csv
import datetime as dt
import json
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DataError, ParameterError, ToleranceError
from .legendre import JointSpectrum, double_legendre, monofractal_deviation, uni_legendre
from .measures import (
    BfbmSpec,
    Measure,
    PriceSeries,
    align_prices,
    gen_bfbm,
    gen_binomial_pair,
    path_to_measure,
    read_price_csv,
    read_values_csv,
    series_to_measure,
    volatility_from_prices,
)
from .oracle import LN2, make_params, oracle_surfaces
from .partition import MomentGrid, PartitionTable, ScaleSet, integrate_boxes, joint_partition
from .scaling import ExponentSurfaces, direct_estimates, fit_tau, tau_individual, uni_direct

log = logging.getLogger(__name__)

METHODS = ("bi-order", "uni-order", "direct", "all")
INPUT_KINDS = ("auto", "measure", "path", "prices")
SURFACE_NAMES = ("tau", "alpha_x", "alpha_y", "f")


@dataclass
class AnalysisConfig:
    inputs: tuple = ()
    kind: str = "auto"
    generator: str | None = None  # "binomial" or "bfbm"
    generator_params: dict = field(default_factory=dict)
    grid_limit: float = 10.0
    grid_spacing: float = 0.1
    scales: str = "dyadic"
    fit_range: tuple | None = None
    out: str | None = None
    method: str = "all"
    seed: int = 0

    def validate(self) -> None:
        if self.generator is None and len(self.inputs) != 2:
            raise ParameterError("exactly two input sources are required")
        if self.generator not in (None, "binomial", "bfbm"):
            raise ParameterError(f"unknown generator {self.generator!r}")
        if self.method not in METHODS:
            raise ParameterError(f"method must be one of {METHODS}")
        if self.kind not in INPUT_KINDS:
            raise ParameterError(f"input kind must be one of {INPUT_KINDS}")

    def grid(self) -> MomentGrid:
        return MomentGrid.symmetric(self.grid_limit, self.grid_spacing)

    def scale_set(self, length: int) -> ScaleSet:
        if self.scales == "dyadic":
            return ScaleSet.dyadic(length)
        return ScaleSet(parse_int_list(self.scales))

    def as_dict(self) -> dict:
        d = asdict(self)
        d["inputs"] = list(self.inputs)
        d["fit_range"] = None if self.fit_range is None else list(self.fit_range)
        return d


def parse_int_list(text: str) -> tuple:
    try:
        return tuple(int(x) for x in str(text).replace(" ", "").split(",") if x)
    except ValueError:
        raise ParameterError(f"cannot parse scale list {text!r}") from None


def parse_fit_range(text) -> tuple | None:
    """``"64:16384"``, ``"64:"`` or ``":1024"``; empty or ``None`` means all scales."""
    if text is None or str(text).strip() in ("", "all", "none"):
        return None
    parts = str(text).split(":")
    if len(parts) != 2:
        raise ParameterError(f"fit range must look like MIN:MAX, got {text!r}")
    try:
        lo, hi = (int(p) if p.strip() else None for p in parts)
    except ValueError:
        raise ParameterError(f"cannot parse fit range {text!r}") from None
    return lo, hi


def parse_grid(text: str) -> tuple[float, float]:
    try:
        limit, spacing = (float(x) for x in str(text).split(":"))
    except ValueError:
        raise ParameterError(f"grid must look like LIMIT:SPACING, got {text!r}") from None
    return limit, spacing


def load_config(path) -> AnalysisConfig:
    """Flat INI file with an ``[analysis]`` section."""
    cp = configparser.ConfigParser()
    if not cp.read(path, encoding="utf-8"):
        raise ParameterError(f"cannot read config file {path}")
    if "analysis" not in cp:
        raise ParameterError(f"{path}: missing [analysis] section")
    sec = cp["analysis"]
    cfg = AnalysisConfig()
    if "inputs" in sec:
        cfg.inputs = tuple(sec["inputs"].split())
    if "grid" in sec:
        cfg.grid_limit, cfg.grid_spacing = parse_grid(sec["grid"])
    if "fit_range" in sec:
        cfg.fit_range = parse_fit_range(sec["fit_range"])
    for key in ("kind", "scales", "out", "method", "generator"):
        if key in sec:
            setattr(cfg, key, sec[key].strip())
    if "seed" in sec:
        cfg.seed = sec.getint("seed")
    cfg.generator_params = {k[4:]: float(v) for k, v in sec.items() if k.startswith("gen_")}
    return cfg


# ------------------------------------------------------------------ inputs


def _looks_like_prices(path) -> bool:
    with Path(path).open(encoding="utf-8") as fh:
        first = fh.readline().strip().lower().replace(" ", "")
    return first.startswith("date,close")


def load_pair(cfg: AnalysisConfig) -> tuple[Measure, Measure, dict]:
    """Resolve the configured inputs into two equal-length measures."""
    cfg.validate()
    if cfg.generator == "binomial":
        gp = cfg.generator_params
        mx, my = gen_binomial_pair(gp["px"], gp["py"], int(gp["levels"]))
        return mx, my, {"source": "binomial", **gp}
    if cfg.generator == "bfbm":
        gp = cfg.generator_params
        spec = BfbmSpec(gp["hx"], gp["hy"], gp["rho"], int(gp["length"]), int(gp.get("seed", cfg.seed)))
        x, y = gen_bfbm(spec)
        return path_to_measure(x), path_to_measure(y), {"source": "bfbm", **asdict(spec)}

    a, b = cfg.inputs
    kind = cfg.kind
    if kind == "auto":
        kinds = {_looks_like_prices(a), _looks_like_prices(b)}
        if len(kinds) != 1:
            raise DataError("inputs mix price CSVs and value CSVs")
        kind = "prices" if kinds.pop() else "measure"
    if kind == "prices":
        pa, pb = align_prices(read_price_csv(a), read_price_csv(b))
        return (
            series_to_measure(volatility_from_prices(pa)),
            series_to_measure(volatility_from_prices(pb)),
            {"source": "prices", "first_date": pa.timestamps[0].isoformat(), "last_date": pa.timestamps[-1].isoformat()},
        )
    va, vb = read_values_csv(a), read_values_csv(b)
    if va.size != vb.size:
        raise DataError(f"inputs differ in length ({va.size} vs {vb.size})")
    conv = path_to_measure if kind == "path" else series_to_measure
    return conv(va), conv(vb), {"source": kind}


# ----------------------------------------------------------------- analysis


@dataclass
class AnalysisResult:
    config: AnalysisConfig
    grid: MomentGrid
    table: PartitionTable
    surfaces: ExponentSurfaces
    spectrum: JointSpectrum
    direct: object | None = None
    uni: dict | None = None
    summary: dict = field(default_factory=dict)


def _finite_range(a):
    v = np.asarray(a)[np.isfinite(a)]
    return (float(v.min()), float(v.max())) if v.size else (math.nan, math.nan)


def analyze_measures(mx: Measure, my: Measure, cfg: AnalysisConfig, meta: dict | None = None) -> AnalysisResult:
    grid = cfg.grid()
    boxes = integrate_boxes(mx, my, cfg.scale_set(mx.length))
    table = joint_partition(boxes, grid)
    surfaces = fit_tau(table, cfg.fit_range)
    spectrum = double_legendre(surfaces)
    result = AnalysisResult(cfg, grid, table, surfaces, spectrum)

    if cfg.method in ("direct", "all"):
        result.direct = direct_estimates(boxes, grid, cfg.fit_range)
    if cfg.method in ("uni-order", "all"):
        q = grid.q_values
        uni = uni_direct(boxes, q, cfg.fit_range)
        alpha_l, f_l = uni_legendre(uni.tau, q)
        tau_x = tau_individual(mx, q, cfg.fit_range, boxes.scales)
        tau_y = tau_individual(my, q, cfg.fit_range, boxes.scales)
        _, f_x = uni_legendre(tau_x, q)
        _, f_y = uni_legendre(tau_y, q)
        result.uni = {
            "q": q, "tau": uni.tau, "alpha": alpha_l, "f": f_l,
            "alpha_direct": uni.alpha, "f_direct": uni.f,
            "tau_x": tau_x, "tau_y": tau_y, "f_x": f_x, "f_y": f_y,
        }
    result.summary = summarize(result, meta or {})
    return result


def summarize(result: AnalysisResult, meta: dict) -> dict:
    grid, s, sp = result.grid, result.surfaces, result.spectrum
    i0, j0 = grid.index(0.0, 0.0)
    _, dtau_max = monofractal_deviation(s)
    fmax_idx = np.unravel_index(np.nanargmax(sp.f), sp.f.shape) if np.isfinite(sp.f).any() else (i0, j0)
    ax, ay = _finite_range(sp.alpha_x), _finite_range(sp.alpha_y)
    summary = {
        "version": __version__,
        "input": meta,
        "config": result.config.as_dict(),
        "scales": list(result.table.scales.scales),
        "fit_scales": list(s.fit_scales),
        "zero_boxes": [int(z) for z in result.table.zero_box_count],
        "grid": {"limit": float(grid.p_values[-1]), "spacing": grid.spacing, "shape": list(grid.shape)},
        "tau_00": float(s.tau[i0, j0]),
        "max_f": float(sp.f[fmax_idx]),
        "argmax_f": [float(grid.p_values[fmax_idx[0]]), float(grid.q_values[fmax_idx[1]])],
        "max_abs_delta_tau": dtau_max,
        "alpha_x_range": list(ax),
        "alpha_y_range": list(ay),
        "alpha_x_width": ax[1] - ax[0],
        "alpha_y_width": ay[1] - ay[0],
        "min_r_squared": float(np.nanmin(s.diagnostics.r_squared)),
        "undefined_tau_cells": int(np.isnan(s.tau).sum()),
    }
    if result.direct is not None:
        d = result.direct
        summary["direct"] = {
            "alpha_x_range": list(_finite_range(d.alpha_x)),
            "alpha_y_range": list(_finite_range(d.alpha_y)),
            "max_f": float(np.nanmax(d.f)),
            "route_max_diff": {
                "alpha_x": float(np.nanmax(np.abs(d.alpha_x - sp.alpha_x))),
                "alpha_y": float(np.nanmax(np.abs(d.alpha_y - sp.alpha_y))),
                "f": float(np.nanmax(np.abs(d.f - sp.f))),
            },
        }
    if result.uni is not None:
        u = result.uni
        summary["uni_order"] = {
            "tau_0": float(u["tau"][j0]),
            "alpha_range": list(_finite_range(u["alpha"])),
            "max_f": float(np.nanmax(u["f"])),
            "tau_average_residual": float(np.nanmax(np.abs(u["tau"] - (u["tau_x"] + u["tau_y"]) / 2))),
            "f_average_residual": float(np.nanmax(np.abs(u["f"] - (u["f_x"] + u["f_y"]) / 2))),
        }
    return summary


# ------------------------------------------------------------------- output


def _fmt(v) -> str:
    return repr(float(v))


def write_dense(path, values, p_values, q_values) -> None:
    """Matrix with one row per p and one column per q; the corner cell reads ``p\\q``."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["p\\q"] + [_fmt(q) for q in q_values])
        for p, row in zip(p_values, values):
            w.writerow([_fmt(p)] + [_fmt(v) for v in row])


def read_dense(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    q = np.array([float(x) for x in rows[0][1:]])
    p = np.array([float(r[0]) for r in rows[1:]])
    values = np.array([[float(x) for x in r[1:]] for r in rows[1:]])
    return values, p, q


def write_long(path, values, p_values, q_values, name: str = "value") -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["p", "q", name])
        for i, p in enumerate(p_values):
            for j, q in enumerate(q_values):
                w.writerow([_fmt(p), _fmt(q), _fmt(values[i, j])])


def write_bundle(result: AnalysisResult, out) -> Path:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    g = result.grid
    result.table.write_csv(out / "chi.csv")
    dense = {
        "tau": result.surfaces.tau,
        "alpha_x": result.spectrum.alpha_x,
        "alpha_y": result.spectrum.alpha_y,
        "f": result.spectrum.f,
        "r_squared": result.surfaces.diagnostics.r_squared,
    }
    if result.direct is not None:
        dense.update(direct_alpha_x=result.direct.alpha_x, direct_alpha_y=result.direct.alpha_y, direct_f=result.direct.f)
    for name, values in dense.items():
        write_dense(out / f"{name}.csv", values, g.p_values, g.q_values)
    result.spectrum.write_csv(out / "spectrum.csv")
    if result.uni is not None:
        cols = ["q", "tau", "alpha", "f", "alpha_direct", "f_direct", "tau_x", "tau_y", "f_x", "f_y"]
        with (out / "uni.csv").open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for k in range(result.uni["q"].size):
                w.writerow([_fmt(result.uni[c][k]) for c in cols])
    (out / "summary.json").write_text(json.dumps(result.summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return out


def cmd_analyze(cfg: AnalysisConfig) -> AnalysisResult:
    mx, my, meta = load_pair(cfg)
    result = analyze_measures(mx, my, cfg, meta)
    if cfg.out:
        write_bundle(result, cfg.out)
    return result


# ------------------------------------------------------------------ windows


@dataclass(frozen=True)
class WindowSpec:
    """Window length and step, either in calendar years or in samples."""

    length: int
    step: int
    unit: str = "years"  # or "samples"

    def __post_init__(self):
        if self.unit not in ("years", "samples"):
            raise ParameterError("window unit must be 'years' or 'samples'")
        if self.length < 1 or self.step < 1:
            raise ParameterError("window length and step must be positive")
        if self.step > self.length:
            raise ParameterError("window step exceeds window length")

    @classmethod
    def parse(cls, length: str, step: str) -> "WindowSpec":
        """``"10y"``/``"1y"`` for calendar years, plain integers for sample counts."""
        def one(text):
            text = str(text).strip().lower()
            if text.endswith("y"):
                return int(text[:-1]), "years"
            return int(text), "samples"

        try:
            (ln, u1), (st, u2) = one(length), one(step)
        except ValueError:
            raise ParameterError(f"cannot parse window spec {length!r}/{step!r}") from None
        if u1 != u2:
            raise ParameterError("window length and step must use the same unit")
        return cls(ln, st, u1)


MIN_WINDOW_SAMPLES = 2**8


def _add_years(d: dt.date, years: int) -> dt.date:
    try:
        return d.replace(year=d.year + years)
    except ValueError:  # 29 February
        return d.replace(year=d.year + years, day=28)


def window_bounds(timestamps, spec: WindowSpec) -> list[tuple[int, int]]:
    """Index ranges ``[i0, i1)`` of the price rows inside each window.

    Calendar windows start at the first date plus whole steps and cover
    ``[start, start + length)``; a window is kept only if that interval ends
    no later than the day after the last observation.
    """
    n = len(timestamps)
    if spec.unit == "samples":
        if spec.length > n:
            raise ParameterError(f"window of {spec.length} samples exceeds the {n} available")
        return [(i, i + spec.length) for i in range(0, n - spec.length + 1, spec.step)]
    first, last = timestamps[0], timestamps[-1]
    end_of_sample = last + dt.timedelta(days=1)
    stamps = np.array(timestamps, dtype="datetime64[D]")
    out = []
    k = 0
    while True:
        start = _add_years(first, k * spec.step)
        stop = _add_years(start, spec.length)
        if stop > end_of_sample:
            break
        i0 = int(np.searchsorted(stamps, np.datetime64(start)))
        i1 = int(np.searchsorted(stamps, np.datetime64(stop)))
        out.append((i0, i1))
        k += 1
    if not out:
        raise ParameterError(f"a {spec.length}-year window does not fit in {first}..{last}")
    return out


def cmd_windows(cfg: AnalysisConfig, spec: WindowSpec, prices: tuple[PriceSeries, PriceSeries] | None = None) -> dict:
    """Run the full analysis in moving windows over an aligned price pair."""
    if prices is None:
        cfg.validate()
        prices = (read_price_csv(cfg.inputs[0]), read_price_csv(cfg.inputs[1]))
    pa, pb = align_prices(*prices)
    bounds = window_bounds(pa.timestamps, spec)
    out = Path(cfg.out) if cfg.out else None
    records = []
    for i0, i1 in bounds:
        if i1 - i0 - 1 < MIN_WINDOW_SAMPLES:
            raise ParameterError(f"window starting {pa.timestamps[i0]} holds fewer than {MIN_WINDOW_SAMPLES} samples")
        wa = PriceSeries(pa.timestamps[i0:i1], pa.closes[i0:i1])
        wb = PriceSeries(pb.timestamps[i0:i1], pb.closes[i0:i1])
        mx = series_to_measure(volatility_from_prices(wa))
        my = series_to_measure(volatility_from_prices(wb))
        meta = {"source": "prices", "first_date": wa.timestamps[0].isoformat(), "last_date": wa.timestamps[-1].isoformat()}
        wcfg = replace(cfg, out=None)
        result = analyze_measures(mx, my, wcfg, meta)
        start = wa.timestamps[0].isoformat()
        if out is not None:
            write_bundle(result, out / f"window_{start}")
        s = result.summary
        records.append({
            "start": start,
            "end": wa.timestamps[-1].isoformat(),
            "n_samples": mx.length,
            "tau_00": s["tau_00"],
            "max_f": s["max_f"],
            "alpha_x_range": s["alpha_x_range"],
            "alpha_y_range": s["alpha_y_range"],
            "alpha_x_width": s["alpha_x_width"],
            "alpha_y_width": s["alpha_y_width"],
        })
    report = {
        "version": __version__,
        "window": asdict(spec),
        "calendar_convention": (
            "calendar years on observation timestamps; window k covers [first + k*step, first + k*step + length) "
            "and is kept if it ends no later than the day after the last observation"
            if spec.unit == "years" else "consecutive price rows"
        ),
        "n_windows": len(records),
        "windows": records,
        "alpha_x_width_trajectory": [r["alpha_x_width"] for r in records],
        "alpha_y_width_trajectory": [r["alpha_y_width"] for r in records],
    }
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "windows.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return report


# ------------------------------------------------------------------- oracle


def cmd_oracle(p_x: float, p_y: float, grid: MomentGrid, out) -> dict:
    """Write exact binomial surfaces in the bundle schema."""
    params = make_params(p_x, p_y)
    surf = oracle_surfaces(params, grid)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    for name in SURFACE_NAMES:
        write_dense(out / f"{name}.csv", surf[name], grid.p_values, grid.q_values)
    P, Q = np.meshgrid(grid.p_values, grid.q_values, indexing="ij")
    edge = np.zeros(P.shape, dtype=bool)
    JointSpectrum(P, Q, surf["alpha_x"], surf["alpha_y"], surf["f"], edge).write_csv(out / "spectrum.csv")
    info = {"p_x": p_x, "p_y": p_y, "beta": params.beta, "gamma": params.gamma}
    (out / "oracle.json").write_text(json.dumps(info, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return info


@dataclass(frozen=True)
class Tolerances:
    tau: float = 1e-6
    alpha: float = 0.01
    f: float = 0.01
    line: float | None = None  # perpendicular distance to the alpha_x/alpha_y line


def cmd_oracle_compare(bundle, p_x: float | None = None, p_y: float | None = None,
                       tol: Tolerances = Tolerances(), out=None, plane: bool = False) -> dict:
    """Diff a report bundle against the binomial oracle (or the monofractal plane).

    Raises :class:`ToleranceError` after writing the report if any max-norm
    difference exceeds its tolerance.
    """
    bundle = Path(bundle)
    est = {}
    p = q = None
    for name in SURFACE_NAMES:
        values, p_vals, q_vals = read_dense(bundle / f"{name}.csv")
        if p is not None and (not np.array_equal(p, p_vals) or not np.array_equal(q, q_vals)):
            raise ParameterError(f"{name}.csv grid differs from the other surfaces")
        p, q = p_vals, q_vals
        est[name] = values
    spacing = float(q[1] - q[0]) if q.size > 1 else 1.0
    grid = MomentGrid(p, q, spacing)
    P, Q = np.meshgrid(p, q, indexing="ij")

    if plane:
        ref = {"tau": P / 2 + Q / 2 - 1, "alpha_x": np.ones_like(P), "alpha_y": np.ones_like(P), "f": np.ones_like(P)}
        line = None
    else:
        if p_x is None or p_y is None:
            raise ParameterError("binomial comparison needs p_x and p_y")
        params = make_params(p_x, p_y)
        ref = oracle_surfaces(params, grid)
        dist = np.abs(est["alpha_x"] - params.gamma / LN2 - params.beta * est["alpha_y"]) / math.hypot(1.0, params.beta)
        line = float(np.nanmax(dist))

    diffs = {name: est[name] - ref[name] for name in SURFACE_NAMES}
    max_abs = {name: float(np.nanmax(np.abs(d))) for name, d in diffs.items()}
    limits = {"tau": tol.tau, "alpha_x": tol.alpha, "alpha_y": tol.alpha, "f": tol.f}
    failures = [n for n in SURFACE_NAMES if not max_abs[n] <= limits[n]]
    line_tol = tol.line if tol.line is not None else 5 * spacing**2
    if line is not None and not line <= line_tol:
        failures.append("alpha_line")
    report = {
        "reference": "monofractal plane" if plane else {"p_x": p_x, "p_y": p_y},
        "max_abs_diff": max_abs,
        "tolerances": {**limits, "alpha_line": None if plane else line_tol},
        "alpha_line_max_distance": line,
        "failures": failures,
        "passed": not failures,
    }
    out = Path(out) if out else bundle
    out.mkdir(parents=True, exist_ok=True)
    for name, d in diffs.items():
        write_dense(out / f"diff_{name}.csv", d, p, q)
    (out / "compare.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    if failures:
        raise ToleranceError(f"tolerance exceeded for {', '.join(failures)}: " + ", ".join(f"{k}={v:.3g}" for k, v in max_abs.items()))
    return report
