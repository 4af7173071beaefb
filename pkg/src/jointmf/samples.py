"""Synthetic daily price pairs with co-moving stochastic volatility.

Used for the bundled sample data and for exercising the empirical pipeline
without redistributing market data.
"""

from __future__ import annotations

import datetime as dt
from importlib import resources

import numpy as np

from .measures import PriceSeries, read_price_csv

# AR(1) log-volatility components: (persistence, innovation sd)
_VOL_COMPONENTS = ((0.999, 0.03), (0.99, 0.08), (0.9, 0.15))


def business_days(start: dt.date, end: dt.date) -> list[dt.date]:
    """Weekdays in ``[start, end)``."""
    days = np.arange(np.datetime64(start), np.datetime64(end))
    return [d.item() for d in days[np.is_busday(days)]]


def _ar1(rng, n, phi, sd):
    e = rng.standard_normal(n) * sd
    out = np.empty(n)
    out[0] = e[0]
    for t in range(1, n):
        out[t] = phi * out[t - 1] + e[t]
    return out


def synthetic_price_pair(dates, seed: int = 0, corr: float = 0.8) -> tuple[PriceSeries, PriceSeries]:
    """Two price paths sharing a multi-timescale log-volatility factor.

    Returns have correlation ``corr`` and closes are rounded to cents.
    """
    dates = tuple(dates)
    n = len(dates)
    rng = np.random.default_rng(seed)
    common = sum(_ar1(rng, n, phi, sd) for phi, sd in _VOL_COMPONENTS)
    hx = common + 0.1 * rng.standard_normal(n)
    hy = common + 0.1 * rng.standard_normal(n)
    z1 = rng.standard_normal(n)
    z2 = corr * z1 + np.sqrt(1 - corr**2) * rng.standard_normal(n)
    rx = 0.010 * np.exp(hx) * z1
    ry = 0.012 * np.exp(hy) * z2
    rx[0] = ry[0] = 0.0
    px = np.round(800.0 * np.exp(np.cumsum(rx)), 2)
    py = np.round(100.0 * np.exp(np.cumsum(ry)), 2)
    return PriceSeries(dates, px), PriceSeries(dates, py)


SAMPLE_FILES = ("sample_a.csv", "sample_b.csv")
SAMPLE_START = dt.date(1979, 1, 1)
SAMPLE_LENGTH = 2**13 + 1  # closes, giving a dyadic number of volatilities
SAMPLE_SEED = 19790101


def make_sample_pair() -> tuple[PriceSeries, PriceSeries]:
    """Recreate the bundled sample pair from its fixed calendar and seed."""
    dates = business_days(SAMPLE_START, SAMPLE_START + dt.timedelta(days=int(SAMPLE_LENGTH * 1.5)))
    return synthetic_price_pair(dates[:SAMPLE_LENGTH], seed=SAMPLE_SEED)


def sample_paths():
    base = resources.files("jointmf") / "data"
    return tuple(base / name for name in SAMPLE_FILES)


def load_sample_pair() -> tuple[PriceSeries, PriceSeries]:
    a, b = sample_paths()
    return read_price_csv(a, strict=True), read_price_csv(b, strict=True)
