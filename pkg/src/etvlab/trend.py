"""Power-trend fits f(t) = a * t**b + c over checkpoint series."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np

B_MIN, B_MAX, B_STEP = -4.0, 0.0, 1e-3

INV_PHI = (math.sqrt(5) - 1) / 2


@dataclass(frozen=True)
class MetricSeries:
    name: str
    checkpoints: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "checkpoints", tuple(float(t) for t in self.checkpoints))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.checkpoints) != len(self.values):
            raise ValueError("checkpoints and values differ in length")
        if len(self.values) < 4:
            raise ValueError("need at least 4 points for a power-trend fit")
        if any(b <= a for a, b in zip(self.checkpoints, self.checkpoints[1:])):
            raise ValueError("checkpoints must be strictly increasing")
        if self.checkpoints[0] < 1:
            raise ValueError("checkpoints must be >= 1")


@dataclass(frozen=True)
class PowerTrendParams:
    a: float
    b: float
    c: float
    r: float

    def __call__(self, t):
        return self.a * np.asarray(t, dtype=float) ** self.b + self.c


def _linear_part(t: np.ndarray, y: np.ndarray, b):
    """Least-squares (a, c) for each exponent in ``b`` and the residual sum of squares."""
    b = np.atleast_1d(np.asarray(b, dtype=float))
    u = t[None, :] ** b[:, None]
    um = u.mean(axis=1)
    du = u - um[:, None]
    dy = y - y.mean()
    suu = (du**2).sum(axis=1)
    suy = du @ dy
    a = suy / suu
    c = y.mean() - a * um
    ssr = (dy**2).sum() - suy**2 / suu
    return a, c, np.maximum(ssr, 0.0)


def golden_section(f, lo: float, hi: float, tol: float = 1e-10) -> float:
    """Minimizer of a unimodal ``f`` on [lo, hi]."""
    c = hi - INV_PHI * (hi - lo)
    d = lo + INV_PHI * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > tol:
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - INV_PHI * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + INV_PHI * (hi - lo)
            fd = f(d)
    return (lo + hi) / 2


def _ssr_at(t, y, b: float) -> float:
    return float(_linear_part(t, y, b)[2][0])


def fit_trend(series: MetricSeries) -> PowerTrendParams:
    """Least-squares ``a t^b + c`` with ``b`` searched on [-4, 0).

    A 1e-3 grid locates the best exponent, golden-section search refines
    it inside the neighbouring grid cells, and ``(a, c)`` are solved in
    closed form for each candidate ``b``. ``r`` is the Pearson correlation
    between fitted and observed values.
    """
    order = np.argsort(series.checkpoints)
    t = np.asarray(series.checkpoints, dtype=float)[order]
    y = np.asarray(series.values, dtype=float)[order]
    if np.ptp(y) == 0:
        return PowerTrendParams(0.0, -1.0, float(y[0]), 1.0)
    grid = B_MIN + B_STEP * np.arange(int(round((B_MAX - B_MIN) / B_STEP)))
    ssr = _linear_part(t, y, grid)[2]
    k = int(np.argmin(ssr))
    lo = grid[max(k - 1, 0)]
    hi = grid[k + 1] if k + 1 < grid.size else B_MAX - 1e-12
    b = golden_section(lambda v: _ssr_at(t, y, v), lo, hi)
    if _ssr_at(t, y, b) > ssr[k]:
        b = float(grid[k])
    a, c, _ = _linear_part(t, y, b)
    params = PowerTrendParams(float(a[0]), float(b), float(c[0]), 0.0)
    fitted = params(t)
    r = 1.0 if np.ptp(fitted) == 0 else float(np.corrcoef(fitted, y)[0, 1])
    return PowerTrendParams(params.a, params.b, params.c, r)


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    return float(np.corrcoef(np.asarray(x, float), np.asarray(y, float))[0, 1])


EXPECTED_SIGNS = {("q", "ETV"): 1, ("x0", "ETV"): -1, ("gamma", "ETV"): -1}


@dataclass(frozen=True)
class SignReport:
    correlations: dict[tuple[str, str], float]

    def sign(self, a: str, b: str) -> int:
        r = self.correlations.get((a, b), self.correlations.get((b, a)))
        if r is None:
            raise KeyError((a, b))
        return int(np.sign(r))

    @property
    def matches_expected(self) -> bool:
        return all(self.sign(a, b) == s for (a, b), s in EXPECTED_SIGNS.items()
                   if (a, b) in self.correlations or (b, a) in self.correlations)


def correlation_signs(series: Mapping[str, MetricSeries] | Sequence[MetricSeries]) -> SignReport:
    """Pearson correlation for every pair of series sharing checkpoints."""
    if not isinstance(series, Mapping):
        series = {s.name: s for s in series}
    names = list(series)
    ref = series[names[0]].checkpoints
    if any(series[n].checkpoints != ref for n in names):
        raise ValueError("series must share checkpoints")
    corr = {(a, b): pearson(series[a].values, series[b].values) for a, b in combinations(names, 2)}
    return SignReport(corr)


def format_table(fits: Mapping[str, PowerTrendParams]) -> str:
    lines = [f"{'metric':<8} {'a':>14} {'b':>14} {'c':>14} {'R':>8}"]
    for name, p in fits.items():
        lines.append(f"{name:<8} {p.a:>14.6g} {p.b:>14.6g} {p.c:>14.6g} {p.r:>8.4f}")
    return "\n".join(lines) + "\n"
