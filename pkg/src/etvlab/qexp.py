"""q-exponential distributions, the q-logarithm, and straight-line fitting.

The density is ``p0 * [1 - (1 - q) x / x0] ** (1 / (1 - q))`` with
``p0 = (2 - q) / x0``, zero where the bracket is negative. Taking ``ln_q``
of both sides gives a straight line in ``x``; the fit searches for the
``q`` whose q-log transform of the observed frequencies is most linear.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

Q_ONE_TOL = 1e-9
Q_GRID = np.round(np.arange(1001, 2000) / 1000.0, 3)


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class QExpParams:
    q: float
    x0: float

    def __post_init__(self):
        if not self.q < 2:
            raise ValueError(f"q must be < 2 for a normalizable density, got {self.q}")
        if not self.x0 > 0:
            raise ValueError(f"x0 must be positive, got {self.x0}")

    @property
    def p0(self) -> float:
        return (2.0 - self.q) / self.x0


@dataclass(frozen=True)
class QExpFit:
    params: QExpParams
    gamma: float | None
    score: float
    n_points: int

    @property
    def q(self) -> float:
        return self.params.q

    @property
    def x0(self) -> float:
        return self.params.x0

    @property
    def p0(self) -> float:
        return self.params.p0


def _near_one(q: float) -> bool:
    return abs(q - 1.0) < Q_ONE_TOL


def exp_q(q: float, y):
    """Inverse of :func:`q_logarithm`; zero where ``1 + (1 - q) y <= 0``."""
    y = np.asarray(y, dtype=float)
    if _near_one(q):
        return np.exp(y)
    base = 1.0 + (1.0 - q) * y
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(base > 0, np.abs(base) ** (1.0 / (1.0 - q)), 0.0)
    return out[()] if out.ndim == 0 else out


def q_logarithm(q: float, x):
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("q-logarithm is defined for positive arguments only")
    if _near_one(q):
        out = np.log(x)
    else:
        out = (x ** (1.0 - q) - 1.0) / (1.0 - q)
    return out[()] if out.ndim == 0 else out


def q_exponential(params: QExpParams, x):
    x = np.asarray(x, dtype=float)
    return params.p0 * exp_q(params.q, -x / params.x0)


def linearized_form(params: QExpParams, x):
    """``ln_q p0 - [1 + (1 - q) ln_q p0] x / x0``, the q-log of the density."""
    lnq_p0 = q_logarithm(params.q, params.p0)
    return lnq_p0 - (1.0 + (1.0 - params.q) * lnq_p0) * np.asarray(x, dtype=float) / params.x0


def gamma_of(q: float) -> float:
    if not q > 1:
        raise ValueError(f"no power-law tail for q <= 1 (q = {q})")
    return 1.0 / (q - 1.0)


def fit_points(x, freq, weights=None, q_grid=Q_GRID) -> QExpFit:
    """Fit ``(q, x0)`` to positive frequencies at abscissae ``x``.

    For every ``q`` on the grid a weighted least-squares line is fitted to
    ``(x, ln_q freq)``; the ``q`` with the largest weighted R^2 wins. The
    scale ``x0`` follows from intercept ``A`` and slope ``B`` as
    ``x0 = -(1 + (1 - q) A) / B``, and ``p0`` from normalization.
    Weights default to the frequencies themselves.
    """
    x = np.asarray(x, dtype=float)
    f = np.asarray(freq, dtype=float)
    if x.shape != f.shape or x.ndim != 1:
        raise FitError("x and freq must be 1-D arrays of equal length")
    pos = f > 0
    x, f = x[pos], f[pos]
    w = f.copy() if weights is None else np.asarray(weights, dtype=float)[pos]
    if x.size < 3:
        raise FitError(f"need at least 3 positive-frequency points, got {x.size}")
    if np.ptp(f) == 0:
        raise FitError("all frequencies are equal; the q-log line is degenerate")
    w = w / w.sum()
    q = np.asarray(q_grid, dtype=float)[:, None]
    y = (f[None, :] ** (1.0 - q) - 1.0) / (1.0 - q)
    xm = w @ x
    dx = x - xm
    ym = y @ w
    dy = y - ym[:, None]
    sxx = w @ dx**2
    sxy = dy @ (w * dx)
    syy = (dy**2) @ w
    slope = sxy / sxx
    intercept = ym - slope * xm
    with np.errstate(divide="ignore", invalid="ignore"):
        r2 = np.where(syy > 0, sxy**2 / (sxx * syy), -np.inf)
        x0 = -(1.0 + (1.0 - q[:, 0]) * intercept) / slope
    ok = (slope < 0) & (x0 > 0) & np.isfinite(x0)
    if not ok.any():
        raise FitError("no q on the grid gives a decreasing q-log line with positive x0")
    r2 = np.where(ok, r2, -np.inf)
    k = int(np.argmax(r2))
    qk = float(q[k, 0])
    params = QExpParams(qk, float(x0[k]))
    return QExpFit(params, gamma_of(qk) if qk > 1 else None, float(r2[k]), int(x.size))


def fit(dist) -> QExpFit:
    """Fit a pooled ETV distribution, weighting each point by its pooled count."""
    return fit_points(dist.x, dist.freq, weights=dist.counts)
