"""Energy identities, decay fits, observability and functional-inequality checks.

Time integrals run over the per-step ledger with the trapezoid rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .solver import TAIL_REGION, SimConfig, Trajectory, simulate
from .spectral import Field, differentiate, l2_inner, l2_norm, sobolev_norm

NORM_FLOOR = 1e-13


class NotLocalizedError(ValueError):
    """A field carries too much mass near the box edge for an R-based inequality."""


def energy(f: Field) -> float:
    return 0.5 * l2_inner(f, f)


def _cumtrapz(y: np.ndarray, t: np.ndarray) -> np.ndarray:
    out = np.zeros_like(y, dtype=float)
    out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(t))
    return out


def _trapz(y: np.ndarray, t: np.ndarray) -> float:
    return float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(t))) if len(t) > 1 else 0.0


def dissipation_residual(tr: Trajectory) -> np.ndarray:
    """Relative defect of ||u(t)||^2 + 2 int ||u_x||^2 + 2 int int b u^2 = ||u0||^2."""
    L = tr.ledger
    e0 = L.l2_sq[0]
    if e0 == 0:
        return np.zeros(len(L))
    total = L.l2_sq + 2 * _cumtrapz(L.grad_sq, L.t) + 2 * _cumtrapz(L.damp_quad, L.t)
    return (total - e0) / e0


def weighted_identity_residual(tr: Trajectory) -> float:
    """Relative defect of the (T - t)-multiplier identity over the full ledger.

    (T/2)||u0||^2 = (1/2) int ||u||^2 + int (T-t)||u_x||^2 + int (T-t) int b u^2.
    """
    L = tr.ledger
    if L.l2_sq[0] == 0:
        return 0.0
    t = L.t
    T = t[-1]
    lhs = 0.5 * T * L.l2_sq[0]
    rhs = 0.5 * _trapz(L.l2_sq, t) + _trapz((T - t) * (L.grad_sq + L.damp_quad), t)
    return (rhs - lhs) / lhs


def observability_ratio(tr: Trajectory) -> float:
    """||u0||^2 / (||u_x||^2_{L2(0,T;L2)} + int int b u^2)."""
    L = tr.ledger
    num = L.l2_sq[0]
    if num == 0:
        return 0.0
    den = _trapz(L.grad_sq + L.damp_quad, L.t)
    return num / den if den > 0 else math.inf


@dataclass(frozen=True)
class DecayFit:
    rate: float
    amplitude: float
    r_squared: float
    window: tuple


def decay_fit(t, norms, window=None) -> DecayFit:
    """Least-squares fit of log||u(t)|| = log A - rate * t.

    The default window is [0.2 T, 0.9 T]; points with norm below 1e-13 are
    dropped as floating-point floor.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(norms, dtype=float)
    if window is None:
        window = (0.2 * t[-1], 0.9 * t[-1])
    lo, hi = window
    sel = (t >= lo - 1e-12) & (t <= hi + 1e-12)
    if np.any(y[sel] <= 0):
        raise ValueError("decay fit needs positive norms inside the window")
    sel &= y > NORM_FLOOR
    if sel.sum() < 2:
        raise ValueError(f"fewer than two usable points in window {window}")
    ts, ly = t[sel], np.log(y[sel])
    slope, intercept = np.polyfit(ts, ly, 1)
    resid = ly - (intercept + slope * ts)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    r2 = min(max(r2, 0.0), 1.0)
    return DecayFit(-float(slope), math.exp(intercept), r2, (float(ts[0]), float(ts[-1])))


def trajectory_decay_fit(tr: Trajectory, window=None) -> DecayFit:
    return decay_fit(tr.ledger.t, tr.ledger.l2_norm, window)


def sobolev_series(tr: Trajectory, s: float) -> np.ndarray:
    return np.array([sobolev_norm(f, s) for f in tr.snapshots])


def tail_fraction(f: Field) -> float:
    g = f.grid
    u2 = f.values**2
    total = u2.sum()
    if total == 0:
        return 0.0
    return float(u2[np.abs(g.x) > TAIL_REGION * g.half_length].sum() / total)


def _require_localized(f: Field, limit: float = 1e-3) -> None:
    frac = tail_fraction(f)
    if frac >= limit:
        raise NotLocalizedError(f"tail fraction {frac:.3g} >= {limit:g}; inequality on R not applicable")


def gn_check(f: Field) -> float:
    """2 ||f||_2 ||f_x||_2 - ||f||_inf^2, nonnegative for functions on R."""
    _require_localized(f)
    fx = differentiate(f, 1)
    sup = float(np.max(np.abs(f.values), initial=0.0))
    return 2.0 * l2_norm(f) * l2_norm(fx) - sup * sup


def gn_interp_check(f: Field, j: int, m: int) -> float:
    """||d^j f|| / (||d^m f||^(j/m) ||f||^(1 - j/m)) for 0 <= j <= m <= 3."""
    if not 0 <= j <= m <= 3 or m == 0:
        raise ValueError(f"need 0 <= j <= m <= 3 with m >= 1, got j={j}, m={m}")
    _require_localized(f)
    nj = l2_norm(differentiate(f, j))
    nm = l2_norm(differentiate(f, m))
    n0 = l2_norm(f)
    den = nm ** (j / m) * n0 ** (1 - j / m)
    return nj / den if den > 0 else 0.0


@dataclass(frozen=True)
class LipschitzReport:
    ratio: float  # max_t ||u - v||_2 / ||u0 - v0||_2
    h1_ratio: float  # ||(u - v)_x||_{L2(0,T;L2)} / ||u0 - v0||_2


def lipschitz_probe(cfg: SimConfig, u0: Field, v0: Field) -> LipschitzReport:
    """Solution-map sensitivity between two initial data under the same config."""
    d0 = l2_norm(u0 - v0)
    if d0 == 0:
        return LipschitzReport(0.0, 0.0)
    tu = simulate(cfg, u0=u0)
    tv = simulate(cfg, u0=v0)
    diffs = [a - b for a, b in zip(tu.snapshots, tv.snapshots)]
    sup = max(l2_norm(d) for d in diffs)
    g2 = np.array([l2_norm(differentiate(d, 1)) ** 2 for d in diffs])
    return LipschitzReport(sup / d0, math.sqrt(_trapz(g2, tu.times)) / d0)
