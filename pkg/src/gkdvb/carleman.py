"""Carleman weights for the operator P = d/dt - d^2/dx^2 + d^3/dx^3 on (0,T) x (-L,L).

With phi(t, x) = psi(x) / (t (T - t)) and u = exp(-s phi) q, the conjugated
operator reads w = A u + B u_x + C u_xx + u_xxx + u_t, and the double product
of its symmetric/antisymmetric parts produces the quadratic form
D u^2 + E u_x^2 + F u_xx^2. Everything below is closed form in the
derivatives psi, psi', ..., psi^(6) and in h(t) = 1/(t(T-t)), h', h''.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

CHECK_POINTS = 1024


@dataclass(frozen=True)
class CarlemanWeight:
    """Quadratic weight psi(x) = M - (x - x0)^2 on [-L, L]."""

    L: float
    x0: float
    epsilon: float
    T: float
    M: float = field(default=None)

    def __post_init__(self):
        if self.M is None:
            object.__setattr__(self, "M", (abs(self.x0) + self.L) ** 2 + 1.0)

    def psi_derivs(self, x) -> tuple:
        """(psi, psi', ..., psi^(6)) evaluated at x."""
        x = np.asarray(x, dtype=float)
        zero = np.zeros_like(x)
        return (
            self.M - (x - self.x0) ** 2,
            -2.0 * (x - self.x0),
            np.full_like(x, -2.0),
            zero,
            zero,
            zero,
            zero,
        )

    def c1_margin(self) -> float:
        """min |psi'| over [-L, L]; the max of psi'' is -2 < 0 for every member."""
        return 2.0 * (abs(self.x0) - self.L)

    def c2_margin(self) -> float:
        """min of (1 - eps) psi''^2 - psi' psi''' over [-L, L]."""
        return 4.0 * (1.0 - self.epsilon)


def make_weight(L: float, x0: float, epsilon: float = 0.5, T: float = 2.0, M=None) -> CarlemanWeight:
    if not L > 0:
        raise ValueError(f"L must be positive, got {L}")
    if not abs(x0) > L:
        raise ValueError(f"|x0| must exceed L (psi' would vanish inside), got x0={x0}, L={L}")
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    if not T > 0:
        raise ValueError(f"T must be positive, got {T}")
    w = CarlemanWeight(float(L), float(x0), float(epsilon), float(T), M)
    x = np.linspace(-L, L, CHECK_POINTS)
    psi, d1, d2, d3, *_ = w.psi_derivs(x)
    if psi.min() <= 0:
        raise ValueError(f"psi is not positive on [-L, L] (min {psi.min():g})")
    if np.abs(d1).min() <= 0 or d2.max() >= 0:
        raise ValueError("condition c1 fails: need |psi'| > 0 and psi'' < 0")
    if ((1 - epsilon) * d2**2 - d1 * d3).min() <= 0:
        raise ValueError("condition c2 fails: need psi' psi''' < (1 - eps) psi''^2")
    return w


def time_factors(T: float, t):
    """h = 1/(t(T-t)) and its first two time derivatives."""
    t = np.asarray(t, dtype=float)
    h = 1.0 / (t * (T - t))
    g = 2.0 * t - T
    return h, g * h * h, 2.0 * h * h + 2.0 * g * g * h**3


@dataclass(frozen=True)
class CoeffSample:
    A: float
    B: float
    C: float
    D: float
    E: float
    F: float


def coefficient_parts(P, s, h, h1, h2, eps):
    """All coefficient building blocks from psi-derivatives P and time factors."""
    P0, P1, P2, P3, P4, P5, P6 = P
    s2, s3 = s * s, s**3
    hh, h3 = h * h, h**3

    A = s * (P0 * h1 - P2 * h + P3 * h) + 3 * s2 * P1 * P2 * hh + s3 * P1**3 * h3 - s2 * P1**2 * hh
    A_t = (
        s * (P0 * h2 - P2 * h1 + P3 * h1)
        + 6 * s2 * P1 * P2 * h * h1
        + 3 * s3 * P1**3 * hh * h1
        - 2 * s2 * P1**2 * h * h1
    )
    A_x = (
        s * (P1 * h1 - P3 * h + P4 * h)
        + 3 * s2 * (P2**2 + P1 * P3) * hh
        + 3 * s3 * P1**2 * P2 * h3
        - 2 * s2 * P1 * P2 * hh
    )
    A_xxx = (
        s * (P3 * h1 - P5 * h + P6 * h)
        + 3 * s2 * (3 * P3**2 + 4 * P2 * P4 + P1 * P5) * hh
        + 3 * s3 * (2 * P2**3 + 6 * P1 * P2 * P3 + P1**2 * P4) * h3
        - 2 * s2 * (3 * P2 * P3 + P1 * P4) * hh
    )
    B = 3 * s * P2 * h + 3 * s2 * P1**2 * hh - 2 * s * P1 * h
    B_x = 3 * s * P3 * h + 6 * s2 * P1 * P2 * hh - 2 * s * P2 * h
    C = 3 * s * P1 * h - 1
    C_x = 3 * s * P2 * h
    C_xx = 3 * s * P3 * h
    C_xxx = 3 * s * P4 * h
    C_t = 3 * s * P1 * h1

    AB_x = A_x * B + A * B_x
    CxA_x = C_xx * A + C_x * A_x
    D = -(A_t + A_xxx + AB_x + CxA_x)
    # keeps the -eps C_x^2 term left over from the Young inequality
    E = 3 * A_x + B * C_x - B_x * C - (C_x**2 + C * C_xx) + C_xxx + C_t - eps * C_x**2
    F = -3 * C_x
    return dict(
        A=A, A_t=A_t, A_x=A_x, A_xxx=A_xxx, B=B, B_x=B_x, C=C, C_x=C_x,
        AB_x=AB_x, CxA_x=CxA_x, D=D, E=E, F=F,
    )


def _check_time(w: CarlemanWeight, t) -> None:
    t = np.asarray(t)
    if np.any(t <= 0) or np.any(t >= w.T):
        raise ValueError(f"t must lie strictly inside (0, {w.T})")


def carleman_coefficients(w: CarlemanWeight, s: float, t: float, x: float) -> CoeffSample:
    _check_time(w, t)
    if not s > 0:
        raise ValueError("s must be positive")
    parts = coefficient_parts(w.psi_derivs(x), s, *time_factors(w.T, t), w.epsilon)
    return CoeffSample(*(float(parts[k]) for k in "ABCDEF"))


def scaled_coefficients(w: CarlemanWeight, s: float, t, x):
    """D (t(T-t))^5 / s^5, E (t(T-t))^2 / s^2 and F t(T-t) / s on a point set.

    F = -9 s psi'' h, so its scaled form is -9 psi'' without rounding.
    """
    P = w.psi_derivs(x)
    h, h1, h2 = time_factors(w.T, t)
    parts = coefficient_parts(P, s, h, h1, h2, w.epsilon)
    theta = 1.0 / h
    D = parts["D"] * theta**5 / s**5
    E = parts["E"] * theta**2 / s**2
    F = -9.0 * P[2] * np.ones_like(D)
    return D, E, F


@dataclass(frozen=True)
class ScanReport:
    s_values: np.ndarray
    min_D: np.ndarray
    min_E: np.ndarray
    min_F: np.ndarray
    s_star: float | None

    @property
    def positive(self) -> np.ndarray:
        return (self.min_D > 0) & (self.min_E > 0) & (self.min_F > 0)

    @property
    def plateau(self) -> tuple:
        """Empirical (C1, C2, C3): scaled minima at the largest sampled s."""
        return float(self.min_D[-1]), float(self.min_E[-1]), float(self.min_F[-1])

    @property
    def monotone(self) -> bool:
        """All minima stay positive for every sampled s beyond s_star."""
        if self.s_star is None:
            return False
        return bool(np.all(self.positive[self.s_values >= self.s_star]))


def positivity_scan(w: CarlemanWeight, s_values, grid_n: int = 201) -> ScanReport:
    """Minimum of the scaled D, E, F over [-L, L] x [T/20, 19T/20] for each s."""
    s_values = np.asarray(s_values, dtype=float)
    if np.any(s_values <= 0) or np.any(np.diff(s_values) <= 0):
        raise ValueError("s_values must be positive and strictly ascending")
    x = np.linspace(-w.L, w.L, grid_n)
    t = np.linspace(w.T / 20, 19 * w.T / 20, grid_n)
    X, Tm = np.meshgrid(x, t, indexing="ij")
    mins = np.array([[m.min() for m in scaled_coefficients(w, s, Tm, X)] for s in s_values])
    pos = np.all(mins > 0, axis=1)
    s_star = float(s_values[np.argmax(pos)]) if pos.any() else None
    return ScanReport(s_values, mins[:, 0], mins[:, 1], mins[:, 2], s_star)


# --- the weighted inequality on admissible test functions ---------------------

TEST_FAMILY = ("const", "sin", "bubble")


def _time_profile(q_id: str, t: np.ndarray, T: float):
    if q_id == "const":
        return np.ones_like(t), np.zeros_like(t)
    if q_id == "sin":
        k = math.pi / T
        return np.sin(k * t), k * np.cos(k * t)
    if q_id == "bubble":
        return t * (T - t), T - 2 * t
    if q_id == "zero":
        return np.zeros_like(t), np.zeros_like(t)
    raise ValueError(f"unknown test function {q_id!r}; choose from {TEST_FAMILY + ('zero',)}")


@dataclass(frozen=True)
class CarlemanRatio:
    q_id: str
    s: float
    lhs: float
    rhs: float
    ratio: float
    log_scale: float  # lhs and rhs carry the factor exp(log_scale)


def _trapz2(f: np.ndarray, x: np.ndarray, t: np.ndarray) -> float:
    return float(np.trapezoid(np.trapezoid(f, x, axis=0), t))


def carleman_ratio(
    q_id: str, w: CarlemanWeight, s: float, grid_n: int = 2048, time_n: int = 512
) -> CarlemanRatio:
    """Weighted left side over weighted |q_t - q_xx + q_xxx|^2 for q = (L^2 - x^2)^3 g(t).

    The weight exp(-2 s psi / (t(T-t))) vanishes to all orders at t = 0, T,
    where the integrand is taken as 0. Both integrals are rescaled by the
    largest weight on the grid before summation.
    """
    L, T = w.L, w.T
    x = np.linspace(-L, L, grid_n + 1)
    t = np.linspace(0.0, T, time_n + 1)
    ti = t[1:-1]
    g, gt = _time_profile(q_id, ti, T)
    X, Tm = np.meshgrid(x, ti, indexing="ij")
    r = L * L - X * X
    q = r**3 * g
    q_x = -6 * X * r**2 * g
    q_xx = (-6 * r**2 + 24 * X * X * r) * g
    q_xxx = (72 * X * r - 48 * X**3) * g
    q_t = r**3 * gt
    theta = Tm * (T - Tm)
    logw = -2.0 * s * w.psi_derivs(X)[0] / theta
    shift = float(logw.max())
    wt = np.exp(logw - shift)
    sig = s / theta
    left = (sig**5 * q * q + sig**3 * q_x * q_x + sig * q_xx * q_xx) * wt
    right = (q_t - q_xx + q_xxx) ** 2 * wt
    pad = np.zeros((x.size, 1))
    lhs = _trapz2(np.hstack([pad, left, pad]), x, t)
    rhs = _trapz2(np.hstack([pad, right, pad]), x, t)
    if rhs == 0:
        if lhs > 0:
            raise ZeroDivisionError("right-hand side vanishes while the left does not")
        ratio = 0.0
    else:
        ratio = lhs / rhs
    scale = math.exp(shift) if shift > -700 else 0.0
    return CarlemanRatio(q_id, float(s), lhs * scale, rhs * scale, ratio, shift)
