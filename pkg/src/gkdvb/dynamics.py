"""Nonlinearity a(u), damping b(x), hypothesis checks and the spatial RHS."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from .spectral import Field, Grid, l2_inner, rfft_odd_symbol


class Form(str, Enum):
    IDENTITY = "identity"
    SIGNED_POWER = "signed_power"
    ABS_POWER = "abs_power"
    ZERO = "zero"


class DampingKind(str, Enum):
    CONSTANT = "constant"
    INDEFINITE = "indefinite"
    LOCALIZED = "localized"
    ZERO = "zero"


@dataclass(frozen=True)
class NonlinearitySpec:
    p: float = 1.0
    form: Form = Form.IDENTITY
    growth_constant: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "form", Form(self.form))
        if not self.p >= 1:
            raise ValueError(f"growth exponent p must be >= 1, got {self.p}")
        if not self.growth_constant > 0:
            raise ValueError(f"growth constant must be positive, got {self.growth_constant}")


def a_eval(spec: NonlinearitySpec, mu):
    """Pointwise a(mu); accepts scalars or arrays."""
    mu = np.asarray(mu, dtype=float)
    p = spec.p
    if spec.form is Form.IDENTITY:
        out = mu.copy()
    elif spec.form is Form.SIGNED_POWER:
        out = mu * np.abs(mu) ** (p - 1)
    elif spec.form is Form.ABS_POWER:
        out = np.abs(mu) ** p
    else:
        out = np.zeros_like(mu)
    return out if out.ndim else float(out)


def A_primitive(spec: NonlinearitySpec, mu):
    """A(mu) = integral of a from 0 to mu, in closed form."""
    mu = np.asarray(mu, dtype=float)
    p = spec.p
    if spec.form is Form.IDENTITY:
        out = 0.5 * mu * mu
    elif spec.form is Form.SIGNED_POWER:
        out = np.abs(mu) ** (p + 1) / (p + 1)
    elif spec.form is Form.ABS_POWER:
        out = np.sign(mu) * np.abs(mu) ** (p + 1) / (p + 1)
    else:
        out = np.zeros_like(mu)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class GrowthReport:
    passed: bool
    worst_margin: float
    worst_mu: float
    worst_order: int  # derivative order of the tightest bound


def check_growth(
    spec: NonlinearitySpec,
    range_max: float,
    n_samples: int = 2001,
    a_func: Callable[[np.ndarray], np.ndarray] | None = None,
) -> GrowthReport:
    """Sample |a^(j)(mu)| <= C (1 + |mu|^(p-j)) on [-range_max, range_max].

    j = 0, 1, and also 2 when p >= 2. Derivatives are central differences.
    ``a_func`` replaces a(.) (test hook for non-admissible nonlinearities).
    """
    if not range_max > 0:
        raise ValueError("range_max must be positive")
    f = a_func if a_func is not None else (lambda m: a_eval(spec, m))
    mu = np.linspace(-range_max, range_max, n_samples)
    scale = np.maximum(1.0, np.abs(mu))
    h1 = 1e-6 * scale
    h2 = 1e-4 * scale
    derivs = [
        np.asarray(f(mu), dtype=float),
        (f(mu + h1) - f(mu - h1)) / (2 * h1),
    ]
    if spec.p >= 2:
        derivs.append((f(mu + h2) - 2 * f(mu) + f(mu - h2)) / h2**2)

    C, p = spec.growth_constant, spec.p
    worst = (math.inf, 0.0, 0)
    for j, d in enumerate(derivs):
        with np.errstate(over="ignore", invalid="ignore"):
            margin = C * (1 + np.abs(mu) ** (p - j)) - np.abs(d)
        margin = np.where(np.isfinite(margin), margin, -np.inf)
        i = int(np.argmin(margin))
        if margin[i] < worst[0]:
            worst = (float(margin[i]), float(mu[i]), j)
    return GrowthReport(worst[0] >= 0, *worst)


# --- damping ----------------------------------------------------------------


def smoothstep(t):
    t = np.clip(t, 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


@dataclass(frozen=True, eq=False)
class DampingProfile:
    kind: DampingKind
    lambda0: float
    samples: Field
    params: dict = field(default_factory=dict)

    @property
    def grid(self) -> Grid:
        return self.samples.grid

    def lambda1(self) -> np.ndarray:
        """The indefinite perturbation b - lambda0 on the grid."""
        if self.kind is DampingKind.LOCALIZED:
            raise ValueError("localized damping carries no lambda0/lambda1 split")
        return self.samples.values - self.lambda0


def make_damping(kind, params: dict | None, grid: Grid) -> DampingProfile:
    """Build b(x) on the grid.

    constant: b = lambda0.  indefinite: b = lambda0 - amp * exp(-x^2).
    localized: b = lambda0 * (1 - S(x)) with S a C^1 plateau that is 1 on
    [alpha + width, beta - width] and 0 outside (alpha, beta).
    """
    kind = DampingKind(kind)
    params = dict(params or {})
    x = grid.x
    lam0 = float(params.get("lambda0", 0.0))
    if lam0 < 0:
        raise ValueError(f"lambda0 must be nonnegative, got {lam0}")

    if kind is DampingKind.ZERO:
        lam0 = 0.0
        b = np.zeros_like(x)
    elif kind is DampingKind.CONSTANT:
        if lam0 <= 0:
            raise ValueError("constant damping needs lambda0 > 0")
        b = np.full_like(x, lam0)
    elif kind is DampingKind.INDEFINITE:
        amp = float(params.get("amp", 0.0))
        if amp < 0:
            raise ValueError(f"bump amplitude must be nonnegative, got {amp}")
        params["amp"] = amp
        b = lam0 - amp * np.exp(-x * x)
    else:
        alpha = float(params.get("alpha", -5.0))
        beta = float(params.get("beta", 5.0))
        width = float(params.get("width", 1.0))
        if not alpha < beta:
            raise ValueError(f"need alpha < beta, got alpha={alpha}, beta={beta}")
        if not 0 < width <= (beta - alpha) / 2:
            raise ValueError(f"transition width must lie in (0, (beta-alpha)/2], got {width}")
        params.update(alpha=alpha, beta=beta, width=width)
        plateau = smoothstep((x - alpha) / width) * smoothstep((beta - x) / width)
        b = lam0 * (1.0 - plateau)
    params["lambda0"] = lam0
    return DampingProfile(kind, lam0, Field(grid, b), params)


def c_p(p: float) -> float:
    return (1.0 - 1.0 / (2.0 * p)) * (2.0 / p) ** (1.0 / (2.0 * p - 1.0))


@dataclass(frozen=True)
class HypReport:
    hypothesis: str
    passed: bool
    margin: float
    lhs: float
    rhs: float
    c_p: float | None = None


def check_hyp_b(d: DampingProfile, p: float) -> HypReport:
    """||lambda1||_{L^p} < (lambda0 / c_p)^(1 - 1/(2p)) by grid quadrature."""
    if d.kind is DampingKind.LOCALIZED:
        raise ValueError("hyp_b does not apply to localized damping")
    lam1 = d.lambda1()
    lhs = (d.grid.dx * float(np.sum(np.abs(lam1) ** p))) ** (1.0 / p)
    cp = c_p(p)
    rhs = (d.lambda0 / cp) ** (1.0 - 1.0 / (2.0 * p))
    margin = rhs - lhs
    passed = d.lambda0 > 0 and margin > 0
    return HypReport("hyp_b", passed, margin, lhs, rhs, cp)


def gaussian_bump_lp_norm(amp: float, p: float) -> float:
    """Closed form of ||amp * exp(-x^2)||_{L^p(R)}."""
    return amp * (math.pi / p) ** (1.0 / (2.0 * p))


def check_hyp_a(
    d: DampingProfile, alpha: float | None = None, beta: float | None = None
) -> HypReport:
    """b >= 0 everywhere and b bounded below by a positive constant off (alpha, beta).

    The margin is the largest admissible lambda0, i.e. min of b outside the
    interval, or the (negative) minimum of b when b changes sign.
    """
    alpha = d.params.get("alpha", 0.0) if alpha is None else alpha
    beta = d.params.get("beta", alpha) if beta is None else beta
    x, b = d.grid.x, d.samples.values
    outside = (x <= alpha) | (x >= beta)
    b_min = float(b.min())
    lam_best = float(b[outside].min()) if outside.any() else math.inf
    margin = lam_best if b_min >= 0 else b_min
    return HypReport("hyp_a", margin > 0, margin, lam_best, d.lambda0)


# --- spatial right-hand side ------------------------------------------------


class NonlinearTerm:
    """N(u) = -d/dx dealias(A(u)) - b u, evaluated on rfft data.

    Constant damping is left out when ``fold_constant`` is set, since the
    integrators treat it exactly in the linear part.
    """

    def __init__(self, spec: NonlinearitySpec, damping: DampingProfile, fold_constant=True):
        g = damping.grid
        self.grid = g
        self.spec = spec
        n = g.n_points
        keep = 3 * np.arange(n // 2 + 1) <= n
        self.flux_symbol = -rfft_odd_symbol(g) * keep
        self.has_flux = spec.form is not Form.ZERO
        b = damping.samples.values
        skip_b = damping.kind is DampingKind.ZERO or (
            fold_constant and damping.kind is DampingKind.CONSTANT
        )
        self.b = None if skip_b else b

    def __call__(self, v: np.ndarray) -> np.ndarray:
        n = self.grid.n_points
        u = np.fft.irfft(v, n)
        out = np.zeros_like(v)
        if self.has_flux:
            out = self.flux_symbol * np.fft.rfft(A_primitive(self.spec, u))
        if self.b is not None:
            out = out - np.fft.rfft(self.b * u)
        return out


def rhs_nonlinear(u: Field, spec: NonlinearitySpec, d: DampingProfile) -> Field:
    """-d/dx dealias(A(u)) - b u as a physical-space field."""
    if u.grid != d.grid:
        raise ValueError("field and damping live on different grids")
    with np.errstate(over="raise", invalid="raise"):
        try:
            v = NonlinearTerm(spec, d, fold_constant=False)(np.fft.rfft(u.values))
        except FloatingPointError as exc:
            raise OverflowError("A(u) overflowed; solution has blown up") from exc
    return Field(u.grid, np.fft.irfft(v, u.grid.n_points))


def flux_orthogonality(u: Field, spec: NonlinearitySpec) -> float:
    """<-d/dx A(u), u>; vanishes for resolved, localized u."""
    zero = make_damping(DampingKind.ZERO, {}, u.grid)
    return l2_inner(rhs_nonlinear(u, spec, zero), u)
