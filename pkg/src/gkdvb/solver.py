"""Time integration of u_t + u_xxx - u_xx + a(u) u_x + b(x) u = 0.

The stiff part d^2/dx^2 - d^3/dx^3 is diagonal in Fourier space with symbol
i xi^3 - xi^2 and is applied exactly. Constant damping joins the symbol;
variable damping and the flux -d/dx A(u) form the nonlinear part.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .dynamics import (
    DampingKind,
    DampingProfile,
    NonlinearitySpec,
    NonlinearTerm,
    make_damping,
)
from .spectral import Field, Grid, Spectrum, make_grid, rfft_quadratic

log = logging.getLogger(__name__)

CONTOUR_POINTS = 32
BLOWUP_GUARD = 1e6
TAIL_REGION = 0.9  # |x| > 0.9 * half_length is the monitored boundary layer


class BlowUpError(RuntimeError):
    def __init__(self, message, t=None, partial=None):
        super().__init__(message)
        self.t = t
        self.partial = partial


# --- configuration ----------------------------------------------------------


class ICKind(str, Enum):
    GAUSSIAN = "gaussian"
    SINGLE_MODE = "single_mode"
    RANDOM_BAND_LIMITED = "random_band_limited"
    ZERO = "zero"


@dataclass(frozen=True)
class InitialCondition:
    kind: ICKind = ICKind.GAUSSIAN
    amplitude: float = 1.0
    width: float = 2.0
    center: float = 0.0
    k: int = 1
    seed: int = 0
    cutoff: int = 16

    def __post_init__(self):
        object.__setattr__(self, "kind", ICKind(self.kind))


@dataclass(frozen=True)
class DampingSpec:
    kind: DampingKind = DampingKind.ZERO
    lambda0: float = 0.0
    amp: float = 0.0
    alpha: float = -5.0
    beta: float = 5.0
    width: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", DampingKind(self.kind))

    def params(self) -> dict:
        return {
            "lambda0": self.lambda0,
            "amp": self.amp,
            "alpha": self.alpha,
            "beta": self.beta,
            "width": self.width,
        }


@dataclass(frozen=True)
class SimConfig:
    half_length: float = 32.0
    n_points: int = 512
    dt: float = 1e-3
    horizon: float = 1.0
    snapshot_every: int = 100
    nonlinearity: NonlinearitySpec = field(default_factory=NonlinearitySpec)
    damping: DampingSpec = field(default_factory=DampingSpec)
    initial_condition: InitialCondition = field(default_factory=InitialCondition)
    tail_threshold: float = 1e-6
    blowup_guard: float = BLOWUP_GUARD

    def __post_init__(self):
        if not 0 < self.dt <= 0.1:
            raise ValueError(f"dt must lie in (0, 0.1], got {self.dt}")
        if not self.horizon > 0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        ratio = self.horizon / self.dt
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise ValueError(f"horizon/dt = {ratio} is not an integer")
        if self.snapshot_every < 1 or self.n_steps % self.snapshot_every:
            raise ValueError(
                f"snapshot_every={self.snapshot_every} does not divide {self.n_steps} steps"
            )

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.dt))

    def grid(self) -> Grid:
        return make_grid(self.half_length, self.n_points)

    def damping_profile(self, grid: Grid | None = None) -> DampingProfile:
        return make_damping(self.damping.kind, self.damping.params(), grid or self.grid())

    def with_(self, **changes) -> SimConfig:
        return replace(self, **changes)


def initial_field(ic: InitialCondition, grid: Grid) -> Field:
    x = grid.x
    if ic.kind is ICKind.ZERO:
        u = np.zeros_like(x)
    elif ic.kind is ICKind.GAUSSIAN:
        u = ic.amplitude * np.exp(-(((x - ic.center) / ic.width) ** 2))
    elif ic.kind is ICKind.SINGLE_MODE:
        u = ic.amplitude * np.sin(np.pi * ic.k * x / grid.half_length)
    else:
        rng = np.random.default_rng(ic.seed)
        n_modes = min(ic.cutoff, grid.n_points // 2 - 1)
        c = rng.standard_normal(n_modes) + 1j * rng.standard_normal(n_modes)
        xi = np.pi * np.arange(1, n_modes + 1) / grid.half_length
        u = 2.0 * (np.exp(1j * np.outer(x, xi)) @ c).real
        norm = math.sqrt(grid.dx * float(u @ u))
        u = ic.amplitude * u / norm
    return Field(grid, u)


# --- linear part ------------------------------------------------------------


def linear_symbol(grid: Grid, lambda0: float = 0.0) -> np.ndarray:
    """i xi^3 - xi^2 - lambda0 in rfft order; the odd part vanishes at Nyquist."""
    xi = grid.xi_r
    odd = 1j * xi**3
    odd[-1] = 0.0
    return odd - xi**2 - lambda0


def linear_propagator(s: Spectrum, dt: float) -> Spectrum:
    """exp(dt (i xi^3 - xi^2)) applied to every mode."""
    if dt < 0:
        raise ValueError("the semigroup runs forward only (dt >= 0)")
    xi = s.grid.wavenumbers
    odd = 1j * xi**3
    odd[0] = 0.0
    return Spectrum(s.grid, s.coeffs * np.exp(dt * (odd - xi**2)))


def _folded_lambda(damping: DampingProfile) -> float:
    return damping.lambda0 if damping.kind is DampingKind.CONSTANT else 0.0


class ETDRK4:
    """Fourth-order exponential time differencing (Cox-Matthews / Kassam-Trefethen).

    The phi-function coefficients are contour means over CONTOUR_POINTS
    points on a unit circle around each dt*L_k.
    """

    def __init__(self, lin: np.ndarray, nonlinear, dt: float):
        self.nonlinear = nonlinear
        self.dt = dt
        z = dt * lin
        self.E = np.exp(z)
        self.E2 = np.exp(z / 2)
        roots = np.exp(2j * np.pi * (np.arange(CONTOUR_POINTS) + 0.5) / CONTOUR_POINTS)
        r = z[:, None] + roots[None, :]
        er = np.exp(r)
        r3 = r**3
        self.Q = dt * np.mean((np.exp(r / 2) - 1) / r, axis=1)
        self.f1 = dt * np.mean((-4 - r + er * (4 - 3 * r + r * r)) / r3, axis=1)
        self.f2 = dt * np.mean((2 + r + er * (r - 2)) / r3, axis=1)
        self.f3 = dt * np.mean((-4 - 3 * r - r * r + er * (4 - r)) / r3, axis=1)

    def step(self, v: np.ndarray) -> np.ndarray:
        N = self.nonlinear
        Nv = N(v)
        a = self.E2 * v + self.Q * Nv
        Na = N(a)
        b = self.E2 * v + self.Q * Na
        Nb = N(b)
        c = self.E2 * a + self.Q * (2 * Nb - Nv)
        Nc = N(c)
        return self.E * v + self.f1 * Nv + 2 * self.f2 * (Na + Nb) + self.f3 * Nc


def _stepper(cfg: SimConfig, grid: Grid, dt: float) -> ETDRK4:
    damping = cfg.damping_profile(grid)
    lin = linear_symbol(grid, _folded_lambda(damping))
    return ETDRK4(lin, NonlinearTerm(cfg.nonlinearity, damping), dt)


def etdrk4_step(u: Field, cfg: SimConfig, dt: float | None = None) -> Field:
    dt = cfg.dt if dt is None else dt
    guard = cfg.blowup_guard
    if np.max(np.abs(u.values), initial=0.0) > guard:
        raise BlowUpError(f"|u|_inf exceeds blow-up guard {guard:g}")
    n = u.grid.n_points
    with np.errstate(over="ignore", invalid="ignore"):
        w = np.fft.irfft(_stepper(cfg, u.grid, dt).step(np.fft.rfft(u.values)), n)
    if not np.all(np.isfinite(w)) or np.max(np.abs(w)) > guard:
        raise BlowUpError(f"step produced |u|_inf above guard {guard:g} or non-finite values")
    return Field(u.grid, w)


# --- trajectories -----------------------------------------------------------


@dataclass(frozen=True)
class EnergyLedgerEntry:
    t: float
    l2_sq: float
    grad_sq: float
    damp_quad: float
    tail_fraction: float


@dataclass(frozen=True, eq=False)
class Ledger:
    """Per-step energy bookkeeping; columns are aligned numpy arrays."""

    t: np.ndarray
    l2_sq: np.ndarray
    grad_sq: np.ndarray
    damp_quad: np.ndarray
    tail_fraction: np.ndarray
    h3_sq: np.ndarray

    def __len__(self):
        return len(self.t)

    def __getitem__(self, i) -> EnergyLedgerEntry:
        return EnergyLedgerEntry(
            float(self.t[i]),
            float(self.l2_sq[i]),
            float(self.grad_sq[i]),
            float(self.damp_quad[i]),
            float(self.tail_fraction[i]),
        )

    @property
    def l2_norm(self) -> np.ndarray:
        return np.sqrt(self.l2_sq)


@dataclass(frozen=True, eq=False)
class Trajectory:
    config: SimConfig
    times: np.ndarray
    snapshots: list
    ledger: Ledger
    tail_warning: bool = False

    @property
    def grid(self) -> Grid:
        return self.snapshots[0].grid


class _LedgerRecorder:
    def __init__(self, grid: Grid, b: np.ndarray, n_steps: int):
        self.grid = grid
        self.b = b
        self.xi2 = grid.xi_r**2
        self.h3 = (1.0 + self.xi2) ** 3
        self.tail = np.abs(grid.x) > TAIL_REGION * grid.half_length
        self.cols = np.zeros((6, n_steps + 1))
        self.count = 0

    def record(self, t: float, u: np.ndarray, v: np.ndarray) -> float:
        dx = self.grid.dx
        u2 = u * u
        l2 = dx * float(u2.sum())
        tail = dx * float(u2[self.tail].sum()) / l2 if l2 > 0 else 0.0
        self.cols[:, self.count] = (
            t,
            l2,
            rfft_quadratic(self.grid, v, self.xi2),
            dx * float(self.b @ u2),
            tail,
            rfft_quadratic(self.grid, v, self.h3),
        )
        self.count += 1
        return tail

    def ledger(self) -> Ledger:
        c = self.cols[:, : self.count]
        return Ledger(*(np.array(row) for row in c))


def simulate(cfg: SimConfig, u0: Field | None = None) -> Trajectory:
    """Integrate from t = 0 to cfg.horizon with fixed-step ETDRK4.

    ``u0`` overrides the configured initial condition.
    """
    grid = cfg.grid()
    damping = cfg.damping_profile(grid)
    if u0 is None:
        u0 = initial_field(cfg.initial_condition, grid)
    elif u0.grid != grid:
        raise ValueError("initial field does not live on the configured grid")
    stepper = _stepper(cfg, grid, cfg.dt)
    n, n_steps = grid.n_points, cfg.n_steps
    rec = _LedgerRecorder(grid, damping.samples.values, n_steps)

    u = u0.values.copy()
    v = np.fft.rfft(u)
    times, snaps = [0.0], [u0]
    warned = rec.record(0.0, u, v) > cfg.tail_threshold

    def partial():
        return Trajectory(cfg, np.array(times), list(snaps), rec.ledger(), warned)

    for step in range(1, n_steps + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            v = stepper.step(v)
            u = np.fft.irfft(v, n)
        t = step * cfg.dt
        peak = float(np.max(np.abs(u)))
        if not math.isfinite(peak) or peak > cfg.blowup_guard:
            raise BlowUpError(
                f"blow-up guard tripped at t={t:.6g} (|u|_inf={peak:.3g})", t, partial()
            )
        tail = rec.record(t, u, v)
        if tail > cfg.tail_threshold and not warned:
            log.warning("boundary tail fraction %.3g exceeds threshold at t=%.4g", tail, t)
            warned = True
        if step % cfg.snapshot_every == 0:
            times.append(t)
            snaps.append(Field(grid, u))
    return partial()


# --- Picard iteration on the Duhamel formula --------------------------------


@dataclass(frozen=True, eq=False)
class PicardReport:
    iterates: list
    sup_norm_diffs: list
    contraction_ratios: list
    converged: bool
    diverged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.sup_norm_diffs)


def _slab_norm(grid: Grid, D: np.ndarray, h: float) -> float:
    """max_t ||d(t)||_2 + ||d_x||_{L^2(0,T;L^2)} over the time nodes."""
    xi2 = grid.xi_r**2
    l2 = np.array([rfft_quadratic(grid, d) for d in D])
    g2 = np.array([rfft_quadratic(grid, d, xi2) for d in D])
    return math.sqrt(l2.max()) + math.sqrt(h * (g2.sum() - 0.5 * (g2[0] + g2[-1])))


def picard_solve(
    u0: Field,
    cfg: SimConfig,
    T_loc: float = 0.2,
    n_iter: int = 10,
    substeps: int = 64,
    rtol: float = 1e-13,
) -> PicardReport:
    """Fixed-point iteration u <- Gamma(u) for the Duhamel formula on [0, T_loc].

    Gamma(u)(t) = S(t) u0 + int_0^t S(t - s) N(u(s)) ds with the integral taken
    by the composite trapezoid rule on ``substeps`` uniform intervals. The
    iteration stops early once an update falls below ``rtol`` times the
    slab norm of S(t) u0.
    """
    if not 0 < T_loc <= 0.5:
        raise ValueError(f"T_loc must lie in (0, 0.5], got {T_loc}")
    if not 1 <= n_iter <= 30:
        raise ValueError(f"n_iter must lie in [1, 30], got {n_iter}")
    grid = u0.grid
    damping = cfg.damping_profile(grid)
    N = NonlinearTerm(cfg.nonlinearity, damping)
    M = int(substeps)
    h = T_loc / M
    lin = linear_symbol(grid, _folded_lambda(damping))
    E = np.exp(np.outer(h * np.arange(M + 1), lin))
    free = E * np.fft.rfft(u0.values)
    scale = _slab_norm(grid, free, h)
    tol = rtol * scale

    V = free
    iterates, diffs, ratios = [], [], []
    converged = diverged = False
    climbing = 0
    for _ in range(n_iter):
        with np.errstate(over="ignore", invalid="ignore"):
            Nv = np.array([N(v) for v in V])
            W = free.copy()
            for m in range(1, M + 1):
                terms = E[m::-1] * Nv[: m + 1]
                W[m] += h * (terms.sum(axis=0) - 0.5 * (terms[0] + terms[-1]))
        if not np.all(np.isfinite(W)):
            diverged = True
            break
        d = _slab_norm(grid, W - V, h)
        iterates.append(Field(grid, np.fft.irfft(W[-1], grid.n_points)))
        if diffs:
            r = d / diffs[-1] if diffs[-1] > 0 else 0.0
            ratios.append(r)
            climbing = climbing + 1 if r > 1 else 0
        diffs.append(d)
        V = W
        if d <= tol:
            converged = True
            break
        if climbing >= 3:
            diverged = True
            break
    return PicardReport(iterates, diffs, ratios, converged, diverged)
