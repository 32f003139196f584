"""Pseudospectral laboratory for the damped generalized KdV-Burgers equation

    u_t + u_xxx - u_xx + a(u) u_x + b(x) u = 0   on a periodic box.
"""

from .spectral import Field, Grid, Spectrum, make_grid
from .solver import SimConfig, Trajectory, picard_solve, simulate

__all__ = ["Field", "Grid", "SimConfig", "Spectrum", "Trajectory", "make_grid", "picard_solve", "simulate"]
__version__ = "0.1.0"
