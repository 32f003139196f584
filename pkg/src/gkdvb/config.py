"""Flat dotted-key configuration, scenario presets and SimConfig assembly.

Config files are TOML; nested tables and dotted keys flatten to the same
names (``[grid] n = 512`` and ``grid.n = 512`` are equivalent). Unknown keys
are rejected.
"""

from __future__ import annotations

import math
import sys

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .dynamics import NonlinearitySpec
from .solver import DampingSpec, InitialCondition, SimConfig
from .spectral import make_grid


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


_FLOAT, _INT, _STR, _FLOATS, _LIST = float, int, str, "floats", "list"

SCHEMA = {
    "grid.half_length": _FLOAT,
    "grid.n": _INT,
    "time.dt": _FLOAT,
    "time.horizon": _FLOAT,
    "time.snapshot_every": _INT,
    "nonlinearity.p": _FLOAT,
    "nonlinearity.form": _STR,
    "nonlinearity.C": _FLOAT,
    "damping.kind": _STR,
    "damping.lambda0": _FLOAT,
    "damping.amp": _FLOAT,
    "damping.alpha": _FLOAT,
    "damping.beta": _FLOAT,
    "damping.width": _FLOAT,
    "ic.kind": _STR,
    "ic.amplitude": _FLOAT,
    "ic.width": _FLOAT,
    "ic.center": _FLOAT,
    "ic.k": _INT,
    "ic.seed": _INT,
    "ic.cutoff": _INT,
    "output.dir": _STR,
    "monitor.tail_threshold": _FLOAT,
    "monitor.blowup_guard": _FLOAT,
    "fit.t_start": _FLOAT,
    "fit.t_end": _FLOAT,
    "hyp.range_max": _FLOAT,
    "picard.t_loc": _FLOAT,
    "picard.n_iter": _INT,
    "picard.substeps": _INT,
    "carleman.L": _FLOAT,
    "carleman.x0": _FLOAT,
    "carleman.epsilon": _FLOAT,
    "carleman.T": _FLOAT,
    "carleman.s_min": _FLOAT,
    "carleman.s_max": _FLOAT,
    "carleman.s_count": _INT,
    "carleman.grid_n": _INT,
    "carleman.ratio_grid_n": _INT,
    "carleman.ratio_time_n": _INT,
    "carleman.ratio_s_multiples": _FLOATS,
    "sweep.workers": _INT,
}

# sweep axis -> config key it overrides
SWEEP_AXES = {
    "lambda0": "damping.lambda0",
    "amp": "damping.amp",
    "alpha": "damping.alpha",
    "beta": "damping.beta",
    "kind": "damping.kind",
    "amplitude": "ic.amplitude",
    "width": "ic.width",
    "p": "nonlinearity.p",
    "form": "nonlinearity.form",
}
for _axis in SWEEP_AXES:
    SCHEMA[f"sweep.{_axis}"] = _LIST

DEFAULTS = {
    "grid.half_length": 32.0,
    "grid.n": 512,
    "time.dt": 1e-3,
    "time.horizon": 1.0,
    "nonlinearity.p": 1.0,
    "nonlinearity.form": "identity",
    "nonlinearity.C": 1.0,
    "damping.kind": "zero",
    "damping.lambda0": 0.0,
    "damping.amp": 0.0,
    "damping.alpha": -5.0,
    "damping.beta": 5.0,
    "damping.width": 1.0,
    "ic.kind": "gaussian",
    "ic.amplitude": 1.0,
    "ic.width": 2.0,
    "ic.center": 0.0,
    "ic.k": 1,
    "ic.seed": 0,
    "ic.cutoff": 16,
    "output.dir": "out",
    "monitor.tail_threshold": 1e-6,
    "monitor.blowup_guard": 1e6,
    "hyp.range_max": 50.0,
    "picard.t_loc": 0.2,
    "picard.n_iter": 10,
    "picard.substeps": 64,
    "carleman.L": 1.0,
    "carleman.x0": 2.0,
    "carleman.epsilon": 0.5,
    "carleman.T": 2.0,
    "carleman.s_min": 0.5,
    "carleman.s_max": 1e4,
    "carleman.s_count": 40,
    "carleman.grid_n": 201,
    "carleman.ratio_grid_n": 2048,
    "carleman.ratio_time_n": 512,
    "carleman.ratio_s_multiples": [2.0, 4.0],
    "sweep.workers": 1,
}

_BURGERS_KDV = {
    "grid.half_length": 32.0,
    "grid.n": 512,
    "time.dt": 1e-3,
    "time.horizon": 5.0,
    "nonlinearity.form": "identity",
    "nonlinearity.p": 1.0,
    "ic.kind": "gaussian",
    "ic.amplitude": 1.0,
    "ic.width": 2.0,
}

PRESETS = {
    "zero-ic": {"grid.n": 256, "ic.kind": "zero"},
    "linear-mode": {
        "grid.half_length": math.pi,
        "grid.n": 256,
        "time.horizon": 4.0,
        "nonlinearity.form": "zero",
        "damping.kind": "constant",
        "damping.lambda0": 0.5,
        "ic.kind": "single_mode",
        "ic.k": 1,
        "ic.amplitude": 1.0,
        # a single Fourier mode fills the box; the tail monitor does not apply
        "monitor.tail_threshold": 1.0,
    },
    "burgers-kdv": dict(_BURGERS_KDV),
    "indefinite": {
        **_BURGERS_KDV,
        "damping.kind": "indefinite",
        "damping.lambda0": 0.2,
        "damping.amp": 0.22,
        "fit.t_start": 1.0,
        "fit.t_end": 4.5,
    },
    "localized-p2": {
        **_BURGERS_KDV,
        "time.horizon": 10.0,
        "nonlinearity.form": "signed_power",
        "nonlinearity.p": 2.0,
        "nonlinearity.C": 2.0,
        "damping.kind": "localized",
        "damping.lambda0": 1.0,
        "ic.amplitude": 0.6,
    },
    "blowup-p4": {
        **_BURGERS_KDV,
        "time.horizon": 1.0,
        "nonlinearity.form": "signed_power",
        "nonlinearity.p": 4.0,
        "nonlinearity.C": 12.0,
        "ic.amplitude": 20.0,
        "ic.width": 1.0,
    },
    "decay-sweep": {
        **_BURGERS_KDV,
        "damping.kind": "indefinite",
        "damping.amp": 0.22,
        "fit.t_start": 1.0,
        "fit.t_end": 4.5,
        "sweep.lambda0": [0.2, 0.3, 0.4],
        "sweep.amplitude": [0.5, 1.0, 1.5],
    },
    "carleman": {},
    "picard": {**_BURGERS_KDV, "ic.amplitude": 0.1},
    "picard-zero": {**_BURGERS_KDV, "ic.kind": "zero"},
}


def flatten(table: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in table.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(flatten(v, key + "."))
        else:
            out[key] = v
    return out


def _coerce(key: str, value):
    kind = SCHEMA.get(key)
    if kind is None:
        raise ConfigError(key, "unknown configuration key")
    try:
        if kind is _STR:
            if not isinstance(value, str):
                raise TypeError
            return value
        if kind is _INT:
            if isinstance(value, bool) or int(value) != value:
                raise TypeError
            return int(value)
        if kind is _FLOAT:
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        if not isinstance(value, list) or not value:
            raise TypeError
        if kind == _FLOATS:
            return [float(v) for v in value]
        return list(value)
    except (TypeError, ValueError):
        raise ConfigError(key, f"invalid value {value!r}") from None


def validate(flat: dict) -> dict:
    return {k: _coerce(k, v) for k, v in flat.items()}


def load_file(path) -> dict:
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {path}: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("<file>", f"malformed TOML in {path}: {exc}") from None
    return validate(flatten(raw))


def resolve(preset: str | None = None, path=None, overrides: dict | None = None) -> dict:
    """Defaults, then preset, then file, then explicit overrides."""
    flat = dict(DEFAULTS)
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError("preset", f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        flat.update(validate(PRESETS[preset]))
    if path is not None:
        flat.update(load_file(path))
    if overrides:
        flat.update(validate(overrides))
    return flat


def _snapshot_cadence(n_steps: int, target: int = 100) -> int:
    return math.gcd(n_steps, target) or 1


def sim_config(flat: dict) -> SimConfig:
    """Assemble a SimConfig; errors name the offending key."""

    def build(key, fn):
        try:
            return fn()
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(key, str(exc)) from None

    nonlin = build(
        "nonlinearity",
        lambda: NonlinearitySpec(
            flat["nonlinearity.p"], flat["nonlinearity.form"], flat["nonlinearity.C"]
        ),
    )
    damping = build(
        "damping.kind",
        lambda: DampingSpec(
            flat["damping.kind"],
            flat["damping.lambda0"],
            flat["damping.amp"],
            flat["damping.alpha"],
            flat["damping.beta"],
            flat["damping.width"],
        ),
    )
    ic = build(
        "ic.kind",
        lambda: InitialCondition(
            flat["ic.kind"],
            flat["ic.amplitude"],
            flat["ic.width"],
            flat["ic.center"],
            flat["ic.k"],
            flat["ic.seed"],
            flat["ic.cutoff"],
        ),
    )
    dt, horizon = flat["time.dt"], flat["time.horizon"]
    if not 0 < dt <= 0.1:
        raise ConfigError("time.dt", f"must lie in (0, 0.1], got {dt}")
    if not horizon > 0:
        raise ConfigError("time.horizon", f"must be positive, got {horizon}")
    ratio = horizon / dt
    if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
        raise ConfigError("time.horizon", f"horizon/dt = {ratio} is not an integer")
    grid_error = _grid_error(flat)
    if grid_error:
        key = "grid.half_length" if "half_length" in grid_error else "grid.n"
        raise ConfigError(key, grid_error)
    every = flat.get("time.snapshot_every") or _snapshot_cadence(int(round(ratio)))
    cfg = build(
        "time.snapshot_every",
        lambda: SimConfig(
            half_length=flat["grid.half_length"],
            n_points=flat["grid.n"],
            dt=dt,
            horizon=horizon,
            snapshot_every=every,
            nonlinearity=nonlin,
            damping=damping,
            initial_condition=ic,
            tail_threshold=flat["monitor.tail_threshold"],
            blowup_guard=flat["monitor.blowup_guard"],
        ),
    )
    build("damping", cfg.damping_profile)
    return cfg


def _grid_error(flat: dict) -> str:
    try:
        make_grid(flat["grid.half_length"], flat["grid.n"])
    except ValueError as exc:
        return str(exc)
    return ""


def fit_window(flat: dict, horizon: float) -> tuple:
    return (
        flat.get("fit.t_start", 0.2 * horizon),
        flat.get("fit.t_end", 0.9 * horizon),
    )


def sweep_axes(flat: dict) -> list:
    """[(axis, config key, values)] in a fixed order."""
    return [
        (axis, key, flat[f"sweep.{axis}"])
        for axis, key in SWEEP_AXES.items()
        if f"sweep.{axis}" in flat
    ]
