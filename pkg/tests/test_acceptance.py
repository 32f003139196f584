"""Acceptance criteria, one test per criterion.

Each test prints a single PASS/FAIL line (visible under ``pytest -v`` and
when run as a script: ``python tests/test_acceptance.py``).
"""

import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conftest import band_limited  # noqa: E402
from gkdvb.carleman import TEST_FAMILY, carleman_ratio, make_weight, positivity_scan  # noqa: E402
from gkdvb.cli import main as cli_main  # noqa: E402
from gkdvb.config import fit_window, resolve, sim_config  # noqa: E402
from gkdvb.diagnostics import (  # noqa: E402
    decay_fit,
    dissipation_residual,
    observability_ratio,
    sobolev_series,
    weighted_identity_residual,
)
from gkdvb.dynamics import c_p, check_hyp_a, check_hyp_b  # noqa: E402
from gkdvb.solver import (  # noqa: E402
    InitialCondition,
    initial_field,
    linear_propagator,
    picard_solve,
    simulate,
)
from gkdvb.spectral import (  # noqa: E402
    differentiate,
    inverse,
    l2_inner,
    l2_norm,
    make_grid,
    sobolev_norm,
    transform,
)


def report(capsys, number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title} | {detail}"
    if capsys is None:
        print(line)
    else:
        with capsys.disabled():
            print("\n" + line)
    assert ok, line


# --- 1 -------------------------------------------------------------------------


def criterion_1(capsys=None):
    start = time.perf_counter()
    g = make_grid(32.0, 512)
    worst = [0.0, 0.0, 0.0]
    for seed in range(100):
        f = band_limited(g, seed)
        h = band_limited(g, seed + 1000)
        n = l2_norm(f)
        worst[0] = max(worst[0], l2_norm(inverse(transform(f)) - f) / n)
        worst[1] = max(worst[1], abs(sobolev_norm(f, 0) - math.sqrt(l2_inner(f, f))) / n)
        lhs = l2_inner(differentiate(f, 1), h)
        rhs = -l2_inner(f, differentiate(h, 1))
        scale = l2_norm(differentiate(f, 1)) * l2_norm(h)
        worst[2] = max(worst[2], abs(lhs - rhs) / scale)
    elapsed = time.perf_counter() - start
    ok = worst[0] < 1e-12 and worst[1] < 1e-12 and worst[2] < 1e-11 and elapsed < 5
    detail = (
        f"round-trip {worst[0]:.2e}, Parseval {worst[1]:.2e}, by-parts {worst[2]:.2e}, "
        f"{elapsed:.2f}s"
    )
    report(capsys, 1, "spectral substrate", ok, detail)


# --- 2 -------------------------------------------------------------------------


def criterion_2(capsys=None):
    start = time.perf_counter()
    tr = simulate(sim_config(resolve("linear-mode")))
    L = tr.ledger
    exact = np.exp(-1.5 * L.t) * L.l2_norm[0]
    err = float(np.max(np.abs(L.l2_norm - exact) / exact))
    fit = decay_fit(L.t, L.l2_norm)
    elapsed = time.perf_counter() - start
    ok = err < 1e-8 and abs(fit.rate - 1.5) < 1e-6 and elapsed < 10
    detail = f"max rel err {err:.2e}, rate {fit.rate:.10f}, {elapsed:.2f}s"
    report(capsys, 2, "exact linear decay", ok, detail)


# --- 3 / 4 -----------------------------------------------------------------------

DAMPINGS = {
    "zero": {"damping.kind": "zero"},
    "constant": {"damping.kind": "constant", "damping.lambda0": 0.5},
    "localized": {"damping.kind": "localized", "damping.lambda0": 1.0},
    "indefinite": {"damping.kind": "indefinite", "damping.lambda0": 0.2, "damping.amp": 0.22},
}
_RUNS = {}


def burgers_run(kind):
    if kind not in _RUNS:
        flat = resolve("burgers-kdv", overrides=DAMPINGS[kind])
        start = time.perf_counter()
        tr = simulate(sim_config(flat))
        _RUNS[kind] = (tr, time.perf_counter() - start)
    return _RUNS[kind]


def criterion_3(kind, capsys=None):
    tr, elapsed = burgers_run(kind)
    diss = float(np.max(np.abs(dissipation_residual(tr))))
    weighted = abs(weighted_identity_residual(tr))
    ok = diss < 1e-6 and weighted < 1e-5 and elapsed < 120 and not tr.tail_warning
    detail = f"max dissipation residual {diss:.2e}, weighted {weighted:.2e}, {elapsed:.2f}s"
    report(capsys, 3, f"energy identity ({kind})", ok, detail)


def criterion_4(capsys=None):
    tr, _ = burgers_run("constant")
    L = tr.ledger
    excess = float(np.max(L.l2_norm - (np.exp(-0.5 * L.t) * L.l2_norm[0] + 1e-8)))
    ind, _ = burgers_run("indefinite")
    hyp = check_hyp_b(ind.config.damping_profile(), 1.0)
    fit = decay_fit(ind.ledger.t, ind.ledger.l2_norm, (1.0, 4.5))
    ok = excess <= 0 and hyp.passed and fit.rate >= 0.18 and fit.r_squared > 0.99
    detail = (
        f"bound slack {-excess:.3e}, indefinite rate {fit.rate:.4f} (>= 0.18), "
        f"R^2 {fit.r_squared:.5f}"
    )
    report(capsys, 4, "energy-law decay bound", ok, detail)


# --- 5 -------------------------------------------------------------------------


def criterion_5(capsys=None):
    start = time.perf_counter()
    flat = resolve("localized-p2")
    out = []
    for n in (512, 1024):
        cfg = sim_config({**flat, "grid.n": n})
        tr = simulate(cfg)
        fit = decay_fit(tr.ledger.t, tr.ledger.l2_norm, fit_window(flat, cfg.horizon))
        out.append((cfg, tr, fit, observability_ratio(tr)))
    elapsed = time.perf_counter() - start
    cfg, tr, fit, obs = out[0]
    obs_fine = out[1][3]
    drift = abs(obs_fine - obs) / obs
    ok = (
        check_hyp_a(cfg.damping_profile()).passed
        and tr.ledger.l2_norm[0] <= 1.0
        and fit.rate > 0
        and fit.r_squared > 0.95
        and math.isfinite(obs)
        and drift <= 0.10
        and elapsed < 180
    )
    detail = (
        f"rate {fit.rate:.5f}, R^2 {fit.r_squared:.5f}, observability {obs:.5f} -> "
        f"{obs_fine:.5f} ({drift:.1e}), {elapsed:.1f}s"
    )
    report(capsys, 5, "localized damping p=2", ok, detail)


# --- 6 -------------------------------------------------------------------------


def criterion_6(capsys=None):
    g = make_grid(32.0, 512)
    u0 = initial_field(InitialCondition("random_band_limited", 1.0, seed=5, cutoff=200), g)
    h3_one = sobolev_norm(inverse(linear_propagator(transform(u0), 1.0)), 3)
    bound = 1.115 * l2_norm(u0)

    tr, _ = burgers_run("zero")
    t = tr.ledger.t
    h3 = np.sqrt(tr.ledger.h3_sq)
    late = h3[t >= 0.5]
    half = t[t >= 0.5] <= t[-1] / 2
    bounded = np.all(np.isfinite(late)) and late[~half].max() <= late[half].max()
    ok = h3_one <= bound and bounded
    detail = (
        f"linear ||u(1)||_H3 {h3_one:.4f} <= {bound:.4f}; nonlinear H3 on [0.5,T] "
        f"max {late.max():.4f}, final {late[-1]:.4f}"
    )
    report(capsys, 6, "smoothing", ok, detail)


# --- 7 -------------------------------------------------------------------------


def criterion_7(capsys=None):
    start = time.perf_counter()
    cfg = sim_config(resolve("picard"))
    u0 = initial_field(cfg.initial_condition, cfg.grid())
    rep = picard_solve(u0, cfg, 0.2, 10, 64)
    ref = simulate(cfg.with_(dt=1e-4, horizon=0.2, snapshot_every=2000)).snapshots[-1]
    rel = l2_norm(rep.iterates[-1] - ref) / l2_norm(ref)
    elapsed = time.perf_counter() - start
    worst = max(rep.contraction_ratios)
    ok = rep.converged and worst < 0.5 and rel < 1e-4 and elapsed < 30
    detail = (
        f"{rep.iterations} iterations, max ratio {worst:.4f}, rel diff vs ETDRK4 {rel:.2e}, "
        f"{elapsed:.2f}s"
    )
    report(capsys, 7, "Picard contraction", ok, detail)


# --- 8 -------------------------------------------------------------------------


def criterion_8(capsys=None):
    d = sim_config(resolve("indefinite")).damping_profile()
    hyp = check_hyp_b(d, 1.0)
    e1, e2 = abs(c_p(1) - 1.0), abs(c_p(2) - 0.75)
    target = 0.4472 - 0.3899
    ok = e1 <= 1e-15 and e2 <= 1e-15 and abs(hyp.margin - target) <= 1e-3 and hyp.passed
    detail = f"c_p(1) err {e1:.1e}, c_p(2) err {e2:.1e}, margin {hyp.margin:.5f} vs {target:.4f}"
    report(capsys, 8, "hypothesis arithmetic", ok, detail)


# --- 9 -------------------------------------------------------------------------


def criterion_9(capsys=None):
    start = time.perf_counter()
    w = make_weight(1.0, 2.0, 0.5, 2.0)
    scan = positivity_scan(w, np.geomspace(0.5, 1e4, 40), 201)
    c1, c2, c3 = scan.plateau
    drifts = []
    finite = True
    if scan.s_star is not None:
        for q in TEST_FAMILY:
            base = carleman_ratio(q, w, 2 * scan.s_star, 2048, 512)
            fine = carleman_ratio(q, w, 2 * scan.s_star, 4096, 1024)
            finite &= math.isfinite(base.ratio) and math.isfinite(fine.ratio)
            drifts.append(abs(fine.ratio - base.ratio) / fine.ratio)
    elapsed = time.perf_counter() - start
    ok = (
        w.c1_margin() == 2.0
        and w.c2_margin() == 2.0
        and scan.s_star is not None
        and scan.monotone
        and c3 == 18.0
        and abs(c1 - 480.0) / 480.0 < 0.05
        and finite
        and max(drifts) < 0.05
        and elapsed < 60
    )
    detail = (
        f"s* {scan.s_star:.4f}, plateaus D {c1:.3f} E {c2:.3f} F {c3:g}, "
        f"max ratio drift {max(drifts):.1e}, {elapsed:.1f}s"
    )
    report(capsys, 9, "Carleman module", ok, detail)


# --- 10 ------------------------------------------------------------------------


def criterion_10(tmp_dir, capsys=None):
    outs = []
    for name in ("first", "second"):
        out = Path(tmp_dir) / name
        code = cli_main(["decay-sweep", "--preset", "decay-sweep", "--seed", "3", "--out", str(out)])
        outs.append((code, (out / "sweep.csv").read_bytes()))
    (c1, a), (c2, b) = outs
    rows = a.decode().strip().splitlines()[1:]
    ok = c1 == 0 and c2 == 0 and a == b and len(rows) == 9
    detail = f"exit codes {c1},{c2}; {len(rows)} rows; identical bytes: {a == b}"
    report(capsys, 10, "determinism", ok, detail)


# --- pytest entry points -------------------------------------------------------------


def test_criterion_1_spectral(capsys):
    criterion_1(capsys)


def test_criterion_2_linear_decay(capsys):
    criterion_2(capsys)


@pytest.mark.parametrize("kind", list(DAMPINGS))
def test_criterion_3_energy_identity(capsys, kind):
    criterion_3(kind, capsys)


def test_criterion_4_decay_bound(capsys):
    criterion_4(capsys)


def test_criterion_5_localized(capsys):
    criterion_5(capsys)


def test_criterion_6_smoothing(capsys):
    criterion_6(capsys)


def test_criterion_7_picard(capsys):
    criterion_7(capsys)


def test_criterion_8_hypotheses(capsys):
    criterion_8(capsys)


def test_criterion_9_carleman(capsys):
    criterion_9(capsys)


def test_criterion_10_determinism(capsys, tmp_path):
    criterion_10(tmp_path, capsys)


if __name__ == "__main__":
    import tempfile

    checks = [criterion_1, criterion_2]
    checks += [lambda k=k: criterion_3(k) for k in DAMPINGS]
    checks += [criterion_4, criterion_5, criterion_6, criterion_7, criterion_8, criterion_9]
    failures = 0
    for check in checks:
        try:
            check()
        except AssertionError:
            failures += 1
    with tempfile.TemporaryDirectory() as tmp:
        try:
            criterion_10(tmp)
        except AssertionError:
            failures += 1
    sys.exit(1 if failures else 0)
