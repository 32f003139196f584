"""Batch front end: simulate, decay-sweep, hyp-check, carleman-verify, picard-demo.

Every command writes CSV tables plus a manifest.json listing each output
file with its SHA-256. Exit codes: 0 success, 1 configuration error,
2 blow-up guard, 3 boundary-tail breach, 4 a verification check failed.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import itertools
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .carleman import TEST_FAMILY, carleman_ratio, make_weight, positivity_scan
from .config import ConfigError
from .diagnostics import (
    decay_fit,
    dissipation_residual,
    observability_ratio,
)
from .dynamics import DampingKind, check_growth, check_hyp_a, check_hyp_b
from .solver import BlowUpError, initial_field, picard_solve, simulate

log = logging.getLogger("gkdvb")

EXIT_OK, EXIT_CONFIG, EXIT_BLOWUP, EXIT_TAIL, EXIT_CHECK = 0, 1, 2, 3, 4

LEDGER_HEADER = ["t", "l2_norm", "h1_norm", "h3_norm", "energy", "diss_residual", "tail_fraction"]
SWEEP_HEADER = [
    "cell", "p", "form", "kind", "lambda0", "amp", "amplitude", "status",
    "rate", "fit_amplitude", "r_squared", "hyp_b", "hyp_b_margin",
    "hyp_a", "hyp_a_margin", "observability",
]


def fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if v is None:
        return ""
    return str(v)


def write_csv(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class Run:
    """Collects output files and writes the manifest."""

    def __init__(self, command: str, args, flat: dict):
        self.command = command
        self.out = Path(args.out or flat["output.dir"])
        self.out.mkdir(parents=True, exist_ok=True)
        self.meta = {
            "command": command,
            "config_path": str(args.config) if args.config else None,
            "preset": args.preset,
            "output_dir": str(self.out),
            "seed": flat["ic.seed"],
            "started": _now(),
        }
        self.files: list[Path] = []

    def csv(self, name: str, header, rows) -> Path:
        path = self.out / name
        write_csv(path, header, rows)
        self.files.append(path)
        return path

    def json(self, name: str, payload) -> Path:
        path = self.out / name
        path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=fmt) + "\n")
        self.files.append(path)
        return path

    def finish(self, code: int) -> int:
        self.meta["finished"] = _now()
        self.meta["exit_code"] = code
        self.meta["artifacts"] = {
            str(p.relative_to(self.out)): sha256(p) for p in sorted(set(self.files))
        }
        (self.out / "manifest.json").write_text(json.dumps(self.meta, indent=2) + "\n")
        return code


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


# --- commands ---------------------------------------------------------------


def _ledger_rows(tr):
    L = tr.ledger
    resid = dissipation_residual(tr)
    h1 = np.sqrt(L.l2_sq + L.grad_sq)
    return zip(L.t, L.l2_norm, h1, np.sqrt(L.h3_sq), 0.5 * L.l2_sq, resid, L.tail_fraction)


def cmd_simulate(args, flat) -> int:
    cfg = cfgmod.sim_config(flat)
    run = Run("simulate", args, flat)
    try:
        tr = simulate(cfg)
        code = EXIT_TAIL if tr.tail_warning else EXIT_OK
    except BlowUpError as exc:
        tr = exc.partial
        run.json("blowup.json", {"message": str(exc), "t": exc.t})
        log.error("%s", exc)
        code = EXIT_BLOWUP
    run.csv("ledger.csv", LEDGER_HEADER, _ledger_rows(tr))
    x = tr.grid.x
    index = []
    for i, (t, snap) in enumerate(zip(tr.times, tr.snapshots)):
        name = f"snapshots/snap_{i:05d}.csv"
        run.csv(name, ["x", "u"], zip(x, snap.values))
        index.append((i, t, name))
    run.csv("snapshots.csv", ["index", "t", "file"], index)
    if code == EXIT_TAIL:
        log.warning("boundary tail fraction exceeded %g", cfg.tail_threshold)
    return run.finish(code)


def run_cell(cell: int, flat: dict) -> list:
    """One decay-sweep cell; failures become status values, never exceptions."""
    cfg = cfgmod.sim_config(flat)
    p = cfg.nonlinearity.p
    damping = cfg.damping_profile()
    if damping.kind is DampingKind.LOCALIZED:
        hb, hb_margin = "n/a", None
    else:
        rb = check_hyp_b(damping, p)
        hb, hb_margin = ("pass" if rb.passed else "fail"), rb.margin
    ra = check_hyp_a(damping)
    head = [
        cell, p, cfg.nonlinearity.form.value, damping.kind.value, damping.lambda0,
        cfg.damping.amp, cfg.initial_condition.amplitude,
    ]
    hyp = [hb, hb_margin, "pass" if ra.passed else "fail", ra.margin]
    try:
        tr = simulate(cfg)
    except BlowUpError:
        return head + ["blowup", None, None, None] + hyp + [None]
    status = "tail" if tr.tail_warning else "ok"
    try:
        fit = decay_fit(tr.ledger.t, tr.ledger.l2_norm, cfgmod.fit_window(flat, cfg.horizon))
        rate, amp, r2 = fit.rate, fit.amplitude, fit.r_squared
    except ValueError:
        status, rate, amp, r2 = "fit_failed", None, None, None
    return head + [status, rate, amp, r2] + hyp + [observability_ratio(tr)]


def sweep_cells(flat: dict) -> list:
    axes = cfgmod.sweep_axes(flat)
    base = {k: v for k, v in flat.items() if not k.startswith("sweep.")}
    if not axes:
        return [base]
    cells = []
    for combo in itertools.product(*(values for _, _, values in axes)):
        cell = dict(base)
        for (_, key, _), value in zip(axes, combo):
            cell[key] = cfgmod.validate({key: value})[key]
        cells.append(cell)
    return cells


def cmd_decay_sweep(args, flat) -> int:
    cells = sweep_cells(flat)
    for c in cells:
        cfgmod.sim_config(c)  # fail fast on bad axes before any work
    workers = args.workers or flat["sweep.workers"]
    run = Run("decay-sweep", args, flat)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run_cell, range(len(cells)), cells))
    else:
        rows = [run_cell(i, c) for i, c in enumerate(cells)]
    run.csv("sweep.csv", SWEEP_HEADER, rows)
    return run.finish(EXIT_OK)


def cmd_hyp_check(args, flat) -> int:
    cfg = cfgmod.sim_config(flat)
    damping = cfg.damping_profile()
    spec = cfg.nonlinearity
    rows = []
    growth = check_growth(spec, flat["hyp.range_max"])
    rows.append(["growth", growth.passed, growth.worst_margin, None, None, None])
    ra = check_hyp_a(damping)
    rows.append(["hyp_a", ra.passed, ra.margin, ra.lhs, ra.rhs, None])
    if damping.kind is DampingKind.LOCALIZED or damping.kind is DampingKind.ZERO:
        relevant = ra
    else:
        rb = check_hyp_b(damping, spec.p)
        rows.append(["hyp_b", rb.passed, rb.margin, rb.lhs, rb.rhs, rb.c_p])
        relevant = rb
    run = Run("hyp-check", args, flat)
    run.csv("hyp_check.csv", ["check", "passed", "margin", "lhs", "rhs", "c_p"], rows)
    ok = growth.passed and relevant.passed
    for r in rows:
        log.info("%s: %s (margin %.6g)", r[0], "pass" if r[1] else "fail", r[2])
    return run.finish(EXIT_OK if ok else EXIT_CHECK)


def cmd_carleman_verify(args, flat) -> int:
    try:
        w = make_weight(
            flat["carleman.L"], flat["carleman.x0"], flat["carleman.epsilon"], flat["carleman.T"]
        )
    except ValueError as exc:
        raise ConfigError("carleman", str(exc)) from None
    s_values = np.geomspace(flat["carleman.s_min"], flat["carleman.s_max"], flat["carleman.s_count"])
    scan = positivity_scan(w, s_values, flat["carleman.grid_n"])
    run = Run("carleman-verify", args, flat)
    pos = scan.positive
    run.csv(
        "carleman_scan.csv",
        ["s", "minD", "minE", "minF", "s_star_flag"],
        zip(scan.s_values, scan.min_D, scan.min_E, scan.min_F, pos),
    )
    rows = []
    if scan.s_star is not None:
        for q_id in TEST_FAMILY:
            for m in flat["carleman.ratio_s_multiples"]:
                r = carleman_ratio(
                    q_id, w, m * scan.s_star,
                    flat["carleman.ratio_grid_n"], flat["carleman.ratio_time_n"],
                )
                rows.append((r.q_id, r.s, r.lhs, r.rhs, r.ratio))
    run.csv("carleman_ratio.csv", ["q_id", "s", "lhs", "rhs", "ratio"], rows)
    c1, c2, c3 = scan.plateau
    run.json(
        "carleman_summary.json",
        {
            "s_star": scan.s_star,
            "plateau": {"C1": c1, "C2": c2, "C3": c3},
            "c1_margin": w.c1_margin(),
            "c2_margin": w.c2_margin(),
            "monotone": scan.monotone,
        },
    )
    ok = (
        scan.s_star is not None
        and scan.monotone
        and min(c1, c2, c3) > 0
        and all(math.isfinite(r[4]) for r in rows)
    )
    return run.finish(EXIT_OK if ok else EXIT_CHECK)


def cmd_picard_demo(args, flat) -> int:
    cfg = cfgmod.sim_config(flat)
    u0 = initial_field(cfg.initial_condition, cfg.grid())
    rep = picard_solve(
        u0, cfg, flat["picard.t_loc"], flat["picard.n_iter"], flat["picard.substeps"]
    )
    rows = []
    for i, d in enumerate(rep.sup_norm_diffs):
        ratio = rep.contraction_ratios[i - 1] if i > 0 else None
        rows.append((i + 1, d, ratio, rep.converged))
    run = Run("picard-demo", args, flat)
    run.csv("picard.csv", ["iteration", "sup_norm_diff", "contraction_ratio", "converged"], rows)
    return run.finish(EXIT_OK if rep.converged else EXIT_CHECK)


COMMANDS = {
    "simulate": cmd_simulate,
    "decay-sweep": cmd_decay_sweep,
    "hyp-check": cmd_hyp_check,
    "carleman-verify": cmd_carleman_verify,
    "picard-demo": cmd_picard_demo,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gkdvb", description="Damped generalized KdV-Burgers simulation laboratory."
    )
    parser.add_argument("-v", "--verbose", action="store_true", default=False)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="TOML config with dotted keys")
        p.add_argument("--preset", choices=sorted(cfgmod.PRESETS), help="built-in scenario")
        p.add_argument("--out", type=Path, help="output directory (overrides output.dir)")
        p.add_argument("--workers", type=int, default=None, help="parallel sweep cells")
        p.add_argument("--seed", type=int, default=None, help="overrides ic.seed")
        p.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    overrides = {"ic.seed": args.seed} if args.seed is not None else None
    try:
        flat = cfgmod.resolve(args.preset, args.config, overrides)
        return COMMANDS[args.command](args, flat)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
