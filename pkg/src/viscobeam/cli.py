"""Command-line driver: validate configs, run scenarios, sweep parameters.

Verbs:
    validate  check every structural assumption and the feedback-weight window
    run       integrate one scenario, write trajectory + decay summary
    sweep     grid of runs over named parameter axes, one summary row each

All outputs are '#'-commented, tab-separated text with 17 significant digits
so that identical configs reproduce bit-identical files.
"""

from __future__ import annotations

import argparse
import configparser
import itertools
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .config import (ConfigError, load_run_config, load_sweep_config,
                     run_config_from_parser)
from .diagnostics import (FitError, dissipation_bound_check,
                          energy_identity_residual, equivalence_bounds,
                          fit_decay)
from .model import theta_constants, validate_assumptions, xi_window
from .solver import run

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


def _fmt(value) -> str:
    if isinstance(value, float):
        return "%.17g" % value
    return str(value)


def _write_summary(path, entries) -> None:
    """key = value lines, one per entry, floats at 17 significant digits."""
    with open(path, "w") as fh:
        for key, value in entries:
            fh.write(f"{key} = {_fmt(value)}\n")


class _SeedGuard:
    """Asserts that nothing consumed or reseeded numpy's global generator."""

    def __enter__(self):
        self._state = np.random.get_state()
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is not None:
            return False
        now = np.random.get_state()
        same = (self._state[0] == now[0]
                and np.array_equal(self._state[1], now[1])
                and self._state[2:] == now[2:])
        if not same:
            raise AssertionError("global RNG state changed during the command")
        return False


def _load_config(path):
    try:
        return load_run_config(path), None
    except (ConfigError, configparser.Error, OSError, ValueError) as exc:
        return None, str(exc)


# ---------------------------------------------------------------------------
# validate

def cmd_validate(args) -> int:
    cfg, err = _load_config(args.config)
    if cfg is not None and args.out:
        cfg.out_dir = args.out
    if cfg is None:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_USAGE
    report = validate_assumptions(cfg.spec)
    window = xi_window(cfg.spec)
    print(report.format_table())
    if window.empty:
        print(f"feedback-weight window: EMPTY "
              f"(lo = {window.lo:.6g} >= hi = {window.hi:.6g})")
    else:
        print(f"feedback-weight window: ({window.lo:.6g}, {window.hi:.6g}), "
              f"midpoint {window.midpoint:.6g}")
    if not report.passed:
        print("failed checks: " + ", ".join(report.failed_names()),
              file=sys.stderr)
    ok = report.passed and not window.empty
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# run

def _run_summary_entries(cfg, traj, xi):
    """The (key, value) list for a completed (possibly aborted) run."""
    spec = cfg.spec
    theta1, theta2 = theta_constants(spec, xi)
    E = traj.energy_total
    entries = [
        ("aborted", traj.aborted),
        ("E0", float(E[0]) if len(E) else float("nan")),
        ("xi", float(xi)),
        ("theta1", theta1),
        ("theta2", theta2),
    ]
    if traj.aborted:
        entries.append(("abort_reason", traj.abort_reason))
    if theta1 <= 0.0 or theta2 <= 0.0:
        entries.append(("warning", "monotonicity not guaranteed"))

    try:
        fit = fit_decay(traj.t, E, t0=cfg.t0)
        entries += [("decay_K", fit.K), ("decay_k", fit.k),
                    ("decay_r_squared", fit.r_squared),
                    ("fit_window", f"[{fit.window[0]:.6g}, "
                                   f"{fit.window[1]:.6g}]")]
    except FitError as exc:
        entries.append(("decay_fit", f"not applicable ({exc})"))

    try:
        mask = traj.t >= cfg.t0
        if np.count_nonzero(mask) == 0:
            raise FitError("no samples past t0")
        k0, k1 = equivalence_bounds(traj.columns["lyapunov_F"], E, mask)
        entries += [("equiv_k0", k0), ("equiv_k1", k1)]
    except (FitError, KeyError) as exc:
        entries.append(("equivalence_bounds", f"not applicable ({exc})"))

    try:
        res = energy_identity_residual(traj, spec, xi)
        entries.append(("max_identity_residual", float(np.max(np.abs(res)))))
        margin = dissipation_bound_check(traj, spec, xi)
        entries.append(("max_dissipation_violation",
                        float(max(0.0, -np.min(margin)))))
    except ValueError as exc:
        entries.append(("identity_residual", f"not available ({exc})"))
    return entries


def cmd_run(args) -> int:
    cfg, err = _load_config(args.config)
    if cfg is None:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_USAGE
    if args.out:
        cfg.out_dir = args.out
    report = validate_assumptions(cfg.spec)
    window = xi_window(cfg.spec)
    if not (report.passed and not window.empty):
        if not args.force:
            print("validation failed: "
                  + ", ".join(report.failed_names()
                              + (["empty feedback-weight window"]
                                 if window.empty else [])),
                  file=sys.stderr)
            print("use --force to run anyway", file=sys.stderr)
            return EXIT_FAIL
        print("warning: running despite failed validation (--force)",
              file=sys.stderr)

    if cfg.xi == "auto" and window.empty:
        print("warning: empty feedback-weight window, using its midpoint "
              "for xi", file=sys.stderr)
    traj = run(cfg)
    xi = traj.metadata["xi"]

    os.makedirs(cfg.out_dir, exist_ok=True)
    traj_path = os.path.join(cfg.out_dir, "trajectory.tsv")
    summary_path = os.path.join(cfg.out_dir, "summary.txt")
    traj.save(traj_path)
    _write_summary(summary_path, _run_summary_entries(cfg, traj, xi))
    print(f"wrote {traj_path}")
    print(f"wrote {summary_path}")
    if traj.aborted:
        print(f"integration aborted: {traj.abort_reason}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep

def _apply_override(cp, path, value) -> None:
    section, key = path.split(".", 1)
    if section == "problem":
        cp.set("problem", key, repr(value))
    else:
        cp.set(section, key, repr(value))


def _sweep_point(config_path, overrides, force):
    """One grid point; returns a row dict.  Top level for process pools."""
    row = {path: value for path, value in overrides}
    row.update(k="nan", r_squared="nan", gain_ok="", status="ok", flags="")
    try:
        cp = configparser.ConfigParser()
        if not cp.read(config_path):
            raise ConfigError(f"cannot read config file {config_path}")
        for path, value in overrides:
            _apply_override(cp, path, value)
        cfg = run_config_from_parser(cp)
        spec = cfg.spec
        a1, a2 = spec.feedback.alpha1, spec.feedback.alpha2
        row["gain_ok"] = "pass" if a2 * spec.mu2 <= a1 * spec.mu1 else "fail"
        report = validate_assumptions(spec)
        window = xi_window(spec)
        valid = report.passed and not window.empty
        if not valid:
            row["flags"] = "assumption-violating"
            if not force:
                row["status"] = ("skipped: "
                                 + ";".join(report.failed_names()
                                            + (["empty window"]
                                               if window.empty else [])))
                return row
        if cfg.xi == "auto":
            if window.empty:
                row["status"] = "skipped: empty window, no explicit xi"
                return row
            cfg.xi = window.midpoint
        traj = run(cfg)
        if traj.aborted:
            row["status"] = f"aborted: {traj.abort_reason}"
            return row
        fit = fit_decay(traj.t, traj.energy_total, t0=cfg.t0)
        row["k"] = "%.17g" % fit.k
        row["r_squared"] = "%.17g" % fit.r_squared
    except Exception as exc:  # per-point failures stay in-row
        row["status"] = f"error: {exc}"
    return row


def cmd_sweep(args) -> int:
    try:
        sweep = load_sweep_config(args.config)
    except (ConfigError, configparser.Error, OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out_dir = args.out or sweep.base.out_dir
    jobs = args.jobs or sweep.jobs

    axes = sweep.axes  # already sorted by parameter path
    names = [path for path, _ in axes]
    grids = [values for _, values in axes]
    points = ([tuple(zip(names, combo))
               for combo in itertools.product(*grids)]
              if axes else [()])

    if jobs > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_point, [args.config] * len(points),
                                 points, [args.force] * len(points)))
    else:
        rows = [_sweep_point(args.config, pt, args.force) for pt in points]
    rows.sort(key=lambda r: tuple(float(r[name]) for name in names))

    os.makedirs(out_dir, exist_ok=True)
    map_path = os.path.join(out_dir, "sweep.tsv")
    cols = names + ["k", "r_squared", "gain_ok", "flags", "status"]
    with open(map_path, "w") as fh:
        fh.write("# " + "\t".join(cols) + "\n")
        for row in rows:
            cells = ["%.17g" % row[name] for name in names]
            cells += [str(row[c]) for c in cols[len(names):]]
            fh.write("\t".join(cells) + "\n")
    print(f"wrote {map_path}")
    bad = [r for r in rows if r["status"] not in ("ok",)
           and not r["status"].startswith("skipped")]
    return EXIT_FAIL if bad else EXIT_OK


# ---------------------------------------------------------------------------
# entry point

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="viscobeam",
        description=("Modal simulator and decay-verification harness for a "
                     "viscoelastic beam with fading memory and delayed "
                     "velocity feedback."))
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("validate", "check structural assumptions"),
                        ("run", "integrate one scenario"),
                        ("sweep", "run a parameter grid")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="config file path")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--force", action="store_true",
                       help="run despite failed validation")
        p.add_argument("--jobs", type=int, default=0,
                       help="parallel sweep points (sweep only)")
        p.add_argument("--seed-free", action="store_true",
                       help="assert that no random numbers are consumed")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handler = {"validate": cmd_validate, "run": cmd_run,
               "sweep": cmd_sweep}[args.command]
    if args.seed_free:
        with _SeedGuard():
            code = handler(args)
        print("seed-free check passed: global RNG state untouched")
        return code
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
