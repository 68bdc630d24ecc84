"""Command-line interface.

Exit codes: 0 success, 1 infeasible gains or violated bound, 2 input error,
3 numerical divergence.
"""

import argparse
from dataclasses import replace
import logging
import os
from pathlib import Path
import sys

import numpy as np

from .bounds import scenario_bound_inputs, DssBound
from .conditions import check_conditions
from .config import ConfigError, format_gains_record, load_config
from .records import write_bound_curves, write_metrics, write_sweep, write_trajectory
from .simulator import (SimulationDivergence, envelope_config, run_scenario, string_sweep,
                        verify_bound)

log = logging.getLogger("platoon_dss")

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_DIVERGED = 0, 1, 2, 3
OUT_ENV = "PLATOON_DSS_OUT"


def _n_list(text):
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _common(parser):
    parser.add_argument("--config", help="INI config file (default: bundled paper_n5)")
    parser.add_argument("--variant", choices=("c1", "c2"), type=str.lower)
    parser.add_argument("--seed", type=int, help="scenario seed")
    parser.add_argument("--dt", type=float)
    parser.add_argument("--t-end", type=float, dest="t_end")
    parser.add_argument("--out", help=f"output directory (env {OUT_ENV} takes precedence)")
    parser.add_argument("--n-list", type=_n_list, dest="n_list", help="e.g. 3,5,10,20")
    parser.add_argument("--toggle-disturbance-channel", choices=("accel", "force"),
                        dest="channel")
    parser.add_argument("--nominal-mass", action="store_true",
                        help="plant mass equals the controller's nominal mass")
    parser.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="platoon-dss",
        description="Certify, tune and simulate an integral-action platoon controller.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("certify", "check the transformed sufficient conditions for the configured gains"),
        ("simulate", "run one scenario and write trajectory, metric and bound CSVs"),
        ("sweep", "worst error norm versus string length"),
        ("synthesize", "search for gains with the largest certified margin"),
        ("report", "simulate both controller variants and render figures"),
    ):
        p = sub.add_parser(name, help=help_)
        _common(p)
        if name == "simulate":
            p.add_argument("--figures", action="store_true", help="also render PNG figures")
    return parser


def _apply_overrides(cfg, args):
    changes = {}
    for key in ("variant", "seed", "dt", "t_end", "n_list", "channel"):
        val = getattr(args, key, None)
        if val is not None:
            changes[key] = val
    if args.nominal_mass:
        changes["mass_spread"] = 0.0
    if getattr(args, "figures", False):
        changes["figures"] = True
    out = os.environ.get(OUT_ENV) or args.out
    if out:
        changes["out"] = out
    for key in ("dt", "t_end"):
        if key in changes and not changes[key] > 0:
            raise ConfigError(f"--{key.replace('_', '-')} must be positive")
    return replace(cfg, **changes)


def _out_dir(cfg):
    path = Path(cfg.out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def cmd_certify(cfg, args):
    report = check_conditions(cfg.gains)
    print(report.format())
    if args.out or os.environ.get(OUT_ENV):
        path = _out_dir(cfg) / "certificate.json"
        path.write_text(report.to_json() + "\n")
        print(f"wrote {path}")
    return EXIT_OK if report.feasible else EXIT_FAIL


def _simulate_one(cfg, scenario, variant, report, out):
    traj, metrics = run_scenario(scenario, cfg.gains, variant, cfg.dt, cfg.t_end, cfg.channel)
    run_id = f"{cfg.name}_n{scenario.n_vehicles}_{variant}_seed{cfg.seed}"
    inputs = None
    if report.feasible:
        inputs = scenario_bound_inputs(scenario, cfg.gains, report, cfg.channel)
    write_trajectory(out / f"{run_id}_trajectory.csv", traj)
    write_metrics(out / f"{run_id}_metrics.csv", traj, inputs)
    if inputs is not None:
        write_bound_curves(out / f"{run_id}_bounds.csv", traj.times, inputs, cfg.bound_kinds)
    return run_id, traj, metrics, inputs


def _summary(run_id, traj, metrics, inputs, report):
    holds = True
    print(f"run {run_id}")
    print("terminal gap errors (m): " + ", ".join(f"{e:+.3e}" for e in metrics.terminal_gap_err))
    print(f"terminal max |v - v0| (m/s): {np.abs(traj.v[-1] - traj.leader_v[-1]).max():.3e}")
    print(f"peak sup error norm: {metrics.sup_err.max():.6g}")
    if not report.feasible:
        print("gains are NOT certified; bounds skipped")
    elif traj.variant != "c2":
        print("bound check: n/a (the certificate covers the integral-action loop)")
    else:
        checks = [("original_eq16", "original_x"), ("augmented_eq14", "augmented_z")]
        for kind, norm in checks:
            ok, viol, t_at = verify_bound(traj, DssBound(kind, inputs), norm)
            holds &= ok
            print(f"bound {kind} on {norm}: {'holds' if ok else 'VIOLATED'} "
                  f"(max excess {viol:.3e} at t={t_at:g} s)")
    return holds


def cmd_simulate(cfg, args):
    report = check_conditions(cfg.gains)
    out = _out_dir(cfg)
    scenario = cfg.scenario()
    run_id, traj, metrics, inputs = _simulate_one(cfg, scenario, cfg.variant, report, out)
    holds = _summary(run_id, traj, metrics, inputs, report)
    if cfg.figures:
        from . import plotting
        plotting.plot_error_norms({cfg.variant: (traj, inputs)}, out / f"{run_id}_norms.png")
        plotting.plot_gap_errors({cfg.variant: traj}, out / f"{run_id}_gaps.png")
        plotting.plot_states(traj, out / f"{run_id}_states.png")
    print(f"wrote {out}/{run_id}_*")
    return EXIT_OK if holds else EXIT_FAIL


def cmd_report(cfg, args):
    from . import plotting
    report = check_conditions(cfg.gains)
    out = _out_dir(cfg)
    scenario = cfg.scenario()
    runs = {}
    holds = True
    for variant in ("c1", "c2"):
        run_id, traj, metrics, inputs = _simulate_one(cfg, scenario, variant, report, out)
        holds &= _summary(run_id, traj, metrics, inputs, report)
        runs[variant] = (traj, inputs)
    stem = f"{cfg.name}_n{scenario.n_vehicles}_seed{cfg.seed}"
    paths = [
        plotting.plot_error_norms(runs, out / f"{stem}_norms.png"),
        plotting.plot_gap_errors({v: t for v, (t, _) in runs.items()}, out / f"{stem}_gaps.png"),
        plotting.plot_states(runs["c2"][0], out / f"{stem}_states.png"),
    ]
    for p in paths:
        print(f"wrote {p}")
    return EXIT_OK if holds else EXIT_FAIL


def cmd_sweep(cfg, args):
    out = _out_dir(cfg)
    gap, speed = cfg.base.spacing[0], cfg.base.leader_speed
    rows = string_sweep(cfg.gains, cfg.variant, cfg.n_list, cfg.dt, cfg.t_end,
                        make_config=lambda n: envelope_config(n, gap=gap, leader_speed=speed),
                        channel=cfg.channel)
    path = out / f"{cfg.name}_{cfg.variant}_sweep.csv"
    write_sweep(path, rows)
    print(f"{'N':>5} {'worst_sup_err':>15} {'bound_envelope':>15}")
    ok = True
    for r in rows:
        ok &= bool(r.worst_sup_err <= r.bound_envelope)
        print(f"{r.n_vehicles:>5} {r.worst_sup_err:>15.6g} {r.bound_envelope:>15.6g}")
    print(f"wrote {path}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_synthesize(cfg, args):
    from .synthesis import synthesize
    spec = cfg.synthesis
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    result = synthesize(spec)
    record = format_gains_record(result.gains, result.report)
    out = _out_dir(cfg)
    path = out / f"{cfg.name}_synthesized_gains.ini"
    path.write_text(record)
    print(record, end="")
    print(f"# {result.evaluations} certified evaluations; wrote {path}")
    if not result.feasible:
        print("no feasible gain set found within budget; record holds the least infeasible point")
        return EXIT_FAIL
    return EXIT_OK


COMMANDS = {
    "certify": cmd_certify,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "synthesize": cmd_synthesize,
    "report": cmd_report,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.command == "synthesize":
            # --seed there seeds the search, not the scenario
            seed, args.seed = args.seed, None
            cfg = _apply_overrides(cfg, args)
            args.seed = seed
        else:
            cfg = _apply_overrides(cfg, args)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SimulationDivergence as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()
