"""Command-line entry point: ``rsortho <subcommand> [options]``."""
import argparse
import os
import sys

import numpy as np

from . import serialization
from .channel import effective_channel, generate_iid_rayleigh
from .errors import RSError
from .estimation import PilotPlan, end_to_end_configure, pilot_count
from .experiments import load_spec, print_checks, run_sweep, selftest
from .linalg_core import random_semi_unitary
from .orthogonalizer import TargetChannel, solve_aris, solve_fris
from .power_opt import PowerObjective, minimize_power, unit_power_beta
from .ris_baseline import kappa_objective, minimize_condition_number, per_ue_gains
from .surface import SurfaceKind


def _common(p):
    p.add_argument("--config", help="YAML experiment file")
    p.add_argument("--seed", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--n", type=int, help="surface elements (default: kind's minimum)")
    p.add_argument("--e0", type=float, help="normalized direct-channel power (default 1; a one-point grid for sweep)")
    p.add_argument("--trials", type=int)
    p.add_argument("--out-dir")
    p.add_argument("--kind", choices=[k.value for k in SurfaceKind])


def build_parser():
    parser = argparse.ArgumentParser(prog="rsortho", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("orthogonalize", help="closed-form ARIS/FRIS configuration for one channel")
    _common(p)
    p.add_argument("--beta", type=float)

    p = sub.add_parser("estimate", help="simulate a pilot protocol end to end")
    _common(p)
    p.add_argument("--beta", type=float)
    p.add_argument("--n0", type=float)
    p.add_argument("--es", type=float)

    p = sub.add_parser("minpower", help="minimum-power orthogonalization of one channel")
    _common(p)

    p = sub.add_parser("baseline", help="condition-number-optimized RIS phases for one channel")
    _common(p)

    p = sub.add_parser("sweep", help="Monte Carlo sweep over E0 (figure data)")
    _common(p)
    p.add_argument("--workers", type=int)

    p = sub.add_parser("selftest", help="cross-module consistency checks")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--corrupt-gradient", action="store_true", help=argparse.SUPPRESS)
    return parser


def _spec(args, **extra):
    return load_spec(
        args.config,
        seed=args.seed,
        m=args.m,
        k=args.k,
        trials=args.trials,
        **extra,
    )


def _single(args, default_kind):
    spec = _spec(args, beta=getattr(args, "beta", None), n0=getattr(args, "n0", None),
                 es=getattr(args, "es", None))
    kind = SurfaceKind.parse(args.kind or default_kind)
    n = args.n if args.n is not None else spec.n_for(kind)
    e0 = 1.0 if args.e0 is None else args.e0
    cs = generate_iid_rayleigh(spec.m, spec.k, n, e0, spec.seed)
    return spec, kind, cs


def _save(args, name, obj):
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
        path = os.path.join(args.out_dir, name)
        serialization.dump(obj, path)
        print(f"wrote {path}")


def cmd_orthogonalize(args):
    spec, kind, cs = _single(args, "aris")
    target = TargetChannel(spec.beta, random_semi_unitary(cs.m, cs.k, spec.seed))
    if kind is SurfaceKind.ARIS:
        cfg = solve_aris(cs, target)
    elif kind is SurfaceKind.FRIS:
        cfg = solve_fris(cs, target)
    else:
        raise RSError("orthogonalize supports aris and fris; use 'baseline' for ris")
    h = effective_channel(cs, cfg)
    want = target.matrix()
    print(f"kind={kind.value} M={cs.m} K={cs.k} N={cs.n} e0={cs.e0:g} beta={target.beta:g}")
    print(f"residual ||H - sqrt(beta) U|| / ||sqrt(beta) U|| = {np.linalg.norm(h - want) / np.linalg.norm(want):.3e}")
    gram_err = np.linalg.norm(h.conj().T @ h - target.beta * np.eye(cs.k)) / (target.beta * cs.k)
    print(f"orthogonality ||H^H H - beta I|| / (beta K)     = {gram_err:.3e}")
    print(f"sum power {cfg.sum_power():.6g}  (per element {cfg.sum_power() / cs.n:.6g})")
    _save(args, "config.json", serialization.config_to_dict(cfg))
    _save(args, "channel.json", serialization.channel_to_dict(cs))
    return 0


def cmd_estimate(args):
    spec, kind, cs = _single(args, "aris")
    target = TargetChannel(spec.beta, random_semi_unitary(cs.m, cs.k, spec.seed))
    plan = PilotPlan(n0=spec.n0, es=spec.es)
    report = end_to_end_configure(cs, kind, target, plan, spec.seed)
    print(f"kind={kind.value} M={cs.m} K={cs.k} N={cs.n} N0={plan.n0:g} Es={plan.es:g}")
    print(f"{'step':<14}{'slots':>6}")
    for step, slots in report.ledger:
        print(f"{step:<14}{slots:>6}")
    expected = pilot_count(kind, cs.m, cs.k, cs.n)
    print(f"{'total':<14}{report.pilot_slots_used:>6}   (expected {expected})")
    print(f"residual vs true channel: {report.residual:.3e}")
    _save(args, "estimation_report.json", serialization.report_to_dict(report))
    return 0


def cmd_minpower(args):
    spec, kind, cs = _single(args, "aris")
    if kind is SurfaceKind.RIS:
        raise RSError("minpower supports aris and fris")
    obj = PowerObjective.from_channels(cs, kind)
    res = minimize_power(cs, kind, spec.optimizer, obj=obj)
    unit = unit_power_beta(obj, res.u_star, float(cs.n))
    print(f"kind={kind.value} M={cs.m} K={cs.k} N={cs.n} e0={cs.e0:g}")
    print(f"minimum sum power      {res.p_min:.6g}")
    print(f"per element            {res.p_min / cs.n:.6g}")
    print(f"channel gain beta*     {res.beta_star:.6g}")
    print(f"gain at unit power     {unit:.6g}")
    print(f"iterations {len(res.trace)}  converged={res.converged}")
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
        path = os.path.join(args.out_dir, "descent_trace.csv")
        res.write_trace_csv(path)
        print(f"wrote {path}")
    return 0


def cmd_baseline(args):
    spec, _, cs = _single(args, "ris")
    res = minimize_condition_number(cs, spec.ris)
    rng = np.random.default_rng(spec.seed)
    rand = [kappa_objective(cs, rng.uniform(0, 2 * np.pi, cs.n)) for _ in range(20)]
    gains = per_ue_gains(cs, res.phases)
    print(f"RIS M={cs.m} K={cs.k} N={cs.n} e0={cs.e0:g}")
    print(f"optimized kappa          {res.kappa:.6g}")
    print(f"median random kappa      {np.median(rand):.6g}")
    print(f"per-UE gains             {' '.join(f'{g:.4g}' for g in gains)}")
    return 0


def cmd_sweep(args):
    grid = None if args.e0 is None else [args.e0]
    spec = _spec(args, workers=args.workers, e0_grid=grid)
    out_dir = args.out_dir or "sweep_out"

    def progress(done, total):
        if done % 50 == 0 or done == total:
            print(f"\r{done}/{total}", end="", file=sys.stderr, flush=True)

    try:
        run_sweep(spec, out_dir, progress)
    except KeyboardInterrupt:
        print("\ninterrupted; partial results written", file=sys.stderr)
        return 130
    print(file=sys.stderr)
    print(f"wrote fig1_power.csv, fig1_gain.csv, fig2_gain.csv, plot_figures.py to {out_dir}")
    return 0


def cmd_selftest(args):
    ok = print_checks(selftest(seed=args.seed, corrupt_gradient=args.corrupt_gradient))
    return 0 if ok else 1


COMMANDS = {
    "orthogonalize": cmd_orthogonalize,
    "estimate": cmd_estimate,
    "minpower": cmd_minpower,
    "baseline": cmd_baseline,
    "sweep": cmd_sweep,
    "selftest": cmd_selftest,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (RSError, ValueError, OSError) as exc:
        # bad dimensions, config values or paths: report, don't trace back
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
