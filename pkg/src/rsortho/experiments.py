"""Monte Carlo sweeps over the direct-channel power and the self-test suite."""
import csv
import json
import os
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np
import yaml

from . import __version__
from .channel import effective_channel, generate_iid_rayleigh
from .errors import InvalidDims
from .estimation import PilotPlan, end_to_end_configure
from .linalg_core import random_semi_unitary
from .orthogonalizer import TargetChannel, solve_aris, solve_fris
from .power_opt import OptimizerConfig, PowerObjective, finite_diff_grad, minimize_power, unit_power_beta
from .ris_baseline import RisOptConfig, minimize_condition_number, per_ue_gains
from .surface import SurfaceKind

KINDS = (SurfaceKind.ARIS, SurfaceKind.FRIS, SurfaceKind.RIS)

CSV_HEADER = ["e0", "kind", "metric", "mean", "stderr", "trials", "complete"]

# (file, kind, metric) in output order
FIGURE_METRICS = {
    "fig1_power.csv": {
        SurfaceKind.ARIS: ["power_per_element"],
        SurfaceKind.FRIS: ["power_per_element"],
        SurfaceKind.RIS: ["power_per_element"],
    },
    "fig1_gain.csv": {
        SurfaceKind.ARIS: ["beta"],
        SurfaceKind.FRIS: ["beta"],
        SurfaceKind.RIS: ["gain_mean", "gain_min"],
    },
    "fig2_gain.csv": {
        SurfaceKind.ARIS: ["beta_unit_power", "unit_power_feasible"],
        SurfaceKind.FRIS: ["beta_unit_power", "unit_power_feasible"],
        SurfaceKind.RIS: ["gain_mean", "gain_min"],
    },
}


def default_grid():
    return [float(x) for x in np.logspace(-2, 2, 9)]


def _sweep_optimizer():
    return OptimizerConfig(max_iters=300)


@dataclass
class ExperimentSpec:
    """Everything that determines a run.  Every field has a default."""

    m: int = 4
    k: int = 2
    n_aris: int = None
    n_fris: int = None
    n_ris: int = None
    e0_grid: list = field(default_factory=default_grid)
    trials: int = 50
    seed: int = 0
    es: float = 1.0
    n0: float = 0.0
    beta: float = 1.0
    workers: int = 1
    optimizer: OptimizerConfig = field(default_factory=_sweep_optimizer)
    ris: RisOptConfig = field(default_factory=RisOptConfig)

    def __post_init__(self):
        if isinstance(self.optimizer, dict):
            self.optimizer = OptimizerConfig(**self.optimizer)
        if isinstance(self.ris, dict):
            self.ris = RisOptConfig(**self.ris)
        self.e0_grid = [float(x) for x in self.e0_grid]
        if not self.e0_grid:
            raise ValueError("e0_grid must not be empty")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.m > self.k >= 1:
            raise InvalidDims(f"need M > K >= 1, got M={self.m}, K={self.k}")

    def n_for(self, kind):
        kind = SurfaceKind.parse(kind)
        if kind is SurfaceKind.ARIS:
            return self.m * self.k if self.n_aris is None else self.n_aris
        if kind is SurfaceKind.FRIS:
            return self.m if self.n_fris is None else self.n_fris
        return self.m * self.k if self.n_ris is None else self.n_ris

    def to_dict(self):
        return asdict(self)


def load_spec(path=None, **overrides):
    """Build a spec from an optional YAML file, then apply non-None overrides."""
    data = {}
    if path is not None:
        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
    known = {f.name for f in fields(ExperimentSpec)}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    for key, value in overrides.items():
        if value is None:
            continue
        if key in ("optimizer", "ris") and isinstance(value, dict):
            data[key] = {**(data.get(key) or {}), **value}
        else:
            data[key] = value
    return ExperimentSpec(**data)


def _trial_seed(spec, trial):
    # shared by every grid point: the same normalized channels at each e0
    return (spec.seed, trial)


def run_trial(spec, e0, kind, trial):
    """Metrics of one channel realization for one surface kind."""
    kind = SurfaceKind.parse(kind)
    n = spec.n_for(kind)
    cs = generate_iid_rayleigh(spec.m, spec.k, n, e0, _trial_seed(spec, trial))
    if kind is SurfaceKind.RIS:
        res = minimize_condition_number(cs, _with_seed(spec.ris, (spec.ris.seed, spec.seed, trial)))
        gains = per_ue_gains(cs, res.phases)
        return {
            "power_per_element": 1.0,
            "gain_mean": float(np.mean(gains)),
            "gain_min": float(gains[0]),
            "kappa": res.kappa,
        }
    obj = PowerObjective.from_channels(cs, kind)
    res = minimize_power(cs, kind, _with_seed(spec.optimizer, (spec.optimizer.seed, spec.seed, trial)), obj=obj)
    unit = unit_power_beta(obj, res.u_star, float(n))
    return {
        "power_per_element": res.p_min / n,
        "beta": res.beta_star,
        "beta_unit_power": unit,
        "unit_power_feasible": float(np.isfinite(unit)),
    }


def _with_seed(cfg, seed):
    # dataclass copy with a structured seed; make_rng accepts nested tuples
    out = type(cfg)(**asdict(cfg))
    out.seed = seed
    return out


def _work(args):
    spec, e0, kind, trial = args
    return (e0, kind.value, trial), run_trial(spec, e0, kind, trial)


def _aggregate(values):
    vals = np.asarray([v for v in values if np.isfinite(v)], dtype=float)
    if vals.size == 0:
        return float("nan"), float("nan"), 0
    se = float(np.std(vals, ddof=1) / np.sqrt(vals.size)) if vals.size > 1 else float("nan")
    return float(np.mean(vals)), se, int(vals.size)


def summarize(spec, results):
    """Rows per output file from a ``{(e0, kind, trial): metrics}`` mapping."""
    tables = {}
    for fname, per_kind in FIGURE_METRICS.items():
        rows = []
        for e0 in spec.e0_grid:
            for kind in KINDS:
                got = [results[(e0, kind.value, t)] for t in range(spec.trials) if (e0, kind.value, t) in results]
                complete = len(got) == spec.trials
                for metric in per_kind[kind]:
                    mean, se, count = _aggregate([r[metric] for r in got])
                    rows.append([e0, kind.value, metric, mean, se, count, int(complete)])
        tables[fname] = rows
    return tables


def _fmt(x):
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_tables(tables, out_dir):
    paths = []
    for fname, rows in tables.items():
        path = os.path.join(out_dir, fname)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER)
            for row in rows:
                w.writerow([_fmt(x) for x in row])
        paths.append(path)
    return paths


PLOT_SCRIPT = '''"""Plot the sweep CSVs written next to this script (needs matplotlib)."""
import csv
import os

import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))


def load(name):
    series = {}
    with open(os.path.join(HERE, name)) as fh:
        for row in csv.DictReader(fh):
            key = (row["kind"], row["metric"])
            series.setdefault(key, ([], []))
            series[key][0].append(float(row["e0"]))
            series[key][1].append(float(row["mean"]))
    return series


def panel(ax, series, ylabel, skip=("unit_power_feasible",)):
    for (kind, metric), (x, y) in sorted(series.items()):
        if metric in skip:
            continue
        ax.loglog(x, y, marker="o", label=f"{kind.upper()} {metric}")
    ax.set_xlabel("E0")
    ax.set_ylabel(ylabel)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize="small")


fig, (a, b) = plt.subplots(1, 2, figsize=(10, 4))
panel(a, load("fig1_power.csv"), "average RS power per element")
panel(b, load("fig1_gain.csv"), "channel gain per UE")
fig.tight_layout()
fig.savefig(os.path.join(HERE, "fig1.png"), dpi=150)

fig, ax = plt.subplots(figsize=(5, 4))
panel(ax, load("fig2_gain.csv"), "channel gain per UE at unit power per element")
fig.tight_layout()
fig.savefig(os.path.join(HERE, "fig2.png"), dpi=150)
'''


def _manifest(spec, wall, complete, done, total):
    return {
        "spec": spec.to_dict(),
        "versions": {
            "rsortho": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
        },
        "wall_time_s": wall,
        "complete": complete,
        "work_items_done": done,
        "work_items_total": total,
    }


def run_sweep(spec, out_dir, progress=None):
    """Run every (e0, kind, trial) item and write CSVs, plot script and manifest.

    On ``KeyboardInterrupt`` the finished items are still written (rows
    flagged incomplete) before the interrupt is re-raised.
    """
    os.makedirs(out_dir, exist_ok=True)
    items = [(spec, e0, kind, t) for e0 in spec.e0_grid for kind in KINDS for t in range(spec.trials)]
    results = {}
    start = time.perf_counter()
    interrupted = False
    try:
        if spec.workers > 1:
            with ProcessPoolExecutor(max_workers=spec.workers) as pool:
                for key, metrics in pool.map(_work, items, chunksize=8):
                    results[key] = metrics
                    if progress:
                        progress(len(results), len(items))
        else:
            for item in items:
                key, metrics = _work(item)
                results[key] = metrics
                if progress:
                    progress(len(results), len(items))
    except KeyboardInterrupt:
        interrupted = True
    wall = time.perf_counter() - start
    tables = summarize(spec, results)
    write_tables(tables, out_dir)
    with open(os.path.join(out_dir, "plot_figures.py"), "w") as fh:
        fh.write(PLOT_SCRIPT)
    complete = len(results) == len(items)
    with open(os.path.join(out_dir, "run_manifest.json"), "w") as fh:
        json.dump(_manifest(spec, wall, complete, len(results), len(items)), fh, indent=1, default=str)
        fh.write("\n")
    if interrupted:
        raise KeyboardInterrupt
    return tables


# --- self-test -------------------------------------------------------------


def _rel(a, b):
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)) / max(np.linalg.norm(np.asarray(b)), 1e-300))


def selftest(m=4, k=2, seed=0, corrupt_gradient=False, instances=5):
    """Cross-module consistency checks at desk scale.

    Returns a list of ``(name, passed, measured, tolerance)``.  With
    ``corrupt_gradient`` the analytic gradient's sign is flipped, which the
    finite-difference check must catch.
    """
    checks = []

    def record(name, measured, tol):
        checks.append((name, bool(measured <= tol), float(measured), tol))

    sizes = {SurfaceKind.ARIS: m * k, SurfaceKind.FRIS: m}
    for kind, n in sizes.items():
        orth, pw, grad = 0.0, 0.0, 0.0
        for i in range(instances):
            cs = generate_iid_rayleigh(m, k, n, 1.0, (seed, i))
            u = random_semi_unitary(m, k, (seed, i, 1))
            target = TargetChannel(1.5, u)
            cfg = solve_aris(cs, target) if kind is SurfaceKind.ARIS else solve_fris(cs, target)
            h = effective_channel(cs, cfg)
            orth = max(orth, np.linalg.norm(h.conj().T @ h - 1.5 * np.eye(k)) / (1.5 * k))
            obj = PowerObjective.from_channels(cs, kind)
            pw = max(pw, abs(obj.power(1.5, u) - cfg.sum_power()) / cfg.sum_power())
            analytic = obj.grad(u)
            if corrupt_gradient:
                analytic = -analytic
            grad = max(grad, _rel(analytic, finite_diff_grad(obj, u, 1e-6)))
        record(f"{kind.value}: orthogonality residual", orth, 1e-7)
        record(f"{kind.value}: power vs solver", pw, 1e-9)
        record(f"{kind.value}: gradient vs finite differences", grad, 1e-4)

        worst = 0.0
        for i in range(instances):
            cs = generate_iid_rayleigh(m, k, n, 1.0, (seed, i, 2))
            target = TargetChannel(1.0, random_semi_unitary(m, k, (seed, i, 3)))
            rep = end_to_end_configure(cs, kind, target, PilotPlan(), (seed, i))
            worst = max(worst, rep.residual)
        record(f"{kind.value}: noiseless protocol round-trip", worst, 1e-7)

        cs = generate_iid_rayleigh(m, k, n, 1.0, (seed, 99))
        res = minimize_power(cs, kind, OptimizerConfig(max_iters=100, restarts=2, seed=seed))
        objs = [row[1] for row in res.trace]
        increase = max([0.0] + [b - a for a, b in zip(objs, objs[1:])])
        record(f"{kind.value}: descent trace non-increasing", increase, 0.0)
    return checks


def print_checks(checks, out=None):
    out = out or sys.stdout
    for name, ok, measured, tol in checks:
        out.write(f"{'PASS' if ok else 'FAIL'}  {name}: {measured:.3e} (tol {tol:g})\n")
    n_ok = sum(ok for _, ok, _, _ in checks)
    out.write(f"{n_ok}/{len(checks)} checks passed\n")
    return n_ok == len(checks)
