"""Run loop, CSV output, comparisons and sweeps."""
from __future__ import annotations

import csv
import io
import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from ..diagnostics import (
    PotentialSpec,
    Trajectory,
    TrajectoryRecord,
    averaged_iterate_bound,
    descent_audit,
    momentum_bound_audit,
    write_reports,
)
from ..errors import ConfigError, NumericalError
from ..objectives import Objective, build_objective
from ..optim import LR_CEILING_FACTOR, make_optimizer
from .config import ExperimentConfig, validate_grid

log = logging.getLogger(__name__)

CSV_FIELDS = [
    "step", "loss", "omega", "grad_norm", "momentum_norm", "update_norm",
    "lr_min", "lr_mean", "lr_max", "lr_ceiling_flag",
]


def objective_for(config: ExperimentConfig) -> Objective:
    return build_objective(config.objective, **config.objective_params)


def start_point(config: ExperimentConfig, objective: Objective) -> np.ndarray:
    if config.start_point is not None:
        x0 = np.array(config.start_point, dtype=float)
        if x0.shape != (objective.dimension,):
            raise ConfigError(
                f"start_point has {x0.size} entries, objective needs {objective.dimension}"
            )
        return x0
    if objective.default_start is not None:
        return np.array(objective.default_start, dtype=float)
    return np.random.default_rng(config.seed).standard_normal(objective.dimension)


def run(config: ExperimentConfig, out_dir=None, objective: Optional[Objective] = None) -> Trajectory:
    """Execute ``config.iterations`` steps (fewer if ``stop_loss`` is reached).

    Raises NumericalError with ``.partial`` holding the trajectory so far when
    the loss or gradient becomes non-finite; the partial CSV is still written.
    """
    objective = objective or objective_for(config)
    opt = make_optimizer(config.optimizer, **config.hyperparams)
    rng = np.random.default_rng(config.seed)
    batching = config.batch_size is not None and objective.restrict is not None

    params = start_point(config, objective)
    state = opt.init(objective.dimension)
    loss = objective.value(params)
    init_momentum = opt.momentum_of(state)
    traj = Trajectory(
        records=[],
        config=config,
        initial_params=params.copy(),
        initial_loss=loss,
        initial_momentum_norm=_inf_norm(init_momentum),
        initial_momentum=None if init_momentum is None else init_momentum.copy(),
        delta=opt.config.delta if opt.name == "dwmgrad" else None,
    )
    base_lr = opt.base_lr

    try:
        with np.errstate(over="ignore", invalid="ignore"):
            for step in range(config.iterations):
                if batching:
                    idx = rng.integers(0, objective.n_samples, size=config.batch_size)
                    target = objective.restrict(idx)
                    step_loss = target.value(params)
                else:
                    target, step_loss = objective, loss
                grad = target.grad(opt.lookahead_point(state, params))
                params, state = opt.step(state, params, grad, step_loss)
                loss = objective.value(params)
                if not (np.isfinite(loss) and np.all(np.isfinite(params))):
                    raise NumericalError(f"non-finite loss or parameters after step {step}")
                traj.records.append(_record(step, loss, grad, state, opt, params, config, base_lr))
                if config.stop_loss is not None and loss < config.stop_loss:
                    break
    except NumericalError as exc:
        exc.partial = traj
        if out_dir is not None:
            write_trajectory_csv(traj, Path(out_dir) / f"{config.label}.csv", config.log_every)
        raise

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_trajectory_csv(traj, out / f"{config.label}.csv", config.log_every)
        reports = audit(traj, objective)
        if reports:
            write_reports(reports, out / config.label)
    return traj


def _inf_norm(v) -> float:
    return 0.0 if v is None or v.size == 0 else float(np.max(np.abs(v)))


def _record(step, loss, grad, state, opt, params, config, base_lr) -> TrajectoryRecord:
    lr = state.lr
    return TrajectoryRecord(
        step=step,
        loss=float(loss),
        omega=state.omega if opt.name == "dwmgrad" else None,
        grad_norm=_inf_norm(grad),
        momentum_norm=_inf_norm(opt.momentum_of(state)),
        update_norm=float(np.max(np.abs(lr * grad))),
        lr_min=float(lr.min()),
        lr_mean=float(lr.mean()),
        lr_max=float(lr.max()),
        lr_ceiling_flag=bool(lr.max() > LR_CEILING_FACTOR * base_lr),
        params=params.copy() if config.log_params else None,
    )


def audit(traj: Trajectory, objective: Objective) -> list:
    """Every audit applicable to this trajectory."""
    reports = []
    if traj.delta is not None:
        reports.append(momentum_bound_audit(traj))
    if traj.initial_params is not None and all(r.params is not None for r in traj.records):
        reports.append(averaged_iterate_bound(traj))
        if objective.minimizer is not None and objective.strong_convexity is not None:
            reports.append(descent_audit(traj, PotentialSpec.for_objective(objective), objective))
    return reports


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def _num(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


def trajectory_csv(traj: Trajectory, log_every: int = 1) -> str:
    """Header + one row per logged step; the final step is always written."""
    dim = traj.initial_params.size if traj.initial_params is not None else 0
    with_params = bool(traj.records) and traj.records[0].params is not None
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS + ([f"param_{i}" for i in range(dim)] if with_params else []))
    last = len(traj.records) - 1
    for i, r in enumerate(traj.records):
        if i % log_every and i != last:
            continue
        row = [_num(getattr(r, f)) for f in CSV_FIELDS]
        if with_params:
            row += [_num(v) for v in r.params]
        w.writerow(row)
    return buf.getvalue()


def write_trajectory_csv(traj: Trajectory, path, log_every: int = 1) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(trajectory_csv(traj, log_every))
    return path


def read_trajectory_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# ---------------------------------------------------------------------------
# compare
# ---------------------------------------------------------------------------


@dataclass
class ComparisonRow:
    label: str
    final_loss: float
    best_loss: float
    steps_to_threshold: Optional[int]


def _unique_labels(configs) -> list[str]:
    seen: dict = {}
    labels = []
    for c in configs:
        n = seen.get(c.label, 0) + 1
        seen[c.label] = n
        labels.append(c.label if n == 1 else f"{c.label}#{n}")
    return labels


def compare(configs, out_dir=None, threshold: Optional[float] = None):
    """Run several optimizers on one objective; returns (rows, merged_csv_text)."""
    if not configs:
        raise ConfigError("nothing to compare")
    first = configs[0]
    for c in configs[1:]:
        if (c.objective, c.objective_params) != (first.objective, first.objective_params):
            raise ConfigError("all compared configs must share one objective")
        if c.start_point != first.start_point or c.iterations != first.iterations:
            raise ConfigError("all compared configs must share start point and iteration budget")

    labels = _unique_labels(configs)
    trajs = [run(c) for c in configs]
    rows = []
    for label, t in zip(labels, trajs):
        losses = t.losses()
        hit = None
        if threshold is not None:
            below = np.flatnonzero(losses < threshold)
            hit = int(below[0]) + 1 if below.size else None
        rows.append(ComparisonRow(label, float(losses[-1]), float(losses.min()), hit))

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["step"] + labels)
    longest = max(len(t) for t in trajs)
    for i in range(longest):
        w.writerow([i] + [_num(t.records[i].loss) if i < len(t) else "" for t in trajs])
    merged = buf.getvalue()

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "comparison.csv").write_text(merged)
        (out / "comparison.txt").write_text(format_comparison(rows, threshold))
        for c, label, t in zip(configs, labels, trajs):
            write_trajectory_csv(t, out / f"{label}.csv", c.log_every)
    return rows, merged


def format_comparison(rows, threshold=None) -> str:
    head = f"{'optimizer':<16} {'final_loss':>24} {'best_loss':>24} {'steps_to_threshold':>20}"
    lines = [head, "-" * len(head)]
    for r in rows:
        hit = "-" if r.steps_to_threshold is None else str(r.steps_to_threshold)
        lines.append(f"{r.label:<16} {r.final_loss:>24.17g} {r.best_loss:>24.17g} {hit:>20}")
    if threshold is not None:
        lines.append(f"threshold = {threshold:g}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------


@dataclass
class SweepResult:
    index: int
    settings: dict
    final_loss: float
    best_loss: float
    error: Optional[str] = None


def expand_grid(base: ExperimentConfig, grid: dict) -> list[tuple[dict, ExperimentConfig]]:
    validate_grid(base, grid)
    keys = list(grid)
    out = []
    for values in itertools.product(*(grid[k] for k in keys)):
        settings = dict(zip(keys, values))
        top = {k: v for k, v in settings.items() if k in ("seed", "iterations")}
        hyper = {**base.hyperparams, **{k: v for k, v in settings.items() if k not in top}}
        tag = ",".join(f"{k}={v}" for k, v in settings.items())
        out.append((settings, base.replace(hyperparams=hyper, name=f"{base.label}[{tag}]", **top)))
    return out


def sweep(base: ExperimentConfig, grid: dict, out_dir=None, workers: int = 1) -> list[SweepResult]:
    """Cartesian-product runs. Results come back in grid order; ``ranking`` sorts them."""
    points = expand_grid(base, grid)

    def one(i_point):
        i, (settings, cfg) = i_point
        try:
            t = run(cfg, out_dir)
        except NumericalError as exc:
            losses = exc.partial.losses() if exc.partial is not None and len(exc.partial) else [np.inf]
            return SweepResult(i, settings, float("nan"), float(np.min(losses)), str(exc))
        losses = t.losses()
        return SweepResult(i, settings, float(losses[-1]), float(losses.min()))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, enumerate(points)))
    else:
        results = [one(p) for p in enumerate(points)]

    if out_dir is not None:
        Path(out_dir, "sweep.txt").write_text(format_sweep(results))
    return results


def ranking(results) -> list[SweepResult]:
    return sorted(results, key=lambda r: (np.nan_to_num(r.best_loss, nan=np.inf), r.index))


def format_sweep(results) -> str:
    lines = ["rank  best_loss                 final_loss                settings"]
    for rank, r in enumerate(ranking(results), 1):
        tag = ", ".join(f"{k}={v}" for k, v in r.settings.items())
        note = f"  ({r.error})" if r.error else ""
        lines.append(f"{rank:<5} {r.best_loss:<25.17g} {r.final_loss:<25.17g} {tag}{note}")
    return "\n".join(lines) + "\n"
