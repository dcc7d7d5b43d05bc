"""Empirical convergence audits over recorded trajectories, plus step-cost timing.

The audits only measure. A failed inequality is reported, never raised, except
where an input is missing (:class:`MissingFieldError`).
"""
from __future__ import annotations

import statistics
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .errors import ConfigError, MissingFieldError
from .objectives import Objective
from .optim import make_optimizer


@dataclass
class TrajectoryRecord:
    """State after one optimizer step.

    ``loss`` and ``params`` refer to the point reached by the step, while
    ``grad_norm`` and ``update_norm`` describe the gradient that produced it.
    """

    step: int
    loss: float
    omega: Optional[int]
    grad_norm: float
    momentum_norm: float
    update_norm: float  # ||lr * g||_inf
    lr_min: float
    lr_mean: float
    lr_max: float
    lr_ceiling_flag: bool
    params: Optional[np.ndarray] = None


@dataclass
class Trajectory:
    records: list
    config: Any = None
    initial_params: Optional[np.ndarray] = None
    initial_loss: Optional[float] = None
    initial_momentum_norm: float = 0.0
    delta: Optional[int] = None  # DWMGrad maximum window, when applicable
    initial_momentum: Optional[np.ndarray] = None

    def __len__(self):
        return len(self.records)

    def params_sequence(self) -> np.ndarray:
        """theta_0, theta_1, ..., theta_T as rows."""
        if self.initial_params is None or any(r.params is None for r in self.records):
            raise MissingFieldError("trajectory was recorded without raw parameters")
        return np.vstack([self.initial_params] + [r.params for r in self.records])

    def losses(self) -> np.ndarray:
        return np.array([r.loss for r in self.records])


# ---------------------------------------------------------------------------
# Report plumbing
# ---------------------------------------------------------------------------


@dataclass
class Report:
    name: str
    values: dict = field(default_factory=dict)
    series: dict = field(default_factory=dict)  # per-step arrays, not serialised to kv

    @property
    def passed(self) -> bool:
        return bool(self.values.get("passed", True))

    def to_text(self) -> str:
        lines = [f"[{self.name}]"]
        width = max((len(k) for k in self.values), default=0)
        for k, v in self.values.items():
            lines.append(f"  {k.ljust(width)}  {_fmt(v)}")
        return "\n".join(lines) + "\n"

    def to_kv(self) -> str:
        return "".join(f"{self.name}.{k}={_fmt(v)}\n" for k, v in self.values.items())


def _fmt(v) -> str:
    if isinstance(v, bool) or v is None:
        return str(v).lower()
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def write_reports(reports, stem) -> tuple[Path, Path]:
    """Write ``<stem>.audit.txt`` and ``<stem>.audit.kv``."""
    stem = Path(stem)
    txt = stem.with_name(stem.name + ".audit.txt")
    kv = stem.with_name(stem.name + ".audit.kv")
    txt.write_text("\n".join(r.to_text() for r in reports))
    kv.write_text("".join(r.to_kv() for r in reports))
    return txt, kv


# ---------------------------------------------------------------------------
# Potential function
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PotentialSpec:
    theta_star: np.ndarray
    grad_at_star: np.ndarray
    m: float

    def __post_init__(self):
        if not self.m > 0:
            raise ConfigError(f"strong convexity constant must be > 0, got {self.m}")
        if np.shape(self.theta_star) != np.shape(self.grad_at_star):
            raise ConfigError("theta_star and grad_at_star shapes differ")

    @classmethod
    def for_objective(cls, objective: Objective) -> "PotentialSpec":
        if objective.minimizer is None:
            raise MissingFieldError(f"{objective.name} has no known minimizer")
        if objective.strong_convexity is None:
            raise MissingFieldError(f"{objective.name} has no strong-convexity constant")
        star = np.asarray(objective.minimizer, dtype=float)
        return cls(star, objective.grad(star), float(objective.strong_convexity))


def potential_value(spec: PotentialSpec, objective: Objective, theta) -> float:
    """U = f(theta) - f(theta*) - <grad f(theta*), theta - theta*> + |theta - theta*|^2 / 2m."""
    theta = np.asarray(theta, dtype=float)
    diff = theta - spec.theta_star
    return float(
        objective.value(theta)
        - objective.value(spec.theta_star)
        - spec.grad_at_star @ diff
        + diff @ diff / (2 * spec.m)
    )


def descent_audit(trajectory: Trajectory, spec: PotentialSpec, objective: Objective,
                  tau: Optional[float] = None) -> Report:
    """Per-step change of the potential against the descent bound.

    For the step theta_t -> theta_{t+1} with carried momentum
    c_t = (omega_{t+1} / delta) * gamma_t, the bound is

        rhs     = -<grad f(theta_t) - grad f(theta*), c_t> + f(theta_t) - f(theta_t - c_t)
        rhs_2m  = -<grad f(theta_t) - grad f(theta*), c_t> + (2/m)(f(theta_t) - f(theta_t - c_t))

    Both forms are reported. gamma_t is recovered from consecutive parameters.
    """
    thetas = trajectory.params_sequence()
    u = np.array([potential_value(spec, objective, th) for th in thetas])
    if tau is None:
        tau = 1e-9 * max(1.0, u[0])
    du = np.diff(u)
    n = du.size

    have_window = trajectory.delta is not None and all(r.omega is not None for r in trajectory.records)
    rhs = np.full(n, np.nan)
    rhs_2m = np.full(n, np.nan)
    if have_window and n:
        gamma = (
            trajectory.initial_momentum
            if trajectory.initial_momentum is not None
            else np.zeros_like(thetas[0])
        )
        for t in range(n):
            carried = trajectory.records[t].omega / trajectory.delta * gamma
            g_diff = objective.grad(thetas[t]) - spec.grad_at_star
            drop = objective.value(thetas[t]) - objective.value(thetas[t] - carried)
            inner = -(g_diff @ carried)
            rhs[t] = inner + drop
            rhs_2m[t] = inner + 2.0 / spec.m * drop
            gamma = thetas[t] - thetas[t + 1]

    ok = du <= tau
    values = {
        "steps": n,
        "tau": float(tau),
        "u_initial": float(u[0]),
        "u_final": float(u[-1]),
        "fraction_non_increasing": float(ok.mean()) if n else 1.0,
        "violations": int((~ok).sum()),
        "worst_violation": float(du.max()) if n else 0.0,
    }
    if have_window and n:
        values["fraction_within_rhs"] = float(np.mean(du <= rhs + tau))
        values["fraction_within_rhs_2m"] = float(np.mean(du <= rhs_2m + tau))
    return Report("descent", values, {"u": u, "delta_u": du, "rhs": rhs, "rhs_2m": rhs_2m})


def averaged_iterate_bound(trajectory: Trajectory) -> Report:
    """Running mean of the iterates against the empirical bound |theta_0| + max |gamma|.

    ``within_bound`` compares every running-average norm with that bound.
    ``bounded`` is false only on a monotone blow-up, i.e. the running-average
    norm grows at every step of the second half of a run of at least 4 steps.
    ``t0`` is the first index after which the norm is non-increasing
    (None if it is still growing at the end).
    """
    thetas = trajectory.params_sequence()
    counts = np.arange(1, thetas.shape[0] + 1)[:, None]
    avg = np.cumsum(thetas, axis=0) / counts
    avg_norm = np.linalg.norm(avg, axis=1)
    theta0_norm = float(np.linalg.norm(thetas[0]))
    steps = np.diff(thetas, axis=0)
    gamma_max = float(np.max(np.linalg.norm(steps, axis=1))) if steps.size else 0.0
    bound = theta0_norm + gamma_max

    growth = np.diff(avg_norm)
    increasing = np.flatnonzero(growth > 0)
    if increasing.size == 0:
        t0 = 0
    elif increasing[-1] + 1 < avg_norm.size - 1:
        t0 = int(increasing[-1] + 1)
    else:
        t0 = None
    tail = growth[growth.size // 2:]
    blow_up = growth.size >= 4 and bool(np.all(tail > 0))
    values = {
        "steps": int(thetas.shape[0] - 1),
        "theta0_norm": theta0_norm,
        "gamma_max": gamma_max,
        "bound": bound,
        "max_average_norm": float(avg_norm.max()),
        "final_average_norm": float(avg_norm[-1]),
        "t0": t0,
        "within_bound": bool(avg_norm.max() <= bound * (1 + 1e-12)),
        "bounded": not blow_up,
    }
    return Report("averaged_iterate", values, {"average": avg, "average_norm": avg_norm})


def momentum_bound_audit(trajectory: Trajectory, slack: float = 1e-12) -> Report:
    """Check |gamma_t| <= (omega_t/delta)|gamma_{t-1}| + |lr_t * g_t| (inf-norms) every step.

    A step counts as a violation when it exceeds the bound by more than
    ``slack * max(1, bound)``; the scaling absorbs rounding on large momenta.
    """
    if trajectory.delta is None:
        raise MissingFieldError("trajectory has no maximum window (not a DWMGrad run?)")
    prev = trajectory.initial_momentum_norm
    worst, violations = -np.inf, 0
    margins = []
    for r in trajectory.records:
        if r.omega is None:
            raise MissingFieldError(f"record {r.step} has no window value")
        bound = r.omega / trajectory.delta * prev + r.update_norm
        margin = r.momentum_norm - bound
        margins.append(margin)
        if margin > slack * max(1.0, bound):
            violations += 1
        worst = max(worst, margin)
        prev = r.momentum_norm
    values = {
        "steps": len(trajectory.records),
        "violations": violations,
        "max_slack_used": float(worst) if margins else 0.0,
        "passed": violations == 0,
    }
    return Report("momentum_bound", values, {"margin": np.array(margins)})


# ---------------------------------------------------------------------------
# Timing
# ---------------------------------------------------------------------------


def time_per_step(name: str, dimension: int, repetitions: int = 5, steps: int = 10,
                  seed: int = 0, **hyperparams) -> float:
    """Median over repetitions of the mean wall time of one optimizer step."""
    opt = make_optimizer(name, **hyperparams)
    rng = np.random.default_rng(seed)
    params = rng.standard_normal(dimension)
    grad = rng.standard_normal(dimension)
    state = opt.init(dimension)
    params, state = opt.step(state, params, grad, 1.0)  # warm-up
    samples = []
    for rep in range(repetitions):
        loss = 1.0 + rep
        t0 = time.perf_counter()
        for k in range(steps):
            params, state = opt.step(state, params, grad, loss - 0.01 * k)
        samples.append((time.perf_counter() - t0) / steps)
    return statistics.median(samples)


def step_cost_benchmark(dimensions, repetitions: int = 5, steps: int = 10,
                        optimizers=("dwmgrad", "adam")) -> Report:
    """Time each optimizer at every d and at 2d; report doubling ratios.

    Must run alone: concurrent work skews the numbers.
    """
    dims = [int(d) for d in dimensions]
    if dims != sorted(dims):
        raise ConfigError("dimensions must be sorted ascending")
    if repetitions < 1:
        raise ConfigError("repetitions must be >= 1")
    values: dict = {"repetitions": repetitions, "steps_per_repetition": steps}
    times: dict = {}
    for d in dims:
        for name in optimizers:
            t1 = time_per_step(name, d, repetitions, steps)
            t2 = time_per_step(name, 2 * d, repetitions, steps)
            times[(name, d)] = t1
            values[f"{name}.d{d}.seconds"] = t1
            values[f"{name}.d{2 * d}.seconds"] = t2
            values[f"{name}.d{d}.doubling_ratio"] = t2 / t1
    if "dwmgrad" in optimizers and "adam" in optimizers:
        for d in dims:
            values[f"dwmgrad_over_adam.d{d}"] = times[("dwmgrad", d)] / times[("adam", d)]
    return Report("step_cost", values)

