"""Self-check suite behind ``dwmgrad check``.

Each group returns a :class:`CheckResult`; ``check()`` runs them all. The
groups are also reused by the test suite, so sample counts are parameters.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import reference as ref
from ..diagnostics import momentum_bound_audit
from ..errors import NumericalError
from ..objectives import (
    gradient_check,
    linear_regression,
    logistic_regression,
    make_blobs,
    make_regression,
    quadratic,
    rosenbrock,
    tiny_mlp,
)
from ..optim import (
    BaselineConfig,
    BaselineState,
    DwmGradConfig,
    DwmGradState,
    adaptive_lr,
    baseline_step,
    dwmgrad_step,
    update_second_moment,
    window_update,
)
from .config import ExperimentConfig
from .runner import run, trajectory_csv

ORACLE_RTOL = 1e-12
GRAD_RTOL = 1e-5


@dataclass
class CheckResult:
    group: str
    passed: bool
    detail: str


def rel_err(a, b, scale=None) -> float:
    """max_i |a_i - b_i| / max(|a_i|, |b_i|, scale_i); 0/0 counts as 0."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    denom = np.maximum(np.abs(a), np.abs(b))
    if scale is not None:
        denom = np.maximum(denom, np.abs(np.asarray(scale, dtype=float)))
    diff = np.abs(a - b)
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.where(diff == 0, 0.0, diff / denom)
    return float(np.max(r)) if r.size else 0.0


# ---------------------------------------------------------------------------
# random small instances
# ---------------------------------------------------------------------------


def random_dwmgrad_instance(rng):
    d = int(rng.integers(1, 6))
    delta = int(rng.integers(1, 13))
    cfg = DwmGradConfig(
        alpha0=float(10 ** rng.uniform(-4, -1)),
        omega_init=1,
        delta=delta,
        epsilon=1e-8,
        beta_mode=str(rng.choice(["difference", "cumulative"])),
    )
    v = np.abs(rng.standard_normal(d)) * 10 ** rng.uniform(-3, 1)
    v[rng.random(d) < 0.2] = 0.0
    state = DwmGradState(
        omega=int(rng.integers(1, delta + 1)),
        beta=float(rng.standard_normal()),
        momentum=rng.standard_normal(d) * 10 ** rng.uniform(-3, 0),
        second_moment=v,
        prev_loss=None if rng.random() < 0.2 else float(rng.uniform(0, 10)),
        step_count=int(rng.integers(0, 100)),
    )
    params = rng.standard_normal(d)
    grad = rng.standard_normal(d) * 10 ** rng.uniform(-3, 2)
    grad[rng.random(d) < 0.1] = 0.0
    loss = float(rng.uniform(0, 10))
    return cfg, state, params, grad, loss


def dwmgrad_oracle_error(cfg, state, params, grad, loss) -> float:
    new_params, new_state = dwmgrad_step(state, params, grad, loss, cfg)
    r_theta, r_v, r_gamma, r_omega, r_beta = ref.ref_dwmgrad(
        params.tolist(), grad.tolist(), state.second_moment.tolist(), state.momentum.tolist(),
        state.omega, state.beta, state.prev_loss, loss, cfg.delta, cfg.alpha0, cfg.epsilon,
        cfg.beta_mode,
    )
    if new_state.omega != r_omega or new_state.step_count != state.step_count + 1:
        return np.inf
    scale = np.maximum(np.abs(params), np.abs(np.array(r_gamma)))
    return max(
        rel_err(new_params, r_theta, scale),
        rel_err(new_state.second_moment, r_v),
        rel_err(new_state.momentum, r_gamma),
        rel_err([new_state.beta], [r_beta]),
    )


def random_baseline_instance(rng, kind):
    d = int(rng.integers(1, 6))
    cfg = BaselineConfig(
        kind=kind,
        lr=float(10 ** rng.uniform(-4, -1)),
        momentum=float(rng.uniform(0, 0.99)),
        rho=float(rng.uniform(0.5, 0.999)),
        beta1=float(rng.uniform(0.5, 0.99)),
        beta2=float(rng.uniform(0.9, 0.9999)),
        epsilon=1e-8,
        weight_decay=float(rng.uniform(0, 0.1)),
    )
    t = int(rng.integers(0, 100))
    state = BaselineState(kind=kind, step_count=t)
    if kind in ("msgd", "nag"):
        state.velocity = rng.standard_normal(d) * 0.1
    if kind in ("adagrad", "rmsprop", "adam", "adamw"):
        state.accum = np.abs(rng.standard_normal(d)) * (0.0 if t == 0 else 1.0)
    if kind in ("adam", "adamw"):
        state.first_moment = rng.standard_normal(d) * (0.0 if t == 0 else 0.1)
    params = rng.standard_normal(d)
    grad = rng.standard_normal(d) * 10 ** rng.uniform(-2, 1)
    return cfg, state, params, grad


def baseline_oracle_error(cfg, state, params, grad) -> float:
    new_params, new_state = baseline_step(state, params, grad, cfg)
    th, g = params.tolist(), grad.tolist()
    k = cfg.kind
    if k == "sgd":
        return rel_err(new_params, ref.ref_sgd(th, g, cfg.lr), np.abs(params))
    if k in ("msgd", "nag"):
        r_th, r_vel = ref.ref_momentum(th, g, state.velocity.tolist(), cfg.lr, cfg.momentum)
        scale = np.maximum(np.abs(params), np.abs(r_vel))
        return max(rel_err(new_params, r_th, scale), rel_err(new_state.velocity, r_vel))
    if k == "adagrad":
        r_th, r_acc = ref.ref_adagrad(th, g, state.accum.tolist(), cfg.lr, cfg.epsilon)
        return max(rel_err(new_params, r_th, np.abs(params)), rel_err(new_state.accum, r_acc))
    if k == "rmsprop":
        r_th, r_acc = ref.ref_rmsprop(th, g, state.accum.tolist(), cfg.lr, cfg.rho, cfg.epsilon)
        return max(rel_err(new_params, r_th, np.abs(params)), rel_err(new_state.accum, r_acc))
    wd = cfg.weight_decay if k == "adamw" else 0.0
    r_th, r_m, r_v = ref.ref_adam(
        th, g, state.first_moment.tolist(), state.accum.tolist(), state.step_count + 1,
        cfg.lr, cfg.beta1, cfg.beta2, cfg.epsilon, wd,
    )
    return max(
        rel_err(new_params, r_th, np.abs(params)),
        rel_err(new_state.first_moment, r_m),
        rel_err(new_state.accum, r_v),
    )


# ---------------------------------------------------------------------------
# groups
# ---------------------------------------------------------------------------


def check_oracle(n: int = 1000, seed: int = 0) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = {"dwmgrad": 0.0}
    for _ in range(n):
        worst["dwmgrad"] = max(worst["dwmgrad"], dwmgrad_oracle_error(*random_dwmgrad_instance(rng)))
    for kind in ("sgd", "msgd", "nag", "adagrad", "rmsprop", "adam", "adamw"):
        worst[kind] = max(
            baseline_oracle_error(*random_baseline_instance(rng, kind)) for _ in range(n)
        )
    ok = all(v <= ORACLE_RTOL for v in worst.values())
    detail = ", ".join(f"{k}={v:.1e}" for k, v in worst.items())
    return CheckResult("oracle", ok, f"max rel err: {detail}")


def check_window(n_sequences: int = 100_000, length: int = 20, seed: int = 0) -> CheckResult:
    rng = np.random.default_rng(seed)
    deltas = rng.integers(1, 21, size=n_sequences)
    betas = rng.standard_normal((n_sequences, length))
    betas[rng.random(betas.shape) < 0.05] = 0.0
    bad = 0
    for delta, seq in zip(deltas.tolist(), betas.tolist()):
        omega = int(rng.integers(1, delta + 1))
        for b in seq:
            omega = window_update(omega, b, delta)
            if not 1 <= omega <= delta:
                bad += 1
    return CheckResult("window", bad == 0, f"{n_sequences} sequences x {length} steps, {bad} escapes")


def check_step_invariants(n_runs: int = 200, steps: int = 50, seed: int = 0) -> CheckResult:
    """v >= 0 and 0 < lr <= alpha0/eps along random prose-rule runs."""
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(n_runs):
        d = int(rng.integers(1, 8))
        delta = int(rng.integers(1, 13))
        cfg = DwmGradConfig(alpha0=float(10 ** rng.uniform(-4, -1)),
                            omega_init=int(rng.integers(1, delta + 1)), delta=delta)
        v = np.zeros(d)
        omega = cfg.omega_init
        for _ in range(steps):
            g = rng.standard_normal(d) * 10 ** rng.uniform(-6, 3)
            g[rng.random(d) < 0.2] = 0.0
            new_omega = window_update(omega, float(rng.standard_normal()), delta)
            v = update_second_moment(v, g, omega, new_omega)
            lr = adaptive_lr(v, cfg.alpha0, cfg.epsilon)
            omega = new_omega
            if np.any(v < 0) or np.any(lr <= 0) or np.any(lr > cfg.alpha0 / cfg.epsilon):
                bad += 1
    return CheckResult("invariants", bad == 0, f"{n_runs} runs x {steps} steps, {bad} violations")


def recorded_runs(n_runs: int = 100, seed: int = 0, iterations: int = 200):
    """Yield (config, trajectory) for a spread of DWMGrad runs on every objective."""
    rng = np.random.default_rng(seed)
    objectives = [
        ("rosenbrock", {}),
        ("quadratic", {"dimension": 5, "condition_number": 10.0}),
        ("logistic", {"n_samples": 60, "dimension": 3}),
        ("mlp", {"n_samples": 40, "dimension": 2, "hidden_units": 4}),
        ("linear_regression", {"n_samples": 40, "dimension": 3}),
    ]
    for i in range(n_runs):
        name, params = objectives[i % len(objectives)]
        params = dict(params)
        if name != "rosenbrock":
            params["seed"] = int(rng.integers(0, 1000))
        delta = int(rng.integers(1, 13))
        hyper = {
            "alpha0": float(10 ** rng.uniform(-4, -1.5)),
            "delta": delta,
            "omega_init": int(rng.integers(1, delta + 1)),
            "gamma_init": float(rng.choice([0.0, 0.0, 0.9])) * 1e-3,
            "beta_mode": str(rng.choice(["difference", "cumulative"])),
        }
        cfg = ExperimentConfig(name, "dwmgrad", params, hyper, iterations=iterations,
                               seed=i, log_params=False)
        try:
            yield cfg, run(cfg)
        except NumericalError as exc:
            yield cfg, exc.partial


def check_momentum(n_runs: int = 100, iterations: int = 200) -> CheckResult:
    total, worst = 0, -np.inf
    for _, traj in recorded_runs(n_runs, iterations=iterations):
        rep = momentum_bound_audit(traj)
        total += rep.values["violations"]
        worst = max(worst, rep.values["max_slack_used"])
    return CheckResult("momentum", total == 0, f"{n_runs} runs, {total} violations, max margin {worst:.2e}")


def objectives_under_test(seed: int = 0):
    blobs = make_blobs(40, 3, 1.0, seed)
    return {
        "rosenbrock": rosenbrock(),
        "quadratic": quadratic(6, 10.0, seed),
        "logistic": logistic_regression(blobs),
        "mlp": tiny_mlp(blobs, 5),
        "linear_regression": linear_regression(*make_regression(40, 4, 0.1, seed)),
    }


def check_gradients(points: int = 50, h: float = 1e-5, seed: int = 0) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = {}
    for name, obj in objectives_under_test(seed).items():
        worst[name] = max(
            gradient_check(obj, rng.uniform(-2, 2, obj.dimension), h) for _ in range(points)
        )
    ok = all(v <= GRAD_RTOL for v in worst.values())
    detail = ", ".join(f"{k}={v:.1e}" for k, v in worst.items())
    return CheckResult("gradients", ok, f"max rel err: {detail}")


def check_determinism() -> CheckResult:
    cfg = ExperimentConfig("rosenbrock", "dwmgrad", {}, {"alpha0": 3e-3}, iterations=200)
    a, b = trajectory_csv(run(cfg)), trajectory_csv(run(cfg))
    return CheckResult("determinism", a == b, "two identical runs -> identical CSV" if a == b else "CSV differs")


GROUPS = {
    "oracle": check_oracle,
    "window": check_window,
    "invariants": check_step_invariants,
    "momentum": check_momentum,
    "gradients": check_gradients,
    "determinism": check_determinism,
}


def check(groups=None) -> list[CheckResult]:
    results = []
    for name in groups or GROUPS:
        try:
            results.append(GROUPS[name]())
        except Exception as exc:  # a crash inside a group is a failure of that group
            results.append(CheckResult(name, False, f"{type(exc).__name__}: {exc}"))
    return results
