import numpy as np
import pytest

from dwmgrad.diagnostics import (
    PotentialSpec,
    Trajectory,
    TrajectoryRecord,
    averaged_iterate_bound,
    descent_audit,
    momentum_bound_audit,
    potential_value,
    step_cost_benchmark,
    write_reports,
)
from dwmgrad.errors import ConfigError, MissingFieldError
from dwmgrad.harness import ExperimentConfig, run
from dwmgrad.objectives import quadratic, rosenbrock


def _record(step, params=None, omega=5, momentum_norm=0.0, update_norm=0.0, loss=0.0):
    return TrajectoryRecord(step, loss, omega, 0.0, momentum_norm, update_norm,
                            1e-3, 1e-3, 1e-3, False, params)


def _constant_traj(theta, n):
    theta = np.asarray(theta, dtype=float)
    return Trajectory([_record(i, theta.copy()) for i in range(n)], initial_params=theta.copy(), delta=10)


# ---------------------------------------------------------------------------
# potential
# ---------------------------------------------------------------------------


def test_potential_vanishes_at_optimum():
    f = quadratic(4, 10.0, seed=1)
    spec = PotentialSpec.for_objective(f)
    assert potential_value(spec, f, f.minimizer) == 0.0


def test_potential_identity_quadratic():
    f = quadratic(2)
    spec = PotentialSpec.for_objective(f)
    # 0.5 |theta|^2 + |theta|^2 / 2 at (1, 0)
    assert potential_value(spec, f, [1.0, 0.0]) == pytest.approx(1.0, abs=1e-15)


def test_potential_non_negative_on_random_spd():
    f = quadratic(6, 20.0, seed=3)
    spec = PotentialSpec.for_objective(f)
    rng = np.random.default_rng(0)
    assert min(potential_value(spec, f, rng.standard_normal(6) * 5) for _ in range(100)) >= 0


def test_potential_spec_validation():
    with pytest.raises(MissingFieldError):
        PotentialSpec.for_objective(rosenbrock())  # no strong-convexity constant
    with pytest.raises(ConfigError):
        PotentialSpec(np.zeros(2), np.zeros(2), 0.0)


# ---------------------------------------------------------------------------
# descent audit
# ---------------------------------------------------------------------------


def test_descent_audit_on_quadratic_run():
    cfg = ExperimentConfig("quadratic", "dwmgrad", {"dimension": 10, "condition_number": 10.0},
                           {"alpha0": 1e-3}, iterations=2000)
    f = quadratic(10, 10.0)
    rep = descent_audit(run(cfg), PotentialSpec.for_objective(f), f)
    assert rep.values["steps"] == 2000
    assert rep.values["fraction_non_increasing"] >= 0.95
    assert rep.values["u_final"] < rep.values["u_initial"]
    assert "fraction_within_rhs" in rep.values and "fraction_within_rhs_2m" in rep.values


def test_descent_audit_constant_trajectory():
    f = quadratic(2)
    rep = descent_audit(_constant_traj([1.0, 2.0], 5), PotentialSpec.for_objective(f), f)
    np.testing.assert_array_equal(rep.series["delta_u"], np.zeros(5))
    assert rep.values["violations"] == 0


def test_descent_audit_reports_divergence():
    cfg = ExperimentConfig("quadratic", "sgd", {"dimension": 3, "condition_number": 5.0},
                           {"lr": 0.5}, iterations=30)
    f = quadratic(3, 5.0)
    rep = descent_audit(run(cfg), PotentialSpec.for_objective(f), f)
    assert rep.values["violations"] > 0
    assert rep.values["worst_violation"] > 0


def test_descent_audit_needs_params():
    f = quadratic(2)
    traj = Trajectory([_record(0)], initial_params=np.zeros(2))
    with pytest.raises(MissingFieldError):
        descent_audit(traj, PotentialSpec.for_objective(f), f)


def test_audits_are_pure():
    cfg = ExperimentConfig("quadratic", "dwmgrad", {"dimension": 3}, {"alpha0": 1e-2}, iterations=100)
    traj = run(cfg)
    f = quadratic(3)
    spec = PotentialSpec.for_objective(f)
    assert descent_audit(traj, spec, f).to_kv() == descent_audit(traj, spec, f).to_kv()
    assert momentum_bound_audit(traj).to_kv() == momentum_bound_audit(traj).to_kv()
    assert averaged_iterate_bound(traj).to_kv() == averaged_iterate_bound(traj).to_kv()


# ---------------------------------------------------------------------------
# averaged iterate
# ---------------------------------------------------------------------------


def test_averaged_iterate_constant():
    rep = averaged_iterate_bound(_constant_traj([3.0, -1.0], 7))
    np.testing.assert_array_equal(rep.series["average"], np.tile([3.0, -1.0], (8, 1)))
    assert rep.values["bounded"] and rep.values["t0"] == 0


def test_averaged_iterate_single_step():
    traj = Trajectory([_record(0, np.array([1.0]))], initial_params=np.array([1.0]))
    rep = averaged_iterate_bound(traj)
    assert rep.values["final_average_norm"] == 1.0


def test_averaged_iterate_on_converging_run():
    cfg = ExperimentConfig("quadratic", "dwmgrad", {"dimension": 5, "condition_number": 4.0},
                           {"alpha0": 1e-2}, iterations=1500)
    rep = averaged_iterate_bound(run(cfg))
    assert rep.values["bounded"]
    assert rep.values["t0"] is not None
    norms = rep.series["average_norm"]
    assert np.all(np.diff(norms[rep.values["t0"]:]) <= 0)


def test_averaged_iterate_flags_blow_up():
    thetas = [np.array([float(2**k)]) for k in range(1, 10)]
    traj = Trajectory([_record(i, t) for i, t in enumerate(thetas)], initial_params=np.array([1.0]))
    rep = averaged_iterate_bound(traj)
    assert not rep.values["bounded"]
    assert rep.values["t0"] is None


# ---------------------------------------------------------------------------
# momentum bound
# ---------------------------------------------------------------------------


def test_momentum_audit_clean_on_real_runs():
    for name, params in (("rosenbrock", {}), ("quadratic", {"dimension": 4, "condition_number": 8.0})):
        cfg = ExperimentConfig(name, "dwmgrad", params, {"alpha0": 3e-3}, iterations=500)
        rep = momentum_bound_audit(run(cfg))
        assert rep.values["violations"] == 0 and rep.passed


def test_momentum_audit_flags_violation():
    recs = [_record(0, omega=5, momentum_norm=0.5, update_norm=0.5),
            _record(1, omega=5, momentum_norm=2.0, update_norm=0.1)]  # second bound is 0.35
    rep = momentum_bound_audit(Trajectory(recs, delta=10))
    assert rep.values["violations"] == 1 and not rep.passed


def test_momentum_decays_geometrically_without_gradient():
    # zero gradient everywhere: f = 0
    from dwmgrad.objectives import Objective
    from dwmgrad.optim import make_optimizer

    zero = Objective("zero", 2, lambda p: 0.0, lambda p: np.zeros(2))
    opt = make_optimizer("dwmgrad", gamma_init=1.0, omega_init=8, delta=10)
    state, x = opt.init(2), np.zeros(2)
    norms, omegas = [1.0], []
    for _ in range(12):
        x, state = opt.step(state, x, zero.grad(x), zero.value(x))
        norms.append(float(np.max(np.abs(state.momentum))))
        omegas.append(state.omega)
    # loss never improves -> window shrinks to 1 and stays
    assert omegas == [7, 6, 5, 4, 3, 2, 1, 1, 1, 1, 1, 1]
    expected = np.cumprod([1.0] + [w / 10 for w in omegas])
    np.testing.assert_allclose(norms, expected, rtol=1e-14)


def test_momentum_audit_needs_window():
    with pytest.raises(MissingFieldError):
        momentum_bound_audit(Trajectory([_record(0)], delta=None))


# ---------------------------------------------------------------------------
# reports / timing
# ---------------------------------------------------------------------------


def test_report_files(tmp_path):
    rep = momentum_bound_audit(Trajectory([_record(0)], delta=10))
    txt, kv = write_reports([rep], tmp_path / "run")
    assert txt.name == "run.audit.txt" and kv.name == "run.audit.kv"
    lines = dict(line.split("=", 1) for line in kv.read_text().splitlines())
    assert lines["momentum_bound.violations"] == "0"
    assert lines["momentum_bound.passed"] == "true"
    assert "[momentum_bound]" in txt.read_text()


def test_step_cost_single_repetition():
    rep = step_cost_benchmark([1000], repetitions=1, steps=2)
    assert rep.values["repetitions"] == 1
    for key in ("dwmgrad.d1000.seconds", "adam.d2000.seconds",
                "dwmgrad.d1000.doubling_ratio", "dwmgrad_over_adam.d1000"):
        assert rep.values[key] > 0


def test_step_cost_rejects_unsorted():
    with pytest.raises(ConfigError):
        step_cost_benchmark([2000, 1000], repetitions=1)
