"""Acceptance criteria, one test each. Every test prints a single PASS/FAIL line.

Run on its own with ``pytest tests/test_acceptance.py -s`` to see them grouped.
"""
import json
import time

import pytest

from dwmgrad.diagnostics import (
    PotentialSpec,
    descent_audit,
    step_cost_benchmark,
)
from dwmgrad.harness import ExperimentConfig, checks, run
from dwmgrad.harness.cli import main
from dwmgrad.objectives import make_blobs, quadratic, tiny_mlp


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {n}] {'PASS' if ok else 'FAIL'}  {detail}")
        return ok

    return emit


def test_1_rosenbrock_comparison(report):
    t0 = time.perf_counter()
    finals = {}
    for alpha in (1e-3, 3e-3, 1e-2):
        for name, key in (("dwmgrad", "alpha0"), ("adam", "lr"), ("adagrad", "lr")):
            cfg = ExperimentConfig("rosenbrock", name, {}, {key: alpha}, iterations=1000,
                                   start_point=(-1.2, 1.0), log_params=False)
            finals[name, alpha] = run(cfg).records[-1].loss
    elapsed = time.perf_counter() - t0
    winners = [a for a in (1e-3, 3e-3, 1e-2)
               if finals["dwmgrad", a] < min(finals["adam", a], finals["adagrad", a])]
    detail = "; ".join(
        f"a={a:g}: dwm={finals['dwmgrad', a]:.3g} adam={finals['adam', a]:.3g} "
        f"adagrad={finals['adagrad', a]:.3g}" for a in (1e-3, 3e-3, 1e-2)
    )
    ok = bool(winners) and elapsed < 5
    assert report(1, ok, f"{detail}; {elapsed:.2f}s")


def test_2_oracle_equivalence(report):
    t0 = time.perf_counter()
    res = checks.check_oracle(n=1000, seed=2024)
    elapsed = time.perf_counter() - t0
    ok = res.passed and elapsed < 10
    assert report(2, ok, f"{res.detail} (tol 1e-12); {elapsed:.2f}s")


def test_3_invariant_suite(report):
    t0 = time.perf_counter()
    results = [
        checks.check_window(n_sequences=100_000, length=20),
        checks.check_step_invariants(n_runs=200, steps=50),
        checks.check_momentum(n_runs=100, iterations=200),
    ]
    elapsed = time.perf_counter() - t0
    ok = all(r.passed for r in results) and elapsed < 30
    assert report(3, ok, " | ".join(f"{r.group}: {r.detail}" for r in results) + f"; {elapsed:.2f}s")


def test_4_gradient_checks(report):
    t0 = time.perf_counter()
    res = checks.check_gradients(points=50, h=1e-5)
    elapsed = time.perf_counter() - t0
    ok = res.passed and elapsed < 10
    assert report(4, ok, f"{res.detail} (tol 1e-5); {elapsed:.2f}s")


def test_5_potential_descent(report):
    f = quadratic(10, 10.0, seed=0)
    cfg = ExperimentConfig("quadratic", "dwmgrad", {"dimension": 10, "condition_number": 10.0, "seed": 0},
                           {"alpha0": 1e-3}, iterations=2000)
    rep = descent_audit(run(cfg, objective=f), PotentialSpec.for_objective(f), f)
    frac = rep.values["fraction_non_increasing"]
    ok = rep.values["steps"] == 2000 and frac >= 0.95
    assert report(5, ok, f"fraction non-increasing U = {frac:.4f} (need >= 0.95), "
                         f"tau = {rep.values['tau']:.2e}, worst dU = {rep.values['worst_violation']:.2e}")


def _train_accuracy(name, hyper, data):
    f = tiny_mlp(data, 8)
    traj = run(ExperimentConfig("mlp", name, {}, hyper, iterations=2000), objective=f)
    return f.accuracy(traj.records[-1].params)


def test_6_mlp_training_parity(report):
    t0 = time.perf_counter()
    # +/- 2 e_1 centres: +/- 1 caps the Bayes accuracy near 84%, below the 95% target
    data = make_blobs(n_samples=200, dimension=2, separation=2.0, seed=0)
    acc_dwm = _train_accuracy("dwmgrad", {"alpha0": 1e-3, "omega_init": 5, "delta": 10}, data)
    acc_adam = _train_accuracy("adam", {}, data)
    elapsed = time.perf_counter() - t0
    ok = acc_dwm >= 0.95 and acc_adam >= 0.95 and elapsed < 20
    assert report(6, ok, f"train acc dwmgrad={acc_dwm:.3f} adam={acc_adam:.3f} (need >= 0.95); {elapsed:.2f}s")


@pytest.mark.slow
def test_7_step_cost_scaling(report):
    t0 = time.perf_counter()
    rep = step_cost_benchmark([10**4, 10**5, 10**6], repetitions=7, steps=10)
    elapsed = time.perf_counter() - t0
    v = rep.values
    ratios = {d: v[f"dwmgrad.d{d}.doubling_ratio"] for d in (10**4, 10**5, 10**6)}
    rel = {d: v[f"dwmgrad_over_adam.d{d}"] for d in (10**4, 10**5, 10**6)}
    ok = all(1.5 <= r <= 3.0 for r in ratios.values()) and all(r <= 3 for r in rel.values()) and elapsed < 60
    detail = ", ".join(f"d={d:g}: x{ratios[d]:.2f} (vs adam {rel[d]:.2f})" for d in ratios)
    assert report(7, ok, f"doubling ratios {detail}; {elapsed:.2f}s")


def test_8_cli_determinism(tmp_path, report):
    cfg = tmp_path / "rosen.json"
    cfg.write_text(json.dumps({
        "name": "det",
        "objective": {"name": "rosenbrock"},
        "optimizer": {"name": "dwmgrad", "alpha0": 3e-3},
        "iterations": 1000,
        "seed": 7,
    }))
    codes = [main(["run", str(cfg), "--out", str(tmp_path / d), "--quiet"]) for d in ("a", "b")]
    a = (tmp_path / "a" / "det.csv").read_bytes()
    b = (tmp_path / "b" / "det.csv").read_bytes()
    ok = codes == [0, 0] and a == b and len(a) > 0
    assert report(8, ok, f"two CLI runs, {len(a)} bytes each, identical={a == b}")
