"""Potential-function descent audit for DWMGrad on a random SPD quadratic."""
import argparse

from dwmgrad.diagnostics import PotentialSpec, descent_audit
from dwmgrad.harness import ExperimentConfig, run
from dwmgrad.objectives import quadratic


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dimension", type=int, default=10)
    ap.add_argument("--condition", type=float, default=10.0)
    ap.add_argument("--alpha0", type=float, default=1e-3)
    ap.add_argument("--iterations", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    params = {"dimension": args.dimension, "condition_number": args.condition, "seed": args.seed}
    f = quadratic(**params)
    cfg = ExperimentConfig("quadratic", "dwmgrad", params, {"alpha0": args.alpha0}, iterations=args.iterations)
    print(descent_audit(run(cfg, objective=f), PotentialSpec.for_objective(f), f).to_text())


if __name__ == "__main__":
    main()
