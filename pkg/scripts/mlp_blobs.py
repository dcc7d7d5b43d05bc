"""Train the 8-unit MLP on two Gaussian blobs and report training accuracy per optimizer."""
import argparse

from dwmgrad.harness import ExperimentConfig, run
from dwmgrad.objectives import make_blobs, tiny_mlp


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--separation", type=float, default=2.0)
    ap.add_argument("--samples", type=int, default=200)
    ap.add_argument("--iterations", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    data = make_blobs(n_samples=args.samples, separation=args.separation, seed=args.seed)
    f = tiny_mlp(data, 8)
    runs = {
        "dwmgrad": {"alpha0": 1e-3, "omega_init": 5, "delta": 10},
        "adam": {},
        "rmsprop": {},
        "msgd": {"lr": 1e-2},
    }
    for name, hyper in runs.items():
        traj = run(ExperimentConfig("mlp", name, {}, hyper, iterations=args.iterations), objective=f)
        last = traj.records[-1]
        print(f"{name:<8} loss={last.loss:.4f} acc={f.accuracy(last.params):.3f}")


if __name__ == "__main__":
    main()
