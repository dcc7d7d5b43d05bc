"""Final Rosenbrock loss for DWMGrad, Adam and AdaGrad over a small learning-rate grid."""
import argparse

from dwmgrad.harness import ExperimentConfig, run

LR_KEY = {"dwmgrad": "alpha0", "adam": "lr", "adagrad": "lr", "rmsprop": "lr"}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--iterations", type=int, default=1000)
    ap.add_argument("--lrs", type=float, nargs="+", default=[1e-3, 3e-3, 1e-2])
    ap.add_argument("--optimizers", nargs="+", default=["dwmgrad", "adam", "adagrad"])
    args = ap.parse_args()

    print(f"{'lr':>8} " + " ".join(f"{n:>14}" for n in args.optimizers))
    for lr in args.lrs:
        finals = []
        for name in args.optimizers:
            cfg = ExperimentConfig("rosenbrock", name, {}, {LR_KEY[name]: lr},
                                   iterations=args.iterations, start_point=(-1.2, 1.0), log_params=False)
            finals.append(run(cfg).records[-1].loss)
        print(f"{lr:>8g} " + " ".join(f"{v:>14.4e}" for v in finals))


if __name__ == "__main__":
    main()
