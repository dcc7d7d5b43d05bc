"""Per-step wall time of DWMGrad and Adam as the parameter count doubles."""
import argparse

from dwmgrad.diagnostics import step_cost_benchmark


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dims", type=int, nargs="+", default=[10**4, 10**5, 10**6])
    ap.add_argument("--repetitions", type=int, default=7)
    ap.add_argument("--steps", type=int, default=10)
    args = ap.parse_args()

    rep = step_cost_benchmark(args.dims, repetitions=args.repetitions, steps=args.steps)
    print(rep.to_text())


if __name__ == "__main__":
    main()
