"""Recompute the default lower-bound constants (c0, c1, c3) for a configuration.

    python3 scripts/calibrate_lower_bound.py --beta 1 --L 1 --K 1 --x0 1 --d 0.5 \
        --delta 0.0625 --T 4096
"""
import argparse
import json

from mginf.lowerbound import DEFAULT_C21, calibrate_constants


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    for name, default in (("beta", 1.0), ("L", 1.0), ("K", 1.0), ("x0", 1.0), ("d", 0.5),
                          ("delta", 1 / 16), ("T", 4096.0), ("c21", DEFAULT_C21)):
        p.add_argument(f"--{name}", type=float, default=default)
    p.add_argument("--safety", type=float, default=0.9)
    a = p.parse_args()
    out = calibrate_constants(a.beta, a.L, a.K, a.x0, a.d, a.delta, a.T, c21=a.c21, safety=a.safety)
    print(json.dumps(out, indent=2))


if __name__ == "__main__":
    main()
