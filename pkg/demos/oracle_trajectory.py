"""Finite-n sandwich scheme_prob <= p_c <= B(n) on the flip-1/10 reference instance.

Exact for n <= 4 and hill-climb lower bounds above that.

    python demos/oracle_trajectory.py [--n-max 8]
"""

import argparse
from fractions import Fraction as F

from scexp import DistortionMatrix, JointPmf, exponent, exponent_trajectory
from scexp.oracle import trajectory_csv


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n-max", type=int, default=8)
    args = ap.parse_args()

    p = JointPmf([["9/20", "1/20"], ["1/20", "9/20"]])
    d = DistortionMatrix.hamming(2)
    delta, rate = F(1, 5), 0.5
    print(f"E(R, delta) = {exponent(p, rate, float(delta), d).value:.6f}")
    ns = range(2, args.n_max + 1)
    reps = exponent_trajectory(p, d, delta, rate, [n for n in ns if n <= 4], mode="exhaustive")
    reps += exponent_trajectory(p, d, delta, rate, [n for n in ns if n > 4], mode="hill-climb")
    print(trajectory_csv(reps), end="")


if __name__ == "__main__":
    main()
