"""Exponent curve E(R, delta) for a noisy binary source, with the threshold R_r.

    python demos/exponent_curve.py [--steps 21]
"""

import argparse

import numpy as np

from scexp import JointPmf, DistortionMatrix, exponent, positivity_threshold, remote_rd


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--steps", type=int, default=21)
    ap.add_argument("--delta", type=float, default=0.15)
    args = ap.parse_args()

    # X ~ Bern(0.3) observed through a BSC(0.05)
    p = JointPmf(np.array([[0.7 * 0.95, 0.7 * 0.05], [0.3 * 0.05, 0.3 * 0.95]]))
    d = DistortionMatrix.hamming(2)
    r_r = positivity_threshold(p, args.delta, d)
    print(f"R_r(P, {args.delta}) = {r_r:.6f} bits  (remote R-D: {remote_rd(p, d, args.delta).rate:.6f})")
    print(f"{'R':>8} {'E(R)':>10} {'gap':>9} {'rho*':>6}")
    for rate in np.linspace(0.0, 1.1 * r_r, args.steps):
        res = exponent(p, rate, args.delta, d)
        print(f"{rate:8.4f} {res.value:10.6f} {res.gap:9.1e} {res.rho_star:6.3f}")


if __name__ == "__main__":
    main()
