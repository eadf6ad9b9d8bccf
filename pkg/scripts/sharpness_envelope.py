"""Sharpness construction: target class, predicted envelope and their knot values."""
import argparse
import csv

import numpy as np

from cifsdim.constructions.sharpness import SharpnessParams, knot_values, sharpness_system
from cifsdim.scaling import minimal_envelope


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--params", type=float, nargs=5, default=[0.3, 0.2, 0.6, 0.35, 1.0],
                    metavar=("H", "S", "T", "BETA", "D"))
    ap.add_argument("--stages", type=int, default=5)
    ap.add_argument("--csv", default=None, help="write x, target, envelope samples here")
    args = ap.parse_args()
    h, s, t, beta, d = args.params
    p = SharpnessParams(h, s, t, beta, int(d))
    res = sharpness_system(p, args.stages, build_system=False)
    knots = knot_values(res.envelope, res.stages)
    print("envelope at stage knots:", " ".join(f"{v:.5f}" for v in knots))
    print(f"liminf over knots: {min(knots):.5f} (beta = {beta})")
    end = sum(st.b1 + st.b2 for st in res.stages[:3])
    xs = np.linspace(0.0, end, 5001)
    gap = np.max(np.abs(minimal_envelope(res.target, h)(xs) - res.envelope(xs)))
    print(f"computed vs predicted envelope over three stages: {gap:.2e}")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "target", "envelope"])
            for x, f, g in zip(xs, res.target(xs), res.envelope(xs)):
                w.writerow([x, f, g])


if __name__ == "__main__":
    main()
