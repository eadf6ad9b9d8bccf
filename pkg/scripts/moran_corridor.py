"""Moran set realising a scaling class: exact counts at the knots against the corridor."""
import argparse
import math

from cifsdim.constructions.moran import moran_points, moran_scales_from_class
from cifsdim.covering import count_boxes
from cifsdim.scaling import Constant, Toward, concatenate


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--depth", type=int, default=12)
    ap.add_argument("--two-segment", action="store_true",
                    help="use 0.5 on [0,2] then a drift toward 0.9 instead of the constant 0.5")
    args = ap.parse_args()
    g = (concatenate([Constant(0.5, 2.0), Toward(0.9, 0.5, 10.0)]) if args.two_segment
         else Constant(0.5, 80.0))
    spec = moran_scales_from_class(g, 1, args.depth)
    print(f"{'k':>3} {'x_k':>8} {'lower':>8} {'s_bar':>8} {'g(x_k)':>8}")
    for k in range(1, args.depth + 1):
        rho = spec.rho(k)
        s_bar = math.log(count_boxes(moran_points(spec, k), rho)) / spec.log_inv_rho(k)
        x = spec.knots[k - 1]
        gx = float(g(x))
        print(f"{k:3d} {x:8.4f} {gx - math.log(2) * math.exp(-x):8.4f} {s_bar:8.4f} {gx:8.4f}")


if __name__ == "__main__":
    main()
