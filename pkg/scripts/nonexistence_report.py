"""Continued-fraction set whose box dimension does not exist (stages 1..3).

Prints the exponents at the two families of stage scales and the report
verdict. Takes about 20 s; the stage-3 band has two million points and is
counted with 96-bit coordinates.
"""
import argparse
from pathlib import Path

from cifsdim.constructions.digits import nonexistence_system
from cifsdim.covering import count_boxes, exponent
from cifsdim.verify import dimension_report, fixed_point_cloud, write_report


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--stages", type=int, default=3)
    ap.add_argument("--out", default="out")
    args = ap.parse_args()
    system = nonexistence_system(args.stages)
    a = [int(v) for v in system.provenance["a"]]
    cloud = fixed_point_cloud(system)
    for n in range(1, args.stages + 1):
        lo_r = float(a[n]) ** -2
        line = f"n={n}  s(a_n^-2) = {exponent(count_boxes(cloud, lo_r), lo_r):.4f}"
        if n < args.stages:
            hi_r = (2 * a[n]) ** -3.0
            line += f"   s((2a_n)^-3) = {exponent(count_boxes(cloud, hi_r), hi_r):.4f}"
        print(line)
    rep = dimension_report(system)
    print(rep.to_text())
    Path(args.out).mkdir(parents=True, exist_ok=True)
    write_report(rep, Path(args.out) / "nonexistence_report")


if __name__ == "__main__":
    main()
