"""Dimension report for the middle-thirds Cantor set, written next to --out."""
import argparse
from pathlib import Path

from cifsdim.ifs.maps import Similarity
from cifsdim.ifs.system import similarity_system
from cifsdim.verify import dimension_report, write_report


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out")
    args = ap.parse_args()
    system = similarity_system([Similarity(1 / 3, (0.0,)), Similarity(1 / 3, (2 / 3,))])
    rep = dimension_report(system)
    Path(args.out).mkdir(parents=True, exist_ok=True)
    print(rep.to_text())
    for p in write_report(rep, Path(args.out) / "cantor_report"):
        print("wrote", p)


if __name__ == "__main__":
    main()
