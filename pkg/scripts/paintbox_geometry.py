"""Write paintbox geometry as CSV rows (feature, s, e) for plotting.

Produces three files in --outdir: a Kingman paintbox, the two-feature
paintbox and the recursive frequency paintbox.
"""

import argparse
import csv
from fractions import Fraction
from pathlib import Path

from paintbox_kit.paintbox import (
    KingmanPaintbox,
    build_frequency_paintbox,
    intersection_length,
    two_feature_paintbox,
)
from paintbox_kit.probability import TwoFeatureParams


def write(pb, path: Path):
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["feature", "s", "e"])
        for k, c in enumerate(pb.subsets, start=1):
            for s, e in c.intervals:
                w.writerow([k, float(s), float(e)])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--outdir", default="paintbox_data")
    ap.add_argument("--freqs", default="1/2,1/3,1/4", help="comma-separated frequencies")
    args = ap.parse_args()
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)

    kingman = KingmanPaintbox((0.5, 0.3, 0.1)).intervals()
    write(kingman, out / "kingman.csv")

    p = TwoFeatureParams(Fraction(1, 10), Fraction(1, 5), Fraction(3, 10), Fraction(2, 5))
    two = two_feature_paintbox(p)
    write(two, out / "two_feature.csv")

    freqs = [Fraction(x) for x in args.freqs.split(",")]
    freq = build_frequency_paintbox(freqs)
    write(freq, out / "frequency.csv")

    c1, c2 = two.subsets
    print(f"two-feature: |C1|={c1.length} |C2|={c2.length} overlap={intersection_length(c1, c2)}")
    for j in range(freq.k):
        for k in range(j + 1, freq.k):
            a, b = freq.subsets[j], freq.subsets[k]
            print(f"frequency C{j + 1}∩C{k + 1}: {intersection_length(a, b)} = {a.length}·{b.length}")
    print(f"wrote {', '.join(str(p) for p in sorted(out.glob('*.csv')))}")


if __name__ == "__main__":
    main()
