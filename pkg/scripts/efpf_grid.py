"""Which two-feature models admit an EFPF?

Scans a grid of rational (p10, p01, p11, p00) and, for each, compares the
exact EFPF-form check at n = 2 and n = 3 with the product criterion
p10 * p01 == p11 * p00.
"""

import argparse
from fractions import Fraction
from itertools import product

from paintbox_kit.oracle import check_efpf_form, exact_distribution_two_feature
from paintbox_kit.probability import TwoFeatureParams, is_frequency_factorizable


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--den", type=int, default=6, help="grid spacing 1/den")
    args = ap.parse_args()

    d = args.den
    total = disagree = factorizable = 0
    for a, b, c in product(range(d + 1), repeat=3):
        if a + b + c > d:
            continue
        p = TwoFeatureParams(Fraction(a, d), Fraction(b, d), Fraction(c, d), Fraction(d - a - b - c, d))
        fact = is_frequency_factorizable(p, 0)
        for n in (2, 3):
            total += 1
            has = check_efpf_form(exact_distribution_two_feature(p, n)).has_efpf
            if has != fact:
                disagree += 1
                print(f"disagreement at n={n}: {p.as_tuple()} efpf={has} factorizable={fact}")
        factorizable += fact
    print(f"{total // 2} parameter points, {factorizable} factorizable, {disagree} disagreements")


if __name__ == "__main__":
    main()
