#!/usr/bin/env python3
"""Gradient errors of the compatible and direct schemes with the interface at x = 1/2."""
import argparse
import os

from qnlcoupling import Problem, compare_direct_vs_compatible
from qnlcoupling.checks import check_direct_comparison


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/direct_vs_compatible")
    ap.add_argument("--kernel", default="inverse_abs", choices=("constant", "inverse_abs"))
    args = ap.parse_args()
    cmp = compare_direct_vs_compatible(Problem.quartic(), args.kernel)
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "direct_vs_compatible.csv"), "w") as fh:
        fh.write(cmp.to_csv())
    for c, d in zip(cmp.compatible.rows, cmp.direct.rows):
        print(f"h={c.h:.5f}  compatible {c.err_grad:.3e}  direct {d.err_grad:.3e}")
    res = check_direct_comparison(cmp)
    for ch in res.checks.checks:
        print(f"  {ch.check} = {ch.value:.4g}")
    print("PASS" if res.passed else "FAIL")


if __name__ == "__main__":
    main()
