#!/usr/bin/env python3
"""Convergence tables for both kernels (delta = 3h, quartic forcing, interface at 0)."""
import argparse
import json
import os

from qnlcoupling import Problem, convergence_study
from qnlcoupling.checks import REFERENCE_TABLES, TABLE_LEVELS, check_table


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/tables")
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)
    for kernel, table in REFERENCE_TABLES.items():
        report = convergence_study(Problem.quartic(), kernel, 3, TABLE_LEVELS)
        result = check_table(report, table, kernel)
        with open(os.path.join(args.out, f"convergence_{kernel}.csv"), "w") as fh:
            fh.write(report.to_csv())
        with open(os.path.join(args.out, f"check_{kernel}.json"), "w") as fh:
            fh.write(json.dumps(result.to_dict(), indent=2) + "\n")
        print(f"{kernel:12s} {'PASS' if result.passed else 'FAIL'} ({result.mode})")
        print("   h          err_u      err_grad   (reference)")
        for row, ru, rg in zip(report.rows, table["err_u"], table["err_grad"]):
            print(f"   {row.h:.5f}   {row.err_u:.3e}  {row.err_grad:.3e}  ({ru:.2e}, {rg:.2e})")


if __name__ == "__main__":
    main()
