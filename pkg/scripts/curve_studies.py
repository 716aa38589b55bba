#!/usr/bin/env python3
"""Boundary-layer and singular-forcing curves at h = 1/800, plus the horizon sweep."""
import argparse
import json
import os

from qnlcoupling import Problem
from qnlcoupling.checks import check_boundary_layer, check_delta_linearity, check_singular
from qnlcoupling.experiments import boundary_layer_study, delta_sweep, singular_forcing_study


def _write(path, text):
    with open(path, "w") as fh:
        fh.write(text)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/curves")
    ap.add_argument("--delta", type=float, default=0.2)
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)

    layer = boundary_layer_study(args.delta)
    half = boundary_layer_study(args.delta / 2)
    for label in layer.curves:
        _write(os.path.join(args.out, f"boundary_layer_{label}.csv"), layer.curve_csv(label))
    print("boundary layer:", layer.metrics, "| half delta m1:", half.metrics["m1"])
    print("  ", "PASS" if check_boundary_layer(layer, half).passed else "FAIL")

    sing = singular_forcing_study(args.delta)
    for label in sing.curves:
        _write(os.path.join(args.out, f"singular_{label}.csv"), sing.curve_csv(label))
    print("singular:", sing.metrics)
    print("  ", "PASS" if check_singular(sing).passed else "FAIL")

    sweeps = {k: delta_sweep(Problem.quartic(), k) for k in ("constant", "inverse_abs")}
    _write(os.path.join(args.out, "delta_sweep.json"), json.dumps(sweeps, indent=2) + "\n")
    for k, sweep in sweeps.items():
        print(f"delta sweep {k}:", ", ".join(f"{d:.4f}->{e:.3e}" for d, e in sweep))
        print("  ", "PASS" if check_delta_linearity(sweep).passed else "FAIL")


if __name__ == "__main__":
    main()
