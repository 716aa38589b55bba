"""Regression tolerances for the reproducible studies (used by ``--check`` and the tests)."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .experiments import ConvergenceReport, CurveStudy, DirectComparison
from .report import Report

TABLE_LEVELS = (50, 100, 200, 400, 800)

# Reference L-infinity errors, delta = 3h, quartic forcing, interface at 0.
TABLE1 = {
    "err_u": (1.56e-2, 8.07e-3, 4.10e-3, 2.06e-3, 1.04e-3),
    "err_grad": (1.91e-2, 9.61e-3, 4.82e-3, 2.42e-3, 1.21e-3),
}
TABLE2 = {
    "err_u": (1.19e-2, 6.19e-3, 3.14e-3, 1.59e-3, 7.97e-4),
    "err_grad": (1.80e-2, 9.13e-3, 4.59e-3, 2.30e-3, 1.15e-3),
}
REFERENCE_TABLES = {"constant": TABLE1, "inverse_abs": TABLE2}

VALUE_RTOL = 0.10
FINAL_ORDER_MIN = 0.95
ORDER_BAND = (0.9, 1.05)
HALVING_RTOL = 0.15


@dataclass
class CriterionResult:
    name: str
    passed: bool
    mode: str
    checks: Report = field(default_factory=Report)
    # reference-value comparison kept for the record when the fallback decided
    superseded: Report | None = None

    def to_dict(self) -> dict:
        out = {"criterion": self.name, "pass": self.passed, "mode": self.mode, "checks": self.checks.to_list()}
        if self.superseded is not None:
            out["reference_value_checks"] = self.superseded.to_list()
        return out


def _rel(a, b) -> float:
    return abs(a - b) / abs(b)


def check_table(report: ConvergenceReport, table: dict, name: str = "table") -> CriterionResult:
    """Reference values within 10% and final orders >= 0.95; failing that, the
    fallback: every order in [0.9, 1.05] and each refinement halves the
    error to within 15%."""
    direct = Report()
    for col in ("err_u", "err_grad"):
        got = getattr(report, col)
        worst = max(_rel(g, t) for g, t in zip(got, table[col]))
        direct.add(f"{col}_max_rel_dev", worst, VALUE_RTOL, worst <= VALUE_RTOL and len(got) == len(table[col]))
    for col in ("order_u", "order_grad"):
        final = getattr(report, col)[-1]
        direct.add(f"final_{col}", final, FINAL_ORDER_MIN, final >= FINAL_ORDER_MIN)
    if direct.passed:
        return CriterionResult(name, True, "reference_values", direct)

    fallback = Report()
    lo, hi = ORDER_BAND
    for col in ("order_u", "order_grad"):
        orders = getattr(report, col)
        fallback.add(f"min_{col}", min(orders), lo, min(orders) >= lo)
        fallback.add(f"max_{col}", max(orders), hi, max(orders) <= hi)
    for col in ("err_u", "err_grad"):
        e = getattr(report, col)
        dev = max(abs(e[k] / e[k - 1] / 0.5 - 1.0) for k in range(1, len(e)))
        fallback.add(f"{col}_halving_max_rel_dev", dev, HALVING_RTOL, dev <= HALVING_RTOL)
    return CriterionResult(name, fallback.passed, "order_fallback", fallback, direct)


def fitted_order(hs, errors) -> float:
    """Least-squares slope of log(error) against log(h)."""
    return float(np.polyfit(np.log(hs), np.log(errors), 1)[0])


def check_direct_comparison(cmp: DirectComparison, order_band=(0.9, 1.1)) -> CriterionResult:
    rep = Report()
    hs = [r.h for r in cmp.compatible.rows]
    e = cmp.compatible.err_grad
    p = fitted_order(hs, e)
    rep.add("compatible_grad_fitted_order_min", p, order_band[0], p >= order_band[0])
    rep.add("compatible_grad_fitted_order_max", p, order_band[1], p <= order_band[1])
    dec = all(b < a for a, b in zip(e, e[1:]))
    rep.add("compatible_grad_decreasing", float(dec), 1.0, dec)
    if 100 in cmp.levels and 800 in cmp.levels:
        ratio = cmp.direct_grad_at(800) / cmp.direct_grad_at(100)
        rep.add("direct_grad_800_over_100", ratio, 0.5, ratio >= 0.5)
    return CriterionResult("direct_vs_compatible", rep.passed, "fixed", rep)


def check_boundary_layer(study: CurveStudy, half: CurveStudy | None = None, rtol: float = 0.25) -> CriterionResult:
    rep = Report()
    m1, m2 = study.metrics["m1"], study.metrics["m2"]
    rep.add("m1_minus_m2", m1 - m2, 0.0, m1 < m2)
    if half is not None:
        ratio = half.metrics["m1"] / m1
        rep.add("m1_ratio_at_half_delta", ratio, 0.5 * (1 + rtol), abs(ratio - 0.5) <= 0.5 * rtol)
    return CriterionResult("boundary_layer", rep.passed, "fixed", rep)


def check_singular(study: CurveStudy) -> CriterionResult:
    rep = Report()
    a, b = study.metrics["lnl_vs_nonlocal"], study.metrics["local_vs_nonlocal"]
    finite = all(np.all(np.isfinite(u)) for u in study.curves.values())
    rep.add("all_finite", float(finite), 1.0, finite)
    rep.add("lnl_minus_local_gap", a - b, 0.0, a <= b)
    return CriterionResult("singular_forcing", rep.passed, "fixed", rep)


def check_delta_linearity(sweep, factor: float = 1.5) -> CriterionResult:
    """Successive error ratios under delta doubling stay within [2/factor, 2*factor]."""
    rep = Report()
    for (d0, e0), (d1, e1) in zip(sweep, sweep[1:]):
        expect = d1 / d0
        ratio = e1 / e0
        ok = expect / factor <= ratio <= expect * factor
        rep.add(f"error_ratio_delta_{d0:g}_to_{d1:g}", ratio, expect * factor, ok and math.isfinite(ratio))
    return CriterionResult("delta_linearity", rep.passed, "fixed", rep)
