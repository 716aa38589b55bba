"""Radial nonlocal kernels with compact support and their partial moments.

A kernel is stored by its one-sided profile ``gamma_delta(s)`` for ``s >= 0``;
the full kernel is the even extension. Every scheme in this package touches the
kernel only through the partial moments

    M_p(a, b) = int_a^b s**p * gamma_delta(s) ds,   p in {0, 1, 2},

which are closed form for the two built-in kernels and adaptive quadrature
(QUADPACK) for custom ones.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from .errors import DivergentMomentError
from .report import Report

# Absolute tolerance for custom-kernel quadrature.
QUAD_ABS_TOL = 1e-12
# Lower sampling offset (relative to delta) for pointwise checks; the
# inverse-distance profile is singular at the origin.
SAMPLE_OFFSET = 1e-6


class KernelKind(str, enum.Enum):
    CONSTANT = "constant"
    INVERSE_ABS = "inverse_abs"
    CUSTOM = "custom"


@dataclass(frozen=True)
class Kernel:
    """Kernel ``gamma_delta`` with horizon ``delta``.

    ``profile`` is only used (and required) for ``KernelKind.CUSTOM``; it maps
    ``s >= 0`` to ``gamma_delta(s)`` and must vanish for ``s > delta``.
    """

    kind: KernelKind
    delta: float
    profile: Callable[[float], float] | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", KernelKind(self.kind))
        if not (self.delta > 0 and np.isfinite(self.delta)):
            raise ValueError(f"kernel horizon must be positive, got {self.delta!r}")
        if self.kind is KernelKind.CUSTOM and self.profile is None:
            raise ValueError("custom kernel needs a profile function")

    def __call__(self, s):
        """Pointwise kernel value gamma_delta(|s|)."""
        s = np.abs(np.asarray(s, dtype=float))
        d = self.delta
        inside = s <= d
        if self.kind is KernelKind.CONSTANT:
            out = np.where(inside, 1.5 / d**3, 0.0)
        elif self.kind is KernelKind.INVERSE_ABS:
            if np.any(s == 0):
                raise ValueError("inverse-distance kernel is undefined at s = 0")
            out = np.where(inside, 1.0 / (d**2 * s), 0.0)
        else:
            out = np.where(inside, np.vectorize(self.profile, otypes=[float])(s), 0.0)
        return out if out.ndim else float(out)

    def with_delta(self, delta: float) -> "Kernel":
        return Kernel(self.kind, delta, self.profile)


def constant_kernel(delta: float) -> Kernel:
    """gamma_delta(s) = 3 / (2 delta^3) on (-delta, delta)."""
    return Kernel(KernelKind.CONSTANT, delta)


def inverse_abs_kernel(delta: float) -> Kernel:
    """gamma_delta(s) = 1 / (delta^2 |s|) on (-delta, delta)."""
    return Kernel(KernelKind.INVERSE_ABS, delta)


def custom_kernel(profile: Callable[[float], float], delta: float) -> Kernel:
    return Kernel(KernelKind.CUSTOM, delta, profile)


def make_kernel(kind: str | KernelKind, delta: float) -> Kernel:
    kind = KernelKind(kind)
    if kind is KernelKind.CUSTOM:
        raise ValueError("custom kernels need a profile; use custom_kernel()")
    return Kernel(kind, delta)


def moment(kernel: Kernel, order: int, a, b):
    """Partial moment ``int_a^b s**order gamma_delta(s) ds`` for ``0 <= a <= b``.

    Limits are clipped to ``[0, delta]``. Accepts scalars or broadcastable
    arrays for the built-in kernels.
    """
    if order not in (0, 1, 2):
        raise ValueError(f"moment order must be 0, 1 or 2, got {order!r}")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(a > b):
        raise ValueError(f"moment interval has a > b (a={a}, b={b})")
    if np.any(a < 0):
        raise ValueError(f"moment interval must lie in s >= 0 (a={a})")
    d = kernel.delta
    lo = np.minimum(a, d)
    hi = np.minimum(b, d)

    if kernel.kind is KernelKind.CONSTANT:
        c = 1.5 / d**3
        out = c * (hi ** (order + 1) - lo ** (order + 1)) / (order + 1)
    elif kernel.kind is KernelKind.INVERSE_ABS:
        c = 1.0 / d**2
        if order == 0:
            if np.any((lo == 0) & (hi > 0)):
                raise DivergentMomentError(
                    "zeroth moment of the inverse-distance kernel diverges at s = 0"
                )
            with np.errstate(divide="ignore", invalid="ignore"):
                out = np.where(hi > lo, c * np.log(hi / np.where(lo > 0, lo, 1.0)), 0.0)
        else:
            out = c * (hi**order - lo**order) / order
    else:
        out = np.vectorize(lambda x, y: _quad_moment(kernel, order, x, y), otypes=[float])(lo, hi)
    return out if np.ndim(out) else float(out)


def _quad_moment(kernel: Kernel, order: int, a: float, b: float) -> float:
    if b <= a:
        return 0.0
    val, _ = integrate.quad(
        lambda s: s**order * kernel.profile(s), a, b, epsabs=QUAD_ABS_TOL, epsrel=1e-13, limit=200
    )
    return val


def second_moment_total(kernel: Kernel) -> float:
    """int_{-delta}^{delta} s^2 gamma_delta(s) ds; equals 1 for admissible kernels."""
    return 2.0 * moment(kernel, 2, 0.0, kernel.delta)


def validate_kernel(kernel: Kernel, tolerance: float = 1e-8, samples: int = 1001) -> Report:
    """Check normalization, nonnegativity, monotonicity and compact support.

    Failures are recorded in the returned report; nothing is raised.
    """
    d = kernel.delta
    report = Report()
    m2 = second_moment_total(kernel)
    report.add("normalization", m2, tolerance, abs(m2 - 1.0) <= tolerance)

    s = np.linspace(SAMPLE_OFFSET * d, d, samples)
    g = np.asarray(kernel(s), dtype=float)
    report.add("nonnegative", float(g.min()), 0.0, bool(np.all(g >= 0)))
    rise = float(np.max(np.diff(g))) if samples > 1 else 0.0
    # allow round-off in flat profiles
    slack = 1e-12 * max(1.0, float(np.max(np.abs(g))))
    report.add("nonincreasing", rise, slack, rise <= slack)

    outside = np.linspace(d * (1 + 1e-9), 2 * d, samples)
    if kernel.kind is KernelKind.CUSTOM:
        raw = np.vectorize(kernel.profile, otypes=[float])(outside)
    else:
        raw = kernel(outside)
    tail = float(np.max(np.abs(raw)))
    report.add("compact_support", tail, 0.0, tail == 0.0)
    return report
