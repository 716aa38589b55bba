"""Local-energy weight, its derivative and the interfacial diffusion coefficient."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import Kernel, moment


def _nonneg(x, name: str):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError(f"{name} requires x >= 0, got {x}")
    return x


def _out(v):
    return v if np.ndim(v) else float(v)


@dataclass(frozen=True)
class WeightEvaluator:
    """Weight functions derived from the moments of ``kernel``.

    ``x`` is the distance from the nonlocal interface. All methods accept
    scalars or arrays.
    """

    kernel: Kernel

    @property
    def delta(self) -> float:
        return self.kernel.delta

    def omega(self, x):
        """omega(x) = 2 M2(0, x) + 2 x M1(x, delta); identically 1 for x >= delta."""
        x = _nonneg(x, "omega")
        xc = np.minimum(x, self.delta)
        k = self.kernel
        val = 2.0 * moment(k, 2, 0.0, xc) + 2.0 * x * moment(k, 1, xc, self.delta)
        return _out(np.where(x >= self.delta, 1.0, val))

    def omega_prime(self, x):
        x = _nonneg(x, "omega_prime")
        xc = np.minimum(x, self.delta)
        return _out(2.0 * np.asarray(moment(self.kernel, 1, xc, self.delta)))

    def effective_diffusion(self, x):
        """a(x) = 1 - M2(x, delta) + 2 x M1(x, delta) on [0, delta]."""
        x = np.asarray(x, dtype=float)
        if np.any((x < 0) | (x > self.delta)):
            raise ValueError(f"effective diffusion is defined on [0, delta], got {x}")
        k = self.kernel
        return _out(1.0 - moment(k, 2, x, self.delta) + 2.0 * x * moment(k, 1, x, self.delta))
