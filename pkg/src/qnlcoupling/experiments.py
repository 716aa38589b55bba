"""Benchmark problems and the numerical studies built on the coupled solver."""
from __future__ import annotations

import enum
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import Polynomial

from .assembly import (
    Arrangement,
    CouplingConfig,
    OperatorMatrix,
    Regime,
    Scheme,
    apply,
    assemble,
)
from .kernels import Kernel, KernelKind
from .linalg import DEFAULT_SEED, BandedSystem, inverse_positivity_check, solve
from .report import Report

CSV_FLOAT = "%.12e"


class Forcing(str, enum.Enum):
    QUARTIC = "quartic"
    CONSTANT = "constant"
    SINGULAR = "singular"
    POLYNOMIAL = "polynomial"


@dataclass(frozen=True)
class Problem:
    """Right-hand side ``f`` of ``-L u = f`` with homogeneous constraints.

    Polynomial forcings (quartic, constant, custom) carry the exact solution of
    the local limit ``-u0'' = f``, ``u0(x_left) = u0(x_right) = 0``.
    ``params`` holds ``(s0,)`` for the singular forcing and ascending
    coefficients for a custom polynomial.
    """

    forcing: Forcing
    params: tuple[float, ...] = ()
    x_left: float = -1.0
    x_right: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "forcing", Forcing(self.forcing))
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if self.forcing is Forcing.SINGULAR and len(self.params) != 1:
            raise ValueError("singular forcing takes exactly one parameter s0")
        if self.forcing is Forcing.POLYNOMIAL and not self.params:
            raise ValueError("polynomial forcing needs at least one coefficient")

    @classmethod
    def quartic(cls):
        """f = -12 x^2 + 4; on (-1, 1) the local solution is (1 - x)^2 (1 + x)^2."""
        return cls(Forcing.QUARTIC)

    @classmethod
    def constant(cls):
        return cls(Forcing.CONSTANT)

    @classmethod
    def singular(cls, s0: float):
        return cls(Forcing.SINGULAR, (s0,))

    @classmethod
    def polynomial(cls, coefficients: Sequence[float], x_left: float = -1.0, x_right: float = 1.0):
        return cls(Forcing.POLYNOMIAL, tuple(coefficients), x_left, x_right)

    @classmethod
    def manufactured(cls, solution: Sequence[float], x_left: float = -1.0, x_right: float = 1.0):
        """Polynomial forcing ``-u0''`` for a given polynomial ``u0`` (ascending
        coefficients) that vanishes at both ends of the domain."""
        u0 = Polynomial(solution)
        for x in (x_left, x_right):
            if abs(u0(x)) > 1e-12 * max(1.0, np.abs(u0.coef).max()):
                raise ValueError(f"manufactured solution must vanish at x = {x}")
        return cls.polynomial(tuple((-u0.deriv(2)).coef), x_left, x_right)

    @property
    def _forcing_poly(self) -> Polynomial | None:
        if self.forcing is Forcing.QUARTIC:
            return Polynomial([4.0, 0.0, -12.0])
        if self.forcing is Forcing.CONSTANT:
            return Polynomial([1.0])
        if self.forcing is Forcing.POLYNOMIAL:
            return Polynomial(self.params)
        return None

    def f(self, x):
        x = np.asarray(x, dtype=float)
        p = self._forcing_poly
        if p is not None:
            return p(x)
        s0 = self.params[0]
        return (1 - x**2) * (1 + x**2) / np.abs(x - s0)

    @property
    def has_exact(self) -> bool:
        return self._forcing_poly is not None

    def _exact_poly(self) -> Polynomial:
        p = self._forcing_poly
        if p is None:
            raise ValueError(f"{self.forcing.value} forcing has no closed-form local solution")
        u = -p.integ(2)
        a, b = self.x_left, self.x_right
        # add the linear function that zeroes both ends
        slope = -(u(b) - u(a)) / (b - a)
        return u + Polynomial([-u(a) - slope * a, slope])

    def exact(self, x):
        return self._exact_poly()(np.asarray(x, dtype=float))

    def exact_prime(self, x):
        return self._exact_poly().deriv()(np.asarray(x, dtype=float))

    def exact_second(self, x):
        return self._exact_poly().deriv(2)(np.asarray(x, dtype=float))


def solve_problem(config: CouplingConfig, problem: Problem, matrix: OperatorMatrix | None = None) -> np.ndarray:
    """Full-grid solution of ``-L^qnl u = f`` with zero constraint/boundary data."""
    mesh = config.mesh
    a = matrix if matrix is not None else assemble(config)
    u = mesh.zeros()
    rhs = problem.f(mesh.nodes[mesh.interior]) + a.boundary_rhs(u)
    u[mesh.interior] = solve(BandedSystem(a, rhs))
    return u


def gradient(u: np.ndarray, mesh) -> np.ndarray:
    """Second-order differences at the domain nodes x_0 .. x_{2N}.

    Central in the interior, one-sided at the two endpoints.
    """
    v = np.asarray(u, dtype=float)[mesh.offset : mesh.offset + mesh.last + 1]
    h = mesh.h
    g = np.empty_like(v)
    g[1:-1] = (v[2:] - v[:-2]) / (2 * h)
    g[0] = (-3 * v[0] + 4 * v[1] - v[2]) / (2 * h)
    g[-1] = (3 * v[-1] - 4 * v[-2] + v[-3]) / (2 * h)
    return g


def gradient_mask(mesh, window: str = "away_from_constraint") -> np.ndarray:
    """Domain nodes used in gradient error norms.

    ``"interior"`` drops only the endpoints. ``"away_from_constraint"`` also
    drops the nodes within one horizon of a volumetrically constrained end,
    where the zero constraint meets a nonzero solution curvature.
    """
    m = np.zeros(mesh.last + 1, dtype=bool)
    m[1:-1] = True
    if window == "away_from_constraint":
        if mesh.ghost_left:
            m[: mesh.ghost_left + 1] = False
        if mesh.ghost_right:
            m[mesh.last - mesh.ghost_right :] = False
    elif window != "interior":
        raise ValueError(f"unknown gradient window {window!r}")
    return m


def solution_errors(config: CouplingConfig, problem: Problem, u: np.ndarray, window: str = "away_from_constraint"):
    """L-infinity errors of ``u`` and its gradient against the local solution."""
    mesh = config.mesh
    x = mesh.domain_nodes
    v = u[mesh.offset : mesh.offset + mesh.last + 1]
    err_u = float(np.max(np.abs(v - problem.exact(x))[1:-1]))
    g = gradient(u, mesh)
    mask = gradient_mask(mesh, window)
    err_g = float(np.max(np.abs(g - problem.exact_prime(x))[mask]))
    return err_u, err_g


@dataclass(frozen=True)
class ConvergenceRow:
    h: float
    delta: float
    err_u: float
    order_u: float | None
    err_grad: float
    order_grad: float | None


@dataclass
class ConvergenceReport:
    rows: list[ConvergenceRow] = field(default_factory=list)

    HEADER = ("h", "delta", "err_u_Linf", "order_u", "err_grad_Linf", "order_grad")

    @classmethod
    def from_errors(cls, hs, deltas, err_u, err_grad) -> "ConvergenceReport":
        order = np.argsort(-np.asarray(hs), kind="stable")
        hs, deltas = [hs[i] for i in order], [deltas[i] for i in order]
        err_u, err_grad = [err_u[i] for i in order], [err_grad[i] for i in order]
        rows = []
        for k in range(len(hs)):
            ou = og = None
            if k:
                ratio = math.log(hs[k - 1] / hs[k])
                ou = math.log(err_u[k - 1] / err_u[k]) / ratio
                og = math.log(err_grad[k - 1] / err_grad[k]) / ratio
            rows.append(ConvergenceRow(hs[k], deltas[k], err_u[k], ou, err_grad[k], og))
        return cls(rows)

    @property
    def err_u(self) -> list[float]:
        return [r.err_u for r in self.rows]

    @property
    def err_grad(self) -> list[float]:
        return [r.err_grad for r in self.rows]

    @property
    def order_u(self) -> list[float]:
        return [r.order_u for r in self.rows[1:]]

    @property
    def order_grad(self) -> list[float]:
        return [r.order_grad for r in self.rows[1:]]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(self.HEADER) + "\n")
        for r in self.rows:
            cells = [r.h, r.delta, r.err_u, r.order_u, r.err_grad, r.order_grad]
            buf.write(",".join("" if c is None else CSV_FLOAT % c for c in cells) + "\n")
        return buf.getvalue()


def convergence_study(
    problem: Problem,
    kernel: str | KernelKind | Kernel = KernelKind.CONSTANT,
    ratio: int = 3,
    levels: Sequence[int] = (50, 100, 200, 400, 800),
    arrangement: Arrangement | None = None,
    scheme: Scheme | str = Scheme.COMPATIBLE,
    window: str = "away_from_constraint",
) -> ConvergenceReport:
    """Errors against the local solution under refinement at fixed delta / h."""
    if not problem.has_exact:
        raise ValueError("convergence study needs a problem with an exact local solution")
    arrangement = arrangement or Arrangement.nonlocal_local(0.0)
    hs, ds, eu, eg = [], [], [], []
    for n in levels:
        cfg = CouplingConfig.build(n, arrangement, kernel, ratio, scheme, problem.x_left, problem.x_right)
        u = solve_problem(cfg, problem)
        e_u, e_g = solution_errors(cfg, problem, u, window)
        hs.append(cfg.h)
        ds.append(cfg.delta)
        eu.append(e_u)
        eg.append(e_g)
    return ConvergenceReport.from_errors(hs, ds, eu, eg)


@dataclass
class DirectComparison:
    compatible: ConvergenceReport
    direct: ConvergenceReport
    levels: tuple[int, ...]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("h,delta,compatible_err_u,compatible_err_grad,direct_err_u,direct_err_grad\n")
        for c, d in zip(self.compatible.rows, self.direct.rows):
            buf.write(",".join(CSV_FLOAT % v for v in (c.h, c.delta, c.err_u, c.err_grad, d.err_u, d.err_grad)) + "\n")
        return buf.getvalue()

    def direct_grad_at(self, n: int) -> float:
        return self.direct.err_grad[self.levels.index(n)]


def compare_direct_vs_compatible(
    problem: Problem,
    kernel: str | KernelKind | Kernel = KernelKind.INVERSE_ABS,
    ratio: int = 3,
    interface: float = 0.5,
    levels: Sequence[int] = (50, 100, 200, 400, 800),
    window: str = "away_from_constraint",
) -> DirectComparison:
    levels = tuple(sorted(levels))
    arr = Arrangement.nonlocal_local(interface)
    reports = {
        s: convergence_study(problem, kernel, ratio, levels, arr, s, window)
        for s in (Scheme.COMPATIBLE, Scheme.DIRECT)
    }
    return DirectComparison(reports[Scheme.COMPATIBLE], reports[Scheme.DIRECT], levels)


def patch_residual(matrix: OperatorMatrix, F: float, c: float) -> tuple[float, float]:
    """Max interior residual of ``A`` on ``F x + c`` and the round-off scale
    ``||A||_inf * max|u|``."""
    u = F * matrix.mesh.nodes + c
    res = float(np.max(np.abs(apply(matrix, u))))
    return res, matrix.norm_inf() * float(np.max(np.abs(u)))


def patch_test(config: CouplingConfig, F: float = 1.0, c: float = 0.0) -> float:
    return patch_residual(assemble(config), F, c)[0]


def patch_test_report(config: CouplingConfig, F: float = 1.0, c: float = 0.0, rtol: float = 1e-11) -> Report:
    res, scale = patch_residual(assemble(config), F, c)
    report = Report()
    report.add("patch_test_residual", res, rtol * scale, res <= rtol * scale)
    return report


def truncation_error(
    config: CouplingConfig, u: Callable, u_second: Callable
) -> dict[Regime, float]:
    """Max ``|L_h u - u''|`` over the interior rows of each regime.

    ``u`` is evaluated at every node of the full grid, ghosts included.
    """
    a = assemble(config)
    mesh = config.mesh
    values = np.asarray(u(mesh.nodes), dtype=float) * np.ones(mesh.size)
    t = -apply(a, values) - np.asarray(u_second(mesh.nodes[mesh.interior]), dtype=float)
    out: dict[Regime, float] = {}
    regimes = np.array([g.value for g in a.regimes])
    for g in Regime:
        sel = regimes == g.value
        if sel.any():
            out[g] = float(np.max(np.abs(t[sel])))
    return out


def max_principle_check(
    config: CouplingConfig,
    trials: int = 20,
    seed: int = DEFAULT_SEED,
    degree: int = 4,
    rtol: float = 1e-12,
    with_inverse: bool = True,
) -> Report:
    """Solve with random nonnegative forcings and check the solution stays nonnegative.

    Forcings are polynomials of degree <= ``degree`` in ``t = (x - x_left) / L``
    with nonnegative coefficients, so ``f >= 0`` on the domain.
    """
    mesh = config.mesh
    a = assemble(config)
    rng = np.random.default_rng(seed)
    x = mesh.nodes[mesh.interior]
    t = (x - mesh.x_left) / (mesh.x_right - mesh.x_left)
    zero = mesh.zeros()
    worst = np.inf
    for _ in range(trials):
        coef = rng.uniform(0.0, 1.0, degree + 1)
        f = Polynomial(coef)(t)
        u = solve(BandedSystem(a, f + a.boundary_rhs(zero)))
        scale = float(np.max(np.abs(u)))
        worst = min(worst, float(u.min()) / scale if scale else 0.0)
    report = Report()
    report.add("min_u_over_max_abs_u", worst, -rtol, worst >= -rtol)
    if with_inverse and a.n <= 512:
        report.checks.extend(inverse_positivity_check(a, rtol).checks)
    return report


@dataclass
class CurveStudy:
    """Labeled solution curves over the domain nodes plus scalar metrics."""

    x: np.ndarray
    curves: dict[str, np.ndarray]
    gradients: dict[str, np.ndarray]
    exact: np.ndarray | None
    metrics: dict[str, float]

    def curve_csv(self, label: str) -> str:
        buf = io.StringIO()
        buf.write("x,u,u_exact,grad_u\n")
        u, g = self.curves[label], self.gradients[label]
        for k in range(self.x.size):
            ex = "" if self.exact is None else CSV_FLOAT % self.exact[k]
            buf.write(f"{CSV_FLOAT % self.x[k]},{CSV_FLOAT % u[k]},{ex},{CSV_FLOAT % g[k]}\n")
        return buf.getvalue()

    def metrics_list(self) -> list[dict]:
        return [{"name": k, "value": v} for k, v in self.metrics.items()]


def _ratio_for(delta: float, h: float) -> int:
    r = delta / h
    k = int(round(r))
    if k < 1 or abs(r - k) > 1e-9 * max(1.0, r):
        raise ValueError(f"delta = {delta!r} is not an integer multiple of h = {h!r}")
    return k


def _domain_values(config: CouplingConfig, u: np.ndarray) -> np.ndarray:
    m = config.mesh
    return u[m.offset : m.offset + m.last + 1]


def _window_max(x, a, b, lo, hi) -> float:
    sel = (x >= lo - 1e-12) & (x <= hi + 1e-12)
    return float(np.max(np.abs(a[sel] - b[sel])))


def boundary_layer_study(
    delta: float = 0.2,
    n_half: int = 800,
    kernel: str | KernelKind = KernelKind.CONSTANT,
    interfaces: tuple[float, float] = (-0.5, 0.5),
    window: tuple[float, float] = (-1.0, -0.9),
) -> CurveStudy:
    """f = 1 solved three ways: nonlocal-local coupling with a volumetric left
    constraint, local-nonlocal-local coupling, and the purely local problem.

    Metrics: ``m1`` = max |u_LNL - u_local| and ``m2`` = max |u_NL - u_local| on ``window``.
    """
    problem = Problem.constant()
    h = 1.0 / n_half
    r = _ratio_for(delta, h)
    setups = {
        "nonlocal_local": Arrangement.nonlocal_local(0.0),
        "local_nonlocal_local": Arrangement.local_nonlocal_local(*interfaces),
        "local": Arrangement.pure_local(),
    }
    curves, grads = {}, {}
    x = None
    for label, arr in setups.items():
        cfg = CouplingConfig.build(n_half, arr, kernel, r)
        u = solve_problem(cfg, problem)
        curves[label] = _domain_values(cfg, u).copy()
        grads[label] = gradient(u, cfg.mesh)
        x = cfg.mesh.domain_nodes
    m1 = _window_max(x, curves["local_nonlocal_local"], curves["local"], *window)
    m2 = _window_max(x, curves["nonlocal_local"], curves["local"], *window)
    metrics = {"delta": float(delta), "h": h, "m1": m1, "m2": m2}
    return CurveStudy(x, curves, grads, problem.exact(x), metrics)


def singular_forcing_study(
    delta: float = 0.2,
    n_half: int = 800,
    interfaces: tuple[float, float] = (-0.5, 0.5),
    kernel: str | KernelKind = KernelKind.CONSTANT,
    s0: float | None = None,
    window: tuple[float, float] = (-0.4, 0.4),
) -> CurveStudy:
    """Forcing (1 - x^2)(1 + x^2) / |x - s0|, s0 = h/2 by default, solved fully
    nonlocally (volumetric constraints on both sides), with local-nonlocal-local
    coupling, and purely locally."""
    h = 1.0 / n_half
    r = _ratio_for(delta, h)
    problem = Problem.singular(h / 2 if s0 is None else s0)
    setups = {
        "nonlocal": Arrangement.pure_nonlocal(),
        "local_nonlocal_local": Arrangement.local_nonlocal_local(*interfaces),
        "local": Arrangement.pure_local(),
    }
    curves, grads = {}, {}
    x = None
    for label, arr in setups.items():
        cfg = CouplingConfig.build(n_half, arr, kernel, r)
        u = solve_problem(cfg, problem)
        curves[label] = _domain_values(cfg, u).copy()
        grads[label] = gradient(u, cfg.mesh)
        x = cfg.mesh.domain_nodes
    metrics = {
        "delta": float(delta),
        "h": h,
        "s0": problem.params[0],
        "lnl_vs_nonlocal": _window_max(x, curves["local_nonlocal_local"], curves["nonlocal"], *window),
        "local_vs_nonlocal": _window_max(x, curves["local"], curves["nonlocal"], *window),
    }
    return CurveStudy(x, curves, grads, None, metrics)


def delta_sweep(
    problem: Problem,
    kernel: str | KernelKind = KernelKind.CONSTANT,
    ratios: Sequence[int] = (2, 4, 8),
    n_half: int = 800,
) -> list[tuple[float, float]]:
    """``(delta, err_u)`` at fixed h for increasing horizons."""
    out = []
    for r in ratios:
        cfg = CouplingConfig.build(n_half, Arrangement.nonlocal_local(0.0), kernel, r, x_left=problem.x_left, x_right=problem.x_right)
        u = solve_problem(cfg, problem)
        out.append((cfg.delta, solution_errors(cfg, problem, u)[0]))
    return out
