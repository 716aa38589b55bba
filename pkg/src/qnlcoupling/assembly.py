"""Uniform mesh, regime classification and finite-difference assembly of -L^qnl.

Grid functions are plain float arrays over the *full* grid: ``ghost_left`` ghost
nodes, the domain nodes ``x_0 .. x_{2N}``, then ``ghost_right`` ghost nodes.
Ghost nodes carry the volumetric constraint, ``x_0`` and ``x_{2N}`` carry
Dirichlet data; the unknowns are the interior nodes ``1 .. 2N-1``.

Every row of the operator is stored as a stencil over offsets ``-p .. p``
(``p`` the half bandwidth) in the orientation of the solved system
``A u = f`` with ``A = -L^qnl``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConfigurationError
from .kernels import Kernel, KernelKind, make_kernel, moment

# Interfaces closer than this (in units of h) to a node are snapped to it.
GRID_SNAP = 1e-9


class Scheme(str, enum.Enum):
    COMPATIBLE = "compatible"
    DIRECT = "direct"


class Regime(str, enum.Enum):
    NONLOCAL = "nonlocal"
    TRANSITIONAL = "transitional"
    LOCAL = "local"


class ArrangementKind(str, enum.Enum):
    PURE_NONLOCAL = "pure_nonlocal"
    PURE_LOCAL = "pure_local"
    NONLOCAL_LOCAL = "nonlocal_local"
    LOCAL_NONLOCAL_LOCAL = "local_nonlocal_local"


_N_INTERFACES = {
    ArrangementKind.PURE_NONLOCAL: 0,
    ArrangementKind.PURE_LOCAL: 0,
    ArrangementKind.NONLOCAL_LOCAL: 1,
    ArrangementKind.LOCAL_NONLOCAL_LOCAL: 2,
}


@dataclass(frozen=True)
class Arrangement:
    """Where the nonlocal, transitional and local regions live.

    ``NONLOCAL_LOCAL`` puts the nonlocal region left of the single interface;
    ``LOCAL_NONLOCAL_LOCAL`` puts it between the two interfaces.
    """

    kind: ArrangementKind
    interfaces: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", ArrangementKind(self.kind))
        object.__setattr__(self, "interfaces", tuple(float(x) for x in self.interfaces))
        want = _N_INTERFACES[self.kind]
        if len(self.interfaces) != want:
            raise ConfigurationError(
                f"{self.kind.value} arrangement takes {want} interface(s), got {len(self.interfaces)}"
            )
        if want == 2 and not self.interfaces[0] < self.interfaces[1]:
            raise ConfigurationError(f"interfaces must satisfy x_a < x_b, got {self.interfaces}")

    @classmethod
    def pure_nonlocal(cls):
        return cls(ArrangementKind.PURE_NONLOCAL)

    @classmethod
    def pure_local(cls):
        return cls(ArrangementKind.PURE_LOCAL)

    @classmethod
    def nonlocal_local(cls, x_star: float = 0.0):
        return cls(ArrangementKind.NONLOCAL_LOCAL, (x_star,))

    @classmethod
    def local_nonlocal_local(cls, x_a: float = -0.5, x_b: float = 0.5):
        return cls(ArrangementKind.LOCAL_NONLOCAL_LOCAL, (x_a, x_b))

    def ghost_counts(
        self, ratio: int, n_half: int | None = None, x_left: float = -1.0, x_right: float = 1.0
    ) -> tuple[int, int]:
        """Constraint nodes needed beyond each end of the domain.

        Nonlocal regions touching a boundary need one horizon of ghosts.
        Mirrored transitional rows reach ``max(2r - 1, r + 1)`` cells past their
        interface, so local-nonlocal-local coupling needs zero-valued
        extension nodes when an interface is closer than that to the boundary
        (the grid, hence ``n_half``, is required to decide).
        """
        if self.kind is ArrangementKind.PURE_NONLOCAL:
            return ratio, ratio
        if self.kind is ArrangementKind.NONLOCAL_LOCAL:
            return ratio, 0
        if self.kind is ArrangementKind.PURE_LOCAL:
            return 0, 0
        if n_half is None:
            raise ValueError("local_nonlocal_local ghost counts depend on the grid; pass n_half")
        mesh = Mesh(n_half, x_left, x_right)
        ka, kb = (mesh.index_of(x) for x in self.interfaces)
        reach = max(2 * ratio - 1, ratio + 1)
        return max(0, reach - ka), max(0, kb + reach - mesh.last)


@dataclass(frozen=True)
class Mesh:
    n_half: int
    x_left: float = -1.0
    x_right: float = 1.0
    ghost_left: int = 0
    ghost_right: int = 0

    def __post_init__(self):
        if int(self.n_half) != self.n_half or self.n_half < 1:
            raise ConfigurationError(f"n_half must be a positive integer, got {self.n_half!r}")
        if not self.x_right > self.x_left:
            raise ConfigurationError("x_right must exceed x_left")
        if self.ghost_left < 0 or self.ghost_right < 0:
            raise ConfigurationError("ghost counts must be nonnegative")

    @property
    def h(self) -> float:
        return (self.x_right - self.x_left) / (2 * self.n_half)

    @property
    def last(self) -> int:
        """Index of the right endpoint, 2N."""
        return 2 * self.n_half

    @property
    def size(self) -> int:
        return self.ghost_left + 2 * self.n_half + 1 + self.ghost_right

    @property
    def offset(self) -> int:
        """Position of node x_0 in a full-grid array."""
        return self.ghost_left

    @property
    def nodes(self) -> np.ndarray:
        """Coordinates of the full grid, ghosts included."""
        i = np.arange(-self.ghost_left, 2 * self.n_half + 1 + self.ghost_right)
        return self.x_left + i * self.h

    @property
    def domain_nodes(self) -> np.ndarray:
        return self.x_left + np.arange(2 * self.n_half + 1) * self.h

    @property
    def interior(self) -> slice:
        """Full-grid slice of the unknowns x_1 .. x_{2N-1}."""
        return slice(self.offset + 1, self.offset + 2 * self.n_half)

    def index_of(self, x: float, what: str = "interface") -> int:
        t = (x - self.x_left) / self.h
        k = int(round(t))
        if abs(t - k) > GRID_SNAP or not 0 <= k <= self.last:
            raise ConfigurationError(f"{what} x = {x!r} is not a node of the grid (h = {self.h!r})")
        return k

    def zeros(self) -> np.ndarray:
        return np.zeros(self.size)

    def sample(self, func) -> np.ndarray:
        return np.asarray(func(self.nodes), dtype=float) * np.ones(self.size)


@dataclass(frozen=True)
class CouplingConfig:
    mesh: Mesh
    arrangement: Arrangement
    kernel: Kernel
    ratio: int
    scheme: Scheme = Scheme.COMPATIBLE
    # Sum transitional cells from j = l instead of j = l + 1 (breaks the patch test).
    literal_index: bool = False

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if int(self.ratio) != self.ratio or self.ratio < 1:
            raise ConfigurationError(f"ratio must be a positive integer, got {self.ratio!r}")
        expected = self.ratio * self.mesh.h
        if abs(self.kernel.delta - expected) > 1e-12 * expected:
            raise ConfigurationError(
                f"kernel horizon {self.kernel.delta!r} differs from ratio * h = {expected!r}"
            )
        m = self.mesh
        gl, gr = self.arrangement.ghost_counts(self.ratio, m.n_half, m.x_left, m.x_right)
        if (self.mesh.ghost_left, self.mesh.ghost_right) != (gl, gr):
            raise ConfigurationError(
                f"{self.arrangement.kind.value} needs ghost counts ({gl}, {gr}), mesh has "
                f"({self.mesh.ghost_left}, {self.mesh.ghost_right})"
            )
        _roles(self)  # validates interfaces

    @classmethod
    def build(
        cls,
        n_half: int,
        arrangement: Arrangement | None = None,
        kernel: str | KernelKind | Kernel = KernelKind.CONSTANT,
        ratio: int = 3,
        scheme: Scheme | str = Scheme.COMPATIBLE,
        x_left: float = -1.0,
        x_right: float = 1.0,
        literal_index: bool = False,
    ) -> "CouplingConfig":
        """Config with delta = ratio * h and ghost layers implied by the arrangement."""
        arrangement = arrangement or Arrangement.nonlocal_local(0.0)
        gl, gr = arrangement.ghost_counts(ratio, n_half, x_left, x_right)
        mesh = Mesh(n_half, x_left, x_right, gl, gr)
        delta = ratio * mesh.h
        k = kernel.with_delta(delta) if isinstance(kernel, Kernel) else make_kernel(kernel, delta)
        return cls(mesh, arrangement, k, ratio, Scheme(scheme), literal_index)

    @property
    def h(self) -> float:
        return self.mesh.h

    @property
    def delta(self) -> float:
        return self.kernel.delta

    def with_scheme(self, scheme: Scheme | str) -> "CouplingConfig":
        return CouplingConfig(self.mesh, self.arrangement, self.kernel, self.ratio, Scheme(scheme), self.literal_index)


_REGIMES = (Regime.NONLOCAL, Regime.TRANSITIONAL, Regime.LOCAL)
_NONLOCAL, _TRANSITIONAL, _LOCAL = range(3)


@dataclass(frozen=True)
class _Roles:
    code: np.ndarray  # regime codes (index into _REGIMES), nodes 0..2N
    dist: np.ndarray  # transitional distance l (in cells) from the interface, else 0
    side: np.ndarray  # +1: nonlocal region to the left, -1: to the right
    nonlocal_full: np.ndarray  # bool over the full grid: node belongs to the nonlocal side
    local_cells: np.ndarray  # cell m = (x_m, x_{m+1}) treated by the weighted local energy
    cell_dist: np.ndarray  # distance of each local cell midpoint from its interface (cells)


def _roles(config: CouplingConfig) -> _Roles:
    mesh, r = config.mesh, config.ratio
    last = mesh.last
    i = np.arange(last + 1)
    regime = np.full(last + 1, _LOCAL)
    dist = np.zeros(last + 1, dtype=int)
    side = np.zeros(last + 1, dtype=int)
    full = np.arange(-mesh.ghost_left, last + 1 + mesh.ghost_right)
    kind = config.arrangement.kind
    inf = np.inf

    if kind is ArrangementKind.PURE_NONLOCAL:
        regime[:] = _NONLOCAL
        nl = np.ones(full.size, dtype=bool)
        cells = np.zeros(0, dtype=int)
        cdist = np.zeros(0)
    elif kind is ArrangementKind.PURE_LOCAL:
        nl = np.zeros(full.size, dtype=bool)
        cells = np.arange(last)
        cdist = np.full(last, inf)
    elif kind is ArrangementKind.NONLOCAL_LOCAL:
        (k,) = (mesh.index_of(x) for x in config.arrangement.interfaces)
        regime[i <= k] = _NONLOCAL
        band = (i > k) & (i <= k + r)
        regime[band] = _TRANSITIONAL
        dist[band] = i[band] - k
        side[band] = 1
        nl = full <= k
        cells = np.arange(k, last)
        cdist = cells - k + 0.5
    else:
        ka, kb = (mesh.index_of(x) for x in config.arrangement.interfaces)
        if ka - r < 0 or kb + r > last:
            raise ConfigurationError(
                "local-nonlocal-local interfaces need x_a - delta >= x_left and "
                f"x_b + delta <= x_right (x_a = {config.arrangement.interfaces[0]!r}, "
                f"x_b = {config.arrangement.interfaces[1]!r}, delta = {config.delta!r})"
            )
        regime[(i >= ka) & (i <= kb)] = _NONLOCAL
        left = (i >= ka - r) & (i < ka)
        regime[left] = _TRANSITIONAL
        dist[left] = ka - i[left]
        side[left] = -1
        right = (i > kb) & (i <= kb + r)
        regime[right] = _TRANSITIONAL
        dist[right] = i[right] - kb
        side[right] = 1
        nl = (full >= ka) & (full <= kb)
        lc = np.arange(0, ka)
        rc = np.arange(kb, last)
        cells = np.concatenate([lc, rc])
        cdist = np.concatenate([ka - lc - 0.5, rc - kb + 0.5])
    return _Roles(regime, dist, side, nl, cells, cdist)


def _regime(code) -> Regime:
    return _REGIMES[int(code)]


def classify(config: CouplingConfig) -> list[Regime]:
    """Regime label of every domain node x_0 .. x_{2N}."""
    return [_regime(c) for c in _roles(config).code]


@dataclass(frozen=True)
class _CellMoments:
    """Per-cell moments over ((j-1)h, jh), index j = 1..r (entry 0 unused)."""

    m0: np.ndarray
    m1: np.ndarray
    m2: np.ndarray
    tail1: np.ndarray  # M1(l h, delta), l = 0..r
    head2: np.ndarray  # M2(0, l h), l = 0..r


def _cell_moments(config: CouplingConfig, need_m0: bool) -> _CellMoments:
    k, h, r = config.kernel, config.h, config.ratio
    j = np.arange(1, r + 1)
    a = (j - 1) * h
    b = np.minimum(j * h, config.delta)
    pad = lambda v: np.concatenate([[0.0], np.atleast_1d(v)])
    m0 = np.zeros(r + 1)
    if need_m0:
        start = 1 if (k.kind is KernelKind.INVERSE_ABS and not config.literal_index) else 0
        # inverse-distance M0 of the first cell diverges and is never used by valid stencils
        m0[1 + start:] = np.atleast_1d(moment(k, 0, a[start:], b[start:]))
    ell = np.minimum(np.arange(r + 1) * h, config.delta)
    return _CellMoments(
        m0=m0,
        m1=pad(moment(k, 1, a, b)),
        m2=pad(moment(k, 2, a, b)),
        tail1=np.atleast_1d(moment(k, 1, ell, config.delta)),
        head2=np.atleast_1d(moment(k, 2, 0.0, ell)),
    )


def _nonlocal_stencil(cm: _CellMoments, h: float, r: int) -> dict[int, float]:
    """L-stencil of the full nonlocal operator."""
    st: dict[int, float] = {0: 0.0}
    for j in range(1, r + 1):
        w = 2.0 * cm.m2[j] / (j * h) ** 2
        st[j] = st.get(j, 0.0) + w
        st[-j] = st.get(-j, 0.0) + w
        st[0] -= 2.0 * w
    return st


def _local_stencil(h: float, coef: float = 1.0) -> dict[int, float]:
    c = coef / h**2
    return {-1: c, 0: -2.0 * c, 1: c}


def _transitional_stencil(
    cm: _CellMoments, h: float, r: int, ell: int, side: int, scheme: Scheme, literal: bool
) -> dict[int, float]:
    """L-stencil at distance ``ell`` cells from the interface.

    ``side = +1`` when the nonlocal region is on the left of the node.
    """
    st: dict[int, float] = {}

    def add(o, c):
        st[o] = st.get(o, 0.0) + c

    first = ell if literal else ell + 1
    for j in range(first, r + 1):
        if scheme is Scheme.DIRECT:
            w = 2.0 * cm.m0[j]
            add(-side * j, w)
            add(0, -w)
        else:
            w = cm.m2[j] / (j * h) ** 2
            add(j, w)
            add(-j, w)
            add(0, -2.0 * w)
            c = cm.m1[j] / (j * h)
            add(j, -side * c)
            add(-j, side * c)
    # one-sided difference pointing away from the nonlocal region
    conv = 2.0 * cm.tail1[ell] / h
    add(side, conv)
    add(0, -conv)
    diff = 2.0 * cm.head2[ell] + 2.0 * ell * h * cm.tail1[ell]
    for o, c in _local_stencil(h, diff).items():
        add(o, c)
    return st


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Banded discrete operator ``A = -L^qnl`` on the interior nodes.

    ``stencils[k, p + o]`` multiplies ``u`` at node ``k + 1 + o``; columns that
    fall on ghost or boundary nodes are kept here and moved to the right-hand
    side when solving.
    """

    mesh: Mesh
    half_band: int
    stencils: np.ndarray
    regimes: tuple[Regime, ...]
    scheme: Scheme = Scheme.COMPATIBLE

    @property
    def n(self) -> int:
        return self.stencils.shape[0]

    @property
    def offsets(self) -> np.ndarray:
        return np.arange(-self.half_band, self.half_band + 1)

    @cached_property
    def _columns(self) -> np.ndarray:
        """Full-grid column index of every stencil entry."""
        rows = np.arange(1, self.n + 1)
        return self.mesh.offset + rows[:, None] + self.offsets[None, :]

    def full(self) -> np.ndarray:
        """Dense ``n x mesh.size`` matrix including constrained columns."""
        out = np.zeros((self.n, self.mesh.size))
        cols = self._columns
        ok = (cols >= 0) & (cols < self.mesh.size)
        r = np.broadcast_to(np.arange(self.n)[:, None], cols.shape)
        np.add.at(out, (r[ok], cols[ok]), self.stencils[ok])
        return out

    def dense(self) -> np.ndarray:
        """Square interior matrix (constrained columns dropped)."""
        return self.full()[:, self.mesh.interior]

    def banded(self) -> np.ndarray:
        """Interior matrix in LAPACK/scipy ``(l, u)`` band layout, ``l = u = half_band``."""
        p, n = self.half_band, self.n
        ab = np.zeros((2 * p + 1, n))
        for col, o in enumerate(self.offsets):
            # A[i, i+o] -> ab[p - o, i + o]
            lo, hi = max(0, -o), min(n, n - o)
            ab[p - o, lo + o : hi + o] = self.stencils[lo:hi, col]
        return ab

    def norm_inf(self) -> float:
        return float(np.max(np.sum(np.abs(self.stencils), axis=1)))

    def boundary_rhs(self, u: np.ndarray) -> np.ndarray:
        """``-(A u)`` restricted to the constrained columns; add to f when solving."""
        u = np.asarray(u, dtype=float)
        v = np.zeros_like(u)
        keep = np.ones(self.mesh.size, dtype=bool)
        keep[self.mesh.interior] = False
        v[keep] = u[keep]
        return -apply(self, v)


def assemble(config: CouplingConfig, scheme: Scheme | str | None = None) -> OperatorMatrix:
    """Assemble ``A = -L^qnl`` with the config's scheme (or ``scheme`` if given)."""
    scheme = Scheme(scheme) if scheme is not None else config.scheme
    roles = _roles(config)
    mesh, h, r = config.mesh, config.h, config.ratio
    cm = _cell_moments(config, need_m0=scheme is Scheme.DIRECT)
    nonlocal_st = _nonlocal_stencil(cm, h, r)
    local_st = _local_stencil(h)
    cache: dict[tuple[int, int], dict[int, float]] = {}

    has_wide = bool(np.any(roles.code != _LOCAL))
    p = r if has_wide else 1
    n = mesh.last - 1
    stencils = np.zeros((n, 2 * p + 1))
    lo_idx, hi_idx = -mesh.ghost_left, mesh.last + mesh.ghost_right
    for node in range(1, mesh.last):
        reg = _regime(roles.code[node])
        if reg is Regime.NONLOCAL:
            st = nonlocal_st
        elif reg is Regime.LOCAL:
            st = local_st
        else:
            key = (int(roles.dist[node]), int(roles.side[node]))
            if key not in cache:
                cache[key] = _transitional_stencil(cm, h, r, key[0], key[1], scheme, config.literal_index)
            st = cache[key]
        for o, c in st.items():
            if c == 0.0:
                continue
            if not lo_idx <= node + o <= hi_idx:
                raise ConfigurationError(
                    f"{reg.value} stencil at x = {mesh.x_left + node * h!r} reaches outside the "
                    "domain and constraint layer"
                )
            stencils[node - 1, p + o] -= c
    return OperatorMatrix(mesh, p, stencils, tuple(_regime(c) for c in roles.code[1 : mesh.last]), scheme)


def assemble_direct(config: CouplingConfig) -> OperatorMatrix:
    """Transitional rows discretize the one-sided nonlocal integral without the
    diffusion/convection split. Other rows match :func:`assemble`."""
    return assemble(config, Scheme.DIRECT)


def apply(matrix: OperatorMatrix, u: np.ndarray) -> np.ndarray:
    """``A u`` at the interior rows, using the full stencils (ghost/boundary values from ``u``)."""
    u = np.asarray(u, dtype=float)
    if u.shape != (matrix.mesh.size,):
        raise ValueError(f"grid function has shape {u.shape}, mesh expects ({matrix.mesh.size},)")
    cols = np.clip(matrix._columns, 0, matrix.mesh.size - 1)
    return np.sum(matrix.stencils * u[cols], axis=1)


def _pair_weights(config: CouplingConfig) -> np.ndarray:
    """Kernel cell weight per offset k (entry 0 unused): M2 over the k-th cell / ((kh)^2 h)."""
    h, r = config.h, config.ratio
    cm = _cell_moments(config, need_m0=False)
    k = np.arange(1, r + 1)
    return np.concatenate([[0.0], cm.m2[1:] / ((k * h) ** 2 * h)])


def _check_pair(config: CouplingConfig, u, v):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    size = config.mesh.size
    if u.shape != (size,) or v.shape != (size,):
        raise ValueError(f"grid functions must have shape ({size},), got {u.shape} and {v.shape}")
    return u, v


def bilinear(config: CouplingConfig, u, v) -> float:
    """Discrete b^qnl(u, v): nonlocal pair sum plus weighted local gradient term.

    Pairs (ordered) within distance delta with at least one node on the
    nonlocal side use the kernel cell weights; cells on the local side use
    ``omega`` at the cell midpoint.
    """
    u, v = _check_pair(config, u, v)
    roles = _roles(config)
    h = config.h
    g = _pair_weights(config)
    nl = roles.nonlocal_full
    total = 0.0
    for k in range(1, config.ratio + 1):
        if k >= u.size:
            break
        mask = nl[k:] | nl[:-k]
        du = u[k:] - u[:-k]
        dv = v[k:] - v[:-k]
        total += 2.0 * g[k] * h * h * float(np.sum(du * dv * mask))
    if roles.local_cells.size:
        from .weights import WeightEvaluator

        w = WeightEvaluator(config.kernel)
        cdist = roles.cell_dist
        omega = np.where(np.isinf(cdist), 1.0, w.omega(np.where(np.isinf(cdist), 0.0, cdist * h)))
        m = config.mesh.offset + roles.local_cells
        du = (u[m + 1] - u[m]) / h
        dv = (v[m + 1] - v[m]) / h
        total += float(np.sum(omega * (du * dv))) * h  # du * dv first: exact symmetry
    return total


def discrete_energy(config: CouplingConfig, u) -> float:
    return 0.5 * bilinear(config, u, u)


def nonlocal_bilinear(config: CouplingConfig, u, v) -> float:
    """Fully nonlocal pair sum over every pair of the full grid (same quadrature)."""
    u, v = _check_pair(config, u, v)
    h = config.h
    g = _pair_weights(config)
    total = 0.0
    for k in range(1, min(config.ratio, u.size - 1) + 1):
        total += 2.0 * g[k] * h * h * float(np.sum((u[k:] - u[:-k]) * (v[k:] - v[:-k])))
    return total
