"""Banded solves and structural diagnostics of the assembled operator."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack

from .assembly import OperatorMatrix
from .errors import SingularSystemError
from .report import Report

# Fixed seed for the random-vector positivity trials.
DEFAULT_SEED = 20180712
PIVOT_TOL = 1e-14
DENSE_INVERSE_CAP = 512
EIGEN_CAP = 64


@dataclass(frozen=True)
class BandedSystem:
    matrix: OperatorMatrix
    rhs: np.ndarray

    def __post_init__(self):
        rhs = np.asarray(self.rhs, dtype=float)
        if rhs.shape != (self.matrix.n,):
            raise ValueError(f"rhs has shape {rhs.shape}, matrix has {self.matrix.n} rows")
        object.__setattr__(self, "rhs", rhs)


def solve_banded(ab: np.ndarray, p: int, rhs: np.ndarray, scale: float | None = None) -> np.ndarray:
    """Solve with a banded LU factorization with partial pivoting.

    ``ab`` holds the matrix in ``(p, p)`` band layout (row ``p + i - j`` holds
    ``A[i, j]``). Raises :class:`SingularSystemError` when a pivot is below
    ``1e-14 * scale`` (``scale`` defaults to the infinity norm).
    """
    n = ab.shape[1]
    if scale is None:
        scale = _band_norm_inf(ab, p)
    # dgbtrf needs p extra rows on top for fill-in
    work = np.zeros((3 * p + 1, n))
    work[p:, :] = ab
    lu, piv, info = lapack.dgbtrf(work, p, p)
    if info < 0:
        raise ValueError(f"dgbtrf: illegal argument {-info}")
    pivots = np.abs(lu[2 * p, :])
    if info > 0 or np.any(pivots < PIVOT_TOL * scale):
        k = int(np.argmin(pivots))
        raise SingularSystemError(f"numerically singular pivot {pivots[k]:.3e} at row {k}")
    x, info = lapack.dgbtrs(lu, p, p, np.asarray(rhs, dtype=float), piv)
    if info != 0:
        raise ValueError(f"dgbtrs failed with info = {info}")
    return x


def _band_norm_inf(ab: np.ndarray, p: int) -> float:
    n = ab.shape[1]
    rows = np.zeros(n)
    for d in range(2 * p + 1):
        o = p - d  # column offset j - i of this band row
        lo, hi = max(0, -o), min(n, n - o)
        rows[lo:hi] += np.abs(ab[d, lo + o : hi + o])
    return float(rows.max()) if n else 0.0


def solve(system: BandedSystem) -> np.ndarray:
    """Interior solution ``u`` of ``A u = rhs`` (constraint data already folded into rhs)."""
    m = system.matrix
    return solve_banded(m.banded(), m.half_band, system.rhs, scale=m.norm_inf())


def residual_ok(matrix: OperatorMatrix, u: np.ndarray, rhs: np.ndarray, rtol: float = 1e-10) -> bool:
    a = matrix.dense()
    res = np.max(np.abs(a @ u - rhs))
    bound = rtol * (np.max(np.sum(np.abs(a), axis=1)) * np.max(np.abs(u)) + np.max(np.abs(rhs)))
    return bool(res <= bound)


def symmetry_defect(matrix: OperatorMatrix) -> float:
    """``||A - A^T||_inf / ||A||_inf`` of the interior matrix."""
    a = matrix.dense()
    norm = np.max(np.sum(np.abs(a), axis=1))
    if norm == 0:
        return 0.0
    return float(np.max(np.sum(np.abs(a - a.T), axis=1)) / norm)


def smallest_symmetric_eigenvalue(matrix: OperatorMatrix) -> float:
    a = matrix.dense()
    return float(np.linalg.eigvalsh(0.5 * (a + a.T))[0])


def positive_definiteness_check(
    matrix: OperatorMatrix, trials: int = 50, seed: int = DEFAULT_SEED
) -> Report:
    """Random quadratic-form trials ``v^T A v > 0``; adds the smallest eigenvalue
    of ``(A + A^T) / 2`` for systems of dimension <= 64."""
    a = matrix.dense()
    rng = np.random.default_rng(seed)
    report = Report()
    worst = np.inf
    for _ in range(trials):
        v = rng.standard_normal(matrix.n)
        q = float(v @ a @ v) / float(v @ v)
        worst = min(worst, q)
    report.add("quadratic_form_min", worst, 0.0, worst > 0)
    if matrix.n <= EIGEN_CAP:
        lam = smallest_symmetric_eigenvalue(matrix)
        report.add("symmetric_part_min_eigenvalue", lam, 0.0, lam > 0)
    return report


def inverse_positivity_check(matrix: OperatorMatrix, rtol: float = 1e-12) -> Report:
    """Smallest entry of ``A^{-1}``; passes when it is >= ``-rtol * ||A^{-1}||_inf``.

    Dense inverse up to dimension 512, column-by-column banded solves beyond.
    """
    n = matrix.n
    if n <= DENSE_INVERSE_CAP:
        a = matrix.dense()
        norm = np.max(np.sum(np.abs(a), axis=1))
        if np.linalg.cond(a, 1) * PIVOT_TOL > 1 or norm == 0:
            raise SingularSystemError("matrix is numerically singular")
        inv = np.linalg.inv(a)
        lowest = float(inv.min())
        inv_norm = float(np.max(np.sum(np.abs(inv), axis=1)))
    else:
        ab, p, scale = matrix.banded(), matrix.half_band, matrix.norm_inf()
        lowest = np.inf
        row_sums = np.zeros(n)
        e = np.zeros(n)
        for j in range(n):
            e[j] = 1.0
            col = solve_banded(ab, p, e, scale)
            e[j] = 0.0
            lowest = min(lowest, float(col.min()))
            row_sums += np.abs(col)
        inv_norm = float(row_sums.max())
    threshold = -rtol * inv_norm
    report = Report()
    report.add("inverse_min_entry", lowest, threshold, lowest >= threshold)
    return report
