"""Sparse matrix container and deterministic Krylov solvers.

Storage is compressed sparse row, backed by scipy.sparse. Both solvers
run single-threaded numpy kernels in a fixed operation order, so repeated
solves with identical inputs give bitwise identical results. The
stopping rule for both is

    ||b - A x||_2 <= tol * max(1, ||b||_2)

measured on the true (unpreconditioned) residual. Jacobi (diagonal)
preconditioning is applied by default; diagonal entries whose magnitude
falls below 1e-14 times the largest one are replaced by 1 so near-zero
diagonals (e.g. a shifted pressure block) never poison the scaling.
"""

from dataclasses import dataclass

import numpy as np
import scipy.io
import scipy.sparse as sp


@dataclass
class SolveReport:
    """Outcome of one linear solve."""

    iterations: int
    residual_norm: float
    converged: bool


class CSRMatrix:
    """CSR matrix with duplicate-summing triplet construction.

    Explicitly stored zeros are kept; column indices within each row are
    sorted and unique after construction.
    """

    def __init__(self, mat):
        mat = sp.csr_matrix(mat)
        mat.sum_duplicates()
        mat.sort_indices()
        self.mat = mat

    @classmethod
    def from_triplets(cls, n_rows, n_cols, rows, cols, values):
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        values = np.asarray(values, dtype=float)
        if not (rows.shape == cols.shape == values.shape):
            raise ValueError("triplet arrays must have matching shapes")
        if rows.size and (rows.min() < 0 or rows.max() >= n_rows):
            raise ValueError("row index out of range")
        if cols.size and (cols.min() < 0 or cols.max() >= n_cols):
            raise ValueError("column index out of range")
        coo = sp.coo_matrix((values, (rows, cols)), shape=(n_rows, n_cols))
        return cls(coo)

    @property
    def shape(self):
        return self.mat.shape

    @property
    def nnz(self):
        return self.mat.nnz

    def matvec(self, x):
        return self.mat @ np.asarray(x, dtype=float)

    def diagonal(self):
        return self.mat.diagonal()

    def transpose(self):
        return CSRMatrix(self.mat.T)

    def is_symmetric(self, tol=1e-12):
        d = self.mat - self.mat.T
        scale = max(1.0, abs(self.mat).max() if self.mat.nnz else 0.0)
        return abs(d).max() <= tol * scale if d.nnz else True

    def write_matrixmarket(self, path):
        scipy.io.mmwrite(str(path), self.mat)


def _as_operator(a):
    if isinstance(a, CSRMatrix):
        return a.mat
    return a


def _guarded_inverse(d):
    d = np.array(d, dtype=float)
    scale = np.abs(d).max() if d.size else 0.0
    if scale == 0.0:
        return np.ones_like(d)
    small = np.abs(d) < 1e-14 * scale
    d[small] = 1.0
    return 1.0 / d


def _jacobi_inverse(a):
    return _guarded_inverse(a.diagonal())


def solve_spd(a, b, x0=None, tol=1e-10, max_iter=None):
    """Jacobi-preconditioned conjugate gradients for SPD systems.

    Returns (x, SolveReport). Breakdown (non-positive curvature,
    signalling a non-SPD matrix) stops the iteration with
    converged=False and a finite iterate.
    """
    a = _as_operator(a)
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    if max_iter is None:
        max_iter = max(200, 10 * n)
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    minv = _jacobi_inverse(a)
    r = b - a @ x
    target = tol * max(1.0, np.linalg.norm(b))
    z = minv * r
    p = z.copy()
    rz = float(r @ z)
    it = 0
    rnorm = np.linalg.norm(r)
    while rnorm > target and it < max_iter:
        ap = a @ p
        pap = float(p @ ap)
        if pap <= 0.0 or not np.isfinite(pap):
            break
        alpha = rz / pap
        x += alpha * p
        r -= alpha * ap
        z = minv * r
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
        rnorm = np.linalg.norm(r)
        it += 1
    rnorm = float(np.linalg.norm(b - a @ x))
    return x, SolveReport(iterations=it, residual_norm=rnorm, converged=rnorm <= target)


def solve_general(a, b, x0=None, tol=1e-10, max_iter=2000, restart=60, diag=None):
    """Restarted GMRES with right Jacobi preconditioning.

    Right preconditioning keeps the least-squares residual equal to the
    true residual, so the stopping test needs no extra matvec per
    iteration. Singular or stagnating systems return converged=False
    with a finite iterate (rank-deficient projected systems fall back to
    a least-squares solve). `diag` replaces the matrix diagonal in the
    preconditioner, for systems whose own diagonal is a poor scale
    (saddle points with a near-zero pressure block).
    """
    a = _as_operator(a)
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    minv = _jacobi_inverse(a) if diag is None else _guarded_inverse(diag)
    target = tol * max(1.0, np.linalg.norm(b))
    total = 0
    best_x = x.copy()
    best_rnorm = np.inf

    while total < max_iter:
        r = b - a @ x
        rnorm = np.linalg.norm(r)
        if rnorm < best_rnorm:
            best_rnorm = rnorm
            best_x = x.copy()
        if rnorm <= target:
            break
        m = min(restart, max_iter - total)
        v = np.zeros((m + 1, n))
        h = np.zeros((m + 1, m))
        cs = np.zeros(m)
        sn = np.zeros(m)
        g = np.zeros(m + 1)
        v[0] = r / rnorm
        g[0] = rnorm
        k = 0
        stagnated = False
        for j in range(m):
            w = a @ (minv * v[j])
            for i in range(j + 1):
                h[i, j] = float(w @ v[i])
                w -= h[i, j] * v[i]
            h[j + 1, j] = np.linalg.norm(w)
            breakdown = h[j + 1, j] <= 1e-14 * rnorm
            if not breakdown:
                v[j + 1] = w / h[j + 1, j]
            # apply accumulated Givens rotations, then zero the subdiagonal
            for i in range(j):
                t = cs[i] * h[i, j] + sn[i] * h[i + 1, j]
                h[i + 1, j] = -sn[i] * h[i, j] + cs[i] * h[i + 1, j]
                h[i, j] = t
            denom = np.hypot(h[j, j], h[j + 1, j])
            if denom == 0.0:
                cs[j], sn[j] = 1.0, 0.0
            else:
                cs[j], sn[j] = h[j, j] / denom, h[j + 1, j] / denom
            h[j, j] = cs[j] * h[j, j] + sn[j] * h[j + 1, j]
            h[j + 1, j] = 0.0
            g[j + 1] = -sn[j] * g[j]
            g[j] = cs[j] * g[j]
            total += 1
            k = j + 1
            if abs(g[k]) <= target or breakdown:
                stagnated = breakdown
                break
        rr = h[:k, :k]
        gg = g[:k]
        if k:
            diag = np.abs(np.diag(rr))
            if diag.min() <= 1e-14 * max(1.0, diag.max()):
                y = np.linalg.lstsq(rr, gg, rcond=None)[0]
            else:
                y = np.linalg.solve(rr, gg)
            x = x + minv * (v[:k].T @ y)
        if stagnated or k == 0:
            break

    r = b - a @ x
    rnorm = float(np.linalg.norm(r))
    if not np.all(np.isfinite(x)) or rnorm > best_rnorm:
        x = best_x
        rnorm = float(best_rnorm)
    return x, SolveReport(iterations=total, residual_norm=rnorm, converged=rnorm <= target)
