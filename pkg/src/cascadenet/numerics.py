"""Dense-matrix primitives used by the analysis layer."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg
from scipy.sparse.csgraph import connected_components

from .errors import IndexOutOfRange, NegativeEntry, NotSchur, Singular

ZERO_CLAMP = 1e-12


def as_matrix(M, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-D float array."""
    A = np.array(M, dtype=float)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise ValueError(f"{name} must be a nonempty 2-D array, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} has non-finite entries")
    return A


def _square(M, name: str) -> np.ndarray:
    A = as_matrix(M, name)
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"{name} must be square, got shape {A.shape}")
    return A


def is_schur_by_column_sums(C) -> bool:
    """True iff every column of the nonnegative matrix C sums to less than 1.

    This is the sufficient Schur condition used throughout the model.
    """
    C = _square(C, "C")
    if np.any(C < 0):
        raise NegativeEntry("C has negative entries")
    return bool(np.all(C.sum(axis=0) < 1.0))


def invert_i_minus_c(C) -> np.ndarray:
    """Return P = (I - C)^{-1} for a nonnegative C with column sums below 1.

    Uses LU with partial pivoting. Entries of P within 1e-12 of zero are
    clamped to exactly 0 so the result is elementwise nonnegative.
    """
    C = _square(C, "C")
    if np.any(C < 0):
        raise NegativeEntry("C has negative entries")
    sums = C.sum(axis=0)
    bad = np.flatnonzero(sums >= 1.0)
    if bad.size:
        raise NotSchur(f"column sums >= 1 at columns {bad.tolist()}")
    n = C.shape[0]
    A = np.eye(n) - C
    lu, piv = scipy.linalg.lu_factor(A, check_finite=False)
    diag = np.abs(np.diag(lu))
    if np.any(diag <= np.finfo(float).eps * max(1.0, np.abs(A).max()) * n):
        raise Singular("LU factorization of (I - C) broke down")
    P = scipy.linalg.lu_solve((lu, piv), np.eye(n), check_finite=False)
    P[np.abs(P) < ZERO_CLAMP] = 0.0
    if np.any(P < 0):
        # cannot happen for an inverse-positive matrix unless roundoff is severe
        raise Singular("(I - C)^{-1} has negative entries beyond roundoff")
    return P


@dataclass(frozen=True)
class SpectralResult:
    radius: float
    eigenvector: np.ndarray
    iterations: int
    converged: bool


def _power_iteration(M: np.ndarray, tol: float, max_iter: int) -> tuple[float, np.ndarray, int, bool]:
    """Shifted power iteration on an irreducible nonnegative block.

    The shift by the largest row sum makes the iteration matrix primitive,
    so periodic blocks (e.g. 2-cycles) still converge. Stopping uses the
    Collatz-Wielandt bracket min (Mx)_i/x_i <= rho <= max (Mx)_i/x_i, valid
    for any positive x, so the reported radius is within tol of the truth.
    """
    n = M.shape[0]
    shift = float(M.sum(axis=1).max())
    x = np.full(n, 1.0 / n)
    est = 0.0
    for it in range(1, max_iter + 1):
        Mx = M @ x
        if np.all(x > 0):
            ratios = Mx / x
            lo, hi = float(ratios.min()), float(ratios.max())
            est = 0.5 * (lo + hi)
            if hi - lo < tol:
                return max(est, 0.0), x, it, True
        y = Mx + shift * x
        x = y / y.sum()
    return max(est, 0.0), x, max_iter, False


def frobenius_eigenvalue(M, tol: float = 1e-10, max_iter: int = 10_000) -> SpectralResult:
    """Frobenius (dominant real) eigenvalue of a nonnegative square matrix.

    The matrix is split into strongly connected components; the radius is
    the largest radius over the irreducible diagonal blocks, each obtained
    by power iteration started from the uniform vector. The eigenvector is
    the Perron vector of the dominant block embedded in R^n, which is an
    eigenvector of M itself whenever M is irreducible.
    """
    M = _square(M, "M")
    if np.any(M < 0):
        raise NegativeEntry("M has negative entries")
    n = M.shape[0]
    ncomp, labels = connected_components(M != 0, directed=True, connection="strong")

    best = (-1.0, None, 0)
    total_iters = 0
    converged = True
    for c in range(ncomp):
        idx = np.flatnonzero(labels == c)
        block = M[np.ix_(idx, idx)]
        if idx.size == 1:
            rad, vec, iters, ok = float(block[0, 0]), np.ones(1), 0, True
        else:
            rad, vec, iters, ok = _power_iteration(block, tol, max_iter)
        total_iters = max(total_iters, iters)
        converged = converged and ok
        if rad > best[0]:
            best = (rad, idx, vec)

    rad, idx, vec = best
    eigvec = np.zeros(n)
    eigvec[idx] = vec
    eigvec /= eigvec.sum()
    return SpectralResult(radius=float(rad), eigenvector=eigvec, iterations=total_iters, converged=converged)


def principal_submatrix(M, indices: Sequence[int]) -> np.ndarray:
    M = _square(M, "M")
    idx = list(indices)
    n = M.shape[0]
    if not idx:
        raise IndexOutOfRange("index set is empty")
    if len(set(idx)) != len(idx):
        raise IndexOutOfRange(f"index set has duplicates: {idx}")
    out = [i for i in idx if not (0 <= int(i) < n)]
    if out:
        raise IndexOutOfRange(f"indices {out} outside 0..{n - 1}")
    idx = np.asarray(idx, dtype=int)
    return M[np.ix_(idx, idx)].copy()
