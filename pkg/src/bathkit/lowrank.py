"""Low-rank kernels for dense real matrices.

Two primitives live here:

* ``column_id`` -- a column interpolative decomposition f ~ B @ P built on
  deterministic Householder QR with column pivoting.  B consists of actual
  columns of f, and P carries an exact r x r identity on the selected
  columns.  The factorization stops as soon as the next pivot norm falls
  below ``tol`` times the first one, so the cost is O(m*n*r) rather than a
  full QR.

* ``nnls`` -- the Lawson-Hanson active-set method for min ||A z - b|| with
  z >= 0.  Inactive coordinates are exact zeros (never small negatives),
  which downstream code relies on when pruning.

Both are pure functions of their inputs; pivot and index ties break toward
the lowest index, so results are reproducible bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ValidationError

__all__ = ["IdResult", "NnlsResult", "column_id", "nnls"]


@dataclass(frozen=True)
class IdResult:
    """Column interpolative decomposition of an m x n matrix.

    ``selected`` lists r column indices in pivot order; ``interp`` is the
    r x n coefficient matrix P in original column order, so
    f ~ f[:, selected] @ interp.  ``frobenius_error_estimate`` is the
    Frobenius norm of the unfactored trailing block, which equals
    ||f - B P||_F up to roundoff.
    """

    rank: int
    selected: np.ndarray
    interp: np.ndarray
    frobenius_error_estimate: float


@dataclass(frozen=True)
class NnlsResult:
    """Solution of min ||A z - b||_2 subject to z >= 0.

    ``dual_tolerance`` is the stationarity threshold used for termination;
    KKT checks should compare dual values against it.
    """

    z: np.ndarray
    residual_norm: float
    iterations: int
    converged: bool
    dual_tolerance: float


def _validate_matrix(a, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ValidationError(f"{name} must be a 2-d matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{name} contains non-finite entries")
    return a


def column_id(f, tol: float | None = None, max_rank: int | None = None) -> IdResult:
    """Interpolative decomposition by column-pivoted Householder QR.

    The rank is the smallest k for which the (k+1)-th pivot norm (the
    next R diagonal) satisfies |R_{k+1,k+1}| <= tol * |R_11|, capped at
    ``max_rank``.  At least one of ``tol``/``max_rank`` must be given.
    A zero matrix yields rank 0 with an empty selection.
    """
    f = _validate_matrix(f, "f")
    if tol is None and max_rank is None:
        raise ValidationError("column_id: provide tol or max_rank")
    if tol is not None and not (tol > 0 and np.isfinite(tol)):
        raise ValidationError(f"column_id: tol must be positive, got {tol}")
    if max_rank is not None and max_rank < 0:
        raise ValidationError(f"column_id: max_rank must be >= 0, got {max_rank}")
    m, n = f.shape

    work = f.copy()
    kmax = min(m, n)
    if max_rank is not None:
        kmax = min(kmax, max_rank)
    piv = np.arange(n)
    thresh = None
    rank = kmax
    for k in range(kmax):
        block = work[k:, k:]
        norms = np.sqrt(np.einsum("ij,ij->j", block, block))
        jrel = int(np.argmax(norms))  # ties resolve to the lowest index
        pivnorm = float(norms[jrel])
        if thresh is None:
            thresh = (tol * pivnorm) if tol is not None else 0.0
        if pivnorm <= thresh:
            rank = k
            break
        jabs = k + jrel
        if jabs != k:
            work[:, [k, jabs]] = work[:, [jabs, k]]
            piv[[k, jabs]] = piv[[jabs, k]]
        x = work[k:, k]
        v = x.copy()
        v[0] += pivnorm if x[0] >= 0 else -pivnorm
        v /= np.linalg.norm(v)
        work[k:, k:] -= np.outer(2.0 * v, v @ work[k:, k:])
        work[k + 1 :, k] = 0.0

    if rank < min(m, n):
        tail = float(np.linalg.norm(work[rank:, rank:]))
    else:
        tail = 0.0

    if rank == 0:
        interp = np.zeros((0, n))
        return IdResult(0, np.zeros(0, dtype=int), interp, tail)

    coeffs = scipy.linalg.solve_triangular(
        work[:rank, :rank], work[:rank, rank:], lower=False
    )
    interp = np.empty((rank, n))
    interp[:, piv[:rank]] = np.eye(rank)
    interp[:, piv[rank:]] = coeffs
    return IdResult(rank, piv[:rank].copy(), interp, tail)


def nnls(a, b, max_iter: int | None = None) -> NnlsResult:
    """Lawson-Hanson active-set solver for min ||A z - b||, z >= 0.

    Terminates when every inactive dual w_i = (A^T (b - A z))_i is below
    10 * ||A||_inf * ||b||_2 * eps, or after ``max_iter`` outer iterations
    (default 3n), in which case ``converged`` is False and the best
    iterate so far is returned.
    """
    a = _validate_matrix(a, "A")
    b = np.asarray(b, dtype=float)
    m, n = a.shape
    if b.shape != (m,):
        raise ValidationError(f"b must have shape ({m},), got {b.shape}")
    if not np.all(np.isfinite(b)):
        raise ValidationError("b contains non-finite entries")
    if max_iter is None:
        max_iter = 3 * n

    dual_tol = 10.0 * np.linalg.norm(a, np.inf) * np.linalg.norm(b) * np.finfo(float).eps

    z = np.zeros(n)
    passive = np.zeros(n, dtype=bool)
    iterations = 0
    converged = False
    while True:
        w = a.T @ (b - a @ z)
        inactive = ~passive
        if not inactive.any() or np.max(w[inactive]) <= dual_tol:
            converged = True
            break
        if iterations >= max_iter:
            break
        iterations += 1
        candidates = np.flatnonzero(inactive)
        passive[candidates[np.argmax(w[candidates])]] = True

        while True:
            cols = np.flatnonzero(passive)
            if cols.size == 0:
                z = np.zeros(n)
                break
            sol = np.linalg.lstsq(a[:, cols], b, rcond=None)[0]
            if np.min(sol) > 0.0:
                z = np.zeros(n)
                z[cols] = sol
                break
            # step back to the feasibility boundary and drop clipped indices
            trial = np.zeros(n)
            trial[cols] = sol
            blocking = passive & (trial <= 0.0)
            denom = z[blocking] - trial[blocking]
            ratios = np.where(denom > 0.0, z[blocking] / np.where(denom > 0, denom, 1.0), 0.0)
            alpha = np.min(ratios)
            z = z + alpha * (trial - z)
            newly_active = passive & (z <= 0.0)
            z[newly_active] = 0.0
            passive &= ~newly_active

    residual = float(np.linalg.norm(a @ z - b))
    return NnlsResult(z, residual, iterations, converged, float(dual_tol))
