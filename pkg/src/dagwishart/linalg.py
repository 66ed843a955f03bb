"""Dense symmetric positive-definite kernels.

Everything downstream (scores, samplers, solvers) funnels through the
few routines here: log-determinants via Cholesky pivots, principal
submatrix extraction, and Schur-complement conditional variances.
All functions are pure and never mutate their inputs.  Vertex indices
are 1-based throughout the public API.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import NotPositiveDefinite

__all__ = [
    "log_det_pd",
    "principal_submatrix",
    "schur_conditional",
    "cholesky_pd",
]


def _as_square(A: np.ndarray) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    return A


def cholesky_pd(A: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor of a positive definite matrix.

    Raises NotPositiveDefinite instead of numpy's LinAlgError so callers
    can distinguish data problems from programming errors.  No jitter is
    ever added: a failed factorization is a hard error.
    """
    A = _as_square(A)
    if A.shape[0] == 0:
        return A.copy()
    try:
        return np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"matrix of dim {A.shape[0]} is not positive definite") from exc


def log_det_pd(A: np.ndarray) -> float:
    """Natural log of det(A) for symmetric positive definite A.

    The empty 0x0 matrix has determinant 1 by the empty-product
    convention, so the result is 0.0.
    """
    A = _as_square(A)
    if A.shape[0] == 0:
        return 0.0
    root = cholesky_pd(A)
    return 2.0 * float(np.sum(np.log(np.diag(root))))


def principal_submatrix(A: np.ndarray, indices: Sequence[int]) -> np.ndarray:
    """Copy of A restricted to the given 1-based indices (contiguous storage)."""
    A = _as_square(A)
    idx = np.asarray(indices, dtype=int) - 1
    return A[np.ix_(idx, idx)].copy()


def schur_conditional(A: np.ndarray, i: int, M: Sequence[int]) -> float:
    """Conditional variance A_{i|M} = A_ii - A_{iM} A_{MM}^{-1} A_{Mi}.

    ``i`` and the members of ``M`` are 1-based; ``i`` must not belong to
    ``M``.  Returns A_ii when M is empty.  Raises NotPositiveDefinite if
    A_{MM} fails factorization or the residual variance is nonpositive.
    """
    A = _as_square(A)
    i0 = i - 1
    if not 0 <= i0 < A.shape[0]:
        raise ValueError(f"vertex {i} out of range for dim {A.shape[0]}")
    if len(M) == 0:
        return float(A[i0, i0])
    m0 = np.asarray(M, dtype=int) - 1
    if np.any(m0 == i0):
        raise ValueError(f"conditioning set contains the target vertex {i}")
    Amm = A[np.ix_(m0, m0)].copy()
    ami = A[m0, i0].copy()
    root = cholesky_pd(Amm)
    half = np.linalg.solve(root, ami)
    out = float(A[i0, i0] - half @ half)
    if out <= 0.0:
        raise NotPositiveDefinite(f"conditional variance of vertex {i} is nonpositive ({out!r})")
    return out


def logdet_gt_ge(A: np.ndarray, i: int, parents: Sequence[int]) -> tuple[float, float]:
    """Log-determinants of A restricted to ``parents`` and to ``{i} + parents``.

    One Cholesky factorization, ordered [parents..., i], yields both: the
    leading block factors A_{parents} and the last pivot squared is the
    conditional variance A_{i|parents}.
    """
    A = _as_square(A)
    if len(parents) == 0:
        aii = float(A[i - 1, i - 1])
        if aii <= 0.0:
            raise NotPositiveDefinite(f"diagonal entry {i} is nonpositive")
        return 0.0, float(np.log(aii))
    order = list(parents) + [i]
    block = principal_submatrix(A, order)
    root = cholesky_pd(block)
    logs = np.log(np.diag(root))
    logdet_gt = 2.0 * float(np.sum(logs[:-1]))
    logdet_ge = logdet_gt + 2.0 * float(logs[-1])
    return logdet_gt, logdet_ge
