"""Penalized-likelihood competitors and structure metrics.

Two convex solvers over lower-triangular factors of the precision matrix,
both columnwise-separable and solved by cyclic coordinate descent with
closed-form updates:

* lasso_dag_fit: minimize sum_j [ L_.j^T S L_.j ] + lambda * sum |L_ij|
  over unit-diagonal lower-triangular L (free entries L_ij, i > j).
* cscs_fit: minimize sum_j [ T_.j^T S T_.j - 2 log T_jj ] + lambda * sum |T_ij|
  over lower-triangular T with positive diagonal.

Both reconstruct the precision estimate as factor @ factor.T, whose sparsity
pattern below the diagonal is the estimated DAG.  The off-diagonal update is
soft-thresholding; the CSCS diagonal update is the positive root of
S_jj t^2 + a t - 1 = 0 with a the cross term, which is the stationarity
condition of the column objective in t = T_jj.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.stats import norm

from .dag import Dag, support_dag
from .errors import DimensionMismatch, NotConverged, NumericalError
from .linalg import log_det_pd

__all__ = [
    "Method",
    "GridSpec",
    "SolutionPath",
    "PathPoint",
    "Metrics",
    "lasso_dag_fit",
    "quantile_lambdas",
    "cscs_fit",
    "bic_score",
    "lambda_max",
    "path_fit_and_select",
    "structure_metrics",
]


class Method(str, Enum):
    LASSO_DAG = "lasso-dag"
    CSCS = "cscs"


def _soft(value: float, cut: float) -> float:
    if value > cut:
        return value - cut
    if value < -cut:
        return value + cut
    return 0.0


def _column_lambda(lam: float | np.ndarray, j: int, p: int) -> float:
    if np.ndim(lam) == 0:
        out = float(lam)
    else:
        arr = np.asarray(lam, dtype=float)
        if arr.shape != (p,):
            raise ValueError("per-variable lambda vector must have length p")
        out = float(arr[j - 1])
    if out <= 0:
        raise ValueError("penalty must be positive")
    return out


def _lasso_column(
    S22: np.ndarray, s: np.ndarray, lam: float, x0: np.ndarray, tol: float, max_sweeps: int
) -> np.ndarray:
    """Minimize x^T S22 x + 2 s^T x + lam * ||x||_1 by coordinate descent."""
    m = s.shape[0]
    x = x0.copy()
    diag = np.diag(S22).copy()
    if np.any(diag <= 0):
        raise NumericalError("covariance has a nonpositive diagonal entry")
    g = S22 @ x
    for _ in range(max_sweeps):
        for k in range(m):
            rho = s[k] + g[k] - diag[k] * x[k]
            new = _soft(-rho, lam / 2.0) / diag[k]
            delta = new - x[k]
            if delta != 0.0:
                g += S22[:, k] * delta
                x[k] = new
        grad = 2.0 * (s + g)
        residual = np.where(
            x != 0.0, np.abs(grad + lam * np.sign(x)), np.maximum(np.abs(grad) - lam, 0.0)
        )
        if residual.max(initial=0.0) <= tol:
            return x
    raise NotConverged(f"lasso column failed to reach residual {tol} in {max_sweeps} sweeps")


def lasso_dag_fit(
    S: np.ndarray,
    lam: float | np.ndarray,
    L0: np.ndarray | None = None,
    tol: float = 1e-6,
    max_sweeps: int = 10_000,
) -> np.ndarray:
    """Sparse unit-diagonal lower-triangular factor by columnwise lasso.

    ``lam`` may be a scalar or a length-p vector giving the penalty for each
    column's regression.  ``L0`` warm-starts the free entries.
    """
    S = np.asarray(S, dtype=float)
    p = S.shape[0]
    L = np.eye(p)
    for j in range(1, p):
        lam_j = _column_lambda(lam, j, p)
        S22 = S[j:, j:]
        s = S[j:, j - 1]
        x0 = np.zeros(p - j) if L0 is None else np.asarray(L0, dtype=float)[j:, j - 1].copy()
        L[j:, j - 1] = _lasso_column(S22, s, lam_j, x0, tol, max_sweeps)
    return L


def quantile_lambdas(p: int, n: int, alpha: float = 0.1) -> np.ndarray:
    """Per-variable penalties 2 n^{-1/2} z(1 - alpha / (2 p (i - 1))).

    z(.) is the standard normal quantile.  The formula is degenerate at
    i = 1 (no coefficients to test), so that entry is clamped to the i = 2
    value.  Entries increase with i.
    """
    if p < 2 or n < 1:
        raise ValueError("need p >= 2 and n >= 1")
    i = np.arange(2, p + 1, dtype=float)
    tail = alpha / (2.0 * p * (i - 1.0))
    lam = 2.0 / math.sqrt(n) * norm.isf(tail)
    return np.concatenate([[lam[0]], lam])


def _cscs_column(
    S22: np.ndarray, lam: float, t0: np.ndarray, tol: float, max_sweeps: int
) -> np.ndarray:
    """Minimize t^T S22 t - 2 log t_0 + lam * sum_{k>0} |t_k| with t_0 > 0."""
    m = S22.shape[0]
    diag = np.diag(S22).copy()
    if np.any(diag <= 0):
        raise NumericalError("covariance has a nonpositive diagonal entry")
    t = t0.copy()
    if t[0] <= 0:
        t[0] = 1.0 / math.sqrt(diag[0])
    g = S22 @ t
    prev_obj = float(t @ g) - 2.0 * math.log(t[0]) + lam * float(np.abs(t[1:]).sum())
    for _ in range(max_sweeps):
        # diagonal coordinate: positive root of diag[0] t^2 + a t - 1 = 0
        a = g[0] - diag[0] * t[0]
        new = (-a + math.sqrt(a * a + 4.0 * diag[0])) / (2.0 * diag[0])
        delta = new - t[0]
        if delta != 0.0:
            g += S22[:, 0] * delta
            t[0] = new
        for k in range(1, m):
            rho = g[k] - diag[k] * t[k]
            new = _soft(-rho, lam / 2.0) / diag[k]
            delta = new - t[k]
            if delta != 0.0:
                g += S22[:, k] * delta
                t[k] = new
        obj = float(t @ g) - 2.0 * math.log(t[0]) + lam * float(np.abs(t[1:]).sum())
        if obj > prev_obj + 1e-9 * (1.0 + abs(prev_obj)):
            raise NumericalError("coordinate descent objective increased")
        prev_obj = obj
        grad = 2.0 * g
        res_diag = abs(grad[0] - 2.0 / t[0])
        off = t[1:]
        res_off = np.where(
            off != 0.0,
            np.abs(grad[1:] + lam * np.sign(off)),
            np.maximum(np.abs(grad[1:]) - lam, 0.0),
        )
        if max(res_diag, res_off.max(initial=0.0)) <= tol:
            return t
    raise NotConverged(f"cscs column failed to reach residual {tol} in {max_sweeps} sweeps")


def cscs_fit(
    S: np.ndarray,
    lam: float,
    T0: np.ndarray | None = None,
    tol: float = 1e-6,
    max_sweeps: int = 10_000,
) -> np.ndarray:
    """Sparse lower-triangular factor with positive diagonal (precision = T T^T)."""
    S = np.asarray(S, dtype=float)
    p = S.shape[0]
    if lam <= 0:
        raise ValueError("penalty must be positive")
    T = np.zeros((p, p))
    for j in range(1, p + 1):
        S22 = S[j - 1 :, j - 1 :]
        t0 = (
            np.zeros(p - j + 1)
            if T0 is None
            else np.asarray(T0, dtype=float)[j - 1 :, j - 1].copy()
        )
        T[j - 1 :, j - 1] = _cscs_column(S22, lam, t0, tol, max_sweeps)
    return T


def bic_score(omega_hat: np.ndarray, S: np.ndarray, n: int, E: int) -> float:
    """n tr(S omega_hat) - n log det(omega_hat) + log(n) * E."""
    omega_hat = np.asarray(omega_hat, dtype=float)
    S = np.asarray(S, dtype=float)
    if omega_hat.shape != S.shape:
        raise DimensionMismatch("estimator and covariance dimensions differ")
    return float(n * np.sum(S * omega_hat) - n * log_det_pd(omega_hat) + math.log(n) * E)


def lambda_max(method: Method, S: np.ndarray) -> float:
    """Smallest penalty at which the fitted graph has no edges."""
    S = np.asarray(S, dtype=float)
    p = S.shape[0]
    best = 0.0
    for j in range(1, p):
        col = np.abs(S[j:, j - 1])
        if method is Method.LASSO_DAG:
            best = max(best, 2.0 * float(col.max(initial=0.0)))
        else:
            best = max(best, 2.0 * float(col.max(initial=0.0)) / math.sqrt(S[j - 1, j - 1]))
    return best if best > 0 else 1.0


@dataclass(frozen=True)
class GridSpec:
    """Penalty grid: explicit values, or geometric with optional edge bracket.

    With ``target_edges`` set, the endpoints are located by halving from
    lambda_max until the fitted edge counts bracket [target/3, 3*target];
    otherwise the grid spans [lambda_max * lo_ratio, lambda_max].
    """

    lambdas: tuple[float, ...] | None = None
    num: int = 50
    lo_ratio: float = 0.01
    target_edges: int | None = None


@dataclass(frozen=True)
class PathPoint:
    lam: float
    estimate: np.ndarray
    dag: Dag
    bic: float


@dataclass(frozen=True)
class SolutionPath:
    method: Method
    points: tuple[PathPoint, ...]

    @property
    def dags(self) -> list[Dag]:
        return [pt.dag for pt in self.points]


def _fit_factor(method: Method, S: np.ndarray, lam: float, warm: np.ndarray | None) -> np.ndarray:
    if method is Method.LASSO_DAG:
        return lasso_dag_fit(S, lam, L0=warm)
    return cscs_fit(S, lam, T0=warm)


def _edges_of(factor: np.ndarray) -> int:
    p = factor.shape[0]
    return int(np.count_nonzero(factor[np.tril_indices(p, k=-1)]))


def _bracket_grid(method: Method, S: np.ndarray, target: int, num: int) -> np.ndarray:
    """Geometric grid whose fitted edge counts aim to span [target/3, 3*target].

    Penalties are halved from lambda_max until the dense endpoint is reached;
    halving stops early when the edge count plateaus (the solution path has
    saturated, which happens for rank-deficient covariances) or the solver
    leaves its stable range, so the returned grid only covers penalties at
    which the fits converge.
    """
    lam_top = lambda_max(method, S)
    hi_edges = max(1, round(target / 3.0))
    lo_edges = 3 * target
    lam_hi = None
    lam = lam_top
    lam_lo = None
    warm = None
    prev_edges = -1
    stalls = 0
    while lam > lam_top * 1e-6:
        lam *= 0.5
        try:
            warm = _fit_factor(method, S, lam, warm)
        except NotConverged:
            break
        edges = _edges_of(warm)
        lam_lo = lam
        if lam_hi is None and edges >= hi_edges:
            lam_hi = lam * 2.0
        if edges >= lo_edges:
            break
        stalls = stalls + 1 if edges <= prev_edges * 1.02 else 0
        if stalls >= 2 and lam_hi is not None:
            break
        prev_edges = edges
    if lam_lo is None:
        lam_lo = lam_top * 0.5
    if lam_hi is None:
        lam_hi = lam_top
    return np.geomspace(lam_hi, lam_lo, num)


def path_fit_and_select(
    method: Method | str, S: np.ndarray, n: int, grid_spec: GridSpec
) -> tuple[SolutionPath, Dag]:
    """Fit a solution path (warm-started along decreasing penalties) and
    return it with the graph minimizing the BIC measure."""
    method = Method(method)
    S = np.asarray(S, dtype=float)
    if grid_spec.lambdas is not None:
        lambdas = np.asarray(sorted(grid_spec.lambdas, reverse=True), dtype=float)
    elif grid_spec.target_edges is not None:
        lambdas = _bracket_grid(method, S, grid_spec.target_edges, grid_spec.num)
    else:
        top = lambda_max(method, S)
        lambdas = np.geomspace(top, top * grid_spec.lo_ratio, grid_spec.num)
    points = []
    warm = None
    for lam in lambdas:
        factor = _fit_factor(method, S, float(lam), warm)
        warm = factor
        omega_hat = factor @ factor.T
        dag = support_dag(factor, 0.0)
        points.append(
            PathPoint(
                lam=float(lam),
                estimate=factor,
                dag=dag,
                bic=bic_score(omega_hat, S, n, _edges_of(factor)),
            )
        )
    path = SolutionPath(method=method, points=tuple(points))
    best = min(points, key=lambda pt: pt.bic)
    return path, best.dag


@dataclass(frozen=True)
class Metrics:
    """Edge-recovery counts and rates over the C(p,2) possible edges.

    Undefined ratios (0/0) are reported as nan.
    """

    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def ppv(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp > 0 else math.nan

    @property
    def tpr(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn > 0 else math.nan

    @property
    def fpr(self) -> float:
        return self.fp / (self.fp + self.tn) if self.fp + self.tn > 0 else math.nan


def structure_metrics(est: Dag, truth: Dag) -> Metrics:
    """Confusion counts of the estimated edge set against the true one."""
    if est.p != truth.p:
        raise DimensionMismatch("estimated and true DAGs have different vertex counts")
    est_edges = set(est.edges)
    true_edges = set(truth.edges)
    total = est.p * (est.p - 1) // 2
    tp = len(est_edges & true_edges)
    fp = len(est_edges - true_edges)
    fn = len(true_edges - est_edges)
    return Metrics(tp=tp, fp=fp, fn=fn, tn=total - tp - fp - fn)
