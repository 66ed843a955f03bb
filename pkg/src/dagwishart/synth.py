"""Synthetic ground-truth models and Gaussian data generation.

The generator builds a unit lower-triangular factor with a fixed fill value
on a sparse random support (every strictly-lower entry of column j is kept
independently with probability min(1, m / (p - j)), so each column has at
most m expected nonzeros), identity conditional variances, and samples
i.i.d. zero-mean Gaussian rows with the implied covariance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from .dag import CholeskyParam, Dag, compose, support_dag
from .errors import InvalidShape
from .linalg import cholesky_pd
from .wishart import DagWishartHyper, DataStats

__all__ = ["TrueModel", "gen_true_model", "sample_data", "default_hyper"]


@dataclass(frozen=True)
class TrueModel:
    """Ground truth: factor (D0, L0), its DAG, and the implied covariances."""

    L0: np.ndarray
    D0: np.ndarray
    dag0: Dag
    Sigma0: np.ndarray
    Omega0: np.ndarray
    fill: float

    def __post_init__(self) -> None:
        for name in ("L0", "D0", "Sigma0", "Omega0"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def p(self) -> int:
        return self.D0.shape[0]

    @property
    def param(self) -> CholeskyParam:
        return CholeskyParam(D=self.D0, L=self.L0)


def gen_true_model(
    p: int,
    fill: float = 0.5,
    max_expected_parents: float = 3.0,
    rng: np.random.Generator | None = None,
    D0: np.ndarray | None = None,
) -> TrueModel:
    """Random sparse true model on p >= 2 vertices.

    Column j keeps each of its p - j strictly-lower entries with probability
    min(1, max_expected_parents / (p - j)); kept entries equal ``fill``.
    D0 defaults to the identity.
    """
    if p < 2:
        raise ValueError("need at least 2 vertices")
    if rng is None:
        rng = np.random.default_rng()
    L0 = np.eye(p)
    for j in range(1, p):
        keep_prob = min(1.0, max_expected_parents / (p - j))
        mask = rng.random(p - j) < keep_prob
        L0[j:, j - 1][mask] = fill
    D0 = np.ones(p) if D0 is None else np.asarray(D0, dtype=float)
    dag0 = support_dag(L0, 0.0)
    omega0 = compose(CholeskyParam(D=D0, L=L0))
    root = cholesky_pd(omega0)
    sigma0 = cho_solve((root, True), np.eye(p))
    sigma0 = (sigma0 + sigma0.T) / 2.0
    return TrueModel(L0=L0, D0=D0, dag0=dag0, Sigma0=sigma0, Omega0=omega0, fill=fill)


def sample_data(
    model: TrueModel, n: int, rng: np.random.Generator
) -> tuple[np.ndarray, DataStats]:
    """n i.i.d. rows from N(0, Sigma0) plus their sample covariance.

    Rows are produced as y = (L0^T)^{-1} D0^{1/2} z with z standard normal,
    which has covariance (L0^T)^{-1} D0 L0^{-1} = Sigma0 exactly.
    """
    if n < 1:
        raise ValueError("need at least one observation")
    Z = rng.standard_normal((n, model.p))
    X = Z * np.sqrt(model.D0)[np.newaxis, :]
    Y = solve_triangular(model.L0.T, X.T, lower=False).T
    return Y, DataStats.from_samples(Y)


def default_hyper(dag: Dag, offset: float = 10.0) -> DagWishartHyper:
    """Identity scale matrix with shapes alpha_i = nu_i(dag) + offset.

    The offset rule is retained on the hyper object so scoring other DAGs
    keeps alpha_i - nu_i fixed at ``offset``.  Offsets of 2 or less would
    make the prior improper.
    """
    if offset <= 2:
        raise InvalidShape(f"shape offset must exceed 2, got {offset}")
    alpha = np.array([dag.nu(i) + offset for i in range(1, dag.p + 1)])
    return DagWishartHyper(U=np.eye(dag.p), alpha=alpha, alpha_offset=offset)
