"""Hybrid stochastic graph search over ordered DAGs.

Candidate pools are built from penalized-likelihood solution paths,
threshold paths on a ridge-regularized Cholesky factor, and cross-validated
variants of the same; shotgun stochastic search and greedy hill-climbing
expand the pool; the highest posterior score wins.

Scores decompose over vertices, so the Scorer memoizes per-(vertex, parent
set) contributions.  A single-edge move then costs one small factorization
instead of a full rescore, which is what makes the stochastic searches
affordable.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve

from .dag import Dag, all_possible_edges, modified_cholesky, support_dag
from .errors import DimensionMismatch, EmptyPool, InvalidShape, TooFewRows
from .linalg import cholesky_pd
from .wishart import DagWishartHyper, DataStats, vertex_log_norm_const

__all__ = [
    "Scorer",
    "CandidatePool",
    "threshold_path",
    "hill_climb",
    "shotgun_search",
    "cv_candidates",
    "select_best",
]


class Scorer:
    """Log posterior score of DAGs under a fixed (data, hyper, q).

    score(dag) = log pi(dag) + log z(U + nS, n + alpha) - log z(U, alpha),
    assembled from memoized per-vertex terms.  Safe for concurrent use: the
    memo is only ever extended with recomputable pure values.
    """

    def __init__(self, data: DataStats, hyper: DagWishartHyper, q: float | None = None):
        if data.p != hyper.p:
            raise DimensionMismatch("data and hyperparameter vertex counts differ")
        self.data = data
        self.hyper = hyper
        self.p = data.p
        self.n = data.n
        self.q = 1.0 / self.p if q is None else float(q)
        if not 0.0 < self.q < 1.0:
            raise ValueError(f"edge probability must lie in (0, 1), got {self.q}")
        self.U_post = hyper.U + data.n * data.S
        self._log_q = math.log(self.q)
        self._log_1mq = math.log1p(-self.q)
        self._terms: dict[tuple[int, tuple[int, ...]], float] = {}

    def _alpha_i(self, i: int, nu: int) -> float:
        if self.hyper.alpha_offset is not None:
            return nu + self.hyper.alpha_offset
        alpha_i = float(self.hyper.alpha[i - 1])
        if alpha_i - nu <= 2:
            raise InvalidShape(f"alpha_{i} - nu_{i} = {alpha_i - nu} must exceed 2")
        return alpha_i

    def vertex_term(self, i: int, parents: tuple[int, ...]) -> float:
        key = (i, parents)
        cached = self._terms.get(key)
        if cached is not None:
            return cached
        nu = len(parents)
        alpha_i = self._alpha_i(i, nu)
        prior = nu * self._log_q + (self.p - i - nu) * self._log_1mq if i < self.p else 0.0
        value = (
            prior
            + vertex_log_norm_const(self.U_post, i, parents, self.n + alpha_i)
            - vertex_log_norm_const(self.hyper.U, i, parents, alpha_i)
        )
        self._terms[key] = value
        return value

    def __call__(self, dag: Dag) -> float:
        if dag.p != self.p:
            raise DimensionMismatch(f"DAG on {dag.p} vertices, scorer on {self.p}")
        return sum(self.vertex_term(i, dag.parents_of(i)) for i in range(1, self.p + 1))


@dataclass
class PoolEntry:
    provenance: str
    score: float | None = None


class CandidatePool:
    """Deduplicated set of candidate DAGs with cached scores.

    The first provenance tag of a DAG sticks; scores are written once.
    An optional edge budget silently rejects DAGs with more edges.
    """

    def __init__(self, max_edges: int | None = None):
        self.entries: dict[Dag, PoolEntry] = {}
        self.max_edges = max_edges

    def add(self, dag: Dag, provenance: str) -> bool:
        if self.max_edges is not None and dag.num_edges > self.max_edges:
            return False
        if dag in self.entries:
            return False
        self.entries[dag] = PoolEntry(provenance=provenance)
        return True

    def add_all(self, dags, provenance: str) -> int:
        return sum(self.add(d, provenance) for d in dags)

    def dags(self) -> list[Dag]:
        return list(self.entries)

    def score_of(self, dag: Dag) -> float | None:
        entry = self.entries.get(dag)
        return None if entry is None else entry.score

    def set_score(self, dag: Dag, score: float) -> None:
        entry = self.entries[dag]
        if entry.score is None:
            entry.score = score

    def score_all(self, scorer: Scorer, threads: int = 1) -> None:
        todo = [d for d, e in self.entries.items() if e.score is None]
        if not todo:
            return
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                scores = list(pool.map(scorer, todo))
        else:
            scores = [scorer(d) for d in todo]
        for dag, score in zip(todo, scores):
            self.entries[dag].score = score

    def provenance_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for entry in self.entries.values():
            counts[entry.provenance] = counts.get(entry.provenance, 0) + 1
        return dict(sorted(counts.items()))

    def copy(self) -> "CandidatePool":
        out = CandidatePool(max_edges=self.max_edges)
        for dag, entry in self.entries.items():
            out.entries[dag] = PoolEntry(provenance=entry.provenance, score=entry.score)
        return out

    def top(self, k: int, scorer: Scorer, threads: int = 1) -> list[Dag]:
        """The k best-scoring DAGs, score ties broken as in select_best."""
        self.score_all(scorer, threads=threads)
        ranked = sorted(
            self.entries.items(), key=lambda kv: (-kv[1].score, kv[0].num_edges, kv[0].edges)
        )
        return [dag for dag, _ in ranked[:k]]

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, dag: Dag) -> bool:
        return dag in self.entries


def threshold_path(S: np.ndarray, ridge: float = 0.5, count: int = 300) -> list[Dag]:
    """DAGs from thresholding the Cholesky factor of (S + ridge I)^{-1}.

    Thresholds sit at the (k + 1/2)/count quantiles of the nonzero
    strictly-lower |L| values, so the path is dense to sparse and every
    graph along it is distinct after deduplication.
    """
    if ridge <= 0:
        raise ValueError("ridge must be positive")
    if count < 1:
        raise ValueError("count must be at least 1")
    S = np.asarray(S, dtype=float)
    p = S.shape[0]
    root = cholesky_pd(S + ridge * np.eye(p))
    precision = cho_solve((root, True), np.eye(p))
    precision = (precision + precision.T) / 2.0
    L = modified_cholesky(precision).L
    values = np.abs(L[np.tril_indices(p, k=-1)])
    values = values[values > 0]
    if values.size == 0:
        return [support_dag(L, 0.0)]
    levels = (np.arange(count) + 0.5) / count
    out: dict[Dag, None] = {}
    for tau in np.quantile(values, levels):
        out.setdefault(support_dag(L, float(tau)))
    return list(out)


def hill_climb(start: Dag, scorer: Scorer, rounds: int = 20, rng: np.random.Generator | None = None) -> Dag:
    """Greedy random single-edge climbing: per round, one add proposal then
    one delete proposal, each accepted only on a strict score increase."""
    if rng is None:
        rng = np.random.default_rng()
    current = start
    best = scorer(current)
    universe = all_possible_edges(start.p)
    for _ in range(rounds):
        absent = [e for e in universe if not current.has_edge(*e)]
        if absent:
            cand = current.add_edge(*absent[int(rng.integers(len(absent)))])
            score = scorer(cand)
            if score > best:
                current, best = cand, score
        present = list(current.edges)
        if present:
            cand = current.remove_edge(*present[int(rng.integers(len(present)))])
            score = scorer(cand)
            if score > best:
                current, best = cand, score
    return current


def shotgun_search(
    seeds: CandidatePool,
    scorer: Scorer,
    width: int = 50,
    iters: int = 10,
    rng: np.random.Generator | None = None,
    threads: int = 1,
) -> CandidatePool:
    """Shotgun stochastic search over single-edge moves.

    Each frontier DAG samples up to ``width`` of its single-edge neighbors
    (toggle one possible edge), scores them, and advances to the best one;
    every scored DAG accumulates into the returned pool.  The seeds
    themselves are retained, so the pool can never lose the best seed.
    """
    if len(seeds) == 0:
        raise EmptyPool("shotgun search needs a nonempty seed pool")
    if rng is None:
        rng = np.random.default_rng()
    pool = seeds.copy()
    pool.score_all(scorer, threads=threads)
    frontier = pool.dags()
    p = frontier[0].p
    universe = all_possible_edges(p)
    for _ in range(iters):
        advanced = []
        for dag in frontier:
            k = min(width, len(universe))
            picks = sorted(rng.choice(len(universe), size=k, replace=False).tolist())
            best_dag, best_score = None, -math.inf
            for slot in picks:
                i, j = universe[slot]
                neighbor = dag.remove_edge(i, j) if dag.has_edge(i, j) else dag.add_edge(i, j)
                cached = pool.score_of(neighbor)
                score = scorer(neighbor) if cached is None else cached
                if pool.add(neighbor, "sss"):
                    pool.set_score(neighbor, score)
                if score > best_score:
                    best_dag, best_score = neighbor, score
            advanced.append(best_dag if best_dag is not None else dag)
        frontier = advanced
    return pool


def cv_candidates(
    Y: np.ndarray, folds: int = 10, count: int = 300, ridge: float = 0.5
) -> CandidatePool:
    """Threshold paths from leave-one-block-out covariances.

    Rows are split into ``folds`` contiguous blocks; each block is left out
    once and the retained rows' covariance drives a threshold path.  The
    union is returned deduplicated.
    """
    Y = np.asarray(Y, dtype=float)
    n = Y.shape[0]
    if folds < 2:
        raise ValueError("need at least 2 folds to leave one out")
    if n < folds:
        raise TooFewRows(f"cannot split {n} rows into {folds} folds")
    pool = CandidatePool()
    blocks = np.array_split(np.arange(n), folds)
    for block in blocks:
        keep = np.setdiff1d(np.arange(n), block)
        Yk = Y[keep]
        S = (Yk.T @ Yk) / Yk.shape[0]
        pool.add_all(threshold_path((S + S.T) / 2.0, ridge=ridge, count=count), "cv")
    return pool


def select_best(pool: CandidatePool, scorer: Scorer, threads: int = 1) -> tuple[Dag, float]:
    """Highest-scoring pool entry; ties go to fewer edges, then to the
    lexicographically smallest edge list."""
    if len(pool) == 0:
        raise EmptyPool("cannot select from an empty candidate pool")
    pool.score_all(scorer, threads=threads)
    best = min(
        pool.entries.items(), key=lambda kv: (-kv[1].score, kv[0].num_edges, kv[0].edges)
    )
    return best[0], float(best[1].score)
