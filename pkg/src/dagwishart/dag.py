"""DAG and Cholesky-parameter data model.

A DAG on vertices 1..p with the parent ordering: every edge (i, j) points
from the larger vertex i to the smaller vertex j, so acyclicity is
structural and the graph is fully described by the parent sets
pa_j subset of {j+1, ..., p}.  The sparsity pattern of a DAG is exactly
the sparsity pattern of the unit lower-triangular factor L in the
modified Cholesky decomposition Omega = L D^{-1} L^T.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator

import numpy as np

from .errors import DimensionMismatch, InfeasibleEdgeCount, TooLarge
from .linalg import cholesky_pd

__all__ = [
    "Dag",
    "CholeskyParam",
    "PerturbCase",
    "modified_cholesky",
    "compose",
    "support_dag",
    "perturb",
    "enumerate_all_dags",
]


@dataclass(frozen=True)
class Dag:
    """Immutable DAG under the parent ordering.

    ``parents[j - 1]`` is the sorted tuple of parents of vertex j, each a
    vertex label strictly larger than j.  Equality and hashing use the
    canonical edge set, so Dag works as a dict key for candidate pools.
    """

    p: int
    parents: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if self.p < 1:
            raise ValueError("vertex count must be at least 1")
        if len(self.parents) != self.p:
            raise ValueError("parents must have one entry per vertex")
        for j, pa in enumerate(self.parents, start=1):
            if tuple(sorted(set(pa))) != tuple(pa):
                raise ValueError(f"parent set of vertex {j} must be sorted and duplicate-free")
            if any(not j < v <= self.p for v in pa):
                raise ValueError(f"parents of vertex {j} must lie in {{{j + 1},...,{self.p}}}")

    @staticmethod
    def from_edges(p: int, edges: Iterable[tuple[int, int]]) -> "Dag":
        """Build from (i, j) pairs with i > j meaning i is a parent of j."""
        buckets: list[set[int]] = [set() for _ in range(p)]
        for i, j in edges:
            if not 1 <= j < i <= p:
                raise ValueError(f"edge ({i},{j}) violates the parent ordering on p={p}")
            buckets[j - 1].add(i)
        return Dag(p, tuple(tuple(sorted(b)) for b in buckets))

    @staticmethod
    def empty(p: int) -> "Dag":
        return Dag(p, tuple(() for _ in range(p)))

    @staticmethod
    def complete(p: int) -> "Dag":
        return Dag(p, tuple(tuple(range(j + 1, p + 1)) for j in range(1, p + 1)))

    def parents_of(self, j: int) -> tuple[int, ...]:
        return self.parents[j - 1]

    def nu(self, j: int) -> int:
        """Number of parents of vertex j."""
        return len(self.parents[j - 1])

    @property
    def edges(self) -> tuple[tuple[int, int], ...]:
        """Sorted canonical edge list, each edge (i, j) with i > j."""
        out = [(i, j) for j in range(1, self.p + 1) for i in self.parents_of(j)]
        return tuple(sorted(out))

    @property
    def num_edges(self) -> int:
        return sum(len(pa) for pa in self.parents)

    def has_edge(self, i: int, j: int) -> bool:
        return i in self.parents[j - 1]

    def add_edge(self, i: int, j: int) -> "Dag":
        if self.has_edge(i, j):
            raise ValueError(f"edge ({i},{j}) already present")
        new = list(self.parents)
        new[j - 1] = tuple(sorted(new[j - 1] + (i,)))
        return Dag(self.p, tuple(new))

    def remove_edge(self, i: int, j: int) -> "Dag":
        if not self.has_edge(i, j):
            raise ValueError(f"edge ({i},{j}) not present")
        new = list(self.parents)
        new[j - 1] = tuple(v for v in new[j - 1] if v != i)
        return Dag(self.p, tuple(new))

    def is_subgraph_of(self, other: "Dag") -> bool:
        if self.p != other.p:
            raise DimensionMismatch("cannot compare DAGs on different vertex counts")
        return all(set(a) <= set(b) for a, b in zip(self.parents, other.parents))

    def to_json_dict(self) -> dict:
        return {"p": self.p, "edges": [list(e) for e in self.edges]}

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    @staticmethod
    def from_json_dict(obj: dict) -> "Dag":
        return Dag.from_edges(int(obj["p"]), [(int(i), int(j)) for i, j in obj["edges"]])

    @staticmethod
    def from_json(text: str) -> "Dag":
        return Dag.from_json_dict(json.loads(text))


def all_possible_edges(p: int) -> list[tuple[int, int]]:
    """Every edge (i, j) with 1 <= j < i <= p, in canonical order."""
    return [(i, j) for i in range(2, p + 1) for j in range(1, i)]


@dataclass(frozen=True)
class CholeskyParam:
    """Cholesky parameter (D, L): positive diagonal D, unit lower-triangular L.

    Arrays are frozen read-only on construction so instances can be shared
    across threads.
    """

    D: np.ndarray
    L: np.ndarray

    def __post_init__(self) -> None:
        D = np.array(self.D, dtype=float)
        L = np.array(self.L, dtype=float)
        p = D.shape[0]
        if D.ndim != 1 or L.shape != (p, p):
            raise ValueError("D must be length-p and L a p x p matrix")
        if np.any(D <= 0):
            raise ValueError("conditional variances D must be strictly positive")
        if not np.allclose(np.diag(L), 1.0):
            raise ValueError("L must have unit diagonal")
        if p > 1 and np.any(np.triu(L, 1) != 0.0):
            raise ValueError("L must be lower triangular")
        D.setflags(write=False)
        L.setflags(write=False)
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "L", L)

    @property
    def p(self) -> int:
        return self.D.shape[0]


def modified_cholesky(omega: np.ndarray) -> CholeskyParam:
    """Unique (D, L) with Omega = L D^{-1} L^T.

    Obtained from the ordinary Cholesky Omega = C C^T by L = C diag(C)^{-1}
    and D = diag(C)^{-2}.
    """
    omega = np.asarray(omega, dtype=float)
    C = cholesky_pd(omega)
    d = np.diag(C).copy()
    L = C / d[np.newaxis, :]
    return CholeskyParam(D=1.0 / d**2, L=L)


def compose(param: CholeskyParam) -> np.ndarray:
    """Omega = L D^{-1} L^T, positive definite by construction."""
    return (param.L / param.D[np.newaxis, :]) @ param.L.T


def support_dag(L: np.ndarray, tau: float = 0.0) -> Dag:
    """DAG whose edge (i, j) is present iff |L_ij| > tau for i > j."""
    L = np.asarray(L, dtype=float)
    p = L.shape[0]
    if tau < 0:
        raise ValueError("threshold must be nonnegative")
    parents = []
    for j in range(1, p + 1):
        col = np.abs(L[j:, j - 1])
        pa = tuple(int(j + 1 + k) for k in np.flatnonzero(col > tau))
        parents.append(pa)
    return Dag(p, tuple(parents))


class PerturbCase(str, Enum):
    SUB_HALF = "sub-half"
    SUPER_DOUBLE = "super-double"
    RAND_HALF = "rand-half"
    RAND_DOUBLE = "rand-double"


def _sample_edge_set(edges: list[tuple[int, int]], count: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    chosen = rng.choice(len(edges), size=count, replace=False)
    return [edges[k] for k in sorted(chosen)]


def perturb(d0: Dag, case: PerturbCase | str, rng: np.random.Generator) -> Dag:
    """Build a comparison DAG from d0 by one of four constructions.

    sub-half: uniform subgraph keeping floor(E/2) of d0's edges.
    super-double: uniform supergraph with 2E edges.
    rand-half / rand-double: uniform DAG with floor(E/2) / 2E edges and no
    containment constraint relative to d0.
    """
    case = PerturbCase(case)
    e0 = list(d0.edges)
    n_edges = len(e0)
    total = d0.p * (d0.p - 1) // 2
    if n_edges < 2:
        raise InfeasibleEdgeCount("perturbation needs a base DAG with at least 2 edges")
    if case is PerturbCase.SUB_HALF:
        return Dag.from_edges(d0.p, _sample_edge_set(e0, n_edges // 2, rng))
    if case is PerturbCase.SUPER_DOUBLE:
        if 2 * n_edges > total:
            raise InfeasibleEdgeCount(f"cannot place {2 * n_edges} edges among {total} slots")
        absent = [e for e in all_possible_edges(d0.p) if not d0.has_edge(*e)]
        extra = _sample_edge_set(absent, n_edges, rng)
        return Dag.from_edges(d0.p, e0 + extra)
    target = n_edges // 2 if case is PerturbCase.RAND_HALF else 2 * n_edges
    if target > total:
        raise InfeasibleEdgeCount(f"cannot place {target} edges among {total} slots")
    return Dag.from_edges(d0.p, _sample_edge_set(all_possible_edges(d0.p), target, rng))


def enumerate_all_dags(p: int) -> Iterator[Dag]:
    """Yield every DAG consistent with the parent ordering, 2^C(p,2) total.

    Restricted to p <= 6 (32768 graphs); larger p raises TooLarge.
    """
    if p > 6:
        raise TooLarge(f"exhaustive enumeration limited to p <= 6, got {p}")
    slots = all_possible_edges(p)
    for mask in itertools.product((False, True), repeat=len(slots)):
        yield Dag.from_edges(p, [e for e, keep in zip(slots, mask) if keep])
