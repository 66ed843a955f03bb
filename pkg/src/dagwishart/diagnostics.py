"""Runtime diagnostics for the regularity assumptions behind consistency.

The asymptotic theory needs five conditions: bounded precision-matrix
eigenvalues, a dimension growth rate, an edge-probability decay rate, a
signal-size lower bound, and hyperparameter bounds.  These are statements
about sequences, so at a single (n, p) the rate conditions are reported as
finite-sample snapshots (the computed quantity, with pass meaning the
quantity is below 1) while the bound conditions are checked exactly.
Diagnostics never raise: failures are captured in the report.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dag import Dag, modified_cholesky
from .wishart import DagWishartHyper

__all__ = ["AsymptoticConfig", "AssumptionResult", "AssumptionReport", "assumption_diagnostics"]

_EQ_TOL = 1e-9


@dataclass(frozen=True)
class AsymptoticConfig:
    """Constants of the regularity assumptions.

    ``epsilon0``, ``d``, ``s`` and ``eta`` may be left as None to be derived
    from the true model (largest feasible eigenvalue bound, max parent count,
    smallest in-support coefficient, and the prescribed edge-probability
    rate, respectively).
    """

    k: float = 1.0
    epsilon0: float | None = None
    d: int | None = None
    s: float | None = None
    eta: float | None = None
    q: float = 0.5
    c: float = 12.0
    delta1: float = 1.0
    delta2: float = 1.0

    def __post_init__(self) -> None:
        if self.k <= 0:
            raise ValueError("k must be positive")
        if self.epsilon0 is not None and not 0 < self.epsilon0 <= 1:
            raise ValueError("epsilon0 must lie in (0, 1]")
        if not 0 < self.q < 1:
            raise ValueError("q must lie in (0, 1)")
        if self.s is not None and self.s <= 0:
            raise ValueError("s must be positive")


@dataclass
class AssumptionResult:
    passed: bool
    values: dict[str, float] = field(default_factory=dict)
    note: str = ""


@dataclass
class AssumptionReport:
    results: dict[int, AssumptionResult]

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.results.values())

    def to_json_dict(self) -> dict:
        return {
            str(k): {"passed": r.passed, "values": r.values, "note": r.note}
            for k, r in sorted(self.results.items())
        }


def _guarded(fn) -> AssumptionResult:
    try:
        return fn()
    except Exception as exc:  # diagnostics never abort
        return AssumptionResult(passed=False, note=f"{type(exc).__name__}: {exc}")


def assumption_diagnostics(
    omega0: np.ndarray,
    dag0: Dag,
    hyper: DagWishartHyper,
    cfg: AsymptoticConfig,
    n: int,
    p: int,
) -> AssumptionReport:
    """Evaluate the five regularity assumptions at one (n, p) snapshot."""
    omega0 = np.asarray(omega0, dtype=float)
    eigs = np.linalg.eigvalsh((omega0 + omega0.T) / 2.0)
    eig_lo, eig_hi = float(eigs[0]), float(eigs[-1])
    if cfg.epsilon0 is not None:
        eps0 = cfg.epsilon0
    else:
        eps0 = min(1.0, eig_lo, 1.0 / eig_hi) if eig_lo > 0 else float("nan")
    d = cfg.d if cfg.d is not None else max(dag0.nu(i) for i in range(1, p + 1))
    if cfg.s is not None:
        s = cfg.s
    else:
        L0 = modified_cholesky(omega0).L
        coeffs = [abs(L0[i - 1, j - 1]) for j in range(1, p + 1) for i in dag0.parents_of(j)]
        s = min(coeffs) if coeffs else math.inf
    log_ratio = math.log(p) / n
    eta = cfg.eta if cfg.eta is not None else d * log_ratio ** (0.5 / (1.0 + cfg.k / 2.0))

    def a1() -> AssumptionResult:
        rate = log_ratio ** (0.5 - 1.0 / (2.0 + cfg.k)) / eps0**4
        ok = (
            math.isfinite(eps0)
            and 0 < eps0 <= 1
            and eps0 <= eig_lo + _EQ_TOL
            and eig_hi <= 1.0 / eps0 + _EQ_TOL
        )
        return AssumptionResult(ok, {"eig_min": eig_lo, "eig_max": eig_hi, "epsilon0": eps0, "rate": rate})

    def a2() -> AssumptionResult:
        rate_a = d ** (2.0 + cfg.k) * math.sqrt(log_ratio)
        rate_b = math.sqrt(log_ratio) ** (cfg.k / (2.0 * (cfg.k + 2.0))) * math.log(n)
        return AssumptionResult(rate_a < 1.0 and rate_b < 1.0, {"d": float(d), "rate_dim": rate_a, "rate_logn": rate_b})

    def a3() -> AssumptionResult:
        q_target = math.exp(-eta * n)
        return AssumptionResult(cfg.q <= q_target * (1.0 + _EQ_TOL), {"eta": eta, "q": cfg.q, "q_target": q_target})

    def a4() -> AssumptionResult:
        ratio = eta * d / (eps0 * s * s) if math.isfinite(s) else 0.0
        return AssumptionResult(ratio < 1.0, {"signal_ratio": ratio, "s": s})

    def a5() -> AssumptionResult:
        alpha = hyper.alpha_for(dag0)
        gaps = np.array([alpha[i - 1] - dag0.nu(i) for i in range(1, p + 1)])
        eig_u = np.linalg.eigvalsh((hyper.U + hyper.U.T) / 2.0)
        ok = (
            bool(np.all(gaps > 2.0)) and bool(np.all(gaps < cfg.c))
            and cfg.delta1 <= float(eig_u[0]) + _EQ_TOL
            and float(eig_u[-1]) <= cfg.delta2 + _EQ_TOL
        )
        return AssumptionResult(
            ok,
            {
                "gap_min": float(gaps.min()),
                "gap_max": float(gaps.max()),
                "c": cfg.c,
                "eig_u_min": float(eig_u[0]),
                "eig_u_max": float(eig_u[-1]),
                "delta1": cfg.delta1,
                "delta2": cfg.delta2,
            },
        )

    return AssumptionReport({i: _guarded(fn) for i, fn in enumerate([a1, a2, a3, a4, a5], start=1)})
