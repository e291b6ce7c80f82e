"""Certificates and statistical verification of the solver's guarantees.

Two layers:

* deterministic: ``certify`` recomputes feasibility residuals and the
  duality ratio exactly; ``audit_counters`` checks the hard increment
  budget and the empty-iteration rate.
* statistical: ``drift_test`` and ``tracking_test`` Monte Carlo the two
  conditional-expectation properties that make the algorithm work, by
  cloning a frozen mid-run state many times and running one step from it.
  Pass thresholds are 3-5 sigma with explicit tolerances in the report,
  keeping the false-failure rate of the whole suite below 1e-3.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .model import SparseNonNegMatrix, exact_products
from .solver import SolutionPair, SolverRun, _product

__all__ = [
    "Certificate",
    "StatReport",
    "audit_counters",
    "certify",
    "drift_test",
    "tracking_test",
]

# guarantee slope per variant: ratio >= 1 - k*eps
_K = {"slow": 2, "simple": 6, "fast": 7}

_FEAS_TOL = 1e-9
_MIN_TRIALS = 1000


@dataclass
class Certificate:
    """Deterministic verdict on a claimed primal-dual pair."""

    max_violation: float  # max_i (M_i x* - 1)
    min_slack: float  # min_j (M_j^T xh* - 1)
    ratio: float  # |x*| / |xh*|
    target: float  # 1 - k*eps
    verdict: bool
    eps: float
    variant: str
    oracle_gap: float | None = None  # |x*| / OPT when an oracle result was supplied

    def to_dict(self) -> dict:
        return {
            "max_violation": self.max_violation,
            "min_slack": self.min_slack,
            "ratio": self.ratio,
            "target": self.target,
            "verdict": "pass" if self.verdict else "fail",
            "eps": self.eps,
            "variant": self.variant,
            "oracle_gap": self.oracle_gap,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


@dataclass
class StatProperty:
    name: str
    sample_size: int
    statistic: float
    threshold: float
    passed: bool
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "sample_size": self.sample_size,
            "statistic": self.statistic,
            "threshold": self.threshold,
            "verdict": "pass" if self.passed else "fail",
            "detail": self.detail,
        }


@dataclass
class StatReport:
    """A bundle of named statistical checks, each with its stated tolerance."""

    properties: list[StatProperty] = field(default_factory=list)

    def add(self, prop: StatProperty) -> None:
        self.properties.append(prop)

    def extend(self, other: "StatReport") -> None:
        self.properties.extend(other.properties)

    @property
    def all_passed(self) -> bool:
        return all(p.passed for p in self.properties)

    def to_dict(self) -> dict:
        return {"properties": [p.to_dict() for p in self.properties],
                "verdict": "pass" if self.all_passed else "fail"}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def certify(M, pair: SolutionPair, eps: float | None = None,
            variant: str | None = None, oracle=None) -> Certificate:
    """Recompute residuals and the duality ratio for a claimed pair.

    ``M`` may be a dense array or a SparseNonNegMatrix; residuals are
    computed in one exact pass over the nonzeros.  Pass verdict requires
    max violation <= 1e-9, min slack >= -1e-9 and ratio >= 1 - k*eps with
    k = 2 (slow), 6 (simple) or 7 (fast).
    """
    eps = pair.eps if eps is None else eps
    variant = pair.variant if variant is None else variant
    if variant not in _K:
        raise ValueError(f"unknown variant {variant!r}")
    if isinstance(M, SparseNonNegMatrix):
        Mx, MTxh = exact_products(M, pair.x_star, pair.xh_star)
    else:
        A = np.asarray(M, dtype=float)
        if A.shape != (len(pair.xh_star), len(pair.x_star)):
            raise ValueError("matrix and pair dimensions are inconsistent")
        Mx = A @ pair.x_star
        MTxh = A.T @ pair.xh_star
    max_violation = float(Mx.max() - 1.0)
    min_slack = float(MTxh.min() - 1.0)
    psum = float(pair.x_star.sum())
    dsum = float(pair.xh_star.sum())
    ratio = psum / dsum if dsum > 0 else math.nan
    target = 1.0 - _K[variant] * eps
    verdict = (max_violation <= _FEAS_TOL and min_slack >= -_FEAS_TOL
               and ratio >= target)
    gap = None
    if oracle is not None:
        gap = psum / oracle.value if oracle.value > 0 else math.nan
    return Certificate(max_violation, min_slack, ratio, target, bool(verdict),
                       eps, variant, gap)


def audit_counters(counters, r: int, c: int, N: int) -> StatReport:
    """Check the deterministic increment budget and the empty-iteration rate.

    The budget Sigma_t |I_t| + |J_t| <= (r + c) N is a hard inequality: a
    violation always means an implementation bug, never bad luck.  The
    empty fraction is compared against 3/4 plus five binomial standard
    errors.
    """
    rep = StatReport()
    budget = (r + c) * N
    rep.add(StatProperty(
        name="increment_budget",
        sample_size=counters.outer_iterations,
        statistic=float(counters.increment_work),
        threshold=float(budget),
        passed=counters.increment_work <= budget,
        detail="hard bound; any violation is an implementation bug",
    ))
    n = counters.outer_iterations
    if n > 0:
        frac = counters.empty_iterations / n
        sigma = math.sqrt(0.75 * 0.25 / n)
        thr = 0.75 + 5.0 * sigma
        rep.add(StatProperty(
            name="empty_rate",
            sample_size=n,
            statistic=frac,
            threshold=thr,
            passed=frac <= thr,
            detail="empty-iteration fraction vs 3/4 + 5 sigma",
        ))
    return rep


def _require_steppable(state: SolverRun, trials: int) -> None:
    if trials < _MIN_TRIALS:
        raise ValueError(f"trials must be >= {_MIN_TRIALS} (underpowered)")
    if state.done or state.n_active == 0:
        raise ValueError("frozen state has already terminated (no active columns)")


def drift_test(state: SolverRun, trials: int,
               seed: int | None = 0) -> StatReport:
    """Monte Carlo check that one step does not increase |p||ph| in expectation.

    Clones the frozen state ``trials`` times with independent RNG streams,
    steps each clone once, and compares the mean relative change of the
    potential against zero.  The potential ratio is formed in scale-aware
    arithmetic so astronomically scaled weights cannot overflow.  Pass iff
    mean(R - 1) <= +3 stderr.
    """
    _require_steppable(state, trials)
    base_m, base_e = state.potential()
    rngs = np.random.default_rng(seed).spawn(trials)
    rel = np.empty(trials)
    for t in range(trials):
        clone = state.clone(rng=rngs[t])
        clone.step()
        m, e = clone.potential()
        rel[t] = math.ldexp(m / base_m, e - base_e) - 1.0
    mean = float(rel.mean())
    stderr = float(rel.std(ddof=1) / math.sqrt(trials))
    thr = 3.0 * stderr
    rep = StatReport()
    rep.add(StatProperty(
        name="lyapunov_drift",
        sample_size=trials,
        statistic=mean,
        threshold=thr,
        passed=mean <= thr,
        detail="mean relative potential change vs +3 stderr",
    ))
    return rep


def tracking_test(state: SolverRun, trials: int,
                  seed: int | None = 0) -> StatReport:
    """Monte Carlo check that y tracks Mx: E[dy_i] = E[(M dx)_i] per coordinate.

    Both quantities are measured on the same step, so the comparison is a
    paired difference with much lower variance than comparing the two
    means independently.  Each coordinate must land within
    max(4, Sidak-corrected) standard errors of zero.
    """
    _require_steppable(state, trials)
    r = state.r
    diff = np.zeros((trials, r))
    rngs = np.random.default_rng(seed).spawn(trials)
    for t in range(trials):
        clone = state.clone(rng=rngs[t])
        y0 = clone.y.copy()
        x0 = clone.x.copy()
        trace = clone.step()
        dy = (clone.y - y0).astype(float)
        dx = clone.x - x0
        # (M dx)_i with dx supported on the single sampled column; read the
        # column from the frozen matrix, since the step may have retired it
        mdx = np.zeros(r)
        for i, v in state.M.col_entries(trace.j):
            mdx[i] = v * dx[trace.j]
        diff[t] = dy - mdx
    mean = diff.mean(axis=0)
    stderr = diff.std(axis=0, ddof=1) / math.sqrt(trials)
    # a coordinate that never moves has zero variance and zero mean
    stderr[stderr == 0] = 1e-300
    devs = np.abs(mean) / stderr
    # Sidak correction: per-coordinate level keeping family error at ~1e-3
    from scipy.stats import norm

    alpha = 1.0 - (1.0 - 1e-3) ** (1.0 / r)
    k = max(4.0, float(norm.isf(alpha / 2.0)))
    worst = float(devs.max())
    rep = StatReport()
    rep.add(StatProperty(
        name="tracking_unbiased",
        sample_size=trials,
        statistic=worst,
        threshold=k,
        passed=worst <= k,
        detail=f"max per-coordinate |mean|/stderr over {r} coordinates, "
               f"paired dy - (M dx)",
    ))
    return rep
