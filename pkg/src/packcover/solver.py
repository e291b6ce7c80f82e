"""Coupled randomized-increment solver for normalized packing/covering LPs.

Three modes share one interface:

* ``slow``   -- the explanatory coupled algorithm: unit increments, exact
  Mx and M^T xh maintained every iteration.  (1-2eps) guarantee.
* ``simple`` -- exact-sorted row/column lists, exact uhat refresh.
  (1-6eps) guarantee.
* ``fast``   -- range truncation, pseudo-sorted lists, traversal stops at
  the z/2 threshold, uhat refreshed to twice the remaining head.
  (1-7eps) guarantee.

Each outer iteration samples a coupled pair (i', j') with probability
proportional to p_i * ph_j * (uhat_i + u_j), adds the same increment
delta = 1/(uhat_i' + u_j') to x_j' and xh_i', then uses one shared uniform
threshold z to decide which randomized estimates y_i ~ M_i x and
yh_j ~ M_j^T xh advance.  Columns whose yh exceeds the budget N retire and
their entries are deleted from the sparse structure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import InvalidInstanceError, SparseNonNegMatrix, exact_products, truncate
from .sampler import SamplableVector

__all__ = [
    "OpCounters",
    "IterationTrace",
    "SolutionPair",
    "SolverRun",
    "iteration_budget",
    "random_pair",
    "solve",
    "solve_instance",
    "solve_slow",
]

EPS_MAX = 1.0 / 7.0  # larger eps makes the 1-7eps guarantee vacuous


def iteration_budget(r: int, c: int, eps: float) -> int:
    """The increment budget N = ceil(2 ln(rc) / eps^2), floored at 1.

    The floor covers the degenerate 1x1 instance, where ln(rc) = 0 would
    otherwise stop the algorithm before any iteration.
    """
    return max(1, math.ceil(2.0 * math.log(r * c) / (eps * eps)))


@dataclass
class OpCounters:
    """Work accounting for one solver run."""

    outer_iterations: int = 0
    empty_iterations: int = 0
    increment_work: int = 0  # sum over iterations of |I_t| + |J_t|
    traversal_work: int = 0  # sum of entries actually visited in the scans
    deletions: int = 0
    sampler_updates: int = 0

    def assert_increment_budget(self, r: int, c: int, N: int) -> None:
        """Deterministic bound: total increments never exceed (r + c) N."""
        budget = (r + c) * N
        if self.increment_work > budget:
            raise AssertionError(
                f"increment work {self.increment_work} exceeds budget {budget}"
            )


@dataclass
class IterationTrace:
    """Per-iteration record (the solver's transient locals, exposed for tests)."""

    i: int
    j: int
    delta: float
    z: float
    rows_incremented: list[int]
    cols_incremented: list[int]
    rows_traversed: int
    cols_traversed: int
    retired: list[int]

    @property
    def empty(self) -> bool:
        return not self.rows_incremented and not self.cols_incremented


@dataclass
class SolutionPair:
    """A feasible scaled primal/dual pair for the restricted-form problem."""

    x_star: np.ndarray
    xh_star: np.ndarray
    primal_value: float
    dual_value: float
    eps: float
    variant: str
    N: int
    seed: int | None
    counters: OpCounters
    engine: str = "python"
    x_original: np.ndarray | None = None  # populated by solve_instance
    dual_original: np.ndarray | None = None

    @property
    def ratio(self) -> float:
        return self.primal_value / self.dual_value

    def to_dict(self) -> dict:
        d = {
            "primal_value": self.primal_value,
            "dual_value": self.dual_value,
            "ratio": self.ratio,
            "eps": self.eps,
            "variant": self.variant,
            "N": self.N,
            "seed": self.seed,
            "engine": self.engine,
            "x_star": self.x_star.tolist(),
            "xh_star": self.xh_star.tolist(),
            "counters": vars(self.counters).copy(),
        }
        if self.x_original is not None:
            d["x_original"] = self.x_original.tolist()
            d["dual_original"] = self.dual_original.tolist()
        return d


# -- scale-aware arithmetic helpers -------------------------------------------


def _product(a: tuple[float, int], b: tuple[float, int]) -> tuple[float, int]:
    m = a[0] * b[0]
    fm, fe = math.frexp(m)
    return fm * 2.0, a[1] + b[1] + fe - 1


def _fraction_of_sum(a: tuple[float, int], b: tuple[float, int]) -> float:
    """a / (a + b) for scale-aware positives."""
    d = a[1] - b[1]
    if d > 1060:
        return 1.0
    if d < -1060:
        return 0.0
    x = math.ldexp(a[0], d)
    return x / (x + b[0])


def random_pair(p: SamplableVector, ph: SamplableVector,
                pu: SamplableVector, phu: SamplableVector,
                rng: np.random.Generator) -> tuple[int, int]:
    """Sample (i, j) with probability proportional to p_i * ph_j * (uhat_i + u_j).

    Implemented as the two-branch mixture: with probability
    |pu||ph| / (|pu||ph| + |p||phu|) draw i from pu and j from ph,
    otherwise i from p and j from phu.  Totals combine in (mantissa,
    exponent) form so enormous weight ranges cannot overflow.
    """
    A = _product(pu.total(), ph.total())
    B = _product(p.total(), phu.total())
    if rng.random() < _fraction_of_sum(A, B):
        return pu.sample(rng), ph.sample(rng)
    return p.sample(rng), phu.sample(rng)


# -- the stepwise engine -------------------------------------------------------


class SolverRun:
    """One solver execution with inspectable, cloneable state.

    This engine is the readable reference: unit tests step it directly and
    the statistical verifiers clone mid-run states from it.  Large runs go
    through the compiled engine in ``_fastcore`` instead (same algorithm,
    array encoded).
    """

    def __init__(self, M: SparseNonNegMatrix, eps: float, variant: str = "simple",
                 seed: int | None = 0, rng: np.random.Generator | None = None,
                 debug: bool = False):
        if not 0 < eps <= EPS_MAX:
            raise ValueError(f"eps must be in (0, {EPS_MAX:.4f}]")
        if variant not in ("simple", "fast"):
            raise ValueError("variant must be 'simple' or 'fast'")
        if not M.col_alive.all() or np.any(M.u <= 0):
            raise InvalidInstanceError("every column must have at least one entry")
        self.original = M
        self.eps = eps
        self.variant = variant
        self.seed = seed
        self.debug = debug
        self.rng = rng if rng is not None else np.random.default_rng(seed)

        if variant == "fast":
            self.M = truncate(M, eps)
            self.M.pseudo_sort()
        else:
            self.M = M.copy()
            self.M.sort()
        r, c = self.M.r, self.M.c
        self.N = iteration_budget(r, c, eps)
        self.x = np.zeros(c)
        self.xh = np.zeros(r)
        self.y = np.zeros(r, dtype=np.int64)
        self.yh = np.zeros(c, dtype=np.int64)
        self.sum_x = 0.0
        self.sum_xh = 0.0
        self.p = SamplableVector(np.ones(r))
        self.ph = SamplableVector(np.ones(c))
        # truncation can empty a row, leaving uhat 0; such rows are simply
        # unsampleable through p*uhat
        self.pu = SamplableVector(self.M.uhat)
        self.phu = SamplableVector(self.M.u)
        self.active = np.ones(c, dtype=bool)  # membership in J
        self.n_active = c
        self.n_below_N = c  # active columns with yh < N
        self.max_y = 0
        self.counters = OpCounters()
        self.done = False

    # -- state queries --------------------------------------------------------

    @property
    def r(self) -> int:
        return self.M.r

    @property
    def c(self) -> int:
        return self.M.c

    def potential(self) -> tuple[float, int]:
        """The Lyapunov quantity |p| * |ph|, scale-aware."""
        return _product(self.p.total(), self.ph.total())

    def clone(self, rng: np.random.Generator | None = None) -> "SolverRun":
        """Deep copy of all mutable state; optionally with a fresh RNG stream."""
        s = SolverRun.__new__(SolverRun)
        s.original = self.original
        s.eps, s.variant, s.seed, s.debug = self.eps, self.variant, self.seed, self.debug
        s.rng = rng if rng is not None else np.random.default_rng(self.rng.bit_generator.state["state"]["state"] % (2**63))
        s.M = self.M.copy()
        s.N = self.N
        s.x = self.x.copy()
        s.xh = self.xh.copy()
        s.y = self.y.copy()
        s.yh = self.yh.copy()
        s.sum_x, s.sum_xh = self.sum_x, self.sum_xh
        s.p = self.p.clone()
        s.ph = self.ph.clone()
        s.pu = self.pu.clone()
        s.phu = self.phu.clone()
        s.active = self.active.copy()
        s.n_active = self.n_active
        s.n_below_N = self.n_below_N
        s.max_y = self.max_y
        s.counters = OpCounters(**vars(self.counters))
        s.done = self.done
        return s

    # -- iteration ------------------------------------------------------------

    def step(self) -> IterationTrace:
        """Run one outer iteration; updates all state and counters."""
        if self.done:
            raise RuntimeError("solver already terminated")
        eps, N, M = self.eps, self.N, self.M
        fast = self.variant == "fast"
        i_, j_ = random_pair(self.p, self.ph, self.pu, self.phu, self.rng)
        delta = 1.0 / (M.uhat[i_] + M.u[j_])
        self.x[j_] += delta
        self.xh[i_] += delta
        self.sum_x += delta
        self.sum_xh += delta
        z = self.rng.random()
        hit = z / delta  # entry threshold for an increment
        stop = hit if not fast else hit / 2.0

        rows_inc: list[int] = []
        rows_seen = 0
        e = M.col_head[j_]
        while e >= 0:
            v = M.vals[e]
            if v < stop:
                break
            rows_seen += 1
            if v >= hit:
                rows_inc.append(int(M.rows[e]))
            e = M.col_next[e]

        cols_inc: list[int] = []
        cols_seen = 0
        e = M.row_head[i_]
        while e >= 0:
            v = M.vals[e]
            if v < stop:
                break
            cols_seen += 1
            if v >= hit:
                cols_inc.append(int(M.cols[e]))
            e = M.row_next[e]

        if self.debug:
            self._assert_lhs_bound(i_, j_, delta)

        retire: list[int] = []
        for i in rows_inc:
            self.y[i] += 1
            if self.y[i] > self.max_y:
                self.max_y = int(self.y[i])
            self.p.scale_entry(i, 1.0 + eps)
            self.pu.scale_entry(i, 1.0 + eps)
            self.counters.sampler_updates += 2
        for j in cols_inc:
            self.yh[j] += 1
            if self.yh[j] == N:
                self.n_below_N -= 1
            self.ph.scale_entry(j, 1.0 - eps)
            self.phu.scale_entry(j, 1.0 - eps)
            self.counters.sampler_updates += 2
            if self.yh[j] > N:
                retire.append(j)

        for j in retire:
            self._retire_column(j)

        self.counters.outer_iterations += 1
        nw = len(rows_inc) + len(cols_inc)
        self.counters.increment_work += nw
        self.counters.traversal_work += rows_seen + cols_seen
        if nw == 0:
            self.counters.empty_iterations += 1

        if self.max_y >= N or self.n_active == 0 or self.n_below_N == 0:
            self.done = True
        assert self.sum_x == self.sum_xh  # same delta added to both, bit-exact
        return IterationTrace(i_, j_, delta, z, rows_inc, cols_inc,
                              rows_seen, cols_seen, retire)

    def _retire_column(self, j: int) -> None:
        self.active[j] = False
        self.n_active -= 1
        self.ph.set_zero(j)
        self.phu.set_zero(j)
        self.counters.sampler_updates += 2
        before = self.M.n_deleted
        affected = self.M.delete_column(j)
        self.counters.deletions += self.M.n_deleted - before
        exact = self.variant == "simple"
        for i in affected:
            old = self.M.uhat[i]
            new = self.M.refresh_uhat(i, exact=exact)
            if new == 0.0:
                self.pu.set_zero(i)
            else:
                self.pu.scale_entry(i, new / old)
            self.counters.sampler_updates += 1

    def _assert_lhs_bound(self, i_: int, j_: int, delta: float) -> None:
        # largest candidate LHS increase must land in [1/4, 1]
        col_max = self.M.u[j_]
        row_max = max((v for _, v in self.M.row_entries(i_)), default=0.0)
        m = max(col_max, row_max) * delta
        assert 0.25 - 1e-12 <= m <= 1.0 + 1e-12, f"LHS bound violated: {m}"

    def run(self, max_iterations: int | None = None) -> None:
        if max_iterations is None:
            max_iterations = 64 * (self.r + self.c) * self.N + 100_000
        it = 0
        while not self.done:
            self.step()
            it += 1
            if it > max_iterations:
                raise RuntimeError("iteration cap exceeded; termination never fired")

    def finalize(self) -> SolutionPair:
        """Exact scaling against the original (untruncated, undeleted) matrix."""
        if not self.done:
            raise RuntimeError("cannot finalize before termination")
        return _finalize(self.original, self.x, self.xh, self.eps, self.variant,
                         self.N, self.seed, self.counters, engine="python")


def _finalize(M_original: SparseNonNegMatrix, x, xh, eps, variant, N, seed,
              counters, engine) -> SolutionPair:
    Mx, MTxh = exact_products(M_original, x, xh)
    mx = Mx.max()
    mtx = MTxh.min()
    if mx <= 0 or mtx <= 0:
        raise RuntimeError("degenerate scaling: zero row/column product at finalize")
    x_star = x / mx
    xh_star = xh / mtx
    return SolutionPair(x_star, xh_star, float(x_star.sum()), float(xh_star.sum()),
                        eps, variant, N, seed, counters, engine=engine)


# -- the slow reference algorithm ---------------------------------------------


def solve_slow(M, eps: float, seed: int | None = 0) -> SolutionPair:
    """Unit-increment coupled algorithm with exact Mx and M^T xh.

    Requires every entry in [0, 1].  Intended as a desk-scale cross-check
    of the coupling idea, not for performance.
    """
    M = _as_matrix(M)
    A = M.to_dense()
    r, c = A.shape
    top = A.max(initial=0.0)
    if top > 1.0:
        # the final exact scaling is invariant to uniform rescaling of x,
        # so entries can be brought into [0, 1] up front
        A = A / top
    if np.any(A.max(axis=0) <= 0):
        raise InvalidInstanceError("every column must have at least one entry")
    if not 0 < eps <= EPS_MAX:
        raise ValueError(f"eps must be in (0, {EPS_MAX:.4f}]")
    N = iteration_budget(r, c, eps)
    rng = np.random.default_rng(seed)
    x = np.zeros(c)
    xh = np.zeros(r)
    Mx = np.zeros(r)
    MTxh = np.zeros(c)
    counters = OpCounters()
    while Mx.max() < N:
        # exponent-shifted weights: only ratios matter for sampling
        pw = (1.0 + eps) ** (Mx - Mx.max())
        phw = (1.0 - eps) ** (MTxh - MTxh.min())
        j = rng.choice(c, p=phw / phw.sum())
        i = rng.choice(r, p=pw / pw.sum())
        x[j] += 1.0
        xh[i] += 1.0
        Mx += A[:, j]
        MTxh += A[i, :]
        counters.outer_iterations += 1
        counters.increment_work += 2
    return _finalize(M, x, xh, eps, "slow", N, seed, counters, engine="python")


# -- top-level dispatch --------------------------------------------------------


def _as_matrix(M) -> SparseNonNegMatrix:
    if isinstance(M, SparseNonNegMatrix):
        return M
    return SparseNonNegMatrix.from_dense(np.asarray(M, dtype=float))


def solve(M, eps: float, variant: str = "fast", seed: int | None = 0,
          engine: str = "auto") -> SolutionPair:
    """Solve the restricted form max{|x| : Mx <= 1} and its covering dual.

    ``engine`` selects the compiled hot loop ("compiled"), the stepwise
    reference ("python"), or lets the library pick ("auto": compiled when
    available).  Both engines are deterministic given (seed, variant, eps,
    instance); their random streams differ from each other.
    """
    M = _as_matrix(M)
    if variant == "slow":
        return solve_slow(M, eps, seed)
    if variant not in ("simple", "fast"):
        raise ValueError("variant must be 'slow', 'simple' or 'fast'")
    if engine == "auto":
        try:
            from . import _fastcore  # noqa: F401
            engine = "compiled"
        except ImportError:
            engine = "python"
    if engine == "python":
        run = SolverRun(M, eps, variant, seed=seed)
        run.run()
        return run.finalize()
    if engine != "compiled":
        raise ValueError("engine must be 'auto', 'python' or 'compiled'")

    from ._fastcore import run_compiled

    if not 0 < eps <= EPS_MAX:
        raise ValueError(f"eps must be in (0, {EPS_MAX:.4f}]")
    if not M.col_alive.all() or np.any(M.u <= 0):
        raise InvalidInstanceError("every column must have at least one entry")
    if variant == "fast":
        W = truncate(M, eps)
        W.pseudo_sort()
    else:
        W = M.copy()
        W.sort()
    N = iteration_budget(W.r, W.c, eps)
    x, xh, counters = run_compiled(W, eps, N, variant == "fast",
                                   0 if seed is None else int(seed))
    return _finalize(M, x, xh, eps, variant, N, seed, counters, engine="compiled")


def solve_instance(inst, eps: float, variant: str = "fast", seed: int | None = 0,
                   engine: str = "auto") -> SolutionPair:
    """Normalize a general instance, solve it, and map the pair back.

    The returned pair additionally carries ``x_original`` (primal for
    max{a.x : Ax <= b}) and ``dual_original`` (dual vector for the same LP,
    one multiplier per original row).
    """
    from .model import normalize

    M, record = normalize(inst)
    pair = solve(M, eps, variant=variant, seed=seed, engine=engine)
    pair.x_original = record.primal_to_original(pair.x_star)
    pair.dual_original = record.dual_to_original(pair.xh_star)
    return pair
