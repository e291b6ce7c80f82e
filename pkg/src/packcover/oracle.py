"""Exact desk-scale LP reference for max{|x| : Mx <= 1, x >= 0}.

A textbook dense simplex with Bland's rule.  The slack basis is feasible
from the start (the right-hand side is the all-ones vector), so no phase-1
is ever needed; the two-phase machinery degenerates to a single phase.
Used only by tests and the verification layer; intentionally capped at
300x300.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

__all__ = ["OracleResult", "brute_force_tiny", "solve_exact"]

_SIZE_CAP = 300


@dataclass
class OracleResult:
    """Exact optimum of the restricted packing LP and its covering dual."""

    value: float
    x: np.ndarray  # optimal primal, length c
    y: np.ndarray  # optimal dual, length r
    status: str  # "optimal" | "unbounded" | "infeasible"

    def check_strong_duality(self, tol: float = 1e-7) -> None:
        if self.status != "optimal":
            raise RuntimeError(f"no duality check for status {self.status}")
        if abs(self.x.sum() - self.y.sum()) > tol:
            raise AssertionError(
                f"duality gap {abs(self.x.sum() - self.y.sum())} exceeds {tol}"
            )


def solve_exact(M, max_pivots: int | None = None) -> OracleResult:
    """Exact OPT of max{|x| : Mx <= 1, x >= 0} by dense simplex, Bland's rule.

    The dual vector is read off the final reduced costs of the slack
    columns; by strong duality it is an optimal solution of the covering
    LP min{|y| : M^T y >= 1, y >= 0}.  Raises on matrices over the
    300x300 cap.  An empty column makes the LP unbounded, reported via
    ``status`` rather than an exception.
    """
    A = np.asarray(M, dtype=float)
    if A.ndim != 2:
        raise ValueError("matrix must be 2-d")
    r, c = A.shape
    if r > _SIZE_CAP or c > _SIZE_CAP:
        raise ValueError(f"oracle is capped at {_SIZE_CAP}x{_SIZE_CAP}, got {r}x{c}")
    if np.any(A < 0):
        raise ValueError("matrix entries must be nonnegative")
    if np.any(A.max(axis=0, initial=0.0) <= 0):
        return OracleResult(math.inf, np.full(c, np.nan), np.full(r, np.nan),
                            "unbounded")

    # tableau rows 0..r-1: [A | I | rhs]; last row: reduced costs of max sum(x)
    T = np.zeros((r + 1, c + r + 1))
    T[:r, :c] = A
    T[:r, c:c + r] = np.eye(r)
    T[:r, -1] = 1.0
    T[r, :c] = -1.0
    basis = list(range(c, c + r))

    if max_pivots is None:
        max_pivots = 50 * (r + c) * (r + c) + 10_000
    for _ in range(max_pivots):
        # Bland: entering variable = lowest index with negative reduced cost
        enter = -1
        for j in range(c + r):
            if T[r, j] < -1e-12:
                enter = j
                break
        if enter < 0:
            break
        col = T[:r, enter]
        rhs = T[:r, -1]
        best = -1
        best_ratio = math.inf
        for i in range(r):
            if col[i] > 1e-12:
                ratio = rhs[i] / col[i]
                # ties broken by lowest basis index (Bland)
                if ratio < best_ratio - 1e-15 or (
                    abs(ratio - best_ratio) <= 1e-15
                    and (best < 0 or basis[i] < basis[best])
                ):
                    best = i
                    best_ratio = ratio
        if best < 0:
            return OracleResult(math.inf, np.full(c, np.nan), np.full(r, np.nan),
                                "unbounded")
        piv = T[best, enter]
        T[best] /= piv
        for i in range(r + 1):
            if i != best and T[i, enter] != 0.0:
                T[i] -= T[i, enter] * T[best]
        basis[best] = enter
    else:
        raise RuntimeError("simplex pivot cap exceeded")

    x = np.zeros(c)
    for i, bj in enumerate(basis):
        if bj < c:
            x[bj] = T[i, -1]
    y = T[r, c:c + r].copy()
    y[np.abs(y) < 1e-13] = 0.0
    result = OracleResult(float(x.sum()), x, y, "optimal")
    result.check_strong_duality()
    return result


def brute_force_tiny(M, resolution: float = 1e-3) -> float:
    """Grid-search OPT of max{|x| : Mx <= 1, x >= 0} for matrices with <= 3 columns.

    All but the last coordinate range over a coarse grid; the last is set
    exactly to its maximum feasible value given the others, so the search
    only has to locate the right region.  The grid optimum is refined once
    on a finer local grid and polished by exact coordinate ascent (each
    1-d subproblem has a closed-form maximizer), which reaches a vertex-
    accurate value from a near-optimal start.
    """
    A = np.asarray(M, dtype=float)
    if A.ndim == 1:
        A = A[None, :]
    r, c = A.shape
    if c > 3:
        raise ValueError("brute force is limited to <= 3 columns")
    if np.any(A < 0):
        raise ValueError("matrix entries must be nonnegative")
    colmax = A.max(axis=0, initial=0.0)
    if np.any(colmax <= 0):
        return math.inf
    ub = 1.0 / colmax  # x_j <= 1 / max_i M_ij

    def last_coord(x_head):
        """Largest feasible value of the final coordinate given the rest."""
        slack = 1.0 - A[:, :c - 1] @ x_head
        if np.any(slack < 0):
            return None
        lim = ub[c - 1]
        for i in range(r):
            if A[i, c - 1] > 0:
                lim = min(lim, slack[i] / A[i, c - 1])
        return lim

    def grid_best(centers, spans, steps):
        axes = []
        for j in range(c - 1):
            lo = max(0.0, centers[j] - spans[j])
            hi = min(ub[j], centers[j] + spans[j])
            axes.append(np.linspace(lo, hi, steps))
        best_v = -1.0
        best_x = None
        for head in itertools.product(*axes) if axes else [()]:
            head = np.array(head)
            tail = last_coord(head)
            if tail is None:
                continue
            v = head.sum() + tail
            if v > best_v:
                best_v = v
                best_x = np.append(head, tail)
        return best_v, best_x

    steps = max(2, int(round(1.0 / resolution ** 0.5)))  # ~32 per axis, then refine
    centers = ub[:c - 1] / 2.0
    spans = ub[:c - 1] / 2.0
    best_v, best_x = grid_best(centers, spans, steps)
    for _ in range(3):
        spans = spans * (2.2 / steps)
        best_v, best_x = grid_best(best_x[:c - 1], spans, steps)

    # exact ascent from the refined point: single coordinates, then pairs
    # (each 2-variable subproblem is solved at its candidate vertices)
    x = best_x.copy()
    for _ in range(200):
        improved = False
        for j in range(c):
            slack = 1.0 - A @ x + A[:, j] * x[j]
            lim = ub[j]
            for i in range(r):
                if A[i, j] > 0:
                    lim = min(lim, slack[i] / A[i, j])
            lim = max(lim, 0.0)
            if lim > x[j] + 1e-12:
                x[j] = lim
                improved = True
        for j in range(c):
            for k in range(j + 1, c):
                nj, nk = _best_pair(A, x, j, k)
                if nj + nk > x[j] + x[k] + 1e-12:
                    x[j], x[k] = nj, nk
                    improved = True
        if not improved:
            break
    return float(max(best_v, x.sum()))


def _best_pair(A, x, j, k):
    """Maximize x_j + x_k with the other coordinates of x held fixed.

    The feasible region in the (x_j, x_k) plane is a polygon cut out by the
    row constraints and the axes; the optimum sits at one of the pairwise
    constraint intersections, which are few enough to enumerate.
    """
    r = A.shape[0]
    slack = 1.0 - A @ x + A[:, j] * x[j] + A[:, k] * x[k]
    # constraint lines a*xj + b*xk = s, plus the two axes as equality lines
    lines = [(A[i, j], A[i, k], slack[i]) for i in range(r)]
    cands = [(0.0, 0.0)]
    full = lines + [(1.0, 0.0, 0.0), (0.0, 1.0, 0.0)]
    n = len(full)
    for s in range(n):
        a1, b1, c1 = full[s]
        # axis lines encode xj = 0 / xk = 0, so flip their sense
        for t in range(s + 1, n):
            a2, b2, c2 = full[t]
            det = a1 * b2 - a2 * b1
            if abs(det) < 1e-14:
                continue
            pj = (c1 * b2 - c2 * b1) / det
            pk = (a1 * c2 - a2 * c1) / det
            if pj >= -1e-12 and pk >= -1e-12:
                cands.append((max(pj, 0.0), max(pk, 0.0)))
    # single-constraint axis intercepts
    for a, b, cc in lines[:r]:
        if a > 0:
            cands.append((cc / a, 0.0))
        if b > 0:
            cands.append((0.0, cc / b))
    best = (x[j], x[k])
    best_v = x[j] + x[k]
    for pj, pk in cands:
        if pj < 0 or pk < 0:
            continue
        ok = True
        for a, b, cc in lines[:r]:
            if a * pj + b * pk > cc + 1e-10:
                ok = False
                break
        if ok and pj + pk > best_v:
            best = (pj, pk)
            best_v = pj + pk
    return best
