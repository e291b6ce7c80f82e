"""Sparse packing/covering instances: normalization, truncation, sorting, deletion.

The solver works on the restricted forms

    max { |x|  :  M x  <= 1, x  >= 0 }
    min { |xh| :  M' xh >= 1, xh >= 0 }      (M' = transpose of M)

obtained from a general instance max{a.x : A x <= b, x >= 0} by dividing
each entry A_ij by b_i * a_j.  The matrix is stored as cross-referenced
per-row and per-column doubly linked lists over a shared entry arena, so
that retiring a column removes its entries from every row list in time
proportional to the column length.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "GeneralInstance",
    "InvalidInstanceError",
    "ParseError",
    "ScalingRecord",
    "SparseNonNegMatrix",
    "exact_products",
    "generate_random",
    "load_instance",
    "normalize",
    "read_matrixmarket",
    "read_vector",
    "truncate",
    "write_matrixmarket",
]


class InvalidInstanceError(ValueError):
    """The instance violates a structural precondition (e.g. a zero column)."""


class ParseError(ValueError):
    """The input file could not be parsed at all."""


@dataclass
class GeneralInstance:
    """A packing LP max{a.x : A x <= b, x >= 0} with A given in coordinate form."""

    r: int
    c: int
    rows: np.ndarray  # int64, entry -> row index
    cols: np.ndarray  # int64, entry -> column index
    vals: np.ndarray  # float64, entry values, all > 0
    b: np.ndarray  # float64, length r, > 0
    a: np.ndarray  # float64, length c, > 0

    @property
    def nnz(self) -> int:
        return len(self.vals)

    @classmethod
    def from_dense(cls, A, b=None, a=None) -> "GeneralInstance":
        A = np.asarray(A, dtype=float)
        r, c = A.shape
        rows, cols = np.nonzero(A)
        vals = A[rows, cols]
        if np.any(vals < 0):
            raise InvalidInstanceError("matrix entries must be nonnegative")
        b = np.ones(r) if b is None else np.asarray(b, dtype=float)
        a = np.ones(c) if a is None else np.asarray(a, dtype=float)
        return cls(r, c, rows.astype(np.int64), cols.astype(np.int64), vals, b, a)

    def to_dense(self) -> np.ndarray:
        A = np.zeros((self.r, self.c))
        A[self.rows, self.cols] = self.vals
        return A


@dataclass
class ScalingRecord:
    """Bookkeeping needed to map restricted-form solutions back to the original LP.

    x_orig_j = x_j / a_j and dual_orig_i = xh_i / b_i, with rows that were
    dropped (vacuous 0 <= b_i constraints) receiving dual value 0.
    """

    b: np.ndarray
    a: np.ndarray
    kept_rows: np.ndarray  # indices into the original row set
    original_r: int

    def primal_to_original(self, x: np.ndarray) -> np.ndarray:
        return x / self.a

    def dual_to_original(self, xh: np.ndarray) -> np.ndarray:
        full = np.zeros(self.original_r)
        full[self.kept_rows] = xh / self.b[self.kept_rows]
        return full


class SparseNonNegMatrix:
    """Cross-referenced row/column doubly linked lists over positive entries.

    Each entry lives once in a shared arena; its row-list cell and
    column-list cell are the same arena slot, giving O(1) cross reference
    and O(1) unlink.  ``u[j]`` is the exact maximum of column j (columns
    are only ever deleted whole, so it never needs refreshing) and
    ``uhat[i]`` is the maintained upper bound on the largest entry of row i
    among still-active columns, with uhat in [1,2] times that maximum.
    """

    def __init__(self, r, c, rows, cols, vals):
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.float64)
        if np.any(vals <= 0):
            raise InvalidInstanceError("stored entries must be strictly positive")
        n = len(vals)
        self.r, self.c, self.n = int(r), int(c), int(n)
        self.rows = rows
        self.cols = cols
        self.vals = vals
        self.alive = np.ones(n, dtype=bool)
        self.col_alive = np.ones(c, dtype=bool)
        self.row_head = np.full(r, -1, dtype=np.int64)
        self.col_head = np.full(c, -1, dtype=np.int64)
        self.row_next = np.full(n, -1, dtype=np.int64)
        self.row_prev = np.full(n, -1, dtype=np.int64)
        self.col_next = np.full(n, -1, dtype=np.int64)
        self.col_prev = np.full(n, -1, dtype=np.int64)
        self._link(order=np.arange(n))
        self.u = np.zeros(c)
        np.maximum.at(self.u, cols, vals)
        self.uhat = np.zeros(r)
        np.maximum.at(self.uhat, rows, vals)
        self.n_deleted = 0

    # -- construction helpers -------------------------------------------------

    @classmethod
    def from_dense(cls, A) -> "SparseNonNegMatrix":
        A = np.asarray(A, dtype=float)
        if np.any(A < 0):
            raise InvalidInstanceError("matrix entries must be nonnegative")
        rows, cols = np.nonzero(A)
        return cls(A.shape[0], A.shape[1], rows, cols, A[rows, cols])

    def to_dense(self) -> np.ndarray:
        A = np.zeros((self.r, self.c))
        live = self.alive
        A[self.rows[live], self.cols[live]] = self.vals[live]
        return A

    def copy(self) -> "SparseNonNegMatrix":
        """Deep copy; used to keep a pristine matrix for final exact scaling."""
        m = SparseNonNegMatrix.__new__(SparseNonNegMatrix)
        m.r, m.c, m.n = self.r, self.c, self.n
        for name in ("rows", "cols", "vals", "alive", "col_alive", "row_head",
                     "col_head", "row_next", "row_prev", "col_next", "col_prev",
                     "u", "uhat"):
            setattr(m, name, getattr(self, name).copy())
        m.n_deleted = self.n_deleted
        return m

    def _link(self, order: np.ndarray) -> None:
        """Rebuild all row and column links, visiting entries in ``order``.

        Appending in visit order means a descending-value ``order`` yields
        descending lists.
        """
        self.row_head.fill(-1)
        self.col_head.fill(-1)
        row_tail = np.full(self.r, -1, dtype=np.int64)
        col_tail = np.full(self.c, -1, dtype=np.int64)
        self.row_next.fill(-1)
        self.row_prev.fill(-1)
        self.col_next.fill(-1)
        self.col_prev.fill(-1)
        for e in order:
            if not self.alive[e]:
                continue
            i, j = self.rows[e], self.cols[e]
            t = row_tail[i]
            if t < 0:
                self.row_head[i] = e
            else:
                self.row_next[t] = e
                self.row_prev[e] = t
            row_tail[i] = e
            t = col_tail[j]
            if t < 0:
                self.col_head[j] = e
            else:
                self.col_next[t] = e
                self.col_prev[e] = t
            col_tail[j] = e

    # -- sorting --------------------------------------------------------------

    def sort(self) -> None:
        """Relink every row and column list in exact descending value order."""
        order = np.argsort(-self.vals, kind="stable")
        self._link(order)

    def pseudo_sort(self) -> None:
        """Relink lists in descending order of the key floor(log2(value)).

        Entries sharing a key may appear in any relative order; this is the
        bucket-sort preprocessing that avoids the exact-sort log factor.
        """
        keys = floor_log2(self.vals)
        order = np.argsort(-keys, kind="stable")
        self._link(order)

    # -- mutation -------------------------------------------------------------

    def delete_column(self, j: int) -> list[int]:
        """Remove all entries of column j from every row list.

        Returns the rows whose list head (largest remaining entry) was the
        deleted entry, so the caller can refresh uhat for those rows.
        Raises on double deletion.
        """
        if not self.col_alive[j]:
            raise RuntimeError(f"column {j} deleted twice")
        self.col_alive[j] = False
        affected = []
        e = self.col_head[j]
        while e >= 0:
            i = self.rows[e]
            if self.row_head[i] == e:
                affected.append(int(i))
                self.row_head[i] = self.row_next[e]
            p, nx = self.row_prev[e], self.row_next[e]
            if p >= 0:
                self.row_next[p] = nx
            if nx >= 0:
                self.row_prev[nx] = p
            self.alive[e] = False
            self.n_deleted += 1
            e = self.col_next[e]
        self.col_head[j] = -1
        return affected

    def refresh_uhat(self, i: int, exact: bool) -> float:
        """Recompute uhat[i] from the current row head after deletions.

        With exactly sorted rows the head is the true maximum; with
        pseudo-sorted rows the head is within a factor 2 of it, so doubling
        keeps uhat in [1,2] times the true active maximum.  Empty rows get 0.
        """
        e = self.row_head[i]
        if e < 0:
            self.uhat[i] = 0.0
        elif exact:
            self.uhat[i] = self.vals[e]
        else:
            self.uhat[i] = 2.0 * self.vals[e]
        return self.uhat[i]

    # -- traversal ------------------------------------------------------------

    def row_entries(self, i: int):
        """Yield (j, value) along row i's list in its current order."""
        e = self.row_head[i]
        while e >= 0:
            yield int(self.cols[e]), float(self.vals[e])
            e = self.row_next[e]

    def col_entries(self, j: int):
        """Yield (i, value) along column j's list in its current order."""
        e = self.col_head[j]
        while e >= 0:
            yield int(self.rows[e]), float(self.vals[e])
            e = self.col_next[e]

    def check_consistency(self) -> None:
        """Full-traversal audit of the cross-referenced structure (tests only)."""
        seen_row = set()
        for i in range(self.r):
            prev = None
            for e_j, _v in _walk(self.row_head[i], self.row_next):
                assert self.rows[e_j] == i
                assert self.alive[e_j]
                seen_row.add(e_j)
                prev = e_j
        seen_col = set()
        for j in range(self.c):
            for e_i, _v in _walk(self.col_head[j], self.col_next):
                assert self.cols[e_i] == j
                seen_col.add(e_i)
        live = set(np.nonzero(self.alive)[0].tolist())
        # column lists of dead columns are abandoned, so compare against rows
        assert seen_row == live
        assert seen_row <= seen_col
        for j in range(self.c):
            if self.col_alive[j]:
                vals = [v for _, v in self.col_entries(j)]
                if vals:
                    assert self.u[j] == max(vals)


def _walk(head, nxt):
    e = head
    while e >= 0:
        yield e, None
        e = nxt[e]


def floor_log2(v: np.ndarray) -> np.ndarray:
    """Exact floor(log2(v)) for positive doubles via the exponent field."""
    _, e = np.frexp(v)
    return e.astype(np.int64) - 1


# -- operations on instances --------------------------------------------------


def normalize(inst: GeneralInstance) -> tuple[SparseNonNegMatrix, ScalingRecord]:
    """Scale A_ij by 1/(b_i a_j), giving the restricted form max{|x| : Mx <= 1}.

    Rows with no entries are dropped with a warning (the constraint is
    vacuous); a column with no entries makes the packing LP unbounded and
    raises InvalidInstanceError.
    """
    if np.any(inst.b <= 0) or np.any(inst.a <= 0):
        raise InvalidInstanceError("capacities b and objective a must be positive")
    if np.any(inst.vals <= 0):
        raise InvalidInstanceError("stored entries must be positive")
    col_count = np.bincount(inst.cols, minlength=inst.c)
    if np.any(col_count == 0):
        empty = np.nonzero(col_count == 0)[0]
        raise InvalidInstanceError(
            f"zero column(s) {empty.tolist()}: packing LP unbounded / dual infeasible"
        )
    row_count = np.bincount(inst.rows, minlength=inst.r)
    kept = np.nonzero(row_count > 0)[0]
    if len(kept) < inst.r:
        warnings.warn(
            f"dropping {inst.r - len(kept)} all-zero row(s): constraints are vacuous",
            stacklevel=2,
        )
    remap = np.full(inst.r, -1, dtype=np.int64)
    remap[kept] = np.arange(len(kept))
    vals = inst.vals / (inst.b[inst.rows] * inst.a[inst.cols])
    M = SparseNonNegMatrix(len(kept), inst.c, remap[inst.rows], inst.cols, vals)
    return M, ScalingRecord(inst.b, inst.a, kept, inst.r)


def truncate(M: SparseNonNegMatrix, eps: float) -> SparseNonNegMatrix:
    """Clamp entries to [beta*eps/c, beta*c/eps] with beta = min_j max_i M_ij.

    Entries below the lower threshold are dropped, entries above the cap
    are capped, bounding the dynamic range at the cost of one extra eps in
    the approximation guarantee.  Returns a new matrix; the input is not
    modified.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must be in (0,1)")
    live = M.alive
    if not live.any():
        raise InvalidInstanceError("empty matrix")
    beta = M.u[M.col_alive].min()
    lo = beta * eps / M.c
    hi = beta * M.c / eps
    keep = live & (M.vals >= lo)
    vals = np.minimum(M.vals[keep], hi)
    out = SparseNonNegMatrix(M.r, M.c, M.rows[keep], M.cols[keep], vals)
    # the column attaining beta keeps its maximum, so no column can empty
    if np.any(np.bincount(out.cols, minlength=out.c) == 0):
        raise AssertionError("truncation emptied a column; threshold logic broken")
    return out


def exact_products(M: SparseNonNegMatrix, x: np.ndarray, xh: np.ndarray):
    """One-pass exact Mx and M^T xh over all stored entries (deleted or not).

    Used for final scaling, which must be computed against the original
    matrix rather than the working (truncated, partially deleted) copy.
    """
    Mx = np.bincount(M.rows, weights=M.vals * x[M.cols], minlength=M.r)
    MTxh = np.bincount(M.cols, weights=M.vals * xh[M.rows], minlength=M.c)
    return Mx, MTxh


def generate_random(r: int, c: int, density: float, seed: int) -> GeneralInstance:
    """Random 0/1 instance: each entry 1 with probability ``density``, b = a = 1.

    Any all-zero row or column is redrawn until the instance is well-posed,
    so the result is always solvable.  Deterministic given the seed.
    """
    if r < 1 or c < 1:
        raise ValueError("r and c must be >= 1")
    if not 0 < density <= 1:
        raise ValueError("density must be in (0, 1]")
    rng = np.random.default_rng(seed)
    A = rng.random((r, c)) < density
    for _ in range(10_000):
        bad_rows = np.nonzero(~A.any(axis=1))[0]
        if len(bad_rows):
            A[bad_rows] = rng.random((len(bad_rows), c)) < density
            continue
        bad_cols = np.nonzero(~A.any(axis=0))[0]
        if len(bad_cols):
            A[:, bad_cols] = rng.random((r, len(bad_cols))) < density
            continue
        break
    else:
        raise RuntimeError("failed to generate a well-posed instance")
    rows, cols = np.nonzero(A)
    vals = np.ones(len(rows))
    return GeneralInstance(r, c, rows.astype(np.int64), cols.astype(np.int64),
                           vals, np.ones(r), np.ones(c))


# -- MatrixMarket I/O ---------------------------------------------------------


def read_matrixmarket(path) -> GeneralInstance:
    """Read a coordinate-format MatrixMarket file with nonnegative real entries."""
    import scipy.io

    try:
        m = scipy.io.mmread(path)
    except Exception as exc:  # noqa: BLE001 - scipy raises assorted types
        raise ParseError(f"cannot parse {path}: {exc}") from exc
    m = m.tocoo()
    vals = np.asarray(m.data, dtype=float)
    if np.any(vals < 0):
        raise InvalidInstanceError("negative matrix entries are not allowed")
    keep = vals > 0
    return GeneralInstance(
        m.shape[0], m.shape[1],
        np.asarray(m.row)[keep].astype(np.int64),
        np.asarray(m.col)[keep].astype(np.int64),
        vals[keep],
        np.ones(m.shape[0]), np.ones(m.shape[1]),
    )


def read_vector(path, expected_len: int) -> np.ndarray:
    """Read a sidecar vector of whitespace-separated reals."""
    v = np.loadtxt(path, dtype=float).reshape(-1)
    if len(v) != expected_len:
        raise InvalidInstanceError(
            f"vector in {path} has length {len(v)}, expected {expected_len}"
        )
    return v


def load_instance(matrix_path, b_path=None, a_path=None) -> GeneralInstance:
    inst = read_matrixmarket(matrix_path)
    if b_path is not None:
        inst.b = read_vector(b_path, inst.r)
    if a_path is not None:
        inst.a = read_vector(a_path, inst.c)
    return inst


def write_matrixmarket(path, inst: GeneralInstance) -> None:
    with open(path, "w") as fh:
        fh.write("%%MatrixMarket matrix coordinate real general\n")
        fh.write(f"{inst.r} {inst.c} {inst.nnz}\n")
        for i, j, v in zip(inst.rows, inst.cols, inst.vals):
            fh.write(f"{i + 1} {j + 1} {v:.17g}\n")
