"""Dynamic weighted sampling with O(1) multiplicative updates.

Weights are grouped into buckets by binary exponent, so within a bucket all
weights lie in [2^k, 2^(k+1)) and rejection sampling accepts with
probability at least 1/2.  A draw picks a bucket proportionally to its
weight sum (linear scan over the occupied exponent range), then
rejection-samples a member.  Each weight is stored as a (mantissa in
[1,2), exponent) pair, so the vector tolerates the astronomically large
ranges produced by repeated (1 +/- eps) scalings without overflow, and a
shared scale exponent lets the whole vector be renormalized in O(1)
while preserving every ratio bit-exactly.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["SamplableVector"]

# rebuild a bucket's cached mantissa sum after this many in-place updates,
# bounding float drift over long runs
_REBUILD_EVERY = 64


class _Bucket:
    __slots__ = ("members", "msum", "ops")

    def __init__(self):
        self.members: list[int] = []
        self.msum = 0.0
        self.ops = 0


class SamplableVector:
    """Nonnegative weight vector supporting proportional sampling.

    Supported operations: ``sample`` (index i with probability w_i/|w|),
    ``scale_entry`` (multiply one weight by a positive factor),
    ``set_zero`` (permanently remove an index from the distribution),
    ``total`` (|w| as a scale-aware (mantissa, exponent) pair) and
    ``renormalize``.  Zero entries are never returned by ``sample``.
    """

    def __init__(self, weights):
        weights = np.asarray(weights, dtype=float)
        if weights.ndim != 1 or len(weights) == 0:
            raise ValueError("weights must be a nonempty 1-d sequence")
        if np.any(weights < 0):
            raise ValueError("weights must be nonnegative")
        if not np.any(weights > 0):
            raise ValueError("at least one weight must be positive")
        n = len(weights)
        self.n = n
        self.mant = np.zeros(n)
        self.expo = np.zeros(n, dtype=np.int64)
        self.alive = weights > 0
        self.scale_log2 = 0
        self._slot = np.full(n, -1, dtype=np.int64)
        self._buckets: dict[int, _Bucket] = {}
        self.live_count = 0
        self.bucket_moves = 0  # instrumentation for amortized-cost checks
        m, e = np.frexp(weights)
        for i in range(n):
            if not self.alive[i]:
                continue
            self.mant[i] = m[i] * 2.0
            self.expo[i] = int(e[i]) - 1
            self._insert(i)
            self.live_count += 1

    # -- bucket plumbing ------------------------------------------------------

    def _insert(self, i: int) -> None:
        k = int(self.expo[i])
        b = self._buckets.get(k)
        if b is None:
            b = self._buckets[k] = _Bucket()
        self._slot[i] = len(b.members)
        b.members.append(i)
        b.msum += self.mant[i]
        b.ops += 1
        self._maybe_rebuild(k, b)

    def _remove(self, i: int) -> None:
        k = int(self.expo[i])
        b = self._buckets[k]
        s = int(self._slot[i])
        last = b.members[-1]
        b.members[s] = last
        self._slot[last] = s
        b.members.pop()
        self._slot[i] = -1
        if not b.members:
            del self._buckets[k]
        else:
            b.msum -= self.mant[i]
            b.ops += 1
            self._maybe_rebuild(k, b)

    def _maybe_rebuild(self, k: int, b: _Bucket) -> None:
        if b.ops >= max(_REBUILD_EVERY, 2 * len(b.members)):
            b.msum = math.fsum(self.mant[m] for m in b.members)
            b.ops = 0

    # -- queries --------------------------------------------------------------

    def weight(self, i: int) -> tuple[float, int]:
        """Weight of entry i as (mantissa in [1,2), base-2 exponent); (0,0) if zeroed."""
        if not self.alive[i]:
            return 0.0, 0
        return float(self.mant[i]), int(self.expo[i]) + self.scale_log2

    def weight_float(self, i: int) -> float:
        m, e = self.weight(i)
        return math.ldexp(m, e)

    def total(self) -> tuple[float, int]:
        """|w| as (mantissa in [1,2), base-2 exponent)."""
        if self.live_count == 0:
            return 0.0, 0
        E = max(self._buckets)
        acc = 0.0
        for k, b in self._buckets.items():
            acc += b.msum * math.ldexp(1.0, k - E)
        m, e = math.frexp(acc)
        return m * 2.0, E + e - 1 + self.scale_log2

    def total_float(self) -> float:
        m, e = self.total()
        return math.ldexp(m, e)

    def renormalize(self, factor_log2: int) -> None:
        """Divide every weight by 2**factor_log2, touching only the shared scale."""
        self.scale_log2 -= int(factor_log2)

    # -- updates --------------------------------------------------------------

    def scale_entry(self, i: int, factor: float) -> None:
        """Multiply weight i by a positive factor (hot path: factor = 1 +/- eps)."""
        if not self.alive[i]:
            raise ValueError(f"entry {i} is zeroed")
        if factor <= 0:
            raise ValueError("factor must be positive")
        old = self.mant[i]
        m = old * factor
        if 1.0 <= m < 2.0:
            self.mant[i] = m
            k = int(self.expo[i])
            b = self._buckets[k]
            b.msum += m - old
            b.ops += 1
            self._maybe_rebuild(k, b)
            return
        self._remove(i)
        fm, fe = math.frexp(m)
        self.mant[i] = fm * 2.0
        self.expo[i] += fe - 1
        self._insert(i)
        self.bucket_moves += 1

    def set_zero(self, i: int) -> None:
        """Remove entry i from the distribution for good."""
        if not self.alive[i]:
            raise ValueError(f"entry {i} already zeroed")
        self._remove(i)
        self.alive[i] = False
        self.live_count -= 1

    # -- sampling -------------------------------------------------------------

    def sample(self, rng: np.random.Generator) -> int:
        """Return index i with probability w_i / |w|."""
        if self.live_count == 0:
            raise ValueError("cannot sample from an all-zero vector")
        keys = list(self._buckets)
        E = max(keys)
        sums = [self._buckets[k].msum * math.ldexp(1.0, k - E) for k in keys]
        tot = sum(sums)
        target = rng.random() * tot
        acc = 0.0
        pick = keys[-1]
        for k, s in zip(keys, sums):
            acc += s
            if target < acc:
                pick = k
                break
        members = self._buckets[pick].members
        while True:
            i = members[int(rng.random() * len(members))]
            if rng.random() * 2.0 < self.mant[i]:
                return i

    # -- support --------------------------------------------------------------

    def clone(self) -> "SamplableVector":
        v = SamplableVector.__new__(SamplableVector)
        v.n = self.n
        v.mant = self.mant.copy()
        v.expo = self.expo.copy()
        v.alive = self.alive.copy()
        v.scale_log2 = self.scale_log2
        v._slot = self._slot.copy()
        v.live_count = self.live_count
        v.bucket_moves = self.bucket_moves
        v._buckets = {}
        for k, b in self._buckets.items():
            nb = _Bucket()
            nb.members = list(b.members)
            nb.msum = b.msum
            nb.ops = b.ops
            v._buckets[k] = nb
        return v

    def check_consistency(self) -> None:
        """Audit bucket membership, ranges, and sums (tests only)."""
        seen = set()
        for k, b in self._buckets.items():
            assert b.members, "empty bucket retained"
            for s, i in enumerate(b.members):
                assert self.alive[i]
                assert self._slot[i] == s
                assert self.expo[i] == k
                assert 1.0 <= self.mant[i] < 2.0
                seen.add(i)
            assert math.isclose(b.msum, math.fsum(self.mant[m] for m in b.members),
                                rel_tol=1e-9)
        assert seen == set(np.nonzero(self.alive)[0].tolist())
        assert len(seen) == self.live_count
