"""
The dynamic weighted sampler
============================

The solver's inner loop needs to draw an index i with probability
w_i / |w| from a vector whose entries are repeatedly multiplied by
(1 + eps) or (1 - eps).  After N = 2 ln(rc)/eps^2 updates a weight can
reach (1+eps)^N, far beyond double precision, so each weight is stored
as a (mantissa, exponent) pair grouped into buckets by exponent.
"""

import numpy as np

from packcover import SamplableVector

rng = np.random.default_rng(0)

v = SamplableVector([3.0, 5.0])

# sampling is proportional: P(index 1) = 5/8
n = 50_000
hits = sum(v.sample(rng) for _ in range(n))
print("empirical P(1) :", hits / n, " (exact 5/8 =", 5 / 8, ")")

# multiplicative updates are O(1) amortized and exact
eps = 0.1
for _ in range(500):
    v.scale_entry(0, 1.0 + eps)
print("weight 0       :", v.weight_float(0))
print("3*(1+eps)^500  :", 3.0 * (1.0 + eps) ** 500)

# weights far beyond double range are no problem: totals come back as
# (mantissa, exponent) pairs
for _ in range(20_000):
    v.scale_entry(0, 1.0 + eps)
m, e = v.total()
print("total          : %.6f * 2^%d" % (m, e))

# zeroed entries leave the distribution for good
v.set_zero(0)
print("after set_zero : always", v.sample(rng))
