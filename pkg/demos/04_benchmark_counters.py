"""
Operation counting and the predicted-work formulas
==================================================

Every run carries counters: outer iterations, empty iterations, the
total number of y/yh increments, entries traversed during scans, and
deletions.  The increment total obeys a deterministic budget
sum |I_t| + |J_t| <= (r + c) N with N = ceil(2 ln(rc) / eps^2), so the
ratio of actual work to budget is always at most 1.

The same numbers can be compared against the closed-form estimate
[12(r+c) + 480/d] ln(rc) / eps^2 and the dense-simplex estimate
5 min(r,c) r c; the `packcover bench` subcommand writes both to CSV.
"""

import numpy as np

from packcover import generate_random, normalize, solve
from packcover.cli import predicted_simplex_work, predicted_work

r = c = 300
density = 0.25
eps = 0.05

inst = generate_random(r, c, density, seed=0)
M, _rec = normalize(inst)
pair = solve(M, eps, variant="fast", seed=0)

ct = pair.counters
budget = (r + c) * pair.N
print("N                  :", pair.N)
print("outer iterations   :", ct.outer_iterations)
print("empty fraction     : %.3f" % (ct.empty_iterations / ct.outer_iterations))
print("increment work     :", ct.increment_work)
print("work / budget      : %.3f" % (ct.increment_work / budget))
print("traversal work     :", ct.traversal_work)
print("entries deleted    :", ct.deletions)

print()
print("predicted work     : %.3e" % predicted_work(r, c, density, eps))
print("simplex estimate   : %.3e" % predicted_simplex_work(r, c))
print("predicted speedup  : %.1fx" % (
    predicted_simplex_work(r, c) / predicted_work(r, c, density, eps)))
print("achieved ratio     : %.4f (target %.2f)" % (pair.ratio, 1 - 7 * eps))
