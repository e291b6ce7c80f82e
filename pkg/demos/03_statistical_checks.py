"""
Monte Carlo verification of the solver's probabilistic invariants
=================================================================

Two conditional-expectation properties make the coupled algorithm work:

* the potential |p| * |ph| never increases in expectation (it is a
  supermartingale), which is what turns the final counts into a
  1 - O(eps) guarantee;
* the randomized counters track the true products: E[dy] = M dx per
  coordinate, so y stays an unbiased estimate of Mx.

Both are conditional on the current state, so they cannot be checked
from end-to-end runs.  Instead the stepwise engine exposes cloneable
state: freeze a mid-run state, clone it a few thousand times, run one
step per clone and look at the sample means.
"""

import numpy as np

from packcover import SolverRun, SparseNonNegMatrix, drift_test, tracking_test

rng = np.random.default_rng(3)
A = (rng.random((30, 30)) < 0.3) * 1.0
A[0, A.max(axis=0) == 0] = 1.0  # keep every column nonempty

run = SolverRun(SparseNonNegMatrix.from_dense(A), eps=0.1, variant="simple",
                seed=7)
for _ in range(100):
    run.step()

report = drift_test(run, trials=5000, seed=0)
for prop in report.properties:
    print(f"{prop.name}: statistic {prop.statistic:+.2e} "
          f"threshold {prop.threshold:.2e} -> "
          f"{'pass' if prop.passed else 'fail'}")

report = tracking_test(run, trials=5000, seed=1)
for prop in report.properties:
    print(f"{prop.name}: worst deviation {prop.statistic:.2f} sigma "
          f"(limit {prop.threshold:.2f}) -> "
          f"{'pass' if prop.passed else 'fail'}")

print()
print(report.to_json(indent=2))
