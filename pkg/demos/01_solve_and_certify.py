"""
Solving a packing/covering LP pair and certifying the answer
============================================================

The restricted forms are

    max { |x|  : M x  <= 1, x  >= 0 }      (packing)
    min { |xh| : M' xh >= 1, xh >= 0 }     (covering, M' = transpose)

A single call returns a feasible pair for both problems whose values
sandwich the common optimum OPT within a 1 - O(eps) factor.
"""

import numpy as np

from packcover import certify, solve, solve_exact

M = np.array([[1.0, 2.0],
              [2.0, 1.0]])

# OPT = 2/3 for this instance (x = (1/3, 1/3) saturates both rows)
exact = solve_exact(M)
print("exact OPT      :", exact.value)

pair = solve(M, eps=0.05, variant="simple", seed=0)
print("primal |x*|    :", pair.primal_value)
print("dual   |xh*|   :", pair.dual_value)
print("ratio          :", pair.ratio, " (guaranteed >= 1 - 6*eps = 0.7)")

# the certificate recomputes feasibility residuals exactly
cert = certify(M, pair, oracle=exact)
print("max violation  :", cert.max_violation)
print("min slack      :", cert.min_slack)
print("oracle gap     :", cert.oracle_gap)
print("verdict        :", "pass" if cert.verdict else "fail")

# general instances max{a.x : Ax <= b} go through solve_instance, which
# normalizes entries to A_ij / (b_i a_j) and maps the answer back
from packcover import GeneralInstance, solve_instance

inst = GeneralInstance.from_dense(np.array([[2.0, 8.0], [6.0, 2.0]]),
                                  b=[4.0, 2.0], a=[1.0, 2.0])
pair = solve_instance(inst, eps=0.05, seed=1)
print("\noriginal-space primal:", pair.x_original)
print("original-space dual  :", pair.dual_original)
