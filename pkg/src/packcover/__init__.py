"""Randomized primal-dual approximation solver for fractional packing and covering LPs.

Computes feasible primal-dual pairs (x*, xh*) for the restricted forms
max{|x| : Mx <= 1, x >= 0} and min{|xh| : M^T xh >= 1, xh >= 0} with
|x*|/|xh*| >= 1 - O(eps), in time near-linear in the number of nonzeros
plus (r + c) log(n) / eps^2.  General instances max{a.x : Ax <= b} are
normalized to the restricted form and mapped back.
"""

from .model import (
    GeneralInstance,
    InvalidInstanceError,
    ScalingRecord,
    SparseNonNegMatrix,
    generate_random,
    load_instance,
    normalize,
    truncate,
    write_matrixmarket,
)
from .oracle import OracleResult, brute_force_tiny, solve_exact
from .sampler import SamplableVector
from .solver import (
    EPS_MAX,
    OpCounters,
    SolutionPair,
    SolverRun,
    iteration_budget,
    solve,
    solve_instance,
    solve_slow,
)
from .verify import Certificate, StatReport, audit_counters, certify, drift_test, tracking_test

__version__ = "0.1.0"

__all__ = [
    "Certificate",
    "EPS_MAX",
    "GeneralInstance",
    "InvalidInstanceError",
    "OpCounters",
    "OracleResult",
    "SamplableVector",
    "ScalingRecord",
    "SolutionPair",
    "SolverRun",
    "SparseNonNegMatrix",
    "StatReport",
    "audit_counters",
    "brute_force_tiny",
    "certify",
    "drift_test",
    "generate_random",
    "iteration_budget",
    "load_instance",
    "normalize",
    "solve",
    "solve_exact",
    "solve_instance",
    "solve_slow",
    "tracking_test",
    "truncate",
    "write_matrixmarket",
]
