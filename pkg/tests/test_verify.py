import json
import math

import numpy as np
import pytest

from packcover.model import SparseNonNegMatrix
from packcover.oracle import solve_exact
from packcover.solver import OpCounters, SolutionPair, SolverRun, solve
from packcover.verify import audit_counters, certify, drift_test, tracking_test


def make_pair(x, xh, eps=0.1, variant="simple"):
    x = np.asarray(x, dtype=float)
    xh = np.asarray(xh, dtype=float)
    return SolutionPair(x, xh, float(x.sum()), float(xh.sum()), eps, variant,
                        N=1, seed=0, counters=OpCounters())


class TestCertify:
    def test_trivial_pass(self):
        cert = certify([[1.0]], make_pair([1.0], [1.0]))
        assert cert.max_violation == pytest.approx(0.0)
        assert cert.min_slack == pytest.approx(0.0)
        assert cert.ratio == pytest.approx(1.0)
        assert cert.verdict

    def test_inflated_primal_fails(self):
        cert = certify([[1.0]], make_pair([1.01], [1.0]))
        assert cert.max_violation == pytest.approx(0.01)
        assert not cert.verdict

    def test_oracle_gap_field(self):
        pair = solve([[1, 2], [2, 1]], 0.05, variant="simple", seed=0,
                     engine="python")
        oracle = solve_exact([[1, 2], [2, 1]])
        cert = certify([[1, 2], [2, 1]], pair, oracle=oracle)
        assert cert.oracle_gap == pytest.approx(pair.primal_value / (2 / 3))

    def test_target_per_variant(self):
        assert certify([[1.0]], make_pair([1], [1], 0.05, "simple")).target == pytest.approx(0.7)
        assert certify([[1.0]], make_pair([1], [1], 0.05, "fast")).target == pytest.approx(0.65)
        assert certify([[1.0]], make_pair([1], [1], 0.05, "slow")).target == pytest.approx(0.9)

    def test_sparse_matrix_accepted(self):
        M = SparseNonNegMatrix.from_dense([[1.0]])
        assert certify(M, make_pair([1.0], [1.0])).verdict

    def test_json_roundtrip(self):
        cert = certify([[1.0]], make_pair([1.0], [1.0]))
        d = json.loads(cert.to_json())
        assert d["verdict"] == "pass"

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            certify(np.eye(3), make_pair([1.0], [1.0]))


class TestAuditCounters:
    def test_real_run_passes(self):
        pair = solve([[1, 2], [2, 1]], 0.1, variant="simple", seed=0,
                     engine="python")
        rep = audit_counters(pair.counters, 2, 2, pair.N)
        assert rep.all_passed

    def test_budget_violation_fails(self):
        ct = OpCounters(outer_iterations=10, increment_work=(2 + 2) * 5 + 1)
        rep = audit_counters(ct, 2, 2, 5)
        assert not rep.all_passed
        assert rep.properties[0].name == "increment_budget"

    def test_excess_empty_rate_fails(self):
        ct = OpCounters(outer_iterations=100_000, empty_iterations=90_000,
                        increment_work=0)
        rep = audit_counters(ct, 2, 2, 10 ** 9)
        empty = [p for p in rep.properties if p.name == "empty_rate"][0]
        assert not empty.passed
        # threshold is 3/4 plus five binomial sigmas, stated in the report
        assert empty.threshold == pytest.approx(
            0.75 + 5 * math.sqrt(0.75 * 0.25 / 100_000)
        )

    def test_json(self):
        ct = OpCounters(outer_iterations=10, increment_work=1)
        d = json.loads(audit_counters(ct, 2, 2, 5).to_json())
        assert d["verdict"] == "pass"
        assert all("threshold" in p for p in d["properties"])


def frozen_state(A, eps=0.1, steps=0, seed=0):
    run = SolverRun(SparseNonNegMatrix.from_dense(np.asarray(A, float)),
                    eps=eps, variant="simple", seed=seed)
    for _ in range(steps):
        if run.done:
            break
        run.step()
    return run


class TestDriftTest:
    def test_underpowered_rejected(self):
        with pytest.raises(ValueError, match="trials"):
            drift_test(frozen_state([[1.0]]), trials=10)

    def test_terminated_state_rejected(self):
        run = frozen_state([[1.0]])
        run.run()
        with pytest.raises(ValueError, match="terminated"):
            drift_test(run, trials=2000)

    def test_1x1_closed_form(self):
        # one step from scratch: with prob 1/2 (z <= 1/2) both weights move,
        # giving potential (1+e)(1-e) = 1-e^2; otherwise potential stays 1.
        # So E[R - 1] = -e^2/2 exactly.
        eps = 0.1
        state = frozen_state([[1.0]], eps=eps)
        trials = 4000
        rep = drift_test(state, trials=trials, seed=1)
        prop = rep.properties[0]
        assert prop.passed
        exact = -eps ** 2 / 2
        sigma = (eps ** 2 / 2) / math.sqrt(trials)  # Bernoulli(1/2) spread
        assert abs(prop.statistic - exact) <= 4 * sigma

    def test_midrun_random_instance(self):
        rng = np.random.default_rng(0)
        A = (rng.random((15, 15)) < 0.4) * 1.0
        A[0, A.max(axis=0) == 0] = 1.0
        state = frozen_state(A, eps=0.1, steps=40, seed=3)
        rep = drift_test(state, trials=2000, seed=2)
        assert rep.all_passed


class TestTrackingTest:
    def test_1x1_paired_exact(self):
        # dy = 1 iff z <= 1/2 and (M dx) = 1/2 always; paired difference
        # has mean zero
        rep = tracking_test(frozen_state([[1.0]]), trials=2000, seed=0)
        assert rep.all_passed

    def test_identity_symmetry(self):
        state = frozen_state(np.eye(2), eps=0.1)
        rep = tracking_test(state, trials=3000, seed=1)
        assert rep.all_passed

    def test_midrun_random_instance(self):
        rng = np.random.default_rng(5)
        A = (rng.random((10, 10)) < 0.5) * 1.0
        A[0, A.max(axis=0) == 0] = 1.0
        state = frozen_state(A, eps=0.1, steps=25, seed=6)
        rep = tracking_test(state, trials=3000, seed=2)
        assert rep.all_passed

    def test_underpowered_rejected(self):
        with pytest.raises(ValueError):
            tracking_test(frozen_state([[1.0]]), trials=999)
