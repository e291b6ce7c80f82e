import numpy as np
import pytest

from packcover.oracle import OracleResult, brute_force_tiny, solve_exact


class TestSolveExact:
    def test_scalar(self):
        res = solve_exact([[1.0]])
        assert res.value == pytest.approx(1.0)
        assert res.status == "optimal"

    def test_2x2_hand_case(self):
        res = solve_exact([[1, 2], [2, 1]])
        assert res.value == pytest.approx(2 / 3, abs=1e-12)
        np.testing.assert_allclose(res.x, [1 / 3, 1 / 3], atol=1e-12)

    @pytest.mark.parametrize("k", [1, 2, 5, 10])
    def test_identity(self, k):
        res = solve_exact(np.eye(k))
        assert res.value == pytest.approx(float(k))

    def test_strong_duality_and_dual_feasibility(self):
        for seed in range(20):
            rng = np.random.default_rng(seed)
            r, c = rng.integers(2, 12, size=2)
            A = rng.random((r, c)) * (rng.random((r, c)) < 0.6)
            A[0, A.max(axis=0) == 0] = 1.0
            res = solve_exact(A)
            res.check_strong_duality()
            assert (A.T @ res.y).min() >= 1 - 1e-7
            assert (A @ res.x).max() <= 1 + 1e-9
            assert res.x.min() >= -1e-12 and res.y.min() >= -1e-12

    def test_unbounded_zero_column(self):
        res = solve_exact([[1.0, 0.0]])
        assert res.status == "unbounded"

    def test_size_cap(self):
        with pytest.raises(ValueError, match="capped"):
            solve_exact(np.ones((301, 2)))

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            solve_exact([[-1.0]])

    def test_degenerate_ties_terminate(self):
        # heavy ties exercise the anti-cycling rule
        res = solve_exact(np.ones((8, 8)))
        assert res.value == pytest.approx(1.0)


class TestBruteForceTiny:
    def test_scalar(self):
        assert brute_force_tiny([[1.0]]) == pytest.approx(1.0, abs=1e-3)

    def test_2x2(self):
        assert brute_force_tiny([[1, 2], [2, 1]]) == pytest.approx(2 / 3, abs=2e-3)

    def test_1x2_split(self):
        assert brute_force_tiny([[1.0, 1.0]]) == pytest.approx(1.0, abs=1e-3)

    def test_too_wide_rejected(self):
        with pytest.raises(ValueError):
            brute_force_tiny(np.ones((2, 4)))

    def test_agreement_with_exact(self):
        rng = np.random.default_rng(42)
        for _ in range(50):
            r = int(rng.integers(1, 4))
            c = int(rng.integers(1, 4))
            A = rng.choice([0.0, 0.5, 1.0, 2.0], size=(r, c))
            for j in range(c):
                if A[:, j].max() == 0:
                    A[int(rng.integers(0, r)), j] = 1.0
            assert brute_force_tiny(A) == pytest.approx(solve_exact(A).value,
                                                        abs=3e-3)
