import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from packcover.sampler import SamplableVector


def total_float(v):
    m, e = v.total()
    return math.ldexp(m, e)


class TestBuild:
    def test_total_simple(self):
        assert total_float(SamplableVector([1, 2, 3])) == pytest.approx(6.0)

    def test_zero_entry_unsampleable(self):
        v = SamplableVector([0, 5])
        assert total_float(v) == pytest.approx(5.0)
        rng = np.random.default_rng(0)
        assert all(v.sample(rng) == 1 for _ in range(200))

    def test_large_uniform(self):
        v = SamplableVector(np.ones(1000))
        assert total_float(v) == pytest.approx(1000.0)

    def test_all_zero_rejected(self):
        with pytest.raises(ValueError):
            SamplableVector([0.0, 0.0])

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            SamplableVector([1.0, -1.0])


class TestSample:
    def test_singleton(self):
        v = SamplableVector([1.0])
        rng = np.random.default_rng(1)
        assert all(v.sample(rng) == 0 for _ in range(50))

    def test_two_weights_binomial(self):
        # P(index 1) = 5/8 within 3 sigma over 1e5 draws
        v = SamplableVector([3.0, 5.0])
        rng = np.random.default_rng(2)
        n = 100_000
        hits = sum(v.sample(rng) for _ in range(n))
        sigma = math.sqrt(0.625 * 0.375 / n)
        assert abs(hits / n - 0.625) <= 3 * sigma

    def test_chi_square_small(self):
        from scipy.stats import chisquare

        v = SamplableVector([1.0, 2.0, 3.0])
        rng = np.random.default_rng(3)
        n = 60_000
        counts = np.zeros(3)
        for _ in range(n):
            counts[v.sample(rng)] += 1
        _, p = chisquare(counts, n * np.array([1 / 6, 1 / 3, 1 / 2]))
        assert p > 1e-3

    def test_wide_exponent_range(self):
        # weights spanning hundreds of binary orders of magnitude still
        # sample the dominant entry essentially always
        v = SamplableVector([1.0, 1.0])
        for _ in range(2000):
            v.scale_entry(1, 1.5)  # 1.5^2000 ~ 2^1170
        rng = np.random.default_rng(4)
        assert all(v.sample(rng) == 1 for _ in range(100))

    def test_empty_after_zeroing_all(self):
        v = SamplableVector([1.0, 1.0])
        v.set_zero(0)
        v.set_zero(1)
        with pytest.raises(ValueError):
            v.sample(np.random.default_rng(0))


class TestScaleEntry:
    def test_repeated_shrink_exact(self):
        eps = 0.1
        v = SamplableVector([1.0, 1.0])
        for _ in range(1000):
            v.scale_entry(0, 1.0 - eps)
        w = v.weight_float(0)
        assert w == pytest.approx((1.0 - eps) ** 1000, rel=1e-12)

    def test_other_entries_bit_exact(self):
        v = SamplableVector([1.25, 1.75])
        before = v.weight(1)
        for _ in range(100):
            v.scale_entry(0, 1.05)
        assert v.weight(1) == before

    def test_scale_zeroed_raises(self):
        v = SamplableVector([1.0, 1.0])
        v.set_zero(0)
        with pytest.raises(ValueError):
            v.scale_entry(0, 1.1)

    def test_amortized_bucket_moves(self):
        # each 1.05x scaling moves log2(1.05) of the way to the next bucket
        rng = np.random.default_rng(5)
        n = 64
        v = SamplableVector(np.ones(n))
        calls = 100_000
        for _ in range(calls):
            v.scale_entry(int(rng.integers(n)), 1.05)
        bound = calls * math.log2(1.05) + n
        assert v.bucket_moves <= 2 * bound


class TestSetZero:
    def test_sample_avoids_zeroed(self):
        v = SamplableVector([1.0, 1.0])
        v.set_zero(0)
        rng = np.random.default_rng(6)
        assert all(v.sample(rng) == 1 for _ in range(200))

    def test_total_drops(self):
        v = SamplableVector([2.0, 3.0, 5.0])
        v.set_zero(1)
        assert total_float(v) == pytest.approx(7.0)

    def test_double_zero_raises(self):
        v = SamplableVector([1.0, 1.0])
        v.set_zero(0)
        with pytest.raises(ValueError):
            v.set_zero(0)


class TestRenormalize:
    def test_ratios_bit_identical(self):
        v = SamplableVector([1.5, 2.5, 4.0])
        before = [v.weight(i)[0] for i in range(3)]
        v.renormalize(512)
        after = [v.weight(i)[0] for i in range(3)]
        assert before == after  # mantissas untouched: ratios exact

    def test_total_exponent_shift(self):
        v = SamplableVector([1.0, 1.0])
        m0, e0 = v.total()
        v.renormalize(512)
        m1, e1 = v.total()
        assert m1 == m0 and e1 == e0 - 512

    def test_sampling_unchanged(self):
        v = SamplableVector([3.0, 5.0])
        w = v.clone()
        w.renormalize(512)
        r1 = np.random.default_rng(7)
        r2 = np.random.default_rng(7)
        assert [v.sample(r1) for _ in range(100)] == [w.sample(r2) for _ in range(100)]


class TestCloneAndAudit:
    def test_clone_independent(self):
        v = SamplableVector([1.0, 2.0])
        w = v.clone()
        v.scale_entry(0, 1.1)
        assert w.weight_float(0) == pytest.approx(1.0)

    @settings(max_examples=30, deadline=None)
    @given(
        weights=st.lists(st.floats(min_value=1e-6, max_value=1e6), min_size=1,
                         max_size=12),
        ops=st.lists(st.tuples(st.integers(0, 11), st.sampled_from([1.05, 0.95, 0.0])),
                     max_size=40),
    )
    def test_fuzz_consistency(self, weights, ops):
        v = SamplableVector(weights)
        n = len(weights)
        expected = np.asarray(weights, dtype=float)
        for idx, f in ops:
            i = idx % n
            if not v.alive[i]:
                continue
            if f == 0.0:
                if v.live_count > 1:
                    v.set_zero(i)
                    expected[i] = 0.0
            else:
                v.scale_entry(i, f)
                expected[i] *= f
        v.check_consistency()
        for i in range(n):
            if expected[i] > 0:
                assert v.weight_float(i) == pytest.approx(expected[i], rel=1e-9)

    def test_sample_never_returns_zeroed(self):
        rng = np.random.default_rng(8)
        v = SamplableVector(np.ones(16))
        dead = set()
        for i in [3, 7, 11, 0, 15]:
            v.set_zero(i)
            dead.add(i)
            for _ in range(100):
                assert v.sample(rng) not in dead
