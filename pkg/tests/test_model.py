import math

import numpy as np
import pytest

from packcover.model import (
    GeneralInstance,
    InvalidInstanceError,
    ParseError,
    SparseNonNegMatrix,
    exact_products,
    floor_log2,
    generate_random,
    load_instance,
    normalize,
    read_matrixmarket,
    truncate,
    write_matrixmarket,
)


def inst_from_dense(A, b=None, a=None):
    return GeneralInstance.from_dense(np.asarray(A, dtype=float), b, a)


class TestNormalize:
    def test_scalar(self):
        M, rec = normalize(inst_from_dense([[2.0]], b=[4.0], a=[2.0]))
        np.testing.assert_allclose(M.to_dense(), [[0.25]])

    def test_identity_unit_scales(self):
        M, rec = normalize(inst_from_dense(np.eye(2)))
        np.testing.assert_allclose(M.to_dense(), np.eye(2))

    def test_hand_case_preserves_sparsity(self):
        M, rec = normalize(inst_from_dense([[1, 3], [2, 0]], b=[2, 1], a=[1, 4]))
        np.testing.assert_allclose(M.to_dense(), [[0.5, 0.375], [2.0, 0.0]])
        # the absent entry stays absent, not an explicit zero
        assert M.n == 3

    def test_zero_column_rejected(self):
        with pytest.raises(InvalidInstanceError, match="column"):
            normalize(inst_from_dense([[1, 0], [2, 0]]))

    def test_zero_row_dropped_with_warning(self):
        with pytest.warns(UserWarning, match="vacuous"):
            M, rec = normalize(inst_from_dense([[1, 1], [0, 0]]))
        assert M.r == 1
        assert rec.original_r == 2
        dual = rec.dual_to_original(np.array([3.0]))
        np.testing.assert_allclose(dual, [3.0, 0.0])

    def test_nonpositive_scales_rejected(self):
        with pytest.raises(InvalidInstanceError):
            normalize(inst_from_dense([[1.0]], b=[0.0], a=[1.0]))
        with pytest.raises(InvalidInstanceError):
            normalize(inst_from_dense([[1.0]], b=[1.0], a=[-1.0]))

    def test_scaling_record_roundtrip(self):
        M, rec = normalize(inst_from_dense([[2, 4]], b=[2], a=[1, 2]))
        x = np.array([0.5, 0.25])
        np.testing.assert_allclose(rec.primal_to_original(x), [0.5, 0.125])
        np.testing.assert_allclose(rec.dual_to_original(np.array([1.0])), [0.5])


class TestTruncate:
    def test_drop_and_cap(self):
        M = SparseNonNegMatrix.from_dense([[4, 0.001], [2, 1]])
        T = truncate(M, 0.5)
        np.testing.assert_allclose(T.to_dense(), [[4, 0], [2, 1]])

    def test_single_entry_unchanged(self):
        M = SparseNonNegMatrix.from_dense([[1.0]])
        T = truncate(M, 0.1)
        np.testing.assert_allclose(T.to_dense(), [[1.0]])

    def test_in_range_unchanged(self):
        M = SparseNonNegMatrix(2, 2, [0, 0, 1], [0, 1, 1], [10.0, 1.0, 1.0])
        T = truncate(M, 0.1)
        np.testing.assert_allclose(T.to_dense(), [[10, 1], [0, 1]])

    def test_cap_applies(self):
        M = SparseNonNegMatrix.from_dense([[100.0, 0.9], [0.0, 1.0]])
        T = truncate(M, 0.5)  # beta=1, cap=4
        assert T.to_dense()[0, 0] == pytest.approx(4.0)

    def test_never_empties_a_column(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            A = rng.random((6, 6)) * np.exp(rng.normal(0, 5, (6, 6)))
            M = SparseNonNegMatrix.from_dense(A)
            T = truncate(M, 0.1)
            assert np.bincount(T.cols, minlength=6).min() > 0


class TestSorting:
    def row_values(self, M, i):
        return [v for _, v in M.row_entries(i)]

    def test_exact_sort_descending(self):
        M = SparseNonNegMatrix(1, 3, [0, 0, 0], [0, 1, 2], [5.0, 1.0, 3.0])
        M.sort()
        assert self.row_values(M, 0) == [5.0, 3.0, 1.0]

    def test_pseudo_sort_distinct_keys(self):
        M = SparseNonNegMatrix(1, 3, [0, 0, 0], [0, 1, 2], [5.0, 1.0, 3.0])
        M.pseudo_sort()  # keys 2, 0, 1
        assert self.row_values(M, 0) == [5.0, 3.0, 1.0]

    def test_pseudo_sort_equal_keys_any_order(self):
        M = SparseNonNegMatrix(1, 2, [0, 0], [0, 1], [3.0, 2.0])
        M.pseudo_sort()  # keys 1, 1
        assert sorted(self.row_values(M, 0)) == [2.0, 3.0]

    def test_sort_keeps_columns_descending_too(self):
        rng = np.random.default_rng(0)
        A = rng.random((8, 8))
        M = SparseNonNegMatrix.from_dense(A)
        M.sort()
        for j in range(8):
            vals = [v for _, v in M.col_entries(j)]
            assert vals == sorted(vals, reverse=True)
        M.check_consistency()


class TestDeleteColumn:
    def test_head_affected_rows(self):
        M = SparseNonNegMatrix(2, 2, [0, 0, 1], [0, 1, 1], [1.0, 2.0, 3.0])
        M.sort()
        affected = M.delete_column(1)
        assert sorted(affected) == [0, 1]
        assert [v for _, v in M.row_entries(0)] == [1.0]
        assert [v for _, v in M.row_entries(1)] == []

    def test_non_maximum_column_affects_nobody(self):
        M = SparseNonNegMatrix.from_dense([[5.0, 1.0], [4.0, 2.0]])
        M.sort()
        assert M.delete_column(1) == []

    def test_last_column_affects_all_its_rows(self):
        M = SparseNonNegMatrix.from_dense([[1.0], [2.0], [3.0]])
        M.sort()
        assert sorted(M.delete_column(0)) == [0, 1, 2]

    def test_double_delete_raises(self):
        M = SparseNonNegMatrix.from_dense([[1.0, 1.0]])
        M.delete_column(0)
        with pytest.raises(RuntimeError, match="twice"):
            M.delete_column(0)

    def test_uhat_bound_after_deletions(self):
        rng = np.random.default_rng(3)
        A = rng.random((10, 10)) + 0.01
        M = SparseNonNegMatrix.from_dense(A)
        M.pseudo_sort()
        order = rng.permutation(9)
        for j in order:
            for i in M.delete_column(int(j)):
                M.refresh_uhat(i, exact=False)
            for i in range(10):
                vals = [v for _, v in M.row_entries(i)]
                if vals:
                    assert max(vals) <= M.uhat[i] <= 2 * max(vals) + 1e-15
                else:
                    assert M.uhat[i] == 0.0
        M.check_consistency()

    def test_u_is_exact_column_max(self):
        rng = np.random.default_rng(4)
        A = rng.random((6, 6)) + 0.01
        M = SparseNonNegMatrix.from_dense(A)
        np.testing.assert_allclose(M.u, A.max(axis=0))


class TestExactProducts:
    def test_scalar(self):
        M = SparseNonNegMatrix.from_dense([[1.0]])
        Mx, MTxh = exact_products(M, np.array([2.0]), np.array([0.0]))
        np.testing.assert_allclose(Mx, [2.0])

    def test_identity_transpose(self):
        M = SparseNonNegMatrix.from_dense(np.eye(2))
        _, MTxh = exact_products(M, np.zeros(2), np.array([1.0, 3.0]))
        np.testing.assert_allclose(MTxh, [1.0, 3.0])

    def test_hand_product(self):
        M = SparseNonNegMatrix.from_dense([[1, 2], [2, 1]])
        Mx, _ = exact_products(M, np.array([1.0, 1.0]), np.zeros(2))
        np.testing.assert_allclose(Mx, [3.0, 3.0])

    def test_deleted_entries_still_counted(self):
        # final scaling must see the original matrix, deletions or not
        M = SparseNonNegMatrix.from_dense([[1.0, 2.0]])
        M.delete_column(1)
        Mx, _ = exact_products(M, np.array([1.0, 1.0]), np.zeros(1))
        np.testing.assert_allclose(Mx, [3.0])


class TestGenerateRandom:
    def test_density_one_all_ones(self):
        inst = generate_random(1, 1, 1.0, seed=0)
        np.testing.assert_allclose(inst.to_dense(), [[1.0]])
        inst = generate_random(2, 2, 1.0, seed=0)
        np.testing.assert_allclose(inst.to_dense(), np.ones((2, 2)))

    def test_nnz_within_binomial_range(self):
        inst = generate_random(100, 100, 0.25, seed=7)
        assert 2500 - 175 <= inst.nnz <= 2500 + 175

    def test_empirical_density(self):
        # 3 sigma over >= 1e6 cells
        inst = generate_random(1000, 1000, 0.25, seed=11)
        d = inst.nnz / 1e6
        sigma = math.sqrt(0.25 * 0.75 / 1e6)
        assert abs(d - 0.25) <= 3 * sigma

    def test_always_well_posed(self):
        for seed in range(10):
            inst = generate_random(30, 30, 0.05, seed=seed)
            A = inst.to_dense()
            assert A.any(axis=0).all() and A.any(axis=1).all()

    def test_deterministic(self):
        a = generate_random(20, 20, 0.3, seed=5)
        b = generate_random(20, 20, 0.3, seed=5)
        np.testing.assert_array_equal(a.to_dense(), b.to_dense())

    def test_bad_args(self):
        with pytest.raises(ValueError):
            generate_random(0, 1, 0.5, 0)
        with pytest.raises(ValueError):
            generate_random(1, 1, 0.0, 0)


class TestFloorLog2:
    def test_exact_on_powers_and_neighbors(self):
        v = np.array([1.0, 2.0, 0.5, 4.0, 3.0, 5.0, 1e-300, 1e300])
        expected = np.array([math.floor(math.log2(x)) for x in v])
        np.testing.assert_array_equal(floor_log2(v), expected)

    def test_boundary_belongs_upward(self):
        # 2^k is the bottom of bucket k, not the top of bucket k-1
        assert floor_log2(np.array([8.0]))[0] == 3


class TestMatrixMarketIO:
    def test_roundtrip(self, tmp_path):
        inst = generate_random(7, 5, 0.5, seed=2)
        path = tmp_path / "m.mtx"
        write_matrixmarket(path, inst)
        back = read_matrixmarket(path)
        np.testing.assert_allclose(back.to_dense(), inst.to_dense())

    def test_negative_rejected(self, tmp_path):
        path = tmp_path / "neg.mtx"
        path.write_text(
            "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 -3.0\n"
        )
        with pytest.raises(InvalidInstanceError):
            read_matrixmarket(path)

    def test_garbage_rejected(self, tmp_path):
        path = tmp_path / "bad.mtx"
        path.write_text("not a matrix\n")
        with pytest.raises(ParseError):
            read_matrixmarket(path)

    def test_sidecar_vectors(self, tmp_path):
        inst = generate_random(3, 4, 1.0, seed=0)
        mpath = tmp_path / "m.mtx"
        write_matrixmarket(mpath, inst)
        bpath = tmp_path / "b.txt"
        bpath.write_text("2 2 2\n")
        loaded = load_instance(mpath, b_path=bpath)
        np.testing.assert_allclose(loaded.b, [2, 2, 2])
        bad = tmp_path / "short.txt"
        bad.write_text("1 2\n")
        with pytest.raises(InvalidInstanceError, match="length"):
            load_instance(mpath, b_path=bad)


class TestConsistency:
    def test_cross_reference_audit_after_fuzz(self):
        rng = np.random.default_rng(9)
        for trial in range(5):
            A = (rng.random((12, 12)) < 0.4) * (rng.random((12, 12)) + 0.1)
            cols_ok = A.max(axis=0) > 0
            A[:, ~cols_ok] = 0
            A[0, ~cols_ok] = 1.0
            M = SparseNonNegMatrix.from_dense(A)
            if trial % 2:
                M.sort()
            else:
                M.pseudo_sort()
            for j in rng.permutation(12)[:6]:
                for i in M.delete_column(int(j)):
                    M.refresh_uhat(i, exact=bool(trial % 2))
                M.check_consistency()
