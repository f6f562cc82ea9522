import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anchorscore import (
    CentroidPair,
    ConstantInputError,
    EmbeddingDataset,
    MissingMetadataError,
    ValidationError,
    evaluate,
    krcc,
    plcc,
    rank_with_ties,
    srcc,
    srcc_closed_form,
)
from anchorscore.evaluation import rank_data, report_to_json_dict
from oracles import oracle_krcc, oracle_ranks, oracle_srcc, oracle_srcc_closed_form

finite_floats = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


class TestRanks:
    def test_sorted_distinct(self):
        assert rank_with_ties([10.0, 20.0, 30.0]).tolist() == [1.0, 2.0, 3.0]

    def test_tie_pair(self):
        assert rank_with_ties([5.0, 5.0, 7.0]).tolist() == [1.5, 1.5, 3.0]

    def test_full_tie(self):
        assert rank_with_ties([2.0, 2.0, 2.0, 2.0]).tolist() == [2.5] * 4

    def test_nan_rejected(self):
        with pytest.raises(ValidationError):
            rank_with_ties([1.0, float("nan")])

    @given(st.lists(finite_floats, min_size=1, max_size=60))
    @settings(max_examples=200, deadline=None)
    def test_matches_definition_and_sums_correctly(self, values):
        ranks = rank_with_ties(values)
        assert ranks.tolist() == oracle_ranks(values)
        n = len(values)
        assert float(ranks.sum()) == pytest.approx(n * (n + 1) / 2, rel=1e-12)

    def test_tie_groups_share_average_position(self):
        ranks = rank_with_ties([3.0, 1.0, 3.0, 2.0, 3.0])
        assert ranks.tolist() == [4.0, 1.0, 4.0, 2.0, 4.0]


class TestSrcc:
    def test_identity_ordering(self):
        assert srcc([1.0, 2.0, 3.0, 4.0], [10.0, 20.0, 30.0, 40.0]) == 1.0

    def test_reversed_ordering(self):
        assert srcc([1, 2, 3, 4, 5], [5, 4, 3, 2, 1]) == -1.0

    def test_single_adjacent_swap(self):
        # d^2 sums to 2: 1 - 12/120 = 0.9
        assert srcc([1, 2, 3, 4, 5], [1, 3, 2, 4, 5]) == pytest.approx(0.9, abs=1e-15)

    def test_length_mismatch(self):
        with pytest.raises(ValidationError):
            srcc([1.0, 2.0], [1.0, 2.0, 3.0])

    def test_constant_input_is_error(self):
        with pytest.raises(ConstantInputError):
            srcc([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])
        with pytest.raises(ConstantInputError):
            srcc([1.0, 2.0, 3.0], [4.0, 4.0, 4.0])

    def test_too_short(self):
        with pytest.raises(ValidationError):
            srcc([1.0], [2.0])

    @given(st.permutations(list(range(8))), st.permutations(list(range(8))))
    @settings(max_examples=150, deadline=None)
    def test_tie_free_closed_form_agreement(self, a, b):
        a = [float(v) for v in a]
        b = [float(v) for v in b]
        assert srcc(a, b) == pytest.approx(srcc_closed_form(a, b), abs=1e-12)
        assert srcc_closed_form(a, b) == oracle_srcc_closed_form(a, b)

    @given(
        st.lists(st.integers(0, 5), min_size=2, max_size=7).filter(
            lambda v: len(set(v)) > 1
        ),
        st.lists(st.integers(0, 5), min_size=2, max_size=7).filter(
            lambda v: len(set(v)) > 1
        ),
    )
    @settings(max_examples=300, deadline=None)
    def test_matches_brute_force_with_ties(self, a, b):
        n = min(len(a), len(b))
        a, b = [float(v) for v in a[:n]], [float(v) for v in b[:n]]
        if len(set(a)) < 2 or len(set(b)) < 2 or n < 2:
            return
        assert srcc(a, b) == oracle_srcc(a, b)

    @given(st.lists(finite_floats, min_size=3, max_size=40, unique=True))
    @settings(max_examples=100, deadline=None)
    def test_monotone_map_invariance(self, a):
        rng = np.random.default_rng(0)
        b = list(rng.normal(size=len(a)))
        base = srcc(a, b)
        for mapped in (
            [3.0 * v + 10.0 for v in a],
            [np.arctan(v) for v in a],
            list(rank_with_ties(a)),
        ):
            if len(set(mapped)) != len(a):
                continue  # float rounding collapsed values; map not strict
            assert srcc(mapped, b) == base

    def test_bounds(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            a = rng.normal(size=10)
            b = rng.normal(size=10)
            assert -1.0 <= srcc(a, b) <= 1.0


class TestKrcc:
    def test_identical_sequences(self):
        assert krcc([1, 2, 3, 4], [1, 2, 3, 4]) == 1.0

    def test_one_adjacent_swap(self):
        # 9 concordant, 1 discordant of 10 pairs -> 0.8
        assert krcc([1, 2, 3, 4, 5], [1, 3, 2, 4, 5]) == pytest.approx(0.8, abs=1e-15)

    def test_all_tied_is_error(self):
        with pytest.raises(ConstantInputError):
            krcc([2.0, 2.0, 2.0], [1.0, 2.0, 3.0])

    def test_unknown_method(self):
        with pytest.raises(ValidationError):
            krcc([1.0, 2.0], [1.0, 2.0], method="bubble")

    @given(
        st.lists(st.integers(0, 6), min_size=2, max_size=30).filter(
            lambda v: len(set(v)) > 1
        )
    )
    @settings(max_examples=200, deadline=None)
    def test_mergesort_agrees_with_naive(self, a):
        rng = np.random.default_rng(len(a))
        b = [float(v) for v in rng.integers(0, 6, len(a))]
        if len(set(b)) < 2:
            return
        a = [float(v) for v in a]
        assert krcc(a, b, method="mergesort") == krcc(a, b, method="naive")

    @given(
        st.lists(st.integers(0, 5), min_size=2, max_size=7).filter(
            lambda v: len(set(v)) > 1
        ),
        st.integers(0, 2**32 - 1),
    )
    @settings(max_examples=300, deadline=None)
    def test_matches_brute_force(self, a, seed):
        rng = np.random.default_rng(seed)
        b = [float(v) for v in rng.integers(0, 5, len(a))]
        if len(set(b)) < 2:
            return
        a = [float(v) for v in a]
        assert krcc(a, b) == oracle_krcc(a, b)


class TestPlcc:
    def test_affine_relation(self):
        a = [1.0, 2.0, 3.0, 4.0]
        assert plcc(a, [2.0 * v + 3.0 for v in a]) == 1.0

    def test_negation(self):
        a = [1.0, 2.0, 3.0]
        assert plcc(a, [-v for v in a]) == -1.0

    def test_hand_computed_value(self):
        assert plcc([1.0, 2.0, 3.0], [1.0, 2.0, 4.0]) == pytest.approx(0.98198, abs=1e-5)

    def test_constant_is_error(self):
        with pytest.raises(ConstantInputError):
            plcc([1.0, 1.0], [1.0, 2.0])


class TestRankData:
    def test_fields(self):
        rd = rank_data([1.0, 2.0, 2.0], [3.0, 2.0, 1.0])
        assert rd.n == 3
        assert rd.ranks_a.tolist() == [1.0, 2.5, 2.5]
        assert rd.ranks_b.tolist() == [3.0, 2.0, 1.0]
        assert rd.d.tolist() == [-2.0, 0.5, 1.5]


def identity_dataset(n=20, dim=4, seed=0):
    """Dataset whose MOS equals a strictly monotone function of the score."""
    rng = np.random.default_rng(seed)
    hi = rng.normal(size=dim)
    lo = rng.normal(size=dim)
    pair = CentroidPair(hi, lo, dim, "test", "test")
    rows = rng.normal(size=(n, dim)).astype(np.float32)
    ds0 = EmbeddingDataset(dim, rows, [f"r{i}" for i in range(n)])
    from anchorscore import score_batch

    results, _ = score_batch(ds0, pair)
    mos = [c.score for _, c in results]
    return EmbeddingDataset(dim, rows, ds0.ids, mos), pair


class TestEvaluate:
    def test_identity_scores_give_perfect_srcc(self):
        ds, pair = identity_dataset()
        report = evaluate(ds, pair, measures=("srcc", "krcc", "plcc"))
        assert report.srcc == 1.0
        assert report.krcc == 1.0
        assert report.plcc == pytest.approx(1.0, abs=1e-12)
        assert report.n == len(ds)

    def test_mos_sign_flip_negates_srcc(self):
        ds, pair = identity_dataset(seed=1)
        flipped = EmbeddingDataset(
            ds.dim, ds.embeddings, ds.ids, [-m for m in ds.mos]
        )
        a = evaluate(ds, pair).srcc
        b = evaluate(flipped, pair).srcc
        assert a == -b

    def test_order_invariance(self):
        ds, pair = identity_dataset(seed=2)
        perm = list(np.random.default_rng(3).permutation(len(ds)))
        shuffled = ds.select(perm)
        assert evaluate(ds, pair).srcc == evaluate(shuffled, pair).srcc

    def test_missing_mos_is_error(self):
        ds, pair = identity_dataset(seed=4)
        broken = EmbeddingDataset(
            ds.dim, ds.embeddings, ds.ids, list(ds.mos[:-1]) + [None]
        )
        with pytest.raises(MissingMetadataError):
            evaluate(broken, pair)

    def test_fewer_than_two_scorable_is_error(self):
        rng = np.random.default_rng(5)
        pair = CentroidPair(rng.normal(size=3), rng.normal(size=3), 3, "t", "t")
        rows = np.zeros((3, 3), dtype=np.float32)
        rows[0] = rng.normal(size=3)
        ds = EmbeddingDataset(3, rows, ["a", "b", "c"], [1.0, 2.0, 3.0])
        with pytest.raises(ValidationError, match="scorable"):
            evaluate(ds, pair)

    def test_unknown_measure(self):
        ds, pair = identity_dataset(seed=6)
        with pytest.raises(ValidationError, match="unknown measures"):
            evaluate(ds, pair, measures=("srcc", "rmse"))

    def test_constant_mos_is_error(self):
        ds, pair = identity_dataset(seed=7)
        const = EmbeddingDataset(ds.dim, ds.embeddings, ds.ids, [1.0] * len(ds))
        with pytest.raises(ConstantInputError):
            evaluate(const, pair)

    def test_measures_off_by_default(self):
        ds, pair = identity_dataset(seed=8)
        report = evaluate(ds, pair)
        assert report.krcc is None and report.plcc is None

    def test_json_dict_shape(self):
        ds, pair = identity_dataset(seed=9, n=3)
        report = evaluate(ds, pair)
        obj = report_to_json_dict(report)
        assert set(obj) == {"n", "srcc", "krcc", "plcc", "per_image"}
        assert len(obj["per_image"]) == 3
        assert set(obj["per_image"][0]) == {"id", "score", "mos"}
