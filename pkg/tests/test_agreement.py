"""Agreement kernel and weighted-kappa tests.

The two 5x5 kernels are frozen here cell by cell and every statistic is
cross-checked against plain-loop oracles written independently of the
library internals.
"""

from __future__ import annotations

import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from music_arena.agreement import (
    DIRECTION,
    DISTANCE,
    AgreementMatrix,
    direction_agreement,
    distance_agreement,
    kappa,
)
from music_arena.errors import (
    EmptySampleError,
    InvalidArgumentError,
    UndefinedKappaError,
)
from music_arena.judgments import COMPARATIVE_OPTIONS, JudgmentOption

MUCH_A, BETTER_A, EQUAL, BETTER_B, MUCH_B = COMPARATIVE_OPTIONS
NONE = JudgmentOption.NONE
NA = JudgmentOption.NOT_APPLICABLE

THIRD = 1.0 / 3.0

# Expected kernels, rows and columns ordered A>>B, A>B, A=B, A<B, A<<B.
EXPECTED_DISTANCE = [
    [1.0, 1.0, 1 / 3, 0.0, 0.0],
    [1.0, 1.0, 2 / 3, 1 / 3, 0.0],
    [1 / 3, 2 / 3, 1.0, 2 / 3, 1 / 3],
    [0.0, 1 / 3, 2 / 3, 1.0, 1.0],
    [0.0, 0.0, 1 / 3, 1.0, 1.0],
]
EXPECTED_DIRECTION = [
    [1.0, 1.0, 1.0, 0.0, 0.0],
    [1.0, 1.0, 1.0, 0.0, 0.0],
    [1.0, 1.0, 1.0, 1.0, 1.0],
    [0.0, 0.0, 1.0, 1.0, 1.0],
    [0.0, 0.0, 1.0, 1.0, 1.0],
]


class TestKernels:
    def test_distance_matrix_all_25_cells(self):
        matrix = AgreementMatrix.distance()
        for i, a in enumerate(COMPARATIVE_OPTIONS):
            for j, b in enumerate(COMPARATIVE_OPTIONS):
                assert matrix.score(a, b) == pytest.approx(
                    EXPECTED_DISTANCE[i][j], abs=1e-12
                ), (a, b)

    def test_direction_matrix_all_25_cells(self):
        matrix = AgreementMatrix.direction()
        for i, a in enumerate(COMPARATIVE_OPTIONS):
            for j, b in enumerate(COMPARATIVE_OPTIONS):
                assert matrix.score(a, b) == EXPECTED_DIRECTION[i][j], (a, b)

    def test_distance_examples(self):
        assert distance_agreement(MUCH_A, EQUAL) == pytest.approx(THIRD, abs=1e-12)
        assert distance_agreement(MUCH_A, MUCH_B) == 0.0
        for option in COMPARATIVE_OPTIONS:
            assert distance_agreement(option, option) == 1.0

    def test_direction_examples(self):
        assert direction_agreement(MUCH_A, BETTER_A) == 1.0
        assert direction_agreement(BETTER_A, BETTER_B) == 0.0
        for option in COMPARATIVE_OPTIONS:
            assert direction_agreement(EQUAL, option) == 1.0

    def test_kernels_symmetric_unit_diagonal(self):
        for matrix in (AgreementMatrix.distance(), AgreementMatrix.direction()):
            for a in COMPARATIVE_OPTIONS:
                assert matrix.score(a, a) == 1.0
                for b in COMPARATIVE_OPTIONS:
                    assert matrix.score(a, b) == matrix.score(b, a)

    def test_identical_judgments_agree_under_both_kernels(self):
        for a in COMPARATIVE_OPTIONS:
            assert distance_agreement(a, a) == 1.0
            assert direction_agreement(a, a) == 1.0

    def test_distance_cells_limited_to_thirds(self):
        allowed = {0.0, 1 / 3, 2 / 3, 1.0}
        for row in AgreementMatrix.distance().cells:
            assert set(row) <= allowed

    @pytest.mark.parametrize("bad", [NONE, NA])
    def test_non_comparative_inputs_rejected(self, bad):
        with pytest.raises(InvalidArgumentError):
            distance_agreement(bad, EQUAL)
        with pytest.raises(InvalidArgumentError):
            direction_agreement(EQUAL, bad)

    def test_full_distance_credit_implies_full_direction_credit(self):
        for a in COMPARATIVE_OPTIONS:
            for b in COMPARATIVE_OPTIONS:
                if distance_agreement(a, b) == 1.0:
                    assert direction_agreement(a, b) == 1.0, (a, b)

    def test_of_kind(self):
        assert AgreementMatrix.of_kind(DISTANCE).kind == DISTANCE
        assert AgreementMatrix.of_kind(DIRECTION).kind == DIRECTION
        with pytest.raises(InvalidArgumentError):
            AgreementMatrix.of_kind("hamming")


SIX_PAIRS = [
    (MUCH_A, BETTER_A),
    (BETTER_A, EQUAL),
    (EQUAL, BETTER_B),
    (MUCH_B, MUCH_B),
    (MUCH_A, MUCH_B),
    (BETTER_A, BETTER_A),
]


def _oracle_kappa(pairs, cells):
    """Plain-loop reference: mean kernel value and marginal-product chance."""
    index = {opt: i for i, opt in enumerate(COMPARATIVE_OPTIONS)}
    p_o = sum(cells[index[a]][index[b]] for a, b in pairs) / len(pairs)
    n = len(pairs)
    marg_a = [sum(1 for a, _ in pairs if index[a] == i) / n for i in range(5)]
    marg_b = [sum(1 for _, b in pairs if index[b] == j) / n for j in range(5)]
    p_e = sum(
        marg_a[i] * marg_b[j] * cells[i][j] for i in range(5) for j in range(5)
    )
    return p_o, p_e, (p_o - p_e) / (1.0 - p_e)


class TestKappa:
    def test_six_pair_fixture_matches_hand_computation(self):
        report = kappa(SIX_PAIRS, AgreementMatrix.distance(), criterion="Inst")
        p_o, p_e, expected = _oracle_kappa(SIX_PAIRS, EXPECTED_DISTANCE)
        # Spelled out: (1 + 2/3 + 2/3 + 1 + 0 + 1) / 6 = 13/18.
        assert p_o == pytest.approx(13.0 / 18.0, abs=1e-12)
        assert report.p_o_mean == pytest.approx(p_o, abs=1e-12)
        assert report.p_e == pytest.approx(p_e, abs=1e-12)
        assert report.kappa == pytest.approx(expected, abs=1e-12)
        assert report.n_items == 6
        assert report.n_excluded == 0
        assert report.criterion == "Inst"

    def test_six_pair_fixture_direction_kernel(self):
        report = kappa(SIX_PAIRS, AgreementMatrix.direction())
        p_o, p_e, expected = _oracle_kappa(SIX_PAIRS, EXPECTED_DIRECTION)
        assert report.p_o_mean == pytest.approx(p_o, abs=1e-12)
        assert report.kappa == pytest.approx(expected, abs=1e-12)

    def test_perfect_varied_agreement_is_exactly_one(self):
        stream = [(opt, opt) for opt in COMPARATIVE_OPTIONS] * 4
        for matrix in (AgreementMatrix.distance(), AgreementMatrix.direction()):
            assert kappa(stream, matrix).kappa == 1.0

    def test_chance_level_stream_is_near_zero(self):
        rng = random.Random(7)
        pairs = [
            (rng.choice(COMPARATIVE_OPTIONS), rng.choice(COMPARATIVE_OPTIONS))
            for _ in range(10_000)
        ]
        for matrix in (AgreementMatrix.distance(), AgreementMatrix.direction()):
            assert abs(kappa(pairs, matrix).kappa) < 0.05

    def test_constructed_zero_kappa(self):
        # Marginals uniform over {A>>B, A<<B}; observed agreement matches
        # chance exactly: each annotator flips an independent fair coin.
        pairs = [
            (MUCH_A, MUCH_A),
            (MUCH_A, MUCH_B),
            (MUCH_B, MUCH_A),
            (MUCH_B, MUCH_B),
        ]
        report = kappa(pairs, AgreementMatrix.distance())
        assert report.p_o_mean == pytest.approx(report.p_e, abs=1e-12)
        assert report.kappa == pytest.approx(0.0, abs=1e-12)

    def test_excluded_pairs_only_touch_bookkeeping(self):
        base = kappa(SIX_PAIRS, AgreementMatrix.distance())
        noisy = kappa(
            SIX_PAIRS + [(NONE, EQUAL), (MUCH_A, NA), (NONE, NA)],
            AgreementMatrix.distance(),
        )
        assert noisy.p_o_mean == base.p_o_mean
        assert noisy.p_e == base.p_e
        assert noisy.kappa == base.kappa
        assert noisy.n_items == base.n_items == 6
        assert noisy.n_excluded == 3

    def test_all_excluded_is_empty_sample(self):
        with pytest.raises(EmptySampleError):
            kappa([(NONE, EQUAL), (NA, NA)], AgreementMatrix.distance())

    def test_total_chance_agreement_is_undefined(self):
        with pytest.raises(UndefinedKappaError):
            kappa([(MUCH_A, MUCH_A)] * 5, AgreementMatrix.distance())
        # Constant annotators on adjacent same-direction options: the
        # distance kernel scores them 1, so chance agreement is also total.
        with pytest.raises(UndefinedKappaError):
            kappa([(MUCH_A, BETTER_A)] * 5, AgreementMatrix.distance())

    @given(
        data=st.lists(
            st.tuples(
                st.sampled_from(COMPARATIVE_OPTIONS),
                st.sampled_from(COMPARATIVE_OPTIONS),
            ),
            min_size=2,
            max_size=50,
        )
    )
    def test_annotator_role_swap_invariance(self, data):
        swapped = [(b, a) for a, b in data]
        for matrix in (AgreementMatrix.distance(), AgreementMatrix.direction()):
            try:
                first = kappa(data, matrix)
            except UndefinedKappaError:
                with pytest.raises(UndefinedKappaError):
                    kappa(swapped, matrix)
                continue
            second = kappa(swapped, matrix)
            assert second.p_o_mean == pytest.approx(first.p_o_mean, abs=1e-12)
            assert second.p_e == pytest.approx(first.p_e, abs=1e-12)
            assert second.kappa == pytest.approx(first.kappa, abs=1e-12)

    @given(
        data=st.lists(
            st.tuples(
                st.sampled_from(COMPARATIVE_OPTIONS),
                st.sampled_from(COMPARATIVE_OPTIONS),
            ),
            min_size=2,
            max_size=40,
        )
    )
    def test_kappa_never_exceeds_one(self, data):
        for matrix in (AgreementMatrix.distance(), AgreementMatrix.direction()):
            try:
                assert kappa(data, matrix).kappa <= 1.0 + 1e-12
            except UndefinedKappaError:
                pass
