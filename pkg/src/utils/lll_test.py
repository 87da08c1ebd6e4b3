import itertools
import math
from fractions import Fraction
from functools import partial

import numpy as np
import pytest

from utils.arith import AmbiguousRounding, Interval, iv_log
from utils.bounds import CaseSelector, case_constants, linear_form_data
from utils.lll import (
    DEFAULT_SIGMAS,
    LatticeBasis,
    RankDeficient,
    ReductionInputs,
    ReductionRecord,
    build_reduction_lattice,
    gram_schmidt,
    is_lll_reduced,
    lll_reduce,
    reduce_to_fixpoint,
    reduction_step,
    sigma_ladder,
    transform_determinant,
)
from utils.numberfield import load_unit_system, number_field

PRINTED_FINAL_K3 = {
    5: [11, 12, 10, 10, 8],
    7: [16, 17, 17, 18, 17, 15, 16],
}


def _shortest_norm(rows, span: int = 12) -> int:
    best = None
    for coeffs in itertools.product(range(-span, span + 1), repeat=len(rows)):
        if not any(coeffs):
            continue
        v = [sum(c * row[i] for c, row in zip(coeffs, rows)) for i in range(len(rows[0]))]
        norm = sum(x * x for x in v)
        best = norm if best is None else min(best, norm)
    return best


def _norm(v) -> int:
    return sum(x * x for x in v)


def test_identity_basis():
    basis = LatticeBasis.from_rows([[1, 0, 0], [0, 1, 0], [0, 0, 1]])
    reduced = lll_reduce(basis)
    assert reduced.rows == basis.rows
    assert transform_determinant(reduced) == 1


@pytest.mark.parametrize('rows', [[[1, 0], [4, 1]], [[12, 2], [13, 4]], [[7, 3], [22, 9]]])
def test_two_dimensional_shortest_vector(rows):
    reduced = lll_reduce(LatticeBasis.from_rows(rows))
    shortest = _shortest_norm(rows, 40)
    assert _norm(reduced.rows[0]) <= 2 * shortest
    assert is_lll_reduced(reduced)


def test_known_reduction():
    reduced = lll_reduce(LatticeBasis.from_rows([[12, 2], [13, 4]]))
    assert _norm(reduced.rows[0]) == 5


def test_random_bases_are_reduced_and_equivalent():
    rng = np.random.default_rng(13)
    for _ in range(12):
        size = int(rng.integers(2, 6))
        rows = [[int(x) for x in rng.integers(-10 ** 6, 10 ** 6, size=size)] for _ in range(size)]
        try:
            reduced = lll_reduce(LatticeBasis.from_rows(rows))
        except RankDeficient:
            continue
        assert is_lll_reduced(reduced)
        assert abs(transform_determinant(reduced)) == 1
        for out, coeffs in zip(reduced.rows, reduced.transform):
            assert list(out) == [sum(c * row[i] for c, row in zip(coeffs, rows)) for i in range(size)]
        norms, _ = gram_schmidt(reduced.rows)
        assert _norm(reduced.rows[0]) <= 2 ** (size - 1) * min(norms)


def test_rank_deficient_basis():
    with pytest.raises(RankDeficient):
        lll_reduce(LatticeBasis.from_rows([[1, 2, 3], [2, 4, 6], [0, 0, 1]]))
    with pytest.raises(ValueError):
        lll_reduce(LatticeBasis.from_rows([[1, 0], [0, 1]]), Fraction(1, 5))


def test_build_reduction_lattice():
    basis = build_reduction_lattice([Interval.point(1), Interval.point(2)], 10)
    assert basis.rows == ((1, 0), (10, 20))
    with pytest.raises(AmbiguousRounding):
        build_reduction_lattice([Interval.point(Fraction(1, 20)), Interval.point(1)], 10)


def _synthetic_form(prec: int):
    log = lambda k: iv_log(Interval.point(k, prec))
    return log(7) - log(2) * 3, (log(2), log(3))


def test_reduction_step_is_sound_on_small_instances():
    K1, K2 = Interval.point(10), Interval.point(1)
    K3 = 30
    delta, mu = _synthetic_form(512)
    successes = 0
    for sigma1 in (100, 1000, 10 ** 4, 10 ** 5, 10 ** 6):
        record = reduction_step(K1, K2, K3, 2, mu, delta, sigma1)
        if not record.succeeded:
            assert record.reason
            continue
        successes += 1
        assert record.K3_out < K3
        d, m1, m2 = math.log(7) - 3 * math.log(2), math.log(2), math.log(3)
        for a1 in range(-K3, K3 + 1):
            for a2 in range(-K3, K3 + 1):
                A = max(abs(a1), abs(a2))
                if A <= record.K3_out:
                    continue
                assert abs(d + a1 * m1 + a2 * m2) >= 10 * math.exp(-A) * (1 - 1e-9)
    assert successes


def test_reduction_step_with_integral_target():
    delta = Interval.point(Fraction(1, 10 ** 15))
    mu = (Interval.point(2, 256).log(), Interval.point(3, 256).log())
    record = reduction_step(Interval.point(1), Interval.point(1), 10, 2, mu, delta, 2)
    assert not record.succeeded
    assert record.reason == 'all s_i are integers'


def test_record_round_trip():
    record = ReductionRecord(2, 10 ** 34, 12345, 2, 3, Fraction(7, 3), Fraction(5, 2), 180)
    restored = ReductionRecord.from_dict(record.as_dict())
    assert restored.K3_out == 180 and restored.c0 == 12345 and restored.i_star == 3


def _case_form(n: int, j: int, prec: int):
    form = linear_form_data(number_field(n), load_unit_system(n), CaseSelector.for_root(n, j), prec)
    return form.delta, form.mu


def _case_inputs(n: int, j: int) -> ReductionInputs:
    constants = case_constants(number_field(n), load_unit_system(n), j)
    return ReductionInputs(constants.K1, constants.K2, constants.K3_init, n - 1,
                           partial(_case_form, n, j), f'n={n} j={j}')


def test_sigma_ladder():
    assert sigma_ladder() == (10, 10 ** 3, 10 ** 6, 10 ** 9, 10 ** 12)
    assert sigma_ladder(10 ** 7) == (10, 10 ** 3, 10 ** 6)
    assert sigma_ladder(10) == (10,)
    with pytest.raises(ValueError):
        sigma_ladder(5)


def test_rational_sigma_rounds_c0_up():
    delta = Interval.point(Fraction(1, 3), 256)
    mu = (Interval.point(2, 256).log(), Interval.point(3, 256).log())
    record = reduction_step(Interval.point(1), Interval.point(1), 10, 2, mu, delta, Fraction(3, 2))
    assert record.c0 == math.ceil(Fraction(3, 2) * 11 ** 2)
    assert ReductionRecord.from_dict(record.as_dict()).sigma1 == Fraction(3, 2)


def test_first_reduction_step_for_n5():
    inputs = _case_inputs(5, 1)
    delta, mu = inputs.linear_form(800)
    # small scalings leave the first reduced vector too short for the criterion
    for sigma1 in (2, 10, 100):
        record = reduction_step(inputs.K1, inputs.K2, inputs.K3_init, 4, mu, delta, sigma1)
        assert not record.succeeded
        assert record.reason == 'lattice criterion not met'
    record = reduction_step(inputs.K1, inputs.K2, inputs.K3_init, 4, mu, delta, 10 ** 8)
    assert record.succeeded
    assert 0 < record.K3_out < 200


@pytest.mark.parametrize('j', [1, 2, 3, 4, 5])
def test_reduce_to_fixpoint_n5(j):
    K3, trace = reduce_to_fixpoint(_case_inputs(5, j))
    assert K3 <= PRINTED_FINAL_K3[5][j - 1] + 5
    values = [trace[0].K3_in] + [r.K3_out for r in trace]
    assert all(b < a for a, b in zip(values, values[1:]))
    assert all(r.sigma1 in DEFAULT_SIGMAS for r in trace)
    assert trace[0].sigma1 > 100


@pytest.mark.slow
@pytest.mark.parametrize('j', range(1, 8))
def test_reduce_to_fixpoint_n7(j):
    K3, _ = reduce_to_fixpoint(_case_inputs(7, j))
    assert K3 <= PRINTED_FINAL_K3[7][j - 1] + 5
