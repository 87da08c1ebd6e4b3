import itertools
from fractions import Fraction

import numpy as np
import pytest

from utils.fibonacci import fibonacci
from utils.numberfield import (
    FieldElement,
    inverse,
    load_unit_system,
    mul_mod,
    number_field,
    pow_mod,
    power_table,
    unit_equation_residual,
)
from utils.polynomial import BadPrime, IntPolynomial, build_fn
from utils.search import (
    BoxTooLarge,
    GrowthData,
    SievePanel,
    build_panel,
    direct_enumeration,
    direct_power_scan,
    exact_power_check,
    fib_mod_scan,
    growth_constant,
    index_bound,
    max_power_coefficient,
    qth_power_residues,
    small_b_solutions,
)

PRINTED_M = {
    11: 16564181057933828,
    13: 316357820342343521286,
    17: 416654165624561667592653373446,
}

PRINTED_V = {
    11: Fraction(int('20107468130152762104958655475357868066478593506162563506545'
                     '02987105724151326017006680926209502'
                     '499326050998267664485654586806568806547'), 512),
    13: Fraction(int('93158647867090656840416856127516852294230637148702'
                     '851086532124807140957259454209260273172314431029910278429059765'
                     '08393206322152405473550058771766196947352038793187460444181'), 4096),
}

PRINTED_INDEX_BOUND = {11: 75913, 13: 139720}
# the printed v for 17 is inconsistent with this bound, so it is only used as a sieve range
PRINTED_SIEVE_RANGE_17 = 616986


def _naive_root(value: int, q: int) -> int:
    lo, hi = 0, 1
    while hi ** q <= value:
        hi *= 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if mid ** q <= value:
            lo = mid
        else:
            hi = mid
    return lo


def _product_mod(a, b, rows):
    n = len(rows[0])
    raw = [0] * (2 * n - 1)
    for s, x in enumerate(a):
        for t, y in enumerate(b):
            raw[s + t] += x * y
    return [sum(c * row[i] for c, row in zip(raw, rows)) for i in range(n)]


@pytest.mark.parametrize('n', [11, 13, 17])
def test_growth_constant_printed_values(n):
    assert growth_constant(build_fn(n)) == PRINTED_M[n]


def test_growth_constant_small_cases():
    assert growth_constant(build_fn(5)) == 49474
    assert growth_constant(build_fn(7)) == 143977764


def test_growth_constant_is_tight_for_x2_minus_2():
    f = IntPolynomial((-2, 0, 1))
    M = growth_constant(f)
    assert M == 3
    rows = power_table(f)
    worst = 0
    box = range(-3, 4)
    for a in itertools.product(box, repeat=2):
        for b in itertools.product(box, repeat=2):
            ka, kb = max(map(abs, a)), max(map(abs, b))
            c = _product_mod(a, b, rows)
            assert max(map(abs, c)) <= M * ka * kb
            if ka == kb == 1:
                worst = max(worst, max(map(abs, c)))
    assert worst == M


@pytest.mark.parametrize('n', [5, 7, 11])
def test_growth_soundness_random_pairs(n):
    field = number_field(n)
    M = growth_constant(field.f)
    rng = np.random.default_rng(31 + n)
    for _ in range(1000 if n == 5 else 200):
        K = int(rng.integers(1, 50))
        a = FieldElement(tuple(int(x) for x in rng.integers(-K, K + 1, size=n)))
        b = FieldElement(tuple(int(x) for x in rng.integers(-K, K + 1, size=n)))
        assert mul_mod(a, b, field).height() <= M * K * K


def test_max_power_coefficient_base_case():
    field = number_field(5)
    units = load_unit_system(5)
    v = max_power_coefficient(units, field, 1)
    expected = max(max(u.height(), inverse(u, field).height()) for u in units.units)
    assert v == expected
    assert max_power_coefficient(units, field, 3) >= v


def test_unit_product_coefficients_respect_growth_bound():
    n = 5
    field = number_field(n)
    units = load_unit_system(n)
    K3max = 2
    v = max_power_coefficient(units, field, K3max)
    bound = growth_constant(field.f) ** (n - 2) * v ** (n - 1)
    rng = np.random.default_rng(41)
    for _ in range(40):
        exponents = [int(x) for x in rng.integers(-K3max, K3max + 1, size=n - 1)]
        product = FieldElement.one(n)
        for unit, e in zip(units.units, exponents):
            product = mul_mod(product, pow_mod(unit, e, field), field)
        assert product.height() <= bound


@pytest.mark.slow
def test_max_power_coefficient_n11():
    v = max_power_coefficient(load_unit_system(11), number_field(11), 47)
    assert v == PRINTED_V[11]


@pytest.mark.slow
def test_max_power_coefficient_n13():
    v = max_power_coefficient(load_unit_system(13), number_field(13), 58)
    assert v == PRINTED_V[13]


@pytest.mark.parametrize('n', [11, 13])
def test_index_bound_printed_values(n):
    m_max = index_bound(PRINTED_M[n], PRINTED_V[n], n)
    assert abs(m_max - PRINTED_INDEX_BOUND[n]) <= 2


def test_index_bound_is_monotone():
    assert index_bound(100, Fraction(10), 5) < index_bound(100, Fraction(11), 5)
    assert index_bound(100, Fraction(10), 5) < index_bound(1000, Fraction(10), 5)
    # the floor may absorb a small step
    assert index_bound(100, Fraction(10), 5) <= index_bound(101, Fraction(10), 5)


def test_growth_data_round_trip():
    data = GrowthData(PRINTED_M[11], PRINTED_V[11], 47)
    assert GrowthData.from_dict(data.as_dict()) == data


def test_qth_power_residues_small():
    assert qth_power_residues(23, 11) == {0, 1, 22}
    assert qth_power_residues(11, 5) == {0, 1, 10}
    with pytest.raises(BadPrime):
        qth_power_residues(13, 11)
    with pytest.raises(BadPrime):
        qth_power_residues(45, 11)


@pytest.mark.parametrize('q', [2, 3, 5, 7, 11, 13, 17])
def test_qth_power_residue_counts(q):
    panel = build_panel(q, 20 if q > 2 else 10)
    for p, residues in zip(panel.primes, panel.residue_sets):
        assert p % q == 1 and p > 2 * q
        assert len(residues) == (p - 1) // q + 1
        assert residues == {pow(x, q, p) for x in range(p)}


def test_build_panel_for_eleven():
    panel = build_panel(11)
    assert panel.primes == (23, 67, 89, 199, 331, 353, 397, 419, 463, 617)
    table = panel.table()
    assert table.shape == (10, 617)
    assert table[0, 22] and table[0, 1] and not table[0, 2]
    assert panel.as_dict()['residue_counts'][0] == 3


def test_single_prime_sieve_matches_direct_table():
    panel = SievePanel(11, (23,), (qth_power_residues(23, 11),))
    survivors = fib_mod_scan(20, panel)
    expected = [j for j in range(3, 21, 2) if fibonacci(j) % 23 in (0, 1, 22)]
    assert survivors == expected


@pytest.mark.parametrize('q,j', [(3, 6), (2, 12)])
def test_sieve_keeps_genuine_powers(q, j):
    panel = build_panel(q)
    survivors = fib_mod_scan(100, panel, start=1, odd_only=False)
    assert j in survivors
    assert exact_power_check(j, q)


def test_sieve_partitions_cover_the_range():
    panel = build_panel(5)
    whole = fib_mod_scan(3000, panel)
    parts = fib_mod_scan(3000, panel, start=3, stop=1501) + fib_mod_scan(3000, panel, start=1501)
    assert whole == parts


@pytest.mark.parametrize('q, m_max', [(11, PRINTED_INDEX_BOUND[11]), (13, PRINTED_INDEX_BOUND[13]),
                                       (17, PRINTED_SIEVE_RANGE_17)])
def test_sieve_to_printed_bounds(q, m_max):
    survivors = fib_mod_scan(m_max, build_panel(q))
    assert all(j % 2 == 1 and 3 <= j <= m_max for j in survivors)
    assert not any(exact_power_check(j, q) for j in survivors)


def test_sieve_agrees_with_direct_scan():
    panel = build_panel(5)
    survivors = fib_mod_scan(2000, panel)
    assert [j for j in survivors if exact_power_check(j, 5)] == direct_power_scan(2000, 5) == []


def test_exact_power_check_known_cases():
    assert exact_power_check(12, 2)
    assert exact_power_check(6, 3)
    assert not exact_power_check(7, 5)
    assert exact_power_check(1, 17) and exact_power_check(0, 5)


def test_exact_power_check_against_naive_root():
    for j in range(301):
        value = fibonacci(j)
        for q in (2, 3, 5, 7, 11, 13, 17):
            assert exact_power_check(j, q) == (_naive_root(value, q) ** q == value)


def test_direct_power_scan_has_no_odd_hits():
    assert direct_power_scan(1500, 3) == []
    assert direct_power_scan(1500, 7) == []


def test_direct_enumeration_trivial_box():
    candidates = direct_enumeration(number_field(5), load_unit_system(5), 0)
    assert len(candidates) == 1
    assert candidates[0].exponents == (0, 0, 0, 0)
    assert (candidates[0].A, candidates[0].B) == (1, 0)


def test_direct_enumeration_small_box_n5():
    candidates = direct_enumeration(number_field(5), load_unit_system(5), 2)
    assert [(c.A, c.B) for c in candidates] == [(1, 0)]
    assert candidates[0].exponents == (0, 0, 0, 0)


@pytest.mark.slow
def test_direct_enumeration_n5_bound_12():
    candidates = direct_enumeration(number_field(5), load_unit_system(5), 12)
    assert all(c.B == 0 and abs(c.A) == 1 for c in candidates)


def test_direct_enumeration_smoke_n7():
    field = number_field(7)
    for c in direct_enumeration(field, load_unit_system(7), 1):
        assert c.A.denominator == c.B.denominator == 1
        assert abs(unit_equation_residual(int(c.A), int(c.B), field)) == 1


def test_direct_enumeration_refuses_large_boxes():
    with pytest.raises(BoxTooLarge):
        direct_enumeration(number_field(17), load_unit_system(17), 12)


@pytest.mark.parametrize('n', [5, 7])
def test_small_b_solutions_are_trivial(n):
    assert small_b_solutions(number_field(n), 30) == [(1, 0), (-1, 0)]
