from fractions import Fraction

import numpy as np
import pytest

from utils.arith import Interval
from utils.numberfield import (
    DependentUnits,
    FieldElement,
    NotAUnit,
    ParseError,
    UnitSystem,
    WrongCount,
    WrongDegree,
    ZeroElement,
    embed,
    eta,
    interval_determinant,
    inverse,
    invert_certified,
    load_unit_system,
    log_embedding_matrix,
    mul_mod,
    norm,
    number_field,
    parse_unit_table,
    pow_mod,
    unit_equation_residual,
    verify_unit_system,
)

CASES = [5, 7, 11, 13, 17]


def _random_element(rng, n: int, height: int = 5) -> FieldElement:
    nums = [int(c) for c in rng.integers(-height, height + 1, size=n)]
    nums[0] = nums[0] or 1
    return FieldElement(tuple(nums), int(rng.integers(1, 4)))


def test_parse_first_units():
    units = load_unit_system(5)
    assert units.units[0].coeffs == (Fraction(-1, 4), Fraction(-1, 4), Fraction(3, 16),
                                     Fraction(1, 16), Fraction(0))
    assert load_unit_system(11).units[0].coeffs[0] == Fraction(209, 256)
    assert 'units_n11.txt' in load_unit_system(11).source


def test_parse_errors():
    with pytest.raises(ParseError):
        parse_unit_table('', 5)
    with pytest.raises(ParseError):
        parse_unit_table('degree five\n1 + x', 5)
    with pytest.raises(WrongDegree):
        parse_unit_table('n=7\n1\n1\n1\n1', 5)
    with pytest.raises(WrongDegree):
        parse_unit_table('n=3\n1 + x^3\n2', 3)
    with pytest.raises(WrongCount):
        parse_unit_table('n=3\n1 + x', 3)
    with pytest.raises(ParseError):
        parse_unit_table('n=3\n1 + + x\n2', 3)


def test_parse_accepts_any_term_order():
    units = parse_unit_table('n=3\n# comment\nx^2 - 3/2*x + 1\n-x + 7/3 * x^2', 3)
    assert units.units[0].coeffs == (1, Fraction(-3, 2), 1)
    assert units.units[1].coeffs == (0, -1, Fraction(7, 3))


def test_mul_mod_basics():
    field = number_field(5)
    a = FieldElement.from_coeffs([Fraction(1, 2), 3, 0, -1, 2])
    assert mul_mod(a, FieldElement.one(5), field) == a
    top = FieldElement.from_coeffs([0, 0, 0, 0, 1])
    reduced = mul_mod(top, FieldElement.theta(5), field)
    assert reduced.numerators == tuple(-c for c in field.f.coeffs[:5])


def test_embedding_is_a_homomorphism():
    rng = np.random.default_rng(3)
    field = number_field(7)
    for _ in range(10):
        a, b = _random_element(rng, 7), _random_element(rng, 7)
        product = mul_mod(a, b, field)
        for i in (1, 4, 7):
            exact = embed(product, i, field, 128)
            approx = embed(a, i, field, 128) * embed(b, i, field, 128)
            assert not (exact.certainly_lt(approx) or approx.certainly_lt(exact))


def test_norm_values():
    field = number_field(5)
    assert norm(FieldElement.one(5), field) == 1
    assert norm(FieldElement.theta(5), field) == 16
    assert norm(FieldElement.constant(Fraction(1, 2), 5), field) == Fraction(1, 32)
    with pytest.raises(ZeroElement):
        norm(FieldElement((0,) * 5), field)


@pytest.mark.parametrize('n', CASES)
def test_tabulated_units_have_norm_one(n):
    field = number_field(n)
    for unit in load_unit_system(n).units:
        assert abs(norm(unit, field)) == 1


def test_norm_is_multiplicative():
    rng = np.random.default_rng(5)
    field = number_field(5)
    for _ in range(20):
        a, b = _random_element(rng, 5), _random_element(rng, 5)
        assert norm(mul_mod(a, b, field), field) == norm(a, field) * norm(b, field)


def test_inverse_and_negative_powers():
    field = number_field(7)
    unit = load_unit_system(7).units[2]
    assert mul_mod(unit, inverse(unit, field), field) == FieldElement.one(7)
    assert mul_mod(pow_mod(unit, -3, field), pow_mod(unit, 3, field), field) == FieldElement.one(7)
    with pytest.raises(ZeroElement):
        inverse(FieldElement((0,) * 7), field)


def test_embed_simple_elements():
    field = number_field(5)
    for i in range(1, 6):
        assert embed(FieldElement.theta(5), i, field, 128).contains(field.root(i, 128))
        assert embed(FieldElement.constant(3, 5), i, field).contains(3)


def test_embedding_product_of_unit_is_plus_minus_one():
    field = number_field(5)
    unit = load_unit_system(5).units[0]
    product = Interval.point(1, 200)
    for i in range(1, 6):
        product = product * embed(unit, i, field, 200)
    assert product.contains(1) or product.contains(-1)


@pytest.mark.parametrize('n', [5, 7])
def test_log_embedding_matrix(n):
    field = number_field(n)
    units = load_unit_system(n)
    matrix = log_embedding_matrix(units, field, 1)
    assert len(matrix.entries) == n - 1 and all(len(row) == n - 1 for row in matrix.entries)
    assert matrix.rows == tuple(range(2, n + 1))
    assert not interval_determinant(matrix).contains_zero()
    for unit in units.units:
        total = Interval.point(0)
        for i in range(1, n + 1):
            total = total + abs(embed(unit, i, field)).log()
        assert total.contains(0)


def test_invert_certified_small_matrices():
    one, zero = Interval.point(1), Interval.point(0)
    inv, row_norm = invert_certified([[one, zero], [zero, one]])
    assert inv[0][0].contains(1) and inv[0][1].contains(0)
    assert row_norm.contains(1)
    inv, row_norm = invert_certified([[Interval.point(2), zero], [zero, Interval.point(4)]])
    assert inv[0][0].contains(Fraction(1, 2)) and inv[1][1].contains(Fraction(1, 4))
    assert row_norm.contains(Fraction(1, 2))


def test_eta():
    field = number_field(5)
    units = load_unit_system(5)
    for k in range(1, 5):
        assert eta(units, field, k).upper >= 1
    constant = UnitSystem((FieldElement.constant(2, 5),))
    assert eta(constant, field, 1).contains(1)


def test_unit_equation_residual():
    field = number_field(5)
    assert unit_equation_residual(1, 0, field) == 1
    assert unit_equation_residual(0, 1, field) == -16
    rng = np.random.default_rng(9)
    for _ in range(20):
        A, B = (int(x) for x in rng.integers(-50, 51, size=2))
        if A == 0 and B == 0:
            continue
        exact = unit_equation_residual(A, B, field)
        assert exact == norm(FieldElement.linear(A, B, 5), field)
        product = Interval.point(1, 200)
        for i in range(1, 6):
            product = product * (Interval.point(A, 200) - field.root(i, 200) * B)
        assert product.contains(exact)


@pytest.mark.parametrize('n', CASES)
def test_verify_unit_system(n):
    report = verify_unit_system(load_unit_system(n), number_field(n))
    assert len(report.norms) == n - 1
    assert not report.log_determinant.contains_zero()
    assert report.fundamentality.startswith('assumed')


def test_verify_rejects_bad_systems():
    field = number_field(5)
    units = list(load_unit_system(5).units)
    dependent = UnitSystem((units[0], mul_mod(units[0], units[0], field), units[2], units[3]))
    with pytest.raises(DependentUnits):
        verify_unit_system(dependent, field)
    with pytest.raises(NotAUnit) as info:
        verify_unit_system(UnitSystem((FieldElement.theta(5), *units[1:])), field)
    assert info.value.k == 1 and info.value.norm == 16
