#%%
"""Exact arithmetic in Q(theta) for theta a root of f_n, plus the unit tables.

Elements are kept as integer numerators over one common denominator. Real
embeddings are computed on demand from the isolated roots of f_n.
"""
import logging
import math
import re
from dataclasses import dataclass, field as dataclass_field
from fractions import Fraction
from functools import cached_property, lru_cache
from pathlib import Path
from typing import Optional, Sequence, Union

from utils.arith import (
    DEFAULT_PRECISION,
    FibPowersError,
    Interval,
    AmbiguousRounding,
    NonPositiveArgument,
    SingularMatrix,
    exact_inverse,
    interval_max,
    interval_min,
)
from utils.polynomial import IntPolynomial, build_fn, isolate_roots, resultant

logger = logging.getLogger(__name__)

UNIT_TABLE_DIR = Path(__file__).resolve().parents[2] / 'unit_tables'
INLINE_TABLES = (5, 7)


class ParseError(FibPowersError):
    pass


class WrongDegree(FibPowersError):
    pass


class WrongCount(FibPowersError):
    pass


class ZeroElement(FibPowersError):
    pass


class NotAUnit(FibPowersError):
    def __init__(self, k: int, norm: Fraction):
        super().__init__(f'unit {k} has norm {norm}, not +-1')
        self.k = k
        self.norm = norm


class DependentUnits(FibPowersError):
    pass


class SingularOrUnverifiable(FibPowersError):
    pass


def power_table(f: IntPolynomial) -> tuple:
    """Rows k = 0..2n-2 holding the integer coordinates of theta^k modulo a monic f."""
    n = f.degree
    if f.leading != 1:
        raise WrongDegree(f'{f} is not monic')
    lower = tuple(-c for c in f.coeffs[:n])
    rows = []
    cur = [1] + [0] * (n - 1)
    for _ in range(2 * n - 1):
        rows.append(tuple(cur))
        top = cur[-1]
        cur = [0] + cur[:-1]
        if top:
            cur = [c + top * r for c, r in zip(cur, lower)]
    return tuple(rows)


@dataclass(frozen=True)
class NumberField:
    n: int
    f: IntPolynomial
    roots: tuple
    D: int

    @cached_property
    def reduction_table(self) -> tuple:
        return power_table(self.f)

    def root(self, i: int, prec: int = DEFAULT_PRECISION) -> Interval:
        return self.roots[i - 1].interval(prec)


@lru_cache(maxsize=None)
def number_field(n: int) -> NumberField:
    f = build_fn(n)
    roots = tuple(isolate_roots(f, Fraction(1, 1 << 64)))
    return NumberField(n, f, roots, n * (n - 1))


@dataclass(frozen=True)
class FieldElement:
    """sum numerators[i] * theta^i / denominator, kept in lowest terms."""
    numerators: tuple
    denominator: int = 1

    def __post_init__(self):
        nums = tuple(int(c) for c in self.numerators)
        den = int(self.denominator)
        if den == 0:
            raise ZeroDivisionError('zero denominator')
        if den < 0:
            nums, den = tuple(-c for c in nums), -den
        g = math.gcd(den, *nums)
        if g > 1:
            nums, den = tuple(c // g for c in nums), den // g
        object.__setattr__(self, 'numerators', nums)
        object.__setattr__(self, 'denominator', den)

    @classmethod
    def from_coeffs(cls, coeffs: Sequence[Union[int, Fraction]]) -> 'FieldElement':
        coeffs = [Fraction(c) for c in coeffs]
        den = math.lcm(*(c.denominator for c in coeffs)) if coeffs else 1
        return cls(tuple(c.numerator * (den // c.denominator) for c in coeffs), den)

    @classmethod
    def constant(cls, c: Union[int, Fraction], n: int) -> 'FieldElement':
        return cls.from_coeffs([c] + [0] * (n - 1))

    @classmethod
    def one(cls, n: int) -> 'FieldElement':
        return cls.constant(1, n)

    @classmethod
    def theta(cls, n: int) -> 'FieldElement':
        return cls.from_coeffs([0, 1] + [0] * (n - 2))

    @classmethod
    def linear(cls, a: int, b: int, n: int) -> 'FieldElement':
        """a - theta*b."""
        return cls.from_coeffs([a, -b] + [0] * (n - 2))

    @property
    def n(self) -> int:
        return len(self.numerators)

    @property
    def coeffs(self) -> tuple:
        return tuple(Fraction(c, self.denominator) for c in self.numerators)

    def is_zero(self) -> bool:
        return not any(self.numerators)

    def is_linear(self) -> bool:
        return not any(self.numerators[2:])

    def height(self) -> Fraction:
        return Fraction(max(abs(c) for c in self.numerators), self.denominator)

    def __neg__(self) -> 'FieldElement':
        return FieldElement(tuple(-c for c in self.numerators), self.denominator)

    def __add__(self, other: 'FieldElement') -> 'FieldElement':
        den = self.denominator * other.denominator
        return FieldElement(tuple(a * other.denominator + b * self.denominator
                                  for a, b in zip(self.numerators, other.numerators)), den)

    def __sub__(self, other: 'FieldElement') -> 'FieldElement':
        return self + (-other)

    def __str__(self):
        terms = []
        for i, c in enumerate(self.coeffs):
            if c:
                terms.append(f'{c}' if i == 0 else f'{c}*x^{i}')
        return ' + '.join(terms).replace('+ -', '- ') or '0'


def mul_mod(a: FieldElement, b: FieldElement, field: NumberField) -> FieldElement:
    n = field.n
    prod = [0] * (2 * n - 1)
    for i, x in enumerate(a.numerators):
        if x:
            for j, y in enumerate(b.numerators):
                if y:
                    prod[i + j] += x * y
    # fold theta^k, k >= n, back with theta^n = -(f - x^n)
    f = field.f.coeffs
    for k in range(2 * n - 2, n - 1, -1):
        c = prod[k]
        if c:
            base = k - n
            for i in range(n):
                prod[base + i] -= c * f[i]
    return FieldElement(tuple(prod[:n]), a.denominator * b.denominator)


def multiplication_matrix(a: FieldElement, field: NumberField) -> list:
    """Integer matrix whose columns are the numerators of a*theta^i; divide by a.denominator."""
    theta = FieldElement.theta(field.n)
    cols = []
    cur = FieldElement(a.numerators, 1)
    for _ in range(field.n):
        cols.append(cur.numerators)
        cur = mul_mod(cur, theta, field)
    return [[cols[c][r] for c in range(field.n)] for r in range(field.n)]


def inverse(a: FieldElement, field: NumberField) -> FieldElement:
    if a.is_zero():
        raise ZeroElement('inverse of zero')
    m = multiplication_matrix(a, field)
    try:
        inv = exact_inverse(m)
    except SingularMatrix as exc:
        raise ZeroElement(str(exc)) from exc
    # (A/d)^-1 e_0 = d * A^-1 e_0
    return FieldElement.from_coeffs([row[0] * a.denominator for row in inv])


def pow_mod(a: FieldElement, e: int, field: NumberField) -> FieldElement:
    if e < 0:
        return pow_mod(inverse(a, field), -e, field)
    result = FieldElement.one(field.n)
    base = a
    while e:
        if e & 1:
            result = mul_mod(result, base, field)
        e >>= 1
        if e:
            base = mul_mod(base, base, field)
    return result


def norm(a: FieldElement, field: NumberField) -> Fraction:
    if a.is_zero():
        raise ZeroElement('norm of zero')
    return Fraction(resultant(field.f, IntPolynomial(a.numerators)), a.denominator ** field.n)


def embed(a: FieldElement, root_index: int, field: NumberField,
          prec: int = DEFAULT_PRECISION) -> Interval:
    theta = field.root(root_index, prec)
    coeffs = a.coeffs
    acc = Interval.point(coeffs[-1], prec)
    for c in reversed(coeffs[:-1]):
        acc = acc * theta + c
    return acc


def unit_equation_residual(A: int, B: int, field: NumberField) -> int:
    """prod_k (A - theta_k B) = B^n f(A/B), exactly."""
    if A == 0 and B == 0:
        raise ZeroElement('(A, B) = (0, 0)')
    return field.f.homogeneous(A, B)


# Unit tables

@dataclass(frozen=True)
class UnitSystem:
    units: tuple
    source: str = 'inline'

    def __len__(self):
        return len(self.units)


_TERM = re.compile(r'([+-]?)([^+-]+)')
_BODY = re.compile(r'^(?:(\d+)(?:/(\d+))?)?\*?(?:x(?:\^(\d+))?)?$')


def _parse_unit_line(line: str, n: int, lineno: int) -> FieldElement:
    text = re.sub(r'\s+', '', line)
    coeffs = [Fraction(0)] * n
    pos = 0
    for match in _TERM.finditer(text):
        if match.start() != pos:
            raise ParseError(f'line {lineno}: unexpected text at column {pos}')
        pos = match.end()
        sign, body = match.groups()
        parts = _BODY.match(body)
        if not parts or body in ('*', ''):
            raise ParseError(f'line {lineno}: cannot parse term {body!r}')
        num, den, power = parts.groups()
        has_x = 'x' in body
        if num is None and not has_x:
            raise ParseError(f'line {lineno}: empty term {body!r}')
        value = Fraction(int(num) if num else 1, int(den) if den else 1)
        k = (int(power) if power else 1) if has_x else 0
        if k >= n:
            raise WrongDegree(f'line {lineno}: power x^{k} in a degree-{n} field')
        coeffs[k] += -value if sign == '-' else value
    if pos != len(text):
        raise ParseError(f'line {lineno}: trailing text')
    return FieldElement.from_coeffs(coeffs)


def parse_unit_table(text: str, n: int, source: str = 'inline') -> UnitSystem:
    lines = [(i, line.strip()) for i, line in enumerate(text.splitlines(), start=1)]
    lines = [(i, line) for i, line in lines if line and not line.startswith('#')]
    if not lines:
        raise ParseError('empty unit table')
    lineno, header = lines[0]
    match = re.fullmatch(r'n\s*=\s*(\d+)', header)
    if not match:
        raise ParseError(f'line {lineno}: expected header n=<degree>, got {header!r}')
    if int(match.group(1)) != n:
        raise WrongDegree(f'table is for n={match.group(1)}, expected n={n}')
    units = tuple(_parse_unit_line(line, n, i) for i, line in lines[1:])
    if len(units) != n - 1:
        raise WrongCount(f'expected {n - 1} units, found {len(units)}')
    return UnitSystem(units, source)


def load_unit_system(n: int, units_dir: Optional[Path] = None) -> UnitSystem:
    path = Path(units_dir or UNIT_TABLE_DIR) / f'units_n{n}.txt'
    kind = 'inline table' if n in INLINE_TABLES else 'appendix table'
    return parse_unit_table(path.read_text(), n, f'{kind} ({path.name})')


# Log embeddings

@dataclass(frozen=True)
class EmbeddingMatrix:
    """entries[t][k] = log|eps_k at theta_{rows[t]}|; the row for theta_j is left out."""
    entries: tuple
    rows: tuple
    j: int


def log_embedding_matrix(units: UnitSystem, field: NumberField, j: int,
                         prec: int = DEFAULT_PRECISION) -> EmbeddingMatrix:
    rows = tuple(i for i in range(1, field.n + 1) if i != j)
    entries = []
    for i in rows:
        row = []
        for unit in units.units:
            try:
                row.append(abs(embed(unit, i, field, prec)).log())
            except NonPositiveArgument as exc:
                raise AmbiguousRounding(f'embedding of a unit at theta_{i} not bounded away from 0') from exc
        entries.append(tuple(row))
    return EmbeddingMatrix(tuple(entries), rows, j)


def _entries(m) -> list:
    return [list(row) for row in (m.entries if isinstance(m, EmbeddingMatrix) else m)]


def interval_determinant(m) -> Interval:
    a = _entries(m)
    size = len(a)
    det = Interval.point(1, a[0][0].prec)
    for col in range(size):
        pivot = max(range(col, size), key=lambda r: abs(a[r][col].mid))
        if a[pivot][col].contains_zero():
            raise SingularOrUnverifiable(f'pivot {col} encloses zero')
        if pivot != col:
            a[col], a[pivot] = a[pivot], a[col]
            det = -det
        det = det * a[col][col]
        for r in range(col + 1, size):
            factor = a[r][col] / a[col][col]
            a[r] = [x - factor * y for x, y in zip(a[r], a[col])]
    return det


def invert_certified(m) -> tuple:
    """Enclosure of the inverse of an interval matrix and its max absolute row sum.

    R approximates the inverse of the midpoint matrix; with E = I - R M and
    ||E|| < 1 every entry of M^-1 lies within ||E|| ||R|| / (1 - ||E||) of R.
    """
    a = _entries(m)
    size = len(a)
    prec = max(x.prec for row in a for x in row)
    try:
        approx = exact_inverse([[x.mid for x in row] for row in a])
    except SingularMatrix as exc:
        raise SingularOrUnverifiable(str(exc)) from exc
    r = [[Interval.point(x, prec).lower for x in row] for row in approx]
    norm_e = Fraction(0)
    for i in range(size):
        total = Fraction(0)
        for j in range(size):
            acc = Interval.point(int(i == j), prec)
            for k in range(size):
                acc = acc - a[k][j] * r[i][k]
            total += abs(acc).upper
        norm_e = max(norm_e, total)
    if norm_e >= 1:
        raise SingularOrUnverifiable(f'residual norm {float(norm_e):.3g} >= 1')
    norm_r = max(sum(abs(x) for x in row) for row in r)
    radius = norm_e * norm_r / (1 - norm_e)
    inverse_enclosure = tuple(tuple(Interval.from_bounds(x - radius, x + radius, prec) for x in row)
                              for row in r)
    row_sums = []
    for row in inverse_enclosure:
        total = Interval.point(0, prec)
        for x in row:
            total = total + abs(x)
        row_sums.append(total)
    return inverse_enclosure, interval_max(row_sums)


def eta(units: UnitSystem, field: NumberField, k: int, prec: int = DEFAULT_PRECISION) -> Interval:
    """max_i |eps_k^(i)| / min_i |eps_k^(i)|."""
    values = [abs(embed(units.units[k - 1], i, field, prec)) for i in range(1, field.n + 1)]
    return interval_max(values) / interval_min(values)


@dataclass(frozen=True)
class UnitReport:
    norms: tuple
    log_determinant: Interval
    rows: tuple
    fundamentality: str = 'assumed, not verified'
    notes: tuple = dataclass_field(default_factory=tuple)

    def as_dict(self) -> dict:
        lo, hi = self.log_determinant.to_decimal(12)
        return {'norms': [str(x) for x in self.norms],
                'log_determinant': [lo, hi],
                'rows': list(self.rows),
                'fundamentality': self.fundamentality}


def verify_unit_system(units: UnitSystem, field: NumberField,
                       prec: int = DEFAULT_PRECISION) -> UnitReport:
    norms = []
    for k, unit in enumerate(units.units, start=1):
        value = norm(unit, field)
        if abs(value) != 1:
            raise NotAUnit(k, value)
        norms.append(value)
    # independence: the log matrix without the last embedding is invertible
    last_error = None
    for attempt in (prec, 4 * prec, 16 * prec):
        try:
            matrix = log_embedding_matrix(units, field, field.n, attempt)
            det = interval_determinant(matrix)
            logger.info('units verified n=%d count=%d source=%s', field.n, len(units), units.source)
            return UnitReport(tuple(norms), det, matrix.rows)
        except (SingularOrUnverifiable, AmbiguousRounding) as exc:
            last_error = exc
            logger.debug('independence check undecided prec=%d reason=%s', attempt, exc)
    raise DependentUnits(f'log-embedding matrix is singular: {last_error}')
