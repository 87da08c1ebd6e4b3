#%%
"""Exact and interval arithmetic shared by every other module.

Integers are Python ints and rationals are ``fractions.Fraction``. Real
quantities live in :class:`Interval`, a pair of binary floating endpoints
rounded outward with the pure kernels in ``mpmath.libmp`` so no global mpmath
context is ever touched.
"""
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, TypeVar, Union

from mpmath.libmp import (
    finf,
    fnan,
    fninf,
    from_rational,
    fzero,
    mpf_le,
    mpf_lt,
    mpf_perturb,
    mpf_pi,
    mpf_sign,
    mpi_abs,
    mpi_add,
    mpi_atan,
    mpi_cot,
    mpi_div,
    mpi_exp,
    mpi_log,
    mpi_mul,
    mpi_neg,
    mpi_sqrt,
    mpi_sub,
    round_ceiling,
    round_floor,
)

logger = logging.getLogger(__name__)

DEFAULT_PRECISION = 256
PRECISION_CEILING = 2 ** 20

T = TypeVar('T')
Number = Union[int, Fraction]


class FibPowersError(Exception):
    """Root of every error raised by the package."""


class DivisionByIntervalContainingZero(FibPowersError):
    pass


class NonPositiveArgument(FibPowersError):
    pass


class AmbiguousRounding(FibPowersError):
    """The enclosure is too wide to decide a rounding; retry at higher precision."""


class AmbiguousComparison(FibPowersError):
    """Two enclosures overlap so their order is undecided at this precision."""


class PrecisionExhausted(FibPowersError):
    pass


def _to_fraction(x) -> Fraction:
    if x in (finf, fninf, fnan):
        raise FibPowersError(f'unbounded interval endpoint {x!r}')
    sign, man, exp, _ = x
    value = Fraction(int(man) << exp) if exp >= 0 else Fraction(int(man), 1 << -exp)
    return -value if sign else value


def _lower(value: Number, prec: int):
    value = Fraction(value)
    return from_rational(value.numerator, value.denominator, prec, round_floor)


def _upper(value: Number, prec: int):
    value = Fraction(value)
    return from_rational(value.numerator, value.denominator, prec, round_ceiling)


@dataclass(frozen=True)
class Interval:
    """Closed interval [lo, hi] with raw mpf endpoints and a working precision in bits."""
    lo: tuple
    hi: tuple
    prec: int = DEFAULT_PRECISION

    def __post_init__(self):
        if mpf_lt(self.hi, self.lo):
            raise FibPowersError('interval with lo > hi')

    # Constructors
    @classmethod
    def point(cls, value: Number, prec: int = DEFAULT_PRECISION) -> 'Interval':
        return cls(_lower(value, prec), _upper(value, prec), prec)

    @classmethod
    def from_bounds(cls, lo: Number, hi: Number, prec: int = DEFAULT_PRECISION) -> 'Interval':
        return cls(_lower(lo, prec), _upper(hi, prec), prec)

    @classmethod
    def hull(cls, items: Iterable['Interval']) -> 'Interval':
        items = list(items)
        lo = min((x.lower for x in items))
        hi = max((x.upper for x in items))
        return cls.from_bounds(lo, hi, max(x.prec for x in items))

    def _coerce(self, other) -> 'Interval':
        if isinstance(other, Interval):
            return other
        if isinstance(other, (int, Fraction)):
            return Interval.point(other, self.prec)
        return NotImplemented

    def _prec(self, other: 'Interval') -> int:
        return max(self.prec, other.prec)

    # Arithmetic
    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        prec = self._prec(other)
        return Interval(*mpi_add((self.lo, self.hi), (other.lo, other.hi), prec), prec)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        prec = self._prec(other)
        return Interval(*mpi_sub((self.lo, self.hi), (other.lo, other.hi), prec), prec)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other - self

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        prec = self._prec(other)
        return Interval(*mpi_mul((self.lo, self.hi), (other.lo, other.hi), prec), prec)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if other.contains_zero():
            raise DivisionByIntervalContainingZero(f'division by {other}')
        prec = self._prec(other)
        return Interval(*mpi_div((self.lo, self.hi), (other.lo, other.hi), prec), prec)

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other / self

    def __neg__(self):
        return Interval(*mpi_neg((self.lo, self.hi)), self.prec)

    def __abs__(self):
        return Interval(*mpi_abs((self.lo, self.hi)), self.prec)

    def __pow__(self, exponent: int):
        if not isinstance(exponent, int):
            return NotImplemented
        if exponent < 0:
            return 1 / (self ** -exponent)
        # square-and-multiply keeps every step outward rounded
        result = Interval.point(1, self.prec)
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            exponent >>= 1
            if exponent:
                base = base.square()
        return result

    def square(self) -> 'Interval':
        a = abs(self)
        return Interval(*mpi_mul((a.lo, a.hi), (a.lo, a.hi), self.prec), self.prec)

    # Elementary functions, widened by one ulp on each side
    def log(self) -> 'Interval':
        if mpf_sign(self.lo) <= 0:
            raise NonPositiveArgument(f'log of {self}')
        lo, hi = mpi_log((self.lo, self.hi), self.prec)
        return Interval(mpf_perturb(lo, 1, self.prec, round_floor),
                        mpf_perturb(hi, 0, self.prec, round_ceiling), self.prec)

    def exp(self) -> 'Interval':
        lo, hi = mpi_exp((self.lo, self.hi), self.prec)
        if lo != fzero:
            lo = mpf_perturb(lo, 1, self.prec, round_floor)
        return Interval(lo, mpf_perturb(hi, 0, self.prec, round_ceiling), self.prec)

    def sqrt(self) -> 'Interval':
        if mpf_sign(self.lo) < 0:
            raise NonPositiveArgument(f'sqrt of {self}')
        return Interval(*mpi_sqrt((self.lo, self.hi), self.prec), self.prec)

    def atan(self) -> 'Interval':
        lo, hi = mpi_atan((self.lo, self.hi), self.prec)
        return Interval(lo, hi, self.prec).widen()

    def cot(self) -> 'Interval':
        lo, hi = mpi_cot((self.lo, self.hi), self.prec)
        if finf in (lo, hi) or fninf in (lo, hi):
            raise DivisionByIntervalContainingZero(f'cot of {self}')
        return Interval(lo, hi, self.prec).widen()

    def root(self, k: int) -> 'Interval':
        """Real k-th root of a positive interval."""
        if mpf_sign(self.lo) <= 0:
            raise NonPositiveArgument(f'{k}-th root of {self}')
        return (self.log() / k).exp()

    # Queries
    @property
    def lower(self) -> Fraction:
        return _to_fraction(self.lo)

    @property
    def upper(self) -> Fraction:
        return _to_fraction(self.hi)

    @property
    def mid(self) -> Fraction:
        return (self.lower + self.upper) / 2

    @property
    def width(self) -> Fraction:
        return self.upper - self.lower

    def contains(self, value: Union[Number, 'Interval']) -> bool:
        if isinstance(value, Interval):
            return mpf_le(self.lo, value.lo) and mpf_le(value.hi, self.hi)
        value = Fraction(value)
        return self.lower <= value <= self.upper

    def contains_zero(self) -> bool:
        return mpf_sign(self.lo) <= 0 <= mpf_sign(self.hi)

    def is_positive(self) -> bool:
        return mpf_sign(self.lo) > 0

    def is_negative(self) -> bool:
        return mpf_sign(self.hi) < 0

    def certainly_lt(self, other) -> bool:
        other = self._coerce(other)
        return mpf_lt(self.hi, other.lo)

    def compare(self, other) -> int:
        """-1, 0 or 1 when the order is decided; AmbiguousComparison otherwise."""
        other = self._coerce(other)
        if mpf_lt(self.hi, other.lo):
            return -1
        if mpf_lt(other.hi, self.lo):
            return 1
        if self.lo == self.hi == other.lo == other.hi:
            return 0
        raise AmbiguousComparison(f'{self} vs {other}')

    def widen(self, ulps: int = 1) -> 'Interval':
        lo, hi = self.lo, self.hi
        for _ in range(ulps):
            lo = mpf_perturb(lo, 1, self.prec, round_floor) if lo != fzero else lo
            hi = mpf_perturb(hi, 0, self.prec, round_ceiling) if hi != fzero else hi
        return Interval(lo, hi, self.prec)

    def to_decimal(self, digits: int = 12) -> tuple:
        """Outward-rounded decimal strings (lo, hi) with ``digits`` significant digits."""
        return (format_decimal(self.lower, digits, upward=False),
                format_decimal(self.upper, digits, upward=True))

    def __repr__(self):
        lo, hi = self.to_decimal(8)
        return f'Interval([{lo}, {hi}], prec={self.prec})'


def interval_max(items: Iterable[Interval]) -> Interval:
    """Enclosure of the maximum of values known only through enclosures."""
    items = list(items)
    return Interval.from_bounds(max(x.lower for x in items), max(x.upper for x in items),
                                max(x.prec for x in items))


def interval_min(items: Iterable[Interval]) -> Interval:
    items = list(items)
    return Interval.from_bounds(min(x.lower for x in items), min(x.upper for x in items),
                                max(x.prec for x in items))


def iv_arith(op: str, x: Interval, y: Interval = None) -> Interval:
    if op == 'add':
        return x + y
    if op == 'sub':
        return x - y
    if op == 'mul':
        return x * y
    if op == 'div':
        return x / y
    if op == 'abs':
        return abs(x)
    if op == 'pow':
        if y.lo == y.hi and _to_fraction(y.lo).denominator == 1:
            return x ** int(_to_fraction(y.lo))
        return (y * x.log()).exp()
    raise ValueError(f'unknown interval operation {op!r}')


def iv_log(x: Interval) -> Interval:
    return x.log()


def iv_exp(x: Interval) -> Interval:
    return x.exp()


def unique_integer_in(x: Interval) -> int:
    """The integer nearest to every point of ``x``.

    Raises AmbiguousRounding when the endpoints round to different integers or
    the lower endpoint sits exactly on a half-integer.
    """
    lo, hi = x.lower + Fraction(1, 2), x.upper + Fraction(1, 2)
    nearest = math.floor(lo)
    if nearest != math.floor(hi) or lo.denominator == 1:
        raise AmbiguousRounding(f'no unique nearest integer in {x}')
    return nearest


def safe_bound(x: Interval, direction: str) -> Fraction:
    if direction == 'upper':
        return x.upper
    if direction == 'lower':
        return x.lower
    raise ValueError(f'direction must be upper or lower, got {direction!r}')


def floor_upper(x: Interval) -> int:
    return math.floor(x.upper)


def with_precision(compute: Callable[[int], T], start: int = DEFAULT_PRECISION,
                   ceiling: int = PRECISION_CEILING) -> T:
    """Run ``compute(prec)`` doubling ``prec`` after each ambiguity, up to ``ceiling``."""
    prec = start
    while True:
        try:
            return compute(prec)
        except (AmbiguousRounding, AmbiguousComparison) as exc:
            if prec * 2 > ceiling:
                raise PrecisionExhausted(f'still ambiguous at {prec} bits: {exc}') from exc
            logger.debug('precision escalation prec=%d next=%d reason=%s', prec, prec * 2, exc)
            prec *= 2


def _decimal_exponent(a: Fraction) -> int:
    # largest e with 10**e <= a, for a > 0
    e = math.floor((a.numerator.bit_length() - a.denominator.bit_length()) * math.log10(2))
    while Fraction(10) ** e > a:
        e -= 1
    while Fraction(10) ** (e + 1) <= a:
        e += 1
    return e


def format_decimal(x: Fraction, digits: int = 12, upward: bool = True) -> str:
    """Scientific decimal string rounded toward +inf (``upward``) or -inf."""
    x = Fraction(x)
    if x == 0:
        return '0'
    negative = x < 0
    a = -x if negative else x
    e = _decimal_exponent(a)
    scaled = a / Fraction(10) ** (e - digits + 1)
    # magnitude rounds away from zero exactly when the direction points away
    away = upward != negative
    mantissa = math.ceil(scaled) if away else math.floor(scaled)
    if mantissa == 10 ** digits:
        mantissa //= 10
        e += 1
    text = str(mantissa)
    body = text[0] + ('.' + text[1:].rstrip('0') if text[1:].rstrip('0') else '')
    return f"{'-' if negative else ''}{body}e{e:+d}"


def pi_interval(prec: int) -> Interval:
    return Interval(mpf_perturb(mpf_pi(prec, round_floor), 1, prec, round_floor),
                    mpf_perturb(mpf_pi(prec, round_ceiling), 0, prec, round_ceiling), prec)



# Exact linear algebra over the rationals

class SingularMatrix(FibPowersError):
    pass


def _gauss_jordan(matrix, rhs_columns):
    """Reduce [matrix | rhs] in place; returns the solution columns."""
    size = len(matrix)
    rows = [[Fraction(x) for x in row] + [Fraction(col[i]) for col in rhs_columns]
            for i, row in enumerate(matrix)]
    for col in range(size):
        pivot = next((r for r in range(col, size) if rows[r][col] != 0), None)
        if pivot is None:
            raise SingularMatrix(f'matrix is singular at column {col}')
        rows[col], rows[pivot] = rows[pivot], rows[col]
        inv = 1 / rows[col][col]
        rows[col] = [x * inv for x in rows[col]]
        for r in range(size):
            if r != col and rows[r][col] != 0:
                factor = rows[r][col]
                rows[r] = [x - factor * y for x, y in zip(rows[r], rows[col])]
    return [[rows[i][size + c] for i in range(size)] for c in range(len(rhs_columns))]


def exact_solve(matrix, rhs) -> list:
    return _gauss_jordan(matrix, [rhs])[0]


def exact_inverse(matrix) -> list:
    size = len(matrix)
    identity = [[int(i == c) for i in range(size)] for c in range(size)]
    columns = _gauss_jordan(matrix, identity)
    return [[columns[c][r] for c in range(size)] for r in range(size)]


def exact_determinant(matrix) -> int:
    """Bareiss fraction-free elimination; the matrix must have integer entries."""
    m = [list(map(int, row)) for row in matrix]
    size = len(m)
    sign, prev = 1, 1
    for k in range(size - 1):
        if m[k][k] == 0:
            swap = next((r for r in range(k + 1, size) if m[r][k] != 0), None)
            if swap is None:
                return 0
            m[k], m[swap] = m[swap], m[k]
            sign = -sign
        for i in range(k + 1, size):
            for j in range(k + 1, size):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
        prev = m[k][k]
    return sign * m[-1][-1] if size else 1
