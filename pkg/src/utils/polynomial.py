#%%
"""Integer polynomials: f_n, Sturm root isolation, resultants, mod-p factor patterns."""
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence, Union

import numpy as np
from sympy import isprime, primerange

from utils.arith import (
    AmbiguousRounding,
    FibPowersError,
    Interval,
    PRECISION_CEILING,
    pi_interval,
    unique_integer_in,
    with_precision,
)

logger = logging.getLogger(__name__)


class InvalidExponent(FibPowersError):
    pass


class NotSquarefree(FibPowersError):
    pass


class BadPrime(FibPowersError):
    pass


class NotIntegral(FibPowersError):
    pass


class MinpolyMismatch(FibPowersError):
    pass


class IrreducibilityUnproven(FibPowersError):
    pass


@dataclass(frozen=True)
class IntPolynomial:
    """Integer polynomial, coefficients in ascending degree, trailing zeros stripped."""
    coeffs: tuple

    def __post_init__(self):
        coeffs = [int(c) for c in self.coeffs]
        while coeffs and coeffs[-1] == 0:
            coeffs.pop()
        object.__setattr__(self, 'coeffs', tuple(coeffs))

    @classmethod
    def x(cls) -> 'IntPolynomial':
        return cls((0, 1))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def leading(self) -> int:
        return self.coeffs[-1] if self.coeffs else 0

    def is_zero(self) -> bool:
        return not self.coeffs

    def __add__(self, other: 'IntPolynomial') -> 'IntPolynomial':
        size = max(len(self.coeffs), len(other.coeffs))
        a = self.coeffs + (0,) * (size - len(self.coeffs))
        b = other.coeffs + (0,) * (size - len(other.coeffs))
        return IntPolynomial(tuple(x + y for x, y in zip(a, b)))

    def __neg__(self) -> 'IntPolynomial':
        return IntPolynomial(tuple(-c for c in self.coeffs))

    def __sub__(self, other: 'IntPolynomial') -> 'IntPolynomial':
        return self + (-other)

    def __mul__(self, other: Union['IntPolynomial', int]) -> 'IntPolynomial':
        if isinstance(other, int):
            return IntPolynomial(tuple(c * other for c in self.coeffs))
        if self.is_zero() or other.is_zero():
            return IntPolynomial(())
        out = [0] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
        return IntPolynomial(tuple(out))

    __rmul__ = __mul__

    def derivative(self) -> 'IntPolynomial':
        return IntPolynomial(tuple(i * c for i, c in enumerate(self.coeffs))[1:])

    def __call__(self, x):
        # Horner; x may be an int, a Fraction or an Interval
        if self.is_zero():
            return 0
        acc = self.coeffs[-1]
        for c in reversed(self.coeffs[:-1]):
            acc = acc * x + c
        return acc

    def homogeneous(self, a: int, b: int) -> int:
        """sum c_i a^i b^(d-i), i.e. b^d f(a/b) without leaving the integers."""
        if self.is_zero():
            return 0
        acc = self.coeffs[-1]
        b_power = 1
        for c in reversed(self.coeffs[:-1]):
            b_power *= b
            acc = acc * a + c * b_power
        return acc

    def sign_at(self, x: Union[int, Fraction]) -> int:
        x = Fraction(x)
        value = self.homogeneous(x.numerator, x.denominator)
        return (value > 0) - (value < 0)

    def content(self) -> int:
        return math.gcd(*self.coeffs) if self.coeffs else 0

    def primitive_part(self) -> 'IntPolynomial':
        """Divide by the content, normalising to a positive leading coefficient."""
        c = self.content()
        if c == 0:
            return self
        if self.leading < 0:
            c = -c
        return IntPolynomial(tuple(x // c for x in self.coeffs))

    def exact_div(self, d: int) -> 'IntPolynomial':
        if any(c % d for c in self.coeffs):
            raise NotIntegral(f'{self} is not divisible by {d}')
        return IntPolynomial(tuple(c // d for c in self.coeffs))

    def __str__(self):
        if self.is_zero():
            return '0'
        terms = []
        for i, c in enumerate(self.coeffs):
            if c == 0:
                continue
            mono = '' if i == 0 else ('x' if i == 1 else f'x^{i}')
            if mono and abs(c) == 1:
                body = mono
            else:
                body = f'{abs(c)}{mono}'
            terms.append(('-' if c < 0 else '+', body))
        sign, first = terms[0]
        text = ('-' if sign == '-' else '') + first
        for sign, body in terms[1:]:
            text += f' {sign} {body}'
        return text


def build_fn(n: int) -> IntPolynomial:
    """f_n(x) = Re((x + 2i)^n) - Im((x + 2i)^n)/2 for an odd prime n."""
    if n < 3 or n % 2 == 0 or not isprime(n):
        raise InvalidExponent(f'n must be an odd prime, got {n}')
    m = (n - 1) // 2
    coeffs = [0] * (n + 1)
    for j in range(m + 1):
        scale = (-1) ** j * 4 ** j
        coeffs[n - 2 * j] += scale * math.comb(n, 2 * j)
        coeffs[n - 2 * j - 1] -= scale * math.comb(n, 2 * j + 1)
    return IntPolynomial(tuple(coeffs))


def pseudo_remainder(a: IntPolynomial, b: IntPolynomial) -> IntPolynomial:
    """lc(b)^(deg a - deg b + 1) * a mod b."""
    if b.is_zero():
        raise ZeroDivisionError('pseudo remainder by the zero polynomial')
    if a.degree < b.degree:
        return a
    r = list(a.coeffs)
    db, lb = b.degree, b.leading
    e = a.degree - db + 1
    while len(r) - 1 >= db and r:
        d = len(r) - 1
        c = r[-1]
        r = [lb * x for x in r]
        for i in range(db + 1):
            r[d - db + i] -= c * b.coeffs[i]
        r.pop()
        while r and r[-1] == 0:
            r.pop()
        e -= 1
    return IntPolynomial(tuple(r)) * (lb ** e)


def _positive_scale(p: IntPolynomial) -> IntPolynomial:
    c = p.content()
    return IntPolynomial(tuple(x // c for x in p.coeffs)) if c else p


@dataclass(frozen=True)
class SturmChain:
    polynomials: tuple

    def _variations(self, signs) -> int:
        signs = [s for s in signs if s != 0]
        return sum(1 for a, b in zip(signs, signs[1:]) if a != b)

    def variations(self, x: Union[int, Fraction]) -> int:
        return self._variations([p.sign_at(x) for p in self.polynomials])

    def variations_at_infinity(self, direction: int) -> int:
        signs = []
        for p in self.polynomials:
            s = 1 if p.leading > 0 else -1
            if direction < 0 and p.degree % 2:
                s = -s
            signs.append(s)
        return self._variations(signs)

    def count(self, a: Fraction, b: Fraction) -> int:
        """Number of distinct real roots in (a, b]."""
        return self.variations(a) - self.variations(b)


def sturm_chain(f: IntPolynomial) -> SturmChain:
    chain = [f, f.derivative()]
    while not chain[-1].is_zero():
        prev, cur = chain[-2], chain[-1]
        r = pseudo_remainder(prev, cur)
        # keep the sign of the true remainder: lc^(delta+1) may be negative
        if cur.leading < 0 and (prev.degree - cur.degree + 1) % 2:
            r = -r
        if r.is_zero():
            break
        chain.append(_positive_scale(-r))
    if chain[-1].is_zero():
        chain.pop()
    if chain[-1].degree > 0:
        raise NotSquarefree(f'gcd(f, f\') has degree {chain[-1].degree} for f = {f}')
    return SturmChain(tuple(chain))


def count_real_roots(f: IntPolynomial) -> int:
    chain = sturm_chain(f)
    return chain.variations_at_infinity(-1) - chain.variations_at_infinity(1)


def cauchy_bound(f: IntPolynomial) -> Fraction:
    lc = abs(f.leading)
    return 1 + Fraction(max(abs(c) for c in f.coeffs[:-1]), lc) if f.degree > 0 else Fraction(1)


def _log2_floor(x: Fraction) -> int:
    # floor(log2 x) up to one, for x > 0
    return x.numerator.bit_length() - x.denominator.bit_length()


def _dyadic(x: Fraction, bits: int) -> Fraction:
    return Fraction(round(x * (1 << bits)), 1 << bits)


def _refine(f: IntPolynomial, lo: Fraction, hi: Fraction, width: Fraction) -> tuple:
    """Shrink an isolating interval (lo, hi] to width <= ``width``."""
    s_hi = f.sign_at(hi)
    if s_hi == 0:
        return hi, hi
    # lo may itself be a neighbouring root; walk it inward first
    while f.sign_at(lo) == 0:
        m = (lo + hi) / 2
        s_m = f.sign_at(m)
        if s_m == 0:
            return m, m
        if s_m != s_hi:
            lo = m
        else:
            hi = m
    df = f.derivative()
    s_lo = f.sign_at(lo)
    steps = 4
    while hi - lo > width:
        m = (lo + hi) / 2
        moved = False
        slope = df(m)
        if slope != 0:
            guess = m - Fraction(f(m)) / slope
            if lo < guess < hi:
                h = (hi - lo) / steps
                bits = max(8, steps.bit_length() + 4 - _log2_floor(hi - lo))
                guess = _dyadic(guess, bits)
                a, b = max(lo, guess - h), min(hi, guess + h)
                s_a, s_b = f.sign_at(a), f.sign_at(b)
                if s_a == 0:
                    return a, a
                if s_b == 0:
                    return b, b
                if s_a != s_b:
                    lo, hi, s_lo = a, b, s_a
                    steps = steps * steps
                    moved = True
        if not moved:
            steps = 4
            s_m = f.sign_at(m)
            if s_m == 0:
                return m, m
            if s_m == s_lo:
                lo = m
            else:
                hi = m
    return lo, hi


@lru_cache(maxsize=4096)
def _refine_cached(coeffs: tuple, lo: Fraction, hi: Fraction, bits: int) -> tuple:
    return _refine(IntPolynomial(coeffs), lo, hi, Fraction(1, 1 << bits))


@dataclass(frozen=True)
class RootBox:
    """Isolating interval for the ``index``-th smallest real root of ``poly``."""
    index: int
    lo: Fraction
    hi: Fraction
    poly: IntPolynomial

    def refined(self, bits: int) -> 'RootBox':
        if self.hi - self.lo <= Fraction(1, 1 << bits):
            return self
        lo, hi = _refine_cached(self.poly.coeffs, self.lo, self.hi, bits)
        return RootBox(self.index, lo, hi, self.poly)

    def interval(self, prec: int) -> Interval:
        box = self.refined(prec)
        return Interval.from_bounds(box.lo, box.hi, prec)

    @property
    def enclosure(self) -> Interval:
        width = self.hi - self.lo
        bits = 64 if width == 0 else max(64, 16 - _log2_floor(width))
        return Interval.from_bounds(self.lo, self.hi, bits)

    @property
    def midpoint(self) -> Fraction:
        return (self.lo + self.hi) / 2


def isolate_roots(f: IntPolynomial, target_width: Fraction = Fraction(1, 10 ** 6)) -> list:
    chain = sturm_chain(f)
    bound = cauchy_bound(f)
    stack = [(-bound, bound, chain.variations(-bound), chain.variations(bound))]
    boxes = []
    while stack:
        a, b, va, vb = stack.pop()
        count = va - vb
        if count == 0:
            continue
        if count == 1:
            boxes.append((a, b))
            continue
        m = (a + b) / 2
        vm = chain.variations(m)
        stack.append((a, m, va, vm))
        stack.append((m, b, vm, vb))
    boxes.sort()
    out = []
    for index, (a, b) in enumerate(boxes, start=1):
        lo, hi = _refine(f, a, b, Fraction(target_width))
        out.append(RootBox(index, lo, hi, f))
    logger.debug('isolated %d real roots of degree-%d polynomial', len(out), f.degree)
    return out


def closed_form_root(n: int, k: int, prec: int) -> Interval:
    """2 cot((atan 2 + k pi)/n); k = n - i gives the i-th smallest root of f_n."""
    pi = pi_interval(prec)
    angle = (Interval.point(2, prec).atan() + pi * k) / n
    return angle.cot() * 2


def resultant(f: IntPolynomial, g: IntPolynomial) -> int:
    """Sylvester resultant lc(f)^deg(g) * prod g(alpha) over the roots alpha of f."""
    if f.is_zero() or g.is_zero():
        return 0
    a, b = f, g
    s = 1
    if a.degree < b.degree:
        a, b = b, a
        if a.degree % 2 and b.degree % 2:
            s = -1
    if b.degree == 0:
        return s * b.leading ** a.degree
    ca, cb = abs(a.content()), abs(b.content())
    a, b = a.exact_div(ca), b.exact_div(cb)
    t = ca ** b.degree * cb ** a.degree
    g_ = h = Fraction(1)
    while True:
        delta = a.degree - b.degree
        if a.degree % 2 and b.degree % 2:
            s = -s
        r = pseudo_remainder(a, b)
        a = b
        if r.is_zero():
            return 0
        divisor = g_ * h ** delta
        quotients = [Fraction(c) / divisor for c in r.coeffs]
        if any(q.denominator != 1 for q in quotients):
            raise NotIntegral('subresultant division left a remainder')
        b = IntPolynomial(tuple(int(q) for q in quotients))
        g_ = Fraction(a.leading)
        h = h ** (1 - delta) * g_ ** delta
        if b.degree == 0:
            break
    h = h ** (1 - a.degree) * Fraction(b.leading) ** a.degree
    result = s * t * h
    if result.denominator != 1:
        raise NotIntegral('resultant is not an integer')
    return int(result)


# Arithmetic over GF(p): ascending int64 coefficient arrays

def _gf_trim(a: np.ndarray) -> np.ndarray:
    nz = np.nonzero(a)[0]
    return a[:nz[-1] + 1] if len(nz) else a[:0]


def _gf_from(f: IntPolynomial, p: int) -> np.ndarray:
    return _gf_trim(np.array([c % p for c in f.coeffs], dtype=np.int64))


def _gf_divmod(a: np.ndarray, b: np.ndarray, p: int) -> tuple:
    a = a.copy()
    db = len(b) - 1
    if len(a) - 1 < db:
        return a[:0], _gf_trim(a)
    inv = pow(int(b[-1]), -1, p)
    q = np.zeros(len(a) - db, dtype=np.int64)
    for i in range(len(a) - 1 - db, -1, -1):
        c = int(a[i + db]) * inv % p
        q[i] = c
        if c:
            a[i:i + db + 1] = (a[i:i + db + 1] - c * b) % p
    return _gf_trim(q), _gf_trim(a[:db])


def _gf_rem(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    return _gf_divmod(a, b, p)[1]


def _gf_sub(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    size = max(len(a), len(b))
    out = np.zeros(size, dtype=np.int64)
    out[:len(a)] += a
    out[:len(b)] -= b
    return _gf_trim(out % p)


def _gf_mulmod(a: np.ndarray, b: np.ndarray, mod: np.ndarray, p: int) -> np.ndarray:
    if len(a) == 0 or len(b) == 0:
        return a[:0]
    return _gf_rem(np.convolve(a, b) % p, mod, p)


def _gf_powmod(base: np.ndarray, e: int, mod: np.ndarray, p: int) -> np.ndarray:
    result = _gf_rem(np.array([1], dtype=np.int64), mod, p)
    base = _gf_rem(base, mod, p)
    while e:
        if e & 1:
            result = _gf_mulmod(result, base, mod, p)
        e >>= 1
        if e:
            base = _gf_mulmod(base, base, mod, p)
    return result


def _gf_monic(a: np.ndarray, p: int) -> np.ndarray:
    return a * pow(int(a[-1]), -1, p) % p if len(a) else a


def _gf_gcd(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    while len(b):
        a, b = b, _gf_rem(a, b, p)
    return _gf_monic(a, p)


def _gf_derivative(a: np.ndarray, p: int) -> np.ndarray:
    return _gf_trim(a[1:] * np.arange(1, len(a), dtype=np.int64) % p)


def factor_degree_pattern(f: IntPolynomial, p: int) -> list:
    """Degrees of the irreducible factors of f mod p (distinct-degree factorisation)."""
    if f.leading % p == 0:
        raise BadPrime(f'{p} divides the leading coefficient')
    rest = _gf_monic(_gf_from(f, p), p)
    if len(_gf_gcd(rest, _gf_derivative(rest, p), p)) > 1:
        raise BadPrime(f'f is not squarefree mod {p}')
    x = np.array([0, 1], dtype=np.int64)
    h = x
    pattern = []
    d = 0
    while len(rest) - 1 >= 2 * (d + 1):
        d += 1
        h = _gf_powmod(h, p, rest, p)
        g = _gf_gcd(_gf_sub(h, x, p), rest, p)
        if len(g) > 1:
            pattern += [d] * ((len(g) - 1) // d)
            rest = _gf_divmod(rest, g, p)[0]
            h = _gf_rem(h, rest, p)
    if len(rest) > 1:
        pattern.append(len(rest) - 1)
    return sorted(pattern)


def irreducible_mod_p(f: IntPolynomial, p: int) -> bool:
    if not isprime(p):
        raise BadPrime(f'{p} is not prime')
    if f.leading % p == 0:
        raise BadPrime(f'{p} divides the leading coefficient')
    try:
        pattern = factor_degree_pattern(f, p)
    except BadPrime:
        # a repeated factor mod p means a proper factorisation
        return f.degree <= 1
    return pattern == [f.degree]


def find_inert_prime(f: IntPolynomial, limit: int = 1000):
    for p in primerange(2, limit):
        if f.leading % p and irreducible_mod_p(f, p):
            return p
    return None


@dataclass(frozen=True)
class IrreducibilityCertificate:
    degree: int
    patterns: tuple  # ((p, (d1, d2, ...)), ...)

    def as_dict(self) -> dict:
        return {'degree': self.degree,
                'patterns': [{'p': p, 'degrees': list(pattern)} for p, pattern in self.patterns]}


def certify_irreducible(f: IntPolynomial, limit: int = 5000, max_primes: int = 400) -> IrreducibilityCertificate:
    """Prove f irreducible over Q by excluding every proper factor degree.

    A factor over Q of degree e reduces mod p to a product of some of the
    irreducible factors mod p, so e must be a subset sum of every pattern.
    """
    deg = f.degree
    mask = (1 << (deg + 1)) - 1
    possible = mask
    used = []
    tried = 0
    for p in primerange(3, limit):
        if f.leading % p == 0:
            continue
        try:
            pattern = factor_degree_pattern(f, p)
        except BadPrime:
            continue
        tried += 1
        sums = 1
        for d in pattern:
            sums = (sums | (sums << d)) & mask
        if possible & sums != possible:
            possible &= sums
            used.append((p, tuple(pattern)))
        if possible == (1 | (1 << deg)):
            logger.debug('irreducible degree=%d primes=%s', deg, [q for q, _ in used])
            return IrreducibilityCertificate(deg, tuple(used))
        if tried >= max_primes:
            break
    raise IrreducibilityUnproven(f'degree-{deg} polynomial: factor degrees not excluded after {tried} primes')


def delta_orbit(n: int, j: int, k: int, l: int) -> list:
    """Index triples (r, s, t), 1-based, conjugate to (j, k, l) under i -> a*i + b mod n."""
    triples = []
    for a in range(1, n):
        for b in range(n):
            triples.append(tuple((a * (i - 1) + b) % n + 1 for i in (j, k, l)))
    return triples


def _delta_bits(field_roots: Sequence[RootBox], orbit: list) -> int:
    mids = [float(box.midpoint) for box in field_roots]
    bits = 0.0
    for r, s, t in orbit:
        bits += math.log2(abs(mids[r - 1] - mids[t - 1]) + abs(mids[r - 1] - mids[s - 1]) + 1)
    return int(bits) + 64 + 2 * len(orbit).bit_length()


@dataclass(frozen=True)
class DeltaMinpoly:
    poly: IntPolynomial
    certificate: IrreducibilityCertificate

    @property
    def degree(self) -> int:
        return self.poly.degree

    @property
    def leading(self) -> int:
        return self.poly.leading


def _delta_product(field_roots: Sequence[RootBox], orbit: list, prec: int) -> IntPolynomial:
    theta = [box.interval(prec + 32) for box in field_roots]
    coeffs = [Interval.point(1, prec)]
    for r, s, t in orbit:
        u = theta[r - 1] - theta[t - 1]
        w = theta[r - 1] - theta[s - 1]
        nxt = [coeffs[0] * (-w)]
        for i in range(1, len(coeffs)):
            nxt.append(coeffs[i - 1] * u - coeffs[i] * w)
        nxt.append(coeffs[-1] * u)
        coeffs = nxt
    rounded = []
    for c in coeffs:
        if c.width >= Fraction(1, 4):
            raise AmbiguousRounding(f'delta polynomial coefficient too wide at {prec} bits')
        z = unique_integer_in(c)
        if not c.contains(z):
            raise NotIntegral(f'coefficient {c} encloses no integer')
        rounded.append(z)
    return IntPolynomial(tuple(rounded))


def delta_minpoly(field_roots: Sequence[RootBox], j: int, k: int, l: int,
                  ceiling: int = PRECISION_CEILING) -> DeltaMinpoly:
    """Minimal polynomial of (theta_j - theta_k)/(theta_j - theta_l) over the integers."""
    if len({j, k, l}) != 3:
        raise ValueError(f'indices must be distinct, got {(j, k, l)}')
    n = len(field_roots)
    orbit = delta_orbit(n, j, k, l)
    start = _delta_bits(field_roots, orbit)
    product = with_precision(lambda prec: _delta_product(field_roots, orbit, prec), start, ceiling)
    poly = product.primitive_part()
    certificate = certify_irreducible(poly)
    logger.info('delta minpoly n=%d j=%d degree=%d leading=%d', n, j, poly.degree, poly.leading)
    return DeltaMinpoly(poly, certificate)


def delta_minpoly_data(field_roots: Sequence[RootBox], j: int, k: int, l: int) -> tuple:
    data = delta_minpoly(field_roots, j, k, l)
    expected = expected_delta_data(len(field_roots))
    if (data.degree, data.leading) != expected:
        raise MinpolyMismatch(f'delta minpoly has degree {data.degree} and leading {data.leading}, '
                              f'expected {expected}')
    return data.degree, data.leading


def expected_delta_data(n: int) -> tuple:
    return n * (n - 1), 4 ** (n - 1)
