#%%
"""Final search: coefficient growth under multiplication, the largest unit-power
coefficient, the Fibonacci index bound, the q-th power residue sieve and the exact
checks of whatever the sieve lets through."""
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from sympy import integer_nthroot, isprime, nextprime

from utils.arith import FibPowersError, Interval, floor_upper
from utils.fibonacci import FIBONACCI, odd_step_residues, term
from utils.numberfield import FieldElement, NumberField, UnitSystem, inverse, mul_mod, power_table
from utils.polynomial import BadPrime, IntPolynomial

logger = logging.getLogger(__name__)

DEFAULT_PANEL_SIZE = 10
DEFAULT_ENUMERATION_CEILING = 5_000_000


class BoxTooLarge(FibPowersError):
    pass


@dataclass(frozen=True)
class GrowthData:
    M: int
    v: Fraction
    K3max: int

    def as_dict(self) -> dict:
        return {'M': str(self.M), 'v': str(self.v), 'K3max': str(self.K3max)}

    @classmethod
    def from_dict(cls, data: dict) -> 'GrowthData':
        return cls(int(data['M']), Fraction(data['v']), int(data['K3max']))


@dataclass(frozen=True)
class SievePanel:
    q: int
    primes: tuple
    residue_sets: tuple

    def table(self) -> np.ndarray:
        """Boolean membership table, row i for primes[i], padded to the largest prime."""
        width = max(self.primes)
        out = np.zeros((len(self.primes), width), dtype=bool)
        for i, residues in enumerate(self.residue_sets):
            out[i, list(residues)] = True
        return out

    def as_dict(self) -> dict:
        return {'q': self.q, 'primes': list(self.primes),
                'residue_counts': [len(r) for r in self.residue_sets]}


# Growth constant

def growth_constant(f: IntPolynomial) -> int:
    """M with |coeff(a b mod f)| <= M max|a_i| max|b_i| for all a, b of degree < n.

    Built from the coordinates r_k of theta^k, k <= 2n-2, weighted by the number of
    index pairs (s, t) with s + t = k.
    """
    n = f.degree
    rows = power_table(f)
    pairs = [min(k, 2 * n - 2 - k) + 1 for k in range(2 * n - 1)]
    return max(sum(d * abs(row[i]) for d, row in zip(pairs, rows)) for i in range(n))


def max_power_coefficient(units: UnitSystem, field: NumberField, K3max: int) -> Fraction:
    """Largest |coefficient| over eps_r^i for every unit and 0 < |i| <= K3max."""
    best = Fraction(0)
    for r, unit in enumerate(units.units, start=1):
        for base in (unit, inverse(unit, field)):
            power = base
            for i in range(1, K3max + 1):
                best = max(best, power.height())
                if i < K3max:
                    power = mul_mod(power, base, field)
        logger.debug('unit power scan r=%d K3max=%d running_max_bits=%d', r, K3max,
                     best.numerator.bit_length())
    return best


def index_bound(M: int, v: Fraction, n: int, prec: int = 256) -> int:
    """Largest m allowed by phi^m / sqrt 5 <= (sqrt 5 M^(n-2) v^(n-1))^n."""
    sqrt5 = Interval.point(5, prec).sqrt()
    log_x = sqrt5.log() + Interval.point(M, prec).log() * (n - 2) \
        + Interval.point(v, prec).log() * (n - 1)
    phi = (sqrt5 + 1) / 2
    return floor_upper((log_x * n + sqrt5.log()) / phi.log())


# Residue sieve

def qth_power_residues(p: int, q: int) -> frozenset:
    if p % q != 1 or not isprime(p):
        raise BadPrime(f'{p} is not a prime congruent to 1 mod {q}')
    values = np.arange(1, p, dtype=np.int64)
    powers = np.ones_like(values)
    base, e = values.copy(), q
    while e:
        if e & 1:
            powers = powers * base % p
        base = base * base % p
        e >>= 1
    return frozenset(int(x) for x in np.unique(powers)) | {0}


def build_panel(q: int, size: int = DEFAULT_PANEL_SIZE) -> SievePanel:
    """The ``size`` smallest primes p = 1 mod q above 2q with their q-th power residues."""
    primes = []
    p = 2 * q
    while len(primes) < size:
        p = nextprime(p)
        if p % q == 1:
            primes.append(int(p))
    return SievePanel(q, tuple(primes), tuple(qth_power_residues(p, q) for p in primes))


def fib_mod_scan(m_max: int, panel: SievePanel, start: int = 3, odd_only: bool = True,
                 seed: Sequence[int] = FIBONACCI, stop: Optional[int] = None) -> list:
    """Indices j in [start, min(m_max, stop - 1)] whose term is a q-th power residue mod every prime."""
    step = 2 if odd_only else 1
    if odd_only and start % 2 == 0:
        start += 1
    end = m_max + 1 if stop is None else min(m_max + 1, stop)
    table = panel.table()
    rows = np.arange(len(panel.primes))
    survivors = []
    for j, residues in odd_step_residues(start, end, panel.primes, seed, step):
        if table[rows, residues].all():
            survivors.append(j)
    logger.debug('sieve q=%d range=[%d, %d) survivors=%d', panel.q, start, end, len(survivors))
    return survivors


def exact_power_check(j: int, q: int, seed: Sequence[int] = FIBONACCI) -> bool:
    value = term(j, seed)
    if value < 0:
        return q % 2 == 1 and integer_nthroot(-value, q)[1]
    return integer_nthroot(value, q)[1]


def direct_power_scan(m_max: int, q: int, start: int = 3) -> list:
    """Odd j in [start, m_max] with F_j a perfect q-th power, by exact stepping."""
    hits = []
    j = start if start % 2 else start + 1
    prev, cur = term(j - 2), term(j)
    while j <= m_max:
        if integer_nthroot(cur, q)[1]:
            hits.append(j)
        prev, cur = cur, 3 * cur - prev
        j += 2
    return hits


# Unit-product enumeration

@dataclass(frozen=True)
class LinearCandidate:
    exponents: tuple
    A: Fraction
    B: Fraction


def _gray_steps(radix: int, dims: int):
    """Reflected mixed-radix Gray code: yields (coordinate, +1 or -1) for each move."""
    digits = [0] * dims
    directions = [1] * dims
    total = radix ** dims
    for _ in range(total - 1):
        for k in range(dims):
            nxt = digits[k] + directions[k]
            if 0 <= nxt < radix:
                digits[k] = nxt
                yield k, directions[k]
                break
            directions[k] = -directions[k]


def direct_enumeration(field: NumberField, units: UnitSystem, bound: int,
                       ceiling: int = DEFAULT_ENUMERATION_CEILING) -> list:
    """Unit products prod eps_k^(u_k), max|u_k| <= bound, that are linear in theta."""
    dims = len(units)
    radix = 2 * bound + 1
    if radix ** dims > ceiling:
        raise BoxTooLarge(f'{radix}^{dims} products exceed the ceiling {ceiling}')
    inverses = [inverse(u, field) for u in units.units]
    exponents = [-bound] * dims
    current = FieldElement.one(field.n)
    for inv in inverses:
        for _ in range(bound):
            current = mul_mod(current, inv, field)
    found = []

    def record():
        if current.is_linear():
            a, b = current.coeffs[:2]
            found.append(LinearCandidate(tuple(exponents), a, -b))

    record()
    for k, direction in _gray_steps(radix, dims):
        factor = units.units[k] if direction > 0 else inverses[k]
        current = mul_mod(current, factor, field)
        exponents[k] += direction
        record()
    logger.info('direct enumeration n=%d bound=%d products=%d linear=%d', field.n, bound,
                radix ** dims, len(found))
    return found


def small_b_solutions(field: NumberField, b_max: int, prec: int = 128) -> list:
    """All (A, B) with 0 <= B <= b_max and prod (A - theta_k B) = +-1."""
    solutions = [(1, 0), (-1, 0)]
    for B in range(1, b_max + 1):
        candidates = set()
        for i in range(1, field.n + 1):
            centre = field.root(i, prec) * B
            for A in range(math.floor(centre.lower) - 1, math.ceil(centre.upper) + 2):
                candidates.add(A)
        for A in sorted(candidates):
            if abs(field.f.homogeneous(A, B)) == 1:
                solutions.append((A, B))
    logger.info('small-B search n=%d b_max=%d solutions=%d', field.n, b_max, len(solutions))
    return solutions
