#%%
"""Exact integral LLL and the iterated bound reduction for linear forms

    Lambda = delta + a_1 mu_1 + ... + a_q mu_q,   |Lambda| < K1 exp(-K2 A),  A <= K3.

All lattice arithmetic is over the integers; no floating point is used.
"""
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence

from utils.arith import (
    FibPowersError,
    Interval,
    exact_determinant,
    exact_solve,
    format_decimal,
    unique_integer_in,
    with_precision,
)

logger = logging.getLogger(__name__)

DEFAULT_DELTA = Fraction(3, 4)
DEFAULT_SIGMA_CAP = 10 ** 12


def sigma_ladder(cap: int = DEFAULT_SIGMA_CAP) -> tuple:
    """10, 1e3, 1e6, ... up to ``cap``: the scalings tried for c0 = sigma1 (K3 + 1)^q."""
    if cap < 10:
        raise ValueError(f'sigma cap must be at least 10, got {cap}')
    ladder = [10]
    exponent = 3
    while 10 ** exponent <= cap:
        ladder.append(10 ** exponent)
        exponent += 3
    return tuple(ladder)


DEFAULT_SIGMAS = sigma_ladder()


class RankDeficient(FibPowersError):
    pass


class HypothesisFailed(FibPowersError):
    pass


@dataclass(frozen=True)
class LatticeBasis:
    """Row vectors generating a lattice; ``transform`` maps the input rows to these rows."""
    rows: tuple
    transform: Optional[tuple] = None

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]]) -> 'LatticeBasis':
        rows = tuple(tuple(int(x) for x in row) for row in rows)
        if any(len(row) != len(rows) for row in rows):
            raise RankDeficient('basis matrix must be square')
        return cls(rows)

    @property
    def dimension(self) -> int:
        return len(self.rows)

    def transpose(self) -> 'LatticeBasis':
        return LatticeBasis(tuple(zip(*self.rows)))

    def __str__(self):
        return '\n'.join(' '.join(str(x) for x in row) for row in self.rows)


def _dot(u, v) -> int:
    return sum(a * b for a, b in zip(u, v))


def gram_schmidt(rows: Sequence[Sequence[int]]) -> tuple:
    """Squared norms |b*_i|^2 and coefficients mu[i][j], all exact."""
    size = len(rows)
    bstar = []
    norms = []
    mu = [[Fraction(0)] * size for _ in range(size)]
    for i, row in enumerate(rows):
        v = [Fraction(x) for x in row]
        for j in range(i):
            if norms[j] == 0:
                raise RankDeficient(f'vector {j} is dependent on its predecessors')
            mu[i][j] = sum(Fraction(a) * b for a, b in zip(row, bstar[j])) / norms[j]
            v = [a - mu[i][j] * b for a, b in zip(v, bstar[j])]
        bstar.append(v)
        norms.append(sum(x * x for x in v))
    return norms, mu


def is_lll_reduced(basis: LatticeBasis, delta: Fraction = DEFAULT_DELTA) -> bool:
    norms, mu = gram_schmidt(basis.rows)
    for i in range(len(norms)):
        if any(abs(mu[i][j]) > Fraction(1, 2) for j in range(i)):
            return False
        if i and norms[i] < (delta - mu[i][i - 1] ** 2) * norms[i - 1]:
            return False
    return True


def lll_reduce(basis: LatticeBasis, delta: Fraction = DEFAULT_DELTA) -> LatticeBasis:
    """Integral LLL with subdeterminants d_i and integers lam[k][j] = d_j mu[k][j]."""
    delta = Fraction(delta)
    if not Fraction(1, 4) < delta < 1:
        raise ValueError(f'delta must lie in (1/4, 1), got {delta}')
    a, b = delta.numerator, delta.denominator
    size = basis.dimension
    rows = [list(row) for row in basis.rows]
    h = [[int(i == j) for j in range(size)] for i in range(size)]
    if size == 0:
        return LatticeBasis((), ())
    # 1-based bookkeeping: d[0] = 1, d[i] for the first i vectors
    d = [1] + [0] * size
    lam = [[0] * size for _ in range(size)]
    d[1] = _dot(rows[0], rows[0])
    if d[1] == 0:
        raise RankDeficient('zero vector in basis')
    k, k_max = 2, 1

    def red(k, l):
        if 2 * abs(lam[k - 1][l - 1]) > d[l]:
            q = (2 * lam[k - 1][l - 1] + d[l]) // (2 * d[l])
            rows[k - 1] = [x - q * y for x, y in zip(rows[k - 1], rows[l - 1])]
            h[k - 1] = [x - q * y for x, y in zip(h[k - 1], h[l - 1])]
            lam[k - 1][l - 1] -= q * d[l]
            for i in range(1, l):
                lam[k - 1][i - 1] -= q * lam[l - 1][i - 1]

    def swap(k):
        rows[k - 1], rows[k - 2] = rows[k - 2], rows[k - 1]
        h[k - 1], h[k - 2] = h[k - 2], h[k - 1]
        for j in range(1, k - 1):
            lam[k - 1][j - 1], lam[k - 2][j - 1] = lam[k - 2][j - 1], lam[k - 1][j - 1]
        lk = lam[k - 1][k - 2]
        new_d = (d[k - 2] * d[k] + lk * lk) // d[k - 1]
        for i in range(k + 1, k_max + 1):
            t = lam[i - 1][k - 1]
            lam[i - 1][k - 1] = (d[k] * lam[i - 1][k - 2] - lk * t) // d[k - 1]
            lam[i - 1][k - 2] = (new_d * t + lk * lam[i - 1][k - 1]) // d[k]
        d[k - 1] = new_d

    while k <= size:
        if k > k_max:
            k_max = k
            for j in range(1, k + 1):
                u = _dot(rows[k - 1], rows[j - 1])
                for i in range(1, j):
                    u = (d[i] * u - lam[k - 1][i - 1] * lam[j - 1][i - 1]) // d[i - 1]
                if j < k:
                    lam[k - 1][j - 1] = u
                else:
                    if u == 0:
                        raise RankDeficient(f'row {k - 1} is dependent on the rows before it')
                    d[k] = u
        while True:
            red(k, k - 1)
            lk = lam[k - 1][k - 2]
            if b * d[k] * d[k - 2] < a * d[k - 1] ** 2 - b * lk * lk:
                swap(k)
                k = max(2, k - 1)
                continue
            for l in range(k - 2, 0, -1):
                red(k, l)
            k += 1
            break
    return LatticeBasis(tuple(tuple(r) for r in rows), tuple(tuple(r) for r in h))


def transform_determinant(basis: LatticeBasis) -> int:
    return exact_determinant(basis.transform)


# Bound reduction

def build_reduction_lattice(mu: Sequence[Interval], c0: int) -> LatticeBasis:
    """Identity on the first q-1 rows, rounded c0*mu_i on the last; columns span the lattice."""
    q = len(mu)
    rows = [[int(i == j) for j in range(q)] for i in range(q - 1)]
    rows.append([unique_integer_in(m * c0) for m in mu])
    return LatticeBasis.from_rows(rows)


@dataclass(frozen=True)
class ReductionRecord:
    iteration: int
    K3_in: int
    c0: int
    sigma1: Fraction
    i_star: Optional[int]
    test_lhs: Optional[Fraction]
    test_rhs: Optional[Fraction]
    K3_out: Optional[int]
    reason: str = ''

    @property
    def succeeded(self) -> bool:
        return self.K3_out is not None

    def as_dict(self) -> dict:
        return {
            'iteration': self.iteration,
            'K3_in': str(self.K3_in),
            'c0': str(self.c0),
            'sigma1': str(self.sigma1),
            'i_star': self.i_star,
            'test_lhs': None if self.test_lhs is None else format_decimal(self.test_lhs, 12, upward=False),
            'test_rhs': None if self.test_rhs is None else format_decimal(self.test_rhs, 12, upward=True),
            'K3_out': None if self.K3_out is None else str(self.K3_out),
            'reason': self.reason,
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'ReductionRecord':
        def frac(x):
            return None if x is None else Fraction(x)
        return cls(data['iteration'], int(data['K3_in']), int(data['c0']), Fraction(str(data['sigma1'])),
                   data['i_star'], frac(data['test_lhs']), frac(data['test_rhs']),
                   None if data['K3_out'] is None else int(data['K3_out']), data['reason'])


def _distance_to_integer(x: Fraction) -> Fraction:
    return abs(x - round(x))


def reduction_step(K1: Interval, K2: Interval, K3: int, q: int, mu: Sequence[Interval],
                   delta_shift: Interval, sigma1=10, iteration: int = 1,
                   lll_delta: Fraction = DEFAULT_DELTA) -> ReductionRecord:
    """One application of the lattice criterion to A <= K3 (applied as A < K3 + 1)."""
    if len(mu) != q:
        raise ValueError(f'expected {q} coefficients, got {len(mu)}')
    strict = K3 + 1
    sigma1 = Fraction(sigma1)
    c0 = math.ceil(sigma1 * strict ** q)
    lattice = build_reduction_lattice(mu, c0)
    reduced = lll_reduce(lattice.transpose(), lll_delta)
    x = [0] * (q - 1) + [unique_integer_in(delta_shift * (-c0))]
    # columns of the reduced matrix are the reduced basis vectors
    columns = [[reduced.rows[c][r] for c in range(q)] for r in range(q)]
    s = exact_solve(columns, x)
    fractional = [i for i, v in enumerate(s, start=1) if v.denominator != 1]
    if not fractional:
        return ReductionRecord(iteration, K3, c0, sigma1, None, None, None, None,
                               'all s_i are integers')
    i_star = fractional[-1]
    b1_sq = _dot(reduced.rows[0], reduced.rows[0])
    dist = _distance_to_integer(s[i_star - 1])
    # 2^(-(q-1)/2) ||s|| |b1| >= sqrt(4q^2 + 3q - 3/4) K3, squared
    lhs = dist * dist * b1_sq / 2 ** (q - 1)
    rhs = (4 * q * q + 3 * q - Fraction(3, 4)) * strict * strict
    if lhs < rhs:
        return ReductionRecord(iteration, K3, c0, sigma1, i_star, lhs, rhs, None,
                               'lattice criterion not met')
    value = (K1 * c0 / (q * strict)).log() / K2
    K3_out = max(0, math.floor(value.upper))
    return ReductionRecord(iteration, K3, c0, sigma1, i_star, lhs, rhs, K3_out)


@dataclass(frozen=True)
class ReductionInputs:
    """Data for one reduction run; ``linear_form(prec)`` returns (delta, mu) at ``prec`` bits."""
    K1: Interval
    K2: Interval
    K3_init: int
    q: int
    linear_form: Callable[[int], tuple]
    label: str = ''


def _step_precision(c0: int) -> int:
    return c0.bit_length() + 96


def reduce_to_fixpoint(inputs: ReductionInputs, sigmas: Sequence = DEFAULT_SIGMAS,
                       ceiling: int = 1 << 20, resume: Sequence[ReductionRecord] = ()) -> tuple:
    """Apply reduction steps while the bound strictly decreases; returns (K3, trace)."""
    trace = list(resume)
    K3 = trace[-1].K3_out if trace else inputs.K3_init
    while True:
        accepted = None
        for sigma1 in sigmas:
            c0 = math.ceil(Fraction(sigma1) * (K3 + 1) ** inputs.q)

            def attempt(prec, sigma1=sigma1):
                delta, mu = inputs.linear_form(prec)
                return reduction_step(inputs.K1, inputs.K2, K3, inputs.q, mu, delta,
                                      sigma1, len(trace) + 1)

            record = with_precision(attempt, _step_precision(c0), ceiling)
            if record.succeeded and record.K3_out < K3:
                accepted = record
                break
            logger.debug('reduction attempt %s K3=%d sigma1=%s outcome=%s', inputs.label, K3,
                         sigma1, record.reason or f'K3_out={record.K3_out}')
        if accepted is None:
            break
        logger.info('reduction step %s K3_in=%d K3_out=%d sigma1=%s', inputs.label,
                    K3, accepted.K3_out, accepted.sigma1)
        trace.append(accepted)
        K3 = accepted.K3_out
    if not trace:
        raise HypothesisFailed(f'no reduction from K3={inputs.K3_init} {inputs.label} '
                               f'with sigma1 in {[str(s) for s in sigmas]}')
    return K3, trace
