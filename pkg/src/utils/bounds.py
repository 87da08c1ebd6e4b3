#%%
"""Per-root constant ledger: c1..c7, the Baker-Wustholz constant, K1, K2 and the
initial exponent bound K3.

Everything is an outward-rounded :class:`Interval`; callers round up whatever
sits on the large side of an inequality with ``safe_bound(x, 'upper')``.
"""
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from utils.arith import (
    DEFAULT_PRECISION,
    FibPowersError,
    Interval,
    format_decimal,
    interval_max,
    interval_min,
    with_precision,
)
from utils.numberfield import (
    FieldElement,
    NumberField,
    UnitSystem,
    embed,
    eta,
    invert_certified,
    log_embedding_matrix,
    unit_equation_residual,
)
from utils.polynomial import expected_delta_data

logger = logging.getLogger(__name__)


class BoundPreconditionFailed(FibPowersError):
    pass


@dataclass(frozen=True)
class CaseSelector:
    n: int
    j: int
    k: int
    l: int

    def __post_init__(self):
        if not 1 <= self.j <= self.n:
            raise ValueError(f'root index j={self.j} outside 1..{self.n}')
        if (self.k, self.l) != (self.j % self.n + 1, (self.j + 1) % self.n + 1):
            raise ValueError(f'k, l must follow j cyclically, got {(self.j, self.k, self.l)}')

    @classmethod
    def for_root(cls, n: int, j: int) -> 'CaseSelector':
        return cls(n, j, j % n + 1, (j + 1) % n + 1)


@dataclass(frozen=True)
class HeightBound:
    h_delta: Interval
    h_gamma: tuple
    C_bw: Interval


@dataclass(frozen=True)
class InitialBound:
    threshold: int
    K3_init: int


@dataclass(frozen=True)
class CaseConstants:
    selector: CaseSelector
    c1: Interval
    c2: Interval
    c2a: Interval
    c3: Interval
    c4: Interval
    c5: Interval
    c6: Interval
    c7: Interval
    K1: Interval
    K2: Interval
    K3_init: int
    threshold: int

    def as_dict(self, digits: int = 12) -> dict:
        out = {'j': self.selector.j, 'k': self.selector.k, 'l': self.selector.l,
               'K3_init': str(self.K3_init), 'threshold': str(self.threshold)}
        for name in ('c1', 'c2', 'c2a', 'c3', 'c4', 'c5', 'c6', 'c7', 'K1', 'K2'):
            lo, hi = getattr(self, name).to_decimal(digits)
            out[name] = [lo, hi]
        return out

    @classmethod
    def from_dict(cls, n: int, data: dict, prec: int = DEFAULT_PRECISION) -> 'CaseConstants':
        values = {name: Interval.from_bounds(Fraction(data[name][0]), Fraction(data[name][1]), prec)
                  for name in ('c1', 'c2', 'c2a', 'c3', 'c4', 'c5', 'c6', 'c7', 'K1', 'K2')}
        return cls(CaseSelector.for_root(n, data['j']), K3_init=int(data['K3_init']),
                   threshold=int(data['threshold']), **values)


def _abs_diff(a: Interval, b: Interval) -> Interval:
    return abs(a - b)


def compute_c_constants(field: NumberField, j: int, prec: int = DEFAULT_PRECISION) -> tuple:
    """(c1, c2, c2a, c3, c4, c5) for root index j."""
    n = field.n
    theta = [field.root(i, prec) for i in range(1, n + 1)]
    tj = theta[j - 1]
    others = [theta[i] for i in range(n) if i != j - 1]
    c1 = interval_min(_abs_diff(tj, t) for t in others)
    c3 = interval_max(_abs_diff(tj, t) for t in others)
    c2 = interval_max(abs((theta[t] - theta[r]) / (theta[t] - theta[s]))
                      for r in range(n) for s in range(n) for t in range(n)
                      if len({r, s, t}) == 3)
    c2a = interval_max(abs((tj - theta[s]) / (tj - theta[t]))
                       for s in range(n) for t in range(n)
                       if len({j - 1, s, t}) == 3)
    c4 = c3 + c1 / (c2 * 4)
    log4 = Interval.point(4, prec).log()
    c5 = interval_max([1 + abs((c1 / 2).log()) / log4, 1 + abs(c4.log()) / log4])
    return c1, c2, c2a, c3, c4, c5


def compute_c6(field: NumberField, units: UnitSystem, j: int, c5: Interval,
               prec: int = DEFAULT_PRECISION) -> Interval:
    matrix = log_embedding_matrix(units, field, j, prec)
    _, row_norm = invert_certified(matrix)
    return row_norm * c5


def bw_constant(num_terms: int, d: int, prec: int = DEFAULT_PRECISION) -> Interval:
    """18 (t+1)! t^(t+1) (32 d)^(t+2) log(2 t d) with t = num_terms."""
    if num_terms < 2 or d < 1:
        raise BoundPreconditionFailed(f'need num_terms >= 2 and d >= 1, got {(num_terms, d)}')
    t = num_terms
    head = 18 * math.factorial(t + 1) * t ** (t + 1) * (32 * d) ** (t + 2)
    return Interval.point(2 * t * d, prec).log() * head


def compute_heights(field: NumberField, units: UnitSystem, c2a: Interval,
                    delta_data: Optional[tuple] = None, prec: int = DEFAULT_PRECISION) -> HeightBound:
    """Height bounds for delta_jkl (from its minimal polynomial's degree and leading
    coefficient) and for each unit quotient gamma_i."""
    degree, leading = delta_data or expected_delta_data(field.n)
    h_delta = Interval.point(leading, prec).log() / degree + c2a.log()
    h_gamma = tuple(eta(units, field, k, prec).log() for k in range(1, field.n))
    return HeightBound(h_delta, h_gamma, bw_constant(field.n, field.D, prec))


def compute_c7(heights: HeightBound) -> Interval:
    product = heights.C_bw * heights.h_delta
    for h in heights.h_gamma:
        product = product * h
    return product


def compute_K1K2(c1: Interval, c2: Interval, c6: Interval, n: int) -> tuple:
    K1 = c2 * 2 ** (n + 1) / c1 ** n
    K2 = n / c6
    return K1, K2


def initial_bound(c1: Interval, c2: Interval, c6: Interval, c7: Interval, n: int) -> InitialBound:
    """Bound U from U/log U <= c6 c7/n + c6 |log(c1^n/(2^(n+1) c2))| / (n log 4)."""
    prec = c7.prec
    K1, _ = compute_K1K2(c1, c2, c6, n)
    rhs = c6 * c7 / n + c6 * abs(K1.log()) / (Interval.point(4, prec).log() * n)
    r = rhs.upper
    if r <= 3:
        raise BoundPreconditionFailed(f'right side {float(r):.4g} too small to invert U/log U')
    # T -> r log T decreases to the largest root from any start above it
    t = Fraction(math.ceil(2 * r * Interval.point(r, prec).log().upper))
    for _ in range(64):
        nxt = Fraction(math.ceil(r * Interval.point(t, prec).log().upper))
        if nxt >= t:
            break
        t = nxt
    # U/log U is increasing past e, so t/log t >= r bounds every admissible U
    while (Interval.point(t, prec) / Interval.point(t, prec).log()).lower < r:
        t += math.ceil(t / (1 << 20)) + 1
    threshold = int(math.ceil(t))
    K3_init = 10 ** len(str(threshold - 1)) if threshold > 1 else 1
    logger.debug('initial bound n=%d threshold=%s K3_init=1e%d', n,
                 format_decimal(Fraction(threshold), 8), len(str(K3_init)) - 1)
    return InitialBound(threshold, K3_init)


def case_constants(field: NumberField, units: UnitSystem, j: int,
                   delta_data: Optional[tuple] = None, prec: int = DEFAULT_PRECISION,
                   ceiling: int = 1 << 14) -> CaseConstants:
    selector = CaseSelector.for_root(field.n, j)

    def compute(bits):
        c1, c2, c2a, c3, c4, c5 = compute_c_constants(field, j, bits)
        c6 = compute_c6(field, units, j, c5, bits)
        c7 = compute_c7(compute_heights(field, units, c2a, delta_data, bits))
        K1, K2 = compute_K1K2(c1, c2, c6, field.n)
        bound = initial_bound(c1, c2, c6, c7, field.n)
        return CaseConstants(selector, c1, c2, c2a, c3, c4, c5, c6, c7, K1, K2,
                             bound.K3_init, bound.threshold)

    constants = with_precision(compute, prec, ceiling)
    logger.info('constants n=%d j=%d c1=%s c6=%s c7=%s K3_init=%d', field.n, j,
                constants.c1.to_decimal(6)[0], constants.c6.to_decimal(6)[1],
                constants.c7.to_decimal(6)[1], constants.K3_init)
    return constants


def b_threshold(constants: CaseConstants, n: int) -> int:
    """Smallest integer at or above max{4, (2 c2)^(1/n) 2/c1}."""
    value = (constants.c2 * 2).root(n) * 2 / constants.c1
    return max(4, math.ceil(value.upper))


# Linear form and the inequality chain

@dataclass(frozen=True)
class LinearForm:
    """Lambda = delta + sum u_r mu_r for the selector's (j, k, l)."""
    selector: CaseSelector
    delta: Interval
    mu: tuple


def linear_form_data(field: NumberField, units: UnitSystem, selector: CaseSelector,
                     prec: int = DEFAULT_PRECISION) -> LinearForm:
    tj, tk, tl = (field.root(i, prec) for i in (selector.j, selector.k, selector.l))
    delta = abs((tj - tk) / (tj - tl)).log()
    mu = tuple(abs(embed(u, selector.l, field, prec) / embed(u, selector.k, field, prec)).log()
               for u in units.units)
    return LinearForm(selector, delta, mu)


def _betas(field: NumberField, A: int, B: int, prec: int) -> list:
    return [Interval.point(A, prec) - field.root(i, prec) * B for i in range(1, field.n + 1)]


def lambda_form(field: NumberField, selector: CaseSelector, A: int, B: int,
                prec: int = DEFAULT_PRECISION) -> Interval:
    """log |(theta_j - theta_k)/(theta_j - theta_l) * (A - theta_l B)/(A - theta_k B)|."""
    tj, tk, tl = (field.root(i, prec) for i in (selector.j, selector.k, selector.l))
    beta = _betas(field, A, B, prec)
    return abs((tj - tk) / (tj - tl) * beta[selector.l - 1] / beta[selector.k - 1]).log()


def siegel_sides(field: NumberField, selector: CaseSelector, A: int, B: int,
                 prec: int = DEFAULT_PRECISION) -> tuple:
    tj, tk, tl = (field.root(i, prec) for i in (selector.j, selector.k, selector.l))
    beta = _betas(field, A, B, prec)
    bj, bk, bl = (beta[i - 1] for i in (selector.j, selector.k, selector.l))
    lhs = abs((tl - tk) / (tl - tj) * bj / bk)
    rhs = abs((tj - tk) / (tj - tl) * bl / bk - 1)
    return lhs, rhs


@dataclass(frozen=True)
class BetaChain:
    j: int
    beta_j: Interval
    bound: Interval


def beta_chain(field: NumberField, A: int, B: int, prec: int = DEFAULT_PRECISION) -> BetaChain:
    """|beta_j| for the smallest beta and |N(A - theta B)| (2/(|B| c1))^(n-1)."""
    if B == 0:
        raise BoundPreconditionFailed('beta chain needs B != 0')
    betas = [abs(b) for b in _betas(field, A, B, prec)]
    j = min(range(field.n), key=lambda i: betas[i].mid) + 1
    c1 = compute_c_constants(field, j, prec)[0]
    residual = abs(unit_equation_residual(A, B, field))
    bound = (Interval.point(2, prec) / (c1 * abs(B))) ** (field.n - 1) * residual
    return BetaChain(j, betas[j - 1], bound)
