#%%
"""Fibonacci-type sequences x_{i+1} = x_i + x_{i-1}: exact terms by fast doubling and
vectorised residues modulo a panel of primes."""
import logging
from typing import Iterator, Sequence

import numpy as np

logger = logging.getLogger(__name__)

FIBONACCI = (0, 1)
LUCAS = (2, 1)


def _fib_doubling(n: int, mod: int = 0) -> tuple:
    """(F_n, F_{n+1}), reduced modulo ``mod`` when it is nonzero."""
    a, b = 0, 1
    for bit in bin(n)[2:]:
        # F_2k = F_k (2 F_{k+1} - F_k), F_2k+1 = F_k^2 + F_{k+1}^2
        c = a * (2 * b - a)
        d = a * a + b * b
        if mod:
            c, d = c % mod, d % mod
        a, b = (d, c + d) if bit == '1' else (c, d)
        if mod:
            b %= mod
    return a, b


def term(n: int, seed: Sequence[int] = FIBONACCI, mod: int = 0) -> int:
    """x_n for the sequence starting (x_0, x_1) = seed; n may be negative."""
    x0, x1 = seed
    if n < 0:
        # x_{-k} = (-1)^k (x0 F_{k+1} - x1 F_k)
        f_k, f_k1 = _fib_doubling(-n, mod)
        value = (x0 * f_k1 - x1 * f_k) * (-1) ** (-n)
    else:
        f_n, f_n1 = _fib_doubling(n, mod)
        value = x0 * (f_n1 - f_n) + x1 * f_n
    return value % mod if mod else value


def fibonacci(n: int) -> int:
    return term(n)


def odd_step_residues(start: int, stop: int, primes: Sequence[int],
                      seed: Sequence[int] = FIBONACCI, step: int = 2) -> Iterator[tuple]:
    """Yield (j, residues) for j = start, start+step, ... < stop, residues[i] = x_j mod primes[i].

    With step 2 the terms advance by x_{j+2} = 3 x_j - x_{j-2}; with step 1 by the
    defining recurrence.
    """
    p = np.asarray(primes, dtype=np.int64)
    cur = np.array([term(start, seed, int(m)) for m in primes], dtype=np.int64)
    prev = np.array([term(start - step, seed, int(m)) for m in primes], dtype=np.int64)
    mult = 3 if step == 2 else 1
    sign = -1 if step == 2 else 1
    j = start
    while j < stop:
        yield j, cur
        cur, prev = (mult * cur + sign * prev) % p, cur
        j += step
