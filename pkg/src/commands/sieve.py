import logging

import click

from utils.search import DEFAULT_PANEL_SIZE, build_panel, direct_power_scan, exact_power_check, fib_mod_scan

logger = logging.getLogger(__name__)


@click.command('sieve')
@click.option('--q', 'q', type=click.IntRange(min=2), required=True, help='Exponent to look for.')
@click.option('--max', 'm_max', type=click.IntRange(min=3), required=True,
              help='Largest Fibonacci index to scan.')
@click.option('--primes', type=click.IntRange(min=1), default=DEFAULT_PANEL_SIZE, show_default=True,
              help='Number of primes = 1 mod q in the residue panel.')
@click.option('--direct', is_flag=True, help='Skip the sieve and test every odd index exactly.')
def sieve(q, m_max, primes, direct):
    """Look for q-th powers among F_j, j odd, 3 <= j <= MAX."""
    if direct:
        hits = direct_power_scan(m_max, q)
        click.echo(f'direct scan q={q} max={m_max}: {len(hits)} powers')
    else:
        panel = build_panel(q, primes)
        survivors = fib_mod_scan(m_max, panel)
        hits = [j for j in survivors if exact_power_check(j, q)]
        click.echo(f'panel q={q}: {", ".join(str(p) for p in panel.primes)}')
        click.echo(f'sieve max={m_max}: {len(survivors)} survivors, {len(hits)} powers')
    for j in hits:
        click.echo(f'F_{j} is a {q}-th power')
    if hits:
        raise SystemExit(1)
