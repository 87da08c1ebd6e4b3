from pathlib import Path

import click

from utils.pipeline import (
    CASES,
    SOUND,
    ConfigError,
    constants_ledger,
    emit_certificate,
    load_config,
    run_case,
)

STAGE_NAMES = ('reduction', 'growth', 'sieve', 'enumeration', 'small_b')


@click.command('verify')
@click.option('--n', 'n', type=click.Choice([str(c) for c in CASES] + ['all']), default='all',
              show_default=True, help='Exponent to certify.')
@click.option('--sigma1', type=float, default=None,
              help='Use a single lattice scale (a real number above 1) instead of the ladder.')
@click.option('--sigma-cap', type=int, default=None, help='Largest scale on the ladder 10, 1e3, 1e6, ...')
@click.option('--precision', type=int, default=None, help='Starting precision in bits.')
@click.option('--panel-size', type=int, default=None, help='Number of sieve primes.')
@click.option('--jobs', type=int, default=1, show_default=True, help='Worker processes.')
@click.option('--report', 'report_dir', type=click.Path(file_okay=False, path_type=Path),
              default='reports', show_default=True, envvar='FIBPOWERS_REPORT_DIR',
              help='Directory for certificates and checkpoints.')
@click.option('--units-dir', type=click.Path(file_okay=False, path_type=Path), default=None)
@click.option('--skip', multiple=True, type=click.Choice(STAGE_NAMES), help='Disable a stage.')
@click.option('--no-checkpoint', is_flag=True, help='Recompute everything, ignoring stored stages.')
def verify(n, sigma1, sigma_cap, precision, panel_size, jobs, report_dir, units_dir, skip, no_checkpoint):
    """Run the full certification for one exponent or for all of them."""
    options = {'n': n if n == 'all' else int(n), 'sigma1': sigma1, 'jobs': jobs,
               'report_dir': report_dir, 'units_dir': units_dir, 'checkpoint': not no_checkpoint,
               'stages': {name: name not in skip for name in STAGE_NAMES}}
    if sigma_cap is not None:
        options['sigma_cap'] = sigma_cap
    if precision is not None:
        options['precision'] = precision
    if panel_size is not None:
        options['panel_size'] = panel_size
    try:
        config = load_config(**options)
    except ConfigError as exc:
        raise click.UsageError(str(exc))
    report_dir.mkdir(parents=True, exist_ok=True)
    sound = True
    for case in config.cases:
        certificate = run_case(case, config)
        path = emit_certificate(certificate, report_dir / f'certificate_n{case}.json')
        data = certificate.as_dict()
        ledger = constants_ledger(data)
        if not ledger.empty:
            click.echo(ledger[['j', 'c1', 'c6', 'c7', 'K3_init', 'K3_final']].to_string(index=False))
        line = f'n={case}: {certificate.conclusion}'
        if certificate.failed_stage:
            line += f' (failed stage: {certificate.failed_stage})'
        click.echo(f'{line} -> {path}')
        sound = sound and certificate.conclusion == SOUND
    if not sound:
        raise SystemExit(1)
