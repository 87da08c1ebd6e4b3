import json
from pathlib import Path

import click

from utils.arith import FibPowersError
from utils.numberfield import load_unit_system, number_field, verify_unit_system
from utils.pipeline import CASES


@click.command('check-units')
@click.option('--n', 'n', type=click.Choice([str(c) for c in CASES]), required=True,
              help='Degree of the field Q(theta).')
@click.option('--units-dir', type=click.Path(file_okay=False, path_type=Path), default=None,
              help='Directory holding units_n<n>.txt (defaults to the shipped tables).')
def check_units(n, units_dir):
    """Verify that a unit table holds n-1 independent units of norm +-1."""
    n = int(n)
    try:
        units = load_unit_system(n, units_dir)
        report = verify_unit_system(units, number_field(n))
    except (FibPowersError, OSError) as exc:
        raise click.ClickException(f'{type(exc).__name__}: {exc}')
    click.echo(json.dumps({'n': n, 'source': units.source, **report.as_dict()}, indent=2))
