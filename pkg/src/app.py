import logging

import click

from commands.check_units import check_units
from commands.sieve import sieve
from commands.verify import verify

LOG_LEVELS = [logging.WARNING, logging.INFO, logging.DEBUG]


@click.group()
@click.option('-v', '--verbose', count=True, help='Repeat for more detail (-v info, -vv debug).')
def cli(verbose):
    """Certified search for perfect powers in the Fibonacci sequence."""
    logging.basicConfig(level=LOG_LEVELS[min(verbose, 2)],
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')


cli.add_command(verify)
cli.add_command(sieve)
cli.add_command(check_units)

if __name__ == '__main__':
    cli()
