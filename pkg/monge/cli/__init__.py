"""
Command-line entry point.

Exit codes: 0 on success, 1 on usage errors, 2 on runtime or data errors.
"""

import logging
import sys

import click

from monge import __version__, configure_logging
from monge.config import Config
from monge.errors import MongeError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2


@click.group()
@click.option('--log-level', envvar='MONGE_LOG_LEVEL', default=Config.LOG_LEVEL, show_default=True,
              type=click.Choice(['DEBUG', 'INFO', 'WARNING', 'ERROR'], case_sensitive=False),
              help='Verbosity of diagnostics written to stderr.')
@click.version_option(version=__version__, prog_name='monge')
def cli(log_level):
    """Estimate and apply Monge maps, and run the convergence experiments."""
    configure_logging(log_level)


def create_cli():
    """Register the command groups, the way blueprints are attached to an app"""
    from monge.cli import experiments, maps

    cli.add_command(maps.group)
    cli.add_command(experiments.experiment)
    return cli


def main(argv=None) -> int:
    """Run the CLI and translate failures into exit codes"""
    app = create_cli()
    try:
        result = app.main(args=argv, prog_name='monge', standalone_mode=False)
    except click.exceptions.Abort:
        click.echo('Aborted!', err=True)
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except (MongeError, OSError) as exc:
        logger.error('%s: %s', type(exc).__name__, exc)
        click.echo(f'Error: {exc}', err=True)
        return EXIT_RUNTIME
    return result if isinstance(result, int) else EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
