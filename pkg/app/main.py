"""
TPA Metrology Toolkit
Command-line application computing Fisher information of probes under two-photon absorption
"""

import json
import logging
import sys

import click
from pydantic import ValidationError

from app.api.figures import cmd_advantage, cmd_efficiency, cmd_qfi, cmd_scaling
from app.api.optimization import cmd_optimize
from app.api.utilities import cmd_evolve, cmd_probe, cmd_validate
from app.config import settings
from app.models.requests import RunConfig
from app.services.errors import EXIT_FAILURE

logger = logging.getLogger(__name__)


@click.group(help=settings.APP_TITLE)
@click.version_option(settings.APP_VERSION)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="JSON file whose keys mirror the command flags; explicit flags win")
@click.option("--log-level", type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
              default=settings.LOG_LEVEL, show_default=True)
@click.pass_context
def cli(ctx, config_path, log_level):
    # Configure logging
    logging.basicConfig(level=log_level.upper(), format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    logging.getLogger().setLevel(log_level.upper())

    if config_path:
        try:
            with open(config_path) as handle:
                run_config = RunConfig.model_validate(json.load(handle))
        except (json.JSONDecodeError, ValidationError) as e:
            logger.error(f"Invalid config file {config_path}: {e}")
            raise click.UsageError(f"invalid config file {config_path}: {e}")
        defaults = run_config.flag_defaults()
        ctx.default_map = {name: defaults for name in cli.commands}
        logger.info(f"Loaded {len(defaults)} flag defaults from {config_path}")


cli.add_command(cmd_qfi)
cli.add_command(cmd_optimize)
cli.add_command(cmd_advantage)
cli.add_command(cmd_efficiency)
cli.add_command(cmd_scaling)
cli.add_command(cmd_validate)
cli.add_command(cmd_probe)
cli.add_command(cmd_evolve)


def main():
    """Entry point with the global exception handler"""
    try:
        cli.main(prog_name="tpa-metrology")
    except Exception as exc:
        logger.error(f"Global exception handler caught: {exc}")
        click.echo(f"Internal error: {exc}", err=True)
        sys.exit(EXIT_FAILURE)


if __name__ == "__main__":
    main()
