import sys

import click

from apis.routes_runs import commands
from core.scenario_catalog import catalog_list
from core.settings import setup_logging


class HarnessGroup(click.Group):
    """Click group whose usage errors exit with 1; 2 is reserved for violations and non-convergence."""

    def main(self, *args, **kwargs):
        kwargs["standalone_mode"] = False
        try:
            code = super().main(*args, **kwargs)
        except click.ClickException as e:
            e.show()
            sys.exit(1)
        except click.exceptions.Abort:
            click.echo("Aborted!", err=True)
            sys.exit(1)
        sys.exit(code if isinstance(code, int) else 0)


@click.group(cls=HarnessGroup)
@click.option("--log-level", default=None, help="stderr log level (defaults to CSTAR_LOG_LEVEL).")
@click.option("--log-file", default=None, help="Extra log file (defaults to CSTAR_LOG_FILE).")
def cli(log_level, log_file):
    """Fixed-point experiments on C*-algebra valued metric spaces."""
    setup_logging(log_level, log_file)


for command in commands:
    cli.add_command(command)


@cli.command("list")
def list_scenarios():
    """List catalog entries."""
    for name in catalog_list():
        click.echo(name)
    return 0


if __name__ == "__main__":
    cli()
