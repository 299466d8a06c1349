import click
from loguru import logger

from apis.runner import load_config, run
from core.exceptions import ConfigError
from models.schemas import CommandName, ComparisonMode, OutputFormat, ReichVariant, SolverKind


def _choice(enum) -> click.Choice:
    return click.Choice([member.value for member in enum])


def run_options(command):
    options = [
        click.option("--scenario", help="Catalog entry name."),
        click.option("--param", multiple=True, help="Catalog parameter as key=value; repeatable."),
        click.option("--solver", type=_choice(SolverKind), help="Solver; defaults to the entry's own."),
        click.option("--seed", type=int, multiple=True, help="Seed; repeatable."),
        click.option("--samples", type=int, help="Sample count for axioms and certification."),
        click.option("--starts", type=int, help="Starts for the uniqueness probe."),
        click.option("--start", help="Start point of the first solve."),
        click.option("--epsilon", type=float, help="Stop once a step norm drops below this."),
        click.option("--max-iter", "max_iter", type=int, help="Iteration cap."),
        click.option("--mode", type=_choice(ComparisonMode), help="Product used for non-commuting values."),
        click.option("--variant", type=_choice(ReichVariant), help="Middle factor of the Reich condition."),
        click.option("--formal/--no-formal", default=None, help="Evaluate pairs whose images leave the domain."),
        click.option("--out", type=click.Path(dir_okay=False), help="Record file."),
        click.option("--format", "format", type=_choice(OutputFormat), help="Record format."),
        click.option("--config", type=click.Path(dir_okay=False), help="JSON run configuration."),
    ]
    for option in reversed(options):
        command = option(command)
    return command


def _dispatch(command: CommandName, options: dict) -> int:
    try:
        config = load_config(command, options)
    except ConfigError as e:
        logger.error(f"invalid configuration for {command.value}: {e}")
        click.echo(f"error: {e}", err=True)
        return 1
    return run(config)


@click.command("verify-axioms")
@run_options
def verify_axioms(**options):
    """Check identity, symmetry, triangle and positivity of the scenario's metric."""
    return _dispatch(CommandName.VERIFY_AXIOMS, options)


@click.command("certify")
@run_options
def certify(**options):
    """Evaluate the scenario's contraction condition over sampled or all point pairs."""
    return _dispatch(CommandName.CERTIFY, options)


@click.command("solve")
@run_options
def solve(**options):
    """Iterate the scenario's maps to a fixed point."""
    return _dispatch(CommandName.SOLVE, options)


@click.command("fixed-points")
@run_options
def fixed_points(**options):
    """Enumerate fixed points of finite scenarios, probe uniqueness on the others."""
    return _dispatch(CommandName.FIXED_POINTS, options)


@click.command("demo")
@run_options
def demo(**options):
    """Run both worked examples end to end and show their defects."""
    return _dispatch(CommandName.DEMO, options)


commands = [verify_axioms, certify, solve, fixed_points, demo]
