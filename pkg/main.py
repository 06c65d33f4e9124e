import logging
import sys
from typing import Any, Dict

import click

from core.logging import configure_logging
from core.router import run_verb
from services.beat_search import SearchMode
from tools.report_schema import report_to_csv
from tools.utils import dumps_json

logger = logging.getLogger(__name__)

PROTOCOL_HELP = "p0, opt0, opt1, opt-min, opt-maj, opt-min-k, u-p0, u-opt0, u-prot-min-k, p0opt-hmw"
TASK_HELP = "consensus, majority-consensus, k-set, uniform-consensus, uniform-k-set"


def domain_options(func):
    """--n --t --values --horizon --k --workers, shared by the sweeping verbs"""
    decorators = [
        click.option("--n", "n", type=click.IntRange(min=2), required=True, help="Number of processes"),
        click.option("--t", "t", type=click.IntRange(min=0), required=True, help="Crash bound"),
        click.option("--values", type=click.IntRange(min=1), default=2, show_default=True, help="|V|, values are 0..|V|-1"),
        click.option("--horizon", type=click.IntRange(min=0), default=None, help="Rounds simulated (default t+1)"),
        click.option("--k", "k", type=click.IntRange(min=1), default=None, help="k for k-set tasks and protocols"),
        click.option("--workers", type=click.IntRange(min=1), default=None, help="Worker processes (default: all cores)"),
    ]
    for decorator in reversed(decorators):
        func = decorator(func)
    return func


def output_option(func):
    """--output after the verb overrides the group-level one"""
    return click.option("--output", type=click.Choice(["json", "csv"]), default=None,
                        help="Report format (default: the group --output, json)")(func)


def emit(verb: str, options: Dict[str, Any]) -> None:
    ctx = click.get_current_context()
    output = options.pop("output", None) or ctx.obj["output"]
    report, exit_code = run_verb(verb, options)
    if output == "csv":
        sys.stdout.write(report_to_csv(report))
    else:
        sys.stdout.buffer.write(dumps_json(report.model_dump(mode="json")))
        sys.stdout.buffer.write(b"\n")
    sys.stdout.flush()
    ctx.exit(exit_code)


@click.group()
@click.option("--output", type=click.Choice(["json", "csv"]), default="json", show_default=True)
@click.option("--log-level", type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
              default="WARNING", show_default=True)
@click.pass_context
def cli(ctx, output, log_level):
    """Simulate, verify and compare full-information protocols in the synchronous crash model."""
    configure_logging(log_level)
    ctx.ensure_object(dict)
    ctx.obj["output"] = output


@cli.command()
@output_option
@click.option("--protocol", required=True, help=PROTOCOL_HELP)
@click.option("--adversary", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--task", default=None, help=f"Also check the run against a task: {TASK_HELP}")
@click.option("--values", type=click.IntRange(min=1), default=2, show_default=True)
@click.option("--horizon", type=click.IntRange(min=0), default=None)
@click.option("--k", "k", type=click.IntRange(min=1), default=None)
def simulate(**options):
    """One run of a protocol against an adversary file."""
    emit("simulate", options)


@cli.command()
@output_option
@domain_options
@click.option("--protocol", required=True, help=PROTOCOL_HELP)
@click.option("--task", required=True, help=TASK_HELP)
def verify(**options):
    """Task properties and stopping bounds on every adversary of the domain."""
    emit("verify", options)


@cli.command()
@output_option
@domain_options
@click.option("--a", "a", required=True, help="Protocol claimed to dominate")
@click.option("--b", "b", required=True, help="Protocol compared against")
def compare(**options):
    """Per-process and last-decider domination between two protocols."""
    emit("compare", options)


@cli.command("beat-search")
@output_option
@domain_options
@click.option("--target", required=True, help=PROTOCOL_HELP)
@click.option("--task", required=True, help=TASK_HELP)
@click.option("--mode", type=click.Choice([m.value for m in SearchMode]), default=SearchMode.PER_PROCESS.value,
              show_default=True)
@click.option("--budget", type=click.IntRange(min=1), default=None, help="Solver resource limit")
def beat_search(**options):
    """Search the table space for a protocol strictly dominating the target."""
    emit("beat-search", options)


@cli.command("oracle-check")
@output_option
@domain_options
@click.option("--variants/--no-variants", default=False, help="Also build hidden-value variants")
def oracle_check(**options):
    """Combinatorial knowledge predicates against brute-force indistinguishability."""
    emit("oracle-check", options)


@cli.command("codec-check")
@output_option
@click.option("--n", "n", type=click.IntRange(min=2), required=True)
@click.option("--t", "t", type=click.IntRange(min=0), default=None, help="Required unless --samples is given")
@click.option("--values", type=click.IntRange(min=1), default=2, show_default=True)
@click.option("--horizon", type=click.IntRange(min=0), default=None)
@click.option("--k", "k", type=click.IntRange(min=1), default=None)
@click.option("--workers", type=click.IntRange(min=1), default=None)
@click.option("--protocol", default="all", show_default=True, help="Comma-separated protocol ids or 'all'")
@click.option("--strict/--no-strict", default=None, help="Compare every rebuilt state with the full view")
@click.option("--samples", type=click.IntRange(min=1), default=None, help="Measure bits over random adversaries")
@click.option("--seed", type=int, default=0, show_default=True)
def codec_check(**options):
    """Compact messaging: decisions against full information, or per-pair bit counts."""
    if options["samples"] is None and options["t"] is None:
        raise click.UsageError("--t is required unless --samples is given")
    emit("codec-check", options)


@cli.command()
@output_option
@click.option("--adversary", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--process", type=click.IntRange(min=1), required=True)
@click.option("--time", type=click.IntRange(min=0), required=True)
@click.option("--values", type=click.IntRange(min=1), default=2, show_default=True)
@click.option("--k", "k", type=click.IntRange(min=1), default=None)
def predicates(**options):
    """Every knowledge predicate at one node."""
    emit("predicates", options)


def main(argv=None) -> int:
    try:
        exit_code = cli.main(args=argv, prog_name="consensus-lab", standalone_mode=False)
    except click.ClickException as error:
        error.show()
        return error.exit_code
    except click.exceptions.Abort:
        logger.info("Aborted")
        return 2
    return exit_code if isinstance(exit_code, int) else 0


if __name__ == "__main__":
    sys.exit(main())
