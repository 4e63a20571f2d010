"""
Utility commands: validation suites, probe inspection, channel evolution
"""

import logging

import click

from app.api.common import ComputationError, build_probe, service_errors, write_table, write_text
from app.config import settings
from app.models.requests import ProbeSpec
from app.services.fock_states import fock_service
from app.services.tpa_channel import tpa_channel
from app.services.validation import validation_service

logger = logging.getLogger(__name__)


@click.command("validate")
@click.option("--level", type=click.Choice(["quick", "full"]), default="quick", show_default=True)
def cmd_validate(level):
    """Run the invariant suites and oracle cross-checks."""
    report = validation_service.run(level)
    click.echo(report.render())
    if not report.passed:
        raise ComputationError(f"{report.failed_count} validation checks failed")


@click.command("probe")
@click.argument("spec")
@click.option("--nbar", type=float, default=None, help="Mean photon number")
@click.option("--dim", type=int, default=None, help="Truncation dimension override")
@click.option("--gamma", type=float, default=None, help="TPA parameter, needed by the opt probe")
@click.option("--out", default="-", show_default=True)
def cmd_probe(spec, nbar, dim, gamma, out):
    """Print the Fock amplitudes of a probe as JSON."""
    with service_errors("probe"):
        probe = build_probe(ProbeSpec.parse(spec), nbar, dim, gamma)
        write_text(probe.model_dump_json(indent=2), out)


@click.command("evolve")
@click.argument("spec")
@click.option("--gamma", type=float, required=True, help="TPA parameter")
@click.option("--nbar", type=float, default=None, help="Mean photon number")
@click.option("--dim", type=int, default=None, help="Truncation dimension override")
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json", show_default=True,
              help="json: density matrix; csv: photon-number distribution")
@click.option("--out", default="-", show_default=True)
def cmd_evolve(spec, gamma, nbar, dim, fmt, out):
    """Propagate a probe through the TPA channel at one gamma."""
    with service_errors("evolve"):
        probe = build_probe(ProbeSpec.parse(spec), nbar, dim, gamma)
        rho = tpa_channel.propagate(fock_service.to_density(probe), tpa_channel.point(gamma))
        if fmt == "json":
            write_text(rho.model_dump_json(), out)
            return
        rows = [{"n": n, "p_n": float(p)} for n, p in enumerate(fock_service.photon_distribution(rho))]
        write_table(rows, settings.CSV_COLUMNS["distribution"], out)
