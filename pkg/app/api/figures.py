"""
Figure-data commands: QFI curves, quantum advantage, photon-counting efficiency, scaling
"""

import logging
from typing import Optional, Tuple

import click
import numpy as np

from app.api.common import (
    build_grid, evaluate_point, grid_options, output_options, parse_probes, run_tasks, service_errors, write_table,
)
from app.config import settings

logger = logging.getLogger(__name__)


def opt_options(command):
    """Optimiser knobs used by the opt probe"""
    options = [
        click.option("--nmax", type=int, default=None, help="Largest Fock index of optimised probes"),
        click.option("--seed", type=int, default=None, help="Optimiser seed"),
        click.option("--restarts", type=int, default=None, help="Optimiser restarts"),
        click.option("--generations", type=int, default=None, help="Evolution-strategy generations"),
        click.option("--population", type=int, default=None, help="Evolution-strategy population"),
        click.option("--local-iters", type=int, default=None, help="Projected-gradient iterations"),
    ]
    for option in reversed(options):
        command = option(command)
    return command


def _sweep(command: str, probes: Tuple[str, ...], nbar: Optional[float], dim: Optional[int], grid_args: tuple,
           opt: dict, advantage: bool, out: str, fmt: str) -> None:
    with service_errors(command):
        grid = build_grid(*grid_args)
        specs = parse_probes(probes)
        tasks = [
            {"probe": spec.probe_id, "gamma": float(gamma_cap), "nbar": nbar, "dim": dim, "opt": opt,
             "advantage": advantage}
            for gamma_cap in grid
            for spec in specs
        ]
        logger.info(f"{command}: {len(grid)} grid points x {len(specs)} probes")
        rows = run_tasks(evaluate_point, tasks)
        write_table(rows, settings.CSV_COLUMNS[command], out, fmt)


@click.command("qfi")
@click.option("--probe", "probes", multiple=True, default=["coherent,sv,fock"], show_default=True,
              help="Probe specs: fock:n, fock, coherent, sv, on:N, dv:FILE, opt")
@click.option("--nbar", type=float, default=None, help="Mean photon number")
@click.option("--dim", type=int, default=None, help="Truncation dimension override")
@grid_options
@opt_options
@output_options
def cmd_qfi(probes, nbar, dim, gamma, gamma_min, gamma_max, gamma_count, gamma_spacing,
            nmax, seed, restarts, generations, population, local_iters, out, fmt):
    """QFI and photon-counting FI per (gamma, probe)."""
    opt = dict(nmax=nmax, seed=seed, restarts=restarts, generations=generations, population=population,
               local_iters=local_iters)
    _sweep("qfi", probes, nbar, dim, (gamma, gamma_min, gamma_max, gamma_count, gamma_spacing), opt, False, out, fmt)


@click.command("advantage")
@click.option("--probe", "probes", multiple=True, default=["fock,sv"], show_default=True,
              help="Probe specs compared against the coherent state of equal mean")
@click.option("--nbar", type=float, required=True, help="Mean photon number")
@click.option("--dim", type=int, default=None, help="Truncation dimension override")
@grid_options
@opt_options
@output_options
def cmd_advantage(probes, nbar, dim, gamma, gamma_min, gamma_max, gamma_count, gamma_spacing,
                  nmax, seed, restarts, generations, population, local_iters, out, fmt):
    """Quantum advantage over the coherent benchmark per (gamma, probe)."""
    opt = dict(nmax=nmax, seed=seed, restarts=restarts, generations=generations, population=population,
               local_iters=local_iters)
    _sweep("advantage", probes, nbar, dim, (gamma, gamma_min, gamma_max, gamma_count, gamma_spacing), opt, True,
           out, fmt)


@click.command("efficiency")
@click.option("--probe", "probes", multiple=True, default=["coherent,sv,fock"], show_default=True,
              help="Probe specs whose photon-counting efficiency is reported")
@click.option("--nbar", type=float, required=True, help="Mean photon number")
@click.option("--dim", type=int, default=None, help="Truncation dimension override")
@grid_options
@opt_options
@output_options
def cmd_efficiency(probes, nbar, dim, gamma, gamma_min, gamma_max, gamma_count, gamma_spacing,
                   nmax, seed, restarts, generations, population, local_iters, out, fmt):
    """Photon-counting efficiency fi_pn / qfi per (gamma, probe)."""
    opt = dict(nmax=nmax, seed=seed, restarts=restarts, generations=generations, population=population,
               local_iters=local_iters)
    _sweep("efficiency", probes, nbar, dim, (gamma, gamma_min, gamma_max, gamma_count, gamma_spacing), opt, True,
           out, fmt)


@click.command("scaling")
@click.option("--probe", "probes", multiple=True, default=["coherent,sv,on:5,on:7"], show_default=True,
              help="Probe specs swept over the mean photon number")
@click.option("--gamma", type=float, default=settings.SCALING_GAMMA, show_default=True, help="Fixed TPA parameter")
@click.option("--nbar-min", type=float, default=0.5, show_default=True)
@click.option("--nbar-max", type=float, default=5.0, show_default=True)
@click.option("--nbar-count", type=int, default=10, show_default=True)
@click.option("--dim", type=int, default=None, help="Truncation dimension override")
@output_options
def cmd_scaling(probes, gamma, nbar_min, nbar_max, nbar_count, dim, out, fmt):
    """QFI and photon-counting FI against the mean photon number at fixed gamma."""
    with service_errors("scaling"):
        build_grid(gamma, gamma, gamma, 1, "linear")
        if nbar_count < 1 or nbar_max < nbar_min or nbar_min < 0:
            raise click.UsageError("nbar sweep needs 0 <= nbar-min <= nbar-max and nbar-count >= 1")
        specs = parse_probes(probes)
        tasks = [
            {"probe": spec.probe_id, "gamma": gamma, "nbar": float(nbar), "dim": dim}
            for nbar in np.linspace(nbar_min, nbar_max, nbar_count)
            for spec in specs
        ]
        rows = run_tasks(evaluate_point, tasks)
        write_table(rows, settings.CSV_COLUMNS["scaling"], out, fmt)
