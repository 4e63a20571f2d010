"""
Probe optimisation command
"""

import json
import logging
from pathlib import Path

import click

from app.api.common import build_grid, grid_options, output_options, service_errors, write_table, write_text
from app.api.figures import opt_options
from app.config import settings
from app.services.probe_optimizer import probe_optimizer

logger = logging.getLogger(__name__)


@click.command("optimize")
@click.option("--nbar", type=float, required=True, help="Mean photon number constraint")
@grid_options
@opt_options
@output_options
@click.option("--archive", default=None, help="JSON archive of the full results (defaults next to --out)")
def cmd_optimize(nbar, gamma, gamma_min, gamma_max, gamma_count, gamma_spacing,
                 nmax, seed, restarts, generations, population, local_iters, out, fmt, archive):
    """
    Optimal DV probe populations per gamma.

    Emits a long table (gamma, j, p_j) and a JSON archive holding every result
    with its QFI, convergence flag and runner-up optima.
    """
    with service_errors("optimize"):
        grid = build_grid(gamma, gamma_min, gamma_max, gamma_count, gamma_spacing)
        results = []
        for gamma_cap in grid:
            cfg = probe_optimizer.make_config(
                nbar, float(gamma_cap), nmax=nmax, seed=seed, restarts=restarts, generations=generations,
                population=population, local_iters=local_iters,
            )
            result = probe_optimizer.optimize_probe(cfg)
            if not result.converged:
                logger.warning(f"Local stage hit its iteration limit at gamma={gamma_cap:.6g}")
            results.append(result)

        rows = [
            {"gamma": result.gamma, "j": j, "p_j": float(p)}
            for result in results
            for j, p in enumerate(result.populations)
        ]
        write_table(rows, settings.CSV_COLUMNS["optimize"], out, fmt)

        if archive is None and out not in (None, "-"):
            archive = str(Path(out).with_suffix(".archive.json"))
        if archive:
            payload = [result.model_dump() for result in results]
            write_text(json.dumps(payload, indent=2), archive)
