"""
Shared plumbing for the command endpoints: options, probe resolution, output
"""

import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from pathlib import Path
from typing import Callable, Iterable, List, Optional, Sequence

import click
import numpy as np
import pandas as pd
from pydantic import ValidationError

from app.config import settings
from app.models.requests import GammaGrid, ProbeSpec
from app.models.states import FockState
from app.services.errors import EXIT_FAILURE, EXIT_USAGE, DomainError, TPAMetrologyException
from app.services.fock_states import fock_service
from app.services.metrology import metrology_service
from app.services.probe_optimizer import probe_optimizer

logger = logging.getLogger(__name__)


class ComputationError(click.ClickException):
    """Computation or validation failure surfaced with exit code 1"""
    exit_code = EXIT_FAILURE


@contextmanager
def service_errors(command: str):
    """Translate service and validation errors into click exit codes"""
    try:
        yield
    except TPAMetrologyException as e:
        logger.error(f"{command} failed: {e}")
        if e.exit_code == EXIT_USAGE:
            raise click.UsageError(str(e))
        raise ComputationError(str(e))
    except ValidationError as e:
        logger.error(f"{command} received invalid parameters: {e}")
        raise click.UsageError(str(e))
    except ValueError as e:
        logger.error(f"{command} received invalid parameters: {e}")
        raise click.UsageError(str(e))


# Common options shared by the grid commands
def grid_options(command: Callable) -> Callable:
    options = [
        click.option("--gamma", type=float, default=None, help="Single TPA parameter; overrides the grid"),
        click.option("--gamma-min", type=float, default=settings.GAMMA_MIN, show_default=True),
        click.option("--gamma-max", type=float, default=settings.GAMMA_MAX, show_default=True),
        click.option("--gamma-count", type=int, default=settings.GAMMA_COUNT, show_default=True),
        click.option("--gamma-spacing", type=click.Choice(["log", "linear"]), default=settings.GAMMA_SPACING,
                     show_default=True),
    ]
    for option in reversed(options):
        command = option(command)
    return command


def output_options(command: Callable) -> Callable:
    command = click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv",
                           show_default=True)(command)
    return click.option("--out", default="-", show_default=True, help="Output path, '-' for stdout")(command)


def build_grid(gamma: Optional[float], gamma_min: float, gamma_max: float, gamma_count: int,
               gamma_spacing: str) -> np.ndarray:
    if gamma is not None:
        return GammaGrid(gamma_min=gamma, gamma_max=gamma, count=1).values()
    return GammaGrid(gamma_min=gamma_min, gamma_max=gamma_max, count=gamma_count, spacing=gamma_spacing).values()


def parse_probes(probes: Sequence[str]) -> List[ProbeSpec]:
    texts = [part for entry in probes for part in entry.split(",") if part.strip()]
    if not texts:
        raise DomainError("at least one probe is required")
    return [ProbeSpec.parse(text) for text in texts]


def load_coefficients(path: str) -> np.ndarray:
    """DV coefficients from a JSON list (or {"coefficients": [...]}) or a one-column CSV"""
    source = Path(path)
    if not source.is_file():
        raise DomainError(f"coefficient file not found: {path}")
    if source.suffix.lower() == ".json":
        data = json.loads(source.read_text())
        if isinstance(data, dict):
            data = data.get("coefficients")
        if not isinstance(data, list):
            raise DomainError(f"{path} must hold a list of coefficients")
        return np.asarray(data, dtype=float)
    frame = pd.read_csv(source, header=None)
    return frame.iloc[:, 0].to_numpy(dtype=float)


def _require_nbar(spec: ProbeSpec, nbar: Optional[float]) -> float:
    if nbar is None:
        raise DomainError(f"probe {spec.probe_id} needs --nbar")
    return nbar


def build_probe(spec: ProbeSpec, nbar: Optional[float], dim: Optional[int] = None,
                gamma_cap: Optional[float] = None, opt_overrides: Optional[dict] = None,
                parallel: bool = True) -> FockState:
    """Concrete probe state for a parsed probe spec"""
    if spec.kind == "fock":
        if spec.index is None:
            nbar = _require_nbar(spec, nbar)
            if nbar != math.floor(nbar):
                raise DomainError(f"bare fock probe needs an integer mean, got {nbar}")
            n = int(nbar)
        else:
            n = spec.index
        return fock_service.make_fock(n, dim or n + 1)
    if spec.kind == "coherent":
        return fock_service.make_coherent(_require_nbar(spec, nbar), dim)
    if spec.kind == "sv":
        return fock_service.make_squeezed_vacuum(_require_nbar(spec, nbar), dim)
    if spec.kind == "on":
        return fock_service.make_on(_require_nbar(spec, nbar), spec.index, dim)
    if spec.kind == "dv":
        return fock_service.make_dv(load_coefficients(spec.path), dim, label=spec.probe_id)
    if gamma_cap is None:
        raise DomainError("the opt probe needs a TPA parameter")
    cfg = probe_optimizer.make_config(_require_nbar(spec, nbar), gamma_cap, **(opt_overrides or {}))
    result = probe_optimizer.optimize_probe(cfg, parallel=parallel)
    return fock_service.make_dv(np.sqrt(result.populations), dim, label="opt")


def evaluate_point(task: dict) -> dict:
    """One CSV row for a (gamma, probe) pair; top-level so worker processes can run it"""
    spec = ProbeSpec.parse(task["probe"])
    gamma_cap = task["gamma"]
    probe = build_probe(spec, task["nbar"], task.get("dim"), gamma_cap, task.get("opt"),
                        parallel=task.get("parallel", True))
    qfi_coherent = None
    if task.get("advantage"):
        coherent = fock_service.make_coherent(_require_nbar(spec, task["nbar"]))
        qfi_coherent = metrology_service.qfi(coherent, gamma_cap)
    report = metrology_service.fisher_report(probe, gamma_cap, probe_id=spec.probe_id, qfi_coherent=qfi_coherent)
    return report.csv_row()


def run_tasks(function: Callable[[dict], dict], tasks: List[dict]) -> List[dict]:
    """Map over tasks in input order, through a process pool when WORKERS > 1"""
    if settings.WORKERS > 1 and len(tasks) > 1:
        logger.info(f"Dispatching {len(tasks)} grid points to {settings.WORKERS} workers")
        for task in tasks:
            task["parallel"] = False
        with ProcessPoolExecutor(max_workers=settings.WORKERS) as pool:
            return list(pool.map(function, tasks))
    return [function(task) for task in tasks]


def write_table(rows: Iterable[dict], columns: List[str], out: str, fmt: str = "csv") -> None:
    frame = pd.DataFrame(list(rows), columns=columns)
    if fmt == "json":
        text = frame.to_json(orient="records", double_precision=15)
    else:
        text = frame.to_csv(float_format=settings.CSV_FLOAT_FORMAT, index=False)
    write_text(text, out)


def write_text(text: str, out: Optional[str]) -> None:
    if out in (None, "-"):
        click.echo(text, nl=not text.endswith("\n"))
        return
    Path(out).write_text(text if text.endswith("\n") else text + "\n")
    logger.info(f"Wrote {out}")

