"""
Probe Optimizer Service
Maximises the QFI over real DV probes sum_j sqrt(p_j)|j> at fixed mean photon number
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from typing import List, Tuple

import numpy as np
from scipy.optimize import brentq

from app.config import settings
from app.models.optimization import LocalOptimum, OptConfig, OptResult
from app.services.errors import DomainError, InfeasibleMeanError
from app.services.fock_states import fock_service
from app.services.metrology import metrology_service

logger = logging.getLogger(__name__)


def _project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {y >= 0, sum(y) = 1} by sorting"""
    u = np.sort(v)[::-1]
    cssv = np.cumsum(u) - 1.0
    ind = np.arange(1, v.size + 1)
    rho = np.count_nonzero(u - cssv / ind > 0)
    theta = cssv[rho - 1] / rho
    return np.maximum(v - theta, 0.0)


def project_constraints(p, nbar: float) -> np.ndarray:
    """
    Projection of p onto {p >= 0, sum p = 1, sum j p_j = nbar}.

    The KKT point is p_j = max(x_j - lam - nu j, 0). For fixed nu the optimal lam
    is the simplex projection of x - nu j, whose mean is nonincreasing in nu, so
    nu is found by bracketed root finding.
    """
    x = np.asarray(p, dtype=float)
    nmax = x.size - 1
    if nbar < 0:
        raise DomainError(f"mean photon number must be nonnegative, got {nbar}")
    if nbar > nmax:
        raise InfeasibleMeanError(f"mean {nbar} cannot be reached with Fock indices up to {nmax}")
    j = np.arange(x.size)
    if nmax == 0:
        return np.ones(1)

    def mean_excess(nu: float) -> float:
        return float(np.dot(j, _project_simplex(x - nu * j))) - nbar

    bound = 2.0 + 2.0 * float(np.ptp(x))
    nu = brentq(mean_excess, -bound, bound, xtol=settings.PROJECTION_TOL)
    return _project_simplex(x - nu * j)


def _objective_values(populations: np.ndarray, gamma_cap: float) -> np.ndarray:
    """QFI of the probe sum_j sqrt(p_j)|j> for every row of a matrix of feasible populations"""
    amplitudes = np.sqrt(np.atleast_2d(populations))
    amplitudes = amplitudes / np.linalg.norm(amplitudes, axis=1, keepdims=True)
    return metrology_service.qfi_batch(amplitudes, gamma_cap)


def _objective(p: np.ndarray, gamma_cap: float) -> float:
    return float(_objective_values(p[None], gamma_cap)[0])


def _seed_vectors(nbar: float, nmax: int) -> List[np.ndarray]:
    """Every feasible ON vector; the Fock vector |nbar> is the ON vector with N = nbar"""
    seeds = []
    for occupation in range(max(1, math.ceil(nbar)), nmax + 1):
        p = np.zeros(nmax + 1)
        p[occupation] = nbar / occupation
        p[0] = 1.0 - p[occupation]
        seeds.append(p)
    return seeds


def _vertices(nbar: float, nmax: int) -> np.ndarray:
    """
    Extreme points of the feasible set: two-level vectors on a < nbar < b,
    plus the Fock vector when nbar is an integer.
    """
    rows = []
    for a in range(int(math.floor(nbar)) + 1):
        for b in range(int(math.ceil(nbar)), nmax + 1):
            p = np.zeros(nmax + 1)
            if a == b:
                p[a] = 1.0
            elif a < nbar < b:
                p[b] = (nbar - a) / (b - a)
                p[a] = 1.0 - p[b]
            else:
                continue
            rows.append(p)
    return np.array(rows)


def _evolve(cfg: OptConfig, rng: np.random.Generator) -> Tuple[np.ndarray, float, List[float]]:
    """Elitist evolution strategy with projection repair; also returns the best QFI per generation"""
    size = cfg.nmax + 1
    elite_count = max(1, int(round(settings.OPT_ELITE_FRACTION * cfg.population)))
    # all ON seeds are scored even when they outnumber the population
    members = _seed_vectors(cfg.nbar, cfg.nmax)
    while len(members) < cfg.population:
        members.append(project_constraints(rng.dirichlet(np.ones(size)), cfg.nbar))
    population = np.array(members)
    fitness = _objective_values(population, cfg.gamma_cap)
    history = [float(fitness.max())]

    sigma = cfg.mutation_sigma
    for generation in range(cfg.generations):
        order = np.argsort(-fitness, kind="stable")
        elites, elite_fitness = population[order[:elite_count]], fitness[order[:elite_count]]
        parents = rng.integers(elite_count, size=cfg.population - elite_count)
        noise = rng.normal(scale=sigma, size=(parents.size, size))
        children = np.array([project_constraints(elites[i] + step, cfg.nbar) for i, step in zip(parents, noise)])
        population = np.vstack([elites, children])
        fitness = np.concatenate([elite_fitness, _objective_values(children, cfg.gamma_cap)])
        sigma *= cfg.mutation_decay
        history.append(float(fitness.max()))
        logger.debug(f"generation {generation}: best QFI {history[-1]:.12g}")

    best = int(np.argmax(fitness))
    return population[best], float(fitness[best]), history


def _feasible_gradient(cfg: OptConfig, p: np.ndarray, value: float, vertices: np.ndarray) -> np.ndarray:
    """
    Tangential gradient from finite differences along p -> vertex directions.

    Every evaluated point stays feasible: forward points are convex combinations
    of p and a vertex, and the backward point is only used when it is nonnegative,
    otherwise the difference is one-sided.
    """
    h = settings.OPT_FD_STEP
    directions = vertices - p
    directions = directions[np.max(np.abs(directions), axis=1) > 0]
    if directions.size == 0:
        return np.zeros_like(p)
    forward = p + h * directions
    backward = p - h * directions
    central = np.all(backward >= 0, axis=1)
    values = _objective_values(np.vstack([forward, backward[central]]), cfg.gamma_cap)
    forward_values = values[: len(directions)]
    slopes = (forward_values - value) / h
    slopes[central] = (forward_values[central] - values[len(directions):]) / (2 * h)
    # minimum-norm solution lies in the span of the directions, the tangent space
    return np.linalg.lstsq(directions, slopes, rcond=None)[0]


def _refine(cfg: OptConfig, p: np.ndarray, value: float) -> Tuple[np.ndarray, float, bool, List[float]]:
    """Projected gradient ascent with feasible finite differences and backtracking"""
    vertices = _vertices(cfg.nbar, cfg.nmax)
    history = []
    for _ in range(cfg.local_iters):
        gradient = _feasible_gradient(cfg, p, value, vertices)
        scale = np.max(np.abs(gradient))
        if not np.isfinite(scale) or scale == 0:
            return p, value, True, history
        direction = gradient / scale
        step = cfg.local_step
        while step > 1e-12:
            candidate = project_constraints(p + step * direction, cfg.nbar)
            candidate_value = _objective(candidate, cfg.gamma_cap)
            if candidate_value > value:
                break
            step /= 2
        else:
            return p, value, True, history
        improvement = (candidate_value - value) / max(abs(value), 1e-300)
        p, value = candidate, candidate_value
        history.append(value)
        if improvement < settings.OPT_LOCAL_RTOL:
            return p, value, True, history
    return p, value, False, history


def _run_restart(cfg: OptConfig, seed_sequence: np.random.SeedSequence) -> Tuple[np.ndarray, float, bool, List[float]]:
    """One seeded restart; the trace is the best QFI after each generation and local step"""
    rng = np.random.default_rng(seed_sequence)
    p, value, evolution = _evolve(cfg, rng)
    p, value, converged, local = _refine(cfg, p, value)
    return p, value, converged, evolution + local


class ProbeOptimizer:
    """Service searching the optimal DV probe at one (nbar, gamma_cap)"""

    def __init__(self):
        self.workers = settings.WORKERS
        self.distinct_l1 = settings.OPT_DISTINCT_L1

    def make_config(self, nbar: float, gamma_cap: float, **overrides) -> OptConfig:
        """OptConfig with the infeasible mean reported as a service error"""
        nmax = overrides.get("nmax") or settings.OPT_NMAX
        if nbar > nmax:
            raise InfeasibleMeanError(f"mean {nbar} exceeds nmax {nmax}", details={"nbar": nbar, "nmax": nmax})
        return OptConfig(nbar=nbar, gamma_cap=gamma_cap, **{k: v for k, v in overrides.items() if v is not None})

    def optimize_probe(self, cfg: OptConfig, parallel: bool = True) -> OptResult:
        """Best of cfg.restarts seeded runs; parallel=False keeps the restarts in this process"""
        if cfg.nbar > cfg.nmax:
            raise InfeasibleMeanError(f"mean {cfg.nbar} exceeds nmax {cfg.nmax}")
        logger.info(f"Optimising DV probe: nbar={cfg.nbar}, gamma={cfg.gamma_cap:.6g}, restarts={cfg.restarts}")
        streams = np.random.SeedSequence(cfg.seed).spawn(cfg.restarts)
        if parallel and self.workers > 1 and cfg.restarts > 1:
            with ProcessPoolExecutor(max_workers=self.workers) as pool:
                runs = list(pool.map(_run_restart, [cfg] * cfg.restarts, streams))
        else:
            runs = [_run_restart(cfg, stream) for stream in streams]

        ranked = sorted(range(len(runs)), key=lambda i: -runs[i][1])
        best_p, best_qfi, converged, _ = runs[ranked[0]]
        kept = [best_p]
        local_optima = []
        for i in ranked[1:]:
            p, value, _, _ = runs[i]
            if all(np.abs(p - q).sum() > self.distinct_l1 for q in kept):
                kept.append(p)
                local_optima.append(LocalOptimum(populations=p, qfi=value))
        logger.info(f"Best QFI {best_qfi:.12g} with support {np.flatnonzero(best_p > 1e-6).tolist()}")
        return OptResult(
            gamma=cfg.gamma_cap,
            nbar=cfg.nbar,
            nmax=cfg.nmax,
            seed=cfg.seed,
            populations=best_p,
            qfi=best_qfi,
            converged=converged,
            local_optima=local_optima,
        )

    def on_scan(self, nbar: float, gamma_cap: float, nmax: int) -> Tuple[int, np.ndarray]:
        """
        Exact QFI of ON(nbar, N) for every feasible N.

        Returns the best occupation and a vector indexed by N (NaN where N is infeasible);
        ties go to the smaller N.
        """
        if nbar > nmax:
            raise InfeasibleMeanError(f"mean {nbar} exceeds nmax {nmax}")
        qfi_by_n = np.full(nmax + 1, np.nan)
        for occupation in range(max(1, math.ceil(nbar)), nmax + 1):
            probe = fock_service.make_on(nbar, occupation, dim=nmax + 1)
            qfi_by_n[occupation] = metrology_service.qfi(probe, gamma_cap)
        return int(np.nanargmax(qfi_by_n)), qfi_by_n


# Global service instance
probe_optimizer = ProbeOptimizer()
