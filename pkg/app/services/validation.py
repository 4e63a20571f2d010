"""
Validation Service
Invariant suites and oracle cross-checks run by the validate command
"""

import importlib
import logging
import time
from typing import Callable, List, Tuple

import numpy as np

from app.models.responses import CheckResult, ValidationReport

logger = logging.getLogger(__name__)

REQUIRED_MODULES = [
    "app.config",
    "app.models.states",
    "app.models.channel",
    "app.models.metrology",
    "app.models.optimization",
    "app.services.fock_states",
    "app.services.tpa_channel",
    "app.services.metrology",
    "app.services.probe_optimizer",
]

Check = Callable[[], Tuple[bool, str]]


def _relative(a: float, b: float) -> float:
    return abs(a - b) / abs(b)


def check_modules() -> Tuple[bool, str]:
    missing = []
    for name in REQUIRED_MODULES:
        try:
            importlib.import_module(name)
        except ImportError as e:
            missing.append(f"{name} ({e})")
    if missing:
        return False, "cannot import " + ", ".join(missing)
    return True, f"{len(REQUIRED_MODULES)} modules importable"


def check_fock_closed_forms() -> Tuple[bool, str]:
    from app.services.fock_states import fock_service
    from app.services.metrology import metrology_service

    worst = 0.0
    for gamma_cap in np.linspace(0.05, 0.95, 20):
        q = 1.0 - gamma_cap
        two = metrology_service.qfi(fock_service.make_fock(2, 3), gamma_cap)
        three = metrology_service.qfi(fock_service.make_fock(3, 4), gamma_cap)
        worst = max(
            worst,
            _relative(two, 1.0 / (gamma_cap * q)),
            _relative(three, 9 * q + 9 * q ** 4 / (1 - q ** 3)),
        )
    return worst < 1e-8, f"max relative error {worst:.2e}"


def check_coherent_limit() -> Tuple[bool, str]:
    from app.services.fock_states import fock_service
    from app.services.metrology import metrology_service

    worst = 0.0
    for nbar in (1.0, 2.0, 3.0):
        probe = fock_service.make_coherent(nbar)
        target = nbar ** 3 + nbar ** 2 / 2
        worst = max(
            worst,
            _relative(metrology_service.qfi(probe, 1e-3), target),
            _relative(metrology_service.fi_photon_counting(probe, 1e-3), target),
        )
    return worst < 0.02, f"max relative deviation {worst:.2e}"


def check_asymptotics() -> Tuple[bool, str]:
    from app.services.fock_states import fock_service
    from app.services.metrology import metrology_service

    gamma_cap = 1e-4
    worst = 0.0
    for n in range(2, 7):
        value = metrology_service.qfi(fock_service.make_fock(n, n + 1), gamma_cap)
        worst = max(worst, _relative(value, metrology_service.asymptotic_qfi_fock(n, gamma_cap)))
    fock_ok = worst < 0.01
    worst_on = 0.0
    for occupation in (4, 6, 8, 10):
        value = metrology_service.qfi(fock_service.make_on(2.0, occupation), gamma_cap)
        worst_on = max(worst_on, _relative(value, metrology_service.asymptotic_qfi_on(2.0, occupation, gamma_cap)))
    return fock_ok and worst_on < 0.02, f"fock {worst:.2e}, on {worst_on:.2e}"


def _channel_oracle(states: int, eps_values) -> Tuple[bool, str]:
    from app.services.fock_states import fock_service
    from app.services.tpa_channel import tpa_channel

    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(states):
        dim = int(rng.integers(3, 13))
        rho0 = fock_service.to_density(fock_service.make_dv(rng.random(dim)))
        for eps in eps_values:
            exact = tpa_channel.propagate_exact(rho0, eps).elements
            oracle = tpa_channel.propagate_ode(rho0, eps).elements
            worst = max(worst, float(np.max(np.abs(exact - oracle))))
            if abs(np.trace(exact).real - 1) > 1e-10 or np.linalg.eigvalsh(exact)[0] < -1e-10:
                return False, f"trace or positivity violated at eps={eps}"
    return worst < 1e-8, f"max |exact - RK4| {worst:.2e}"


def check_channel_oracle_quick() -> Tuple[bool, str]:
    return _channel_oracle(5, (0.1, 1.0))


def check_channel_oracle_full() -> Tuple[bool, str]:
    return _channel_oracle(50, (0.1, 0.5, 1.0, 3.0))


def check_phase_invariance() -> Tuple[bool, str]:
    from app.services.fock_states import fock_service
    from app.services.metrology import metrology_service

    worst = 0.0
    for probe in (fock_service.make_coherent(2.0), fock_service.make_squeezed_vacuum(1.0)):
        for gamma_cap in (0.01, 0.3, 0.9):
            qfi = metrology_service.qfi(probe, gamma_cap)
            fi_pn = metrology_service.fi_photon_counting(probe, gamma_cap)
            for phi in (0.3, 1.0, 2.2):
                rotated = metrology_service.rotate_probe(probe, phi)
                worst = max(
                    worst,
                    _relative(metrology_service.qfi(rotated, gamma_cap), qfi),
                    _relative(metrology_service.fi_photon_counting(rotated, gamma_cap), fi_pn),
                )
    return worst < 1e-8, f"max relative change {worst:.2e}"


def check_photon_counting_optimality() -> Tuple[bool, str]:
    from app.services.fock_states import fock_service
    from app.services.metrology import metrology_service

    worst = 0.0
    probes = [fock_service.make_fock(n, n + 1) for n in (2, 3, 4)]
    probes += [fock_service.make_on(2.0, occupation) for occupation in (3, 5, 7)]
    for probe in probes:
        for gamma_cap in (0.05, 0.3, 0.7):
            eta = metrology_service.pn_efficiency(
                metrology_service.fi_photon_counting(probe, gamma_cap), metrology_service.qfi(probe, gamma_cap)
            )
            worst = max(worst, abs(eta - 1.0))
    return worst < 1e-6, f"max |eta - 1| {worst:.2e}"


def check_even_odd() -> Tuple[bool, str]:
    from app.services.fock_states import fock_service
    from app.services.metrology import metrology_service

    two, three = fock_service.make_fock(2, 3), fock_service.make_fock(3, 4)
    passed = (
        metrology_service.qfi(three, 0.999) < 0.1
        and metrology_service.qfi(two, 0.999) > 100
        and metrology_service.qfi(three, 0.05) > metrology_service.qfi(two, 0.05)
        and metrology_service.qfi(three, 0.9) < metrology_service.qfi(two, 0.9)
    )
    return passed, "odd QFI vanishes, even QFI diverges as gamma -> 1"


def check_projection() -> Tuple[bool, str]:
    from app.services.probe_optimizer import project_constraints

    rng = np.random.default_rng(11)
    j = np.arange(11)
    worst = 0.0
    for _ in range(20):
        p = project_constraints(rng.normal(size=11), 2.0)
        worst = max(worst, abs(p.sum() - 1), abs(np.dot(j, p) - 2.0), float(max(0.0, -p.min())))
    return worst < 1e-10, f"max constraint residual {worst:.2e}"


def check_optimizer_dominance() -> Tuple[bool, str]:
    from app.services.fock_states import fock_service
    from app.services.metrology import metrology_service
    from app.services.probe_optimizer import probe_optimizer

    nbar, gamma_cap = 2.0, 0.3
    result = probe_optimizer.optimize_probe(probe_optimizer.make_config(nbar, gamma_cap, restarts=2))
    _, on_values = probe_optimizer.on_scan(nbar, gamma_cap, result.nmax)
    baselines = [
        metrology_service.qfi(fock_service.make_coherent(nbar), gamma_cap),
        metrology_service.qfi(fock_service.make_squeezed_vacuum(nbar), gamma_cap),
        metrology_service.qfi(fock_service.make_fock(2, 3), gamma_cap),
        float(np.nanmax(on_values)),
    ]
    best = max(baselines)
    return result.qfi >= best * (1 - 1e-6), f"optimised {result.qfi:.10g} vs best baseline {best:.10g}"


QUICK_CHECKS: List[Tuple[str, Check]] = [
    ("modules", check_modules),
    ("fock_closed_forms", check_fock_closed_forms),
    ("coherent_limit", check_coherent_limit),
    ("channel_oracle", check_channel_oracle_quick),
    ("phase_invariance", check_phase_invariance),
    ("photon_counting_optimality", check_photon_counting_optimality),
    ("even_odd", check_even_odd),
    ("projection", check_projection),
]

FULL_CHECKS: List[Tuple[str, Check]] = [
    ("asymptotics", check_asymptotics),
    ("channel_oracle_50", check_channel_oracle_full),
    ("optimizer_dominance", check_optimizer_dominance),
]


class ValidationService:
    """Service running the validation suites"""

    def run(self, level: str = "quick") -> ValidationReport:
        suites = [("quick", QUICK_CHECKS)]
        if level == "full":
            suites.append(("full", FULL_CHECKS))
        report = ValidationReport(level=level)
        for suite, checks in suites:
            for name, check in checks:
                report.checks.append(self._run_check(name, suite, check))
                if name == "modules" and not report.checks[-1].passed:
                    return report
        return report

    def _run_check(self, name: str, suite: str, check: Check) -> CheckResult:
        logger.info(f"Running check {name}")
        start = time.perf_counter()
        try:
            passed, detail = check()
        except Exception as e:
            logger.error(f"Check {name} raised: {e}")
            passed, detail = False, f"{type(e).__name__}: {e}"
        return CheckResult(
            name=name, level=suite, passed=bool(passed), detail=detail, seconds=time.perf_counter() - start
        )


# Global service instance
validation_service = ValidationService()
