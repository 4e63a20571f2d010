"""
TPA Channel Service
Exact propagation of density matrices through two-photon absorption, with an
independent Runge-Kutta oracle and the gamma <-> eps reparametrisation.

With jump operator a^2/sqrt(2) the generator acts on matrix elements as

    d rho[n, n'] / d eps = 1/2 sqrt((n+1)(n+2)(n'+1)(n'+2)) rho[n+2, n'+2]
                           - 1/4 [n(n-1) + n'(n'-1)] rho[n, n']

so |n><n'| only feeds the chain |n-2k><n'-2k|, and the exact solution is the
finite sum rho_eps[n-2k, n'-2k] = sum_k A_k(n, n'; eps) rho_0[n, n'].
"""

import logging
import math
from functools import lru_cache
from typing import List, Optional

import numpy as np
from scipy.linalg import expm
from scipy.special import gammaln

from app.config import settings
from app.models.channel import ChannelPoint, KlimovTerm
from app.models.states import DensityMatrix
from app.services.errors import DomainError, IntegrationError

logger = logging.getLogger(__name__)

_UNIT_ROUNDOFF = 2.0 ** -52


def _decay_eigenvalue(m, mprime, l):
    """Eigenvalue of the K_l superoperator on |m><m'|"""
    a = m + 2 * l
    b = mprime + 2 * l
    return a * (a - 1) + b * (b - 1)


def _log_ladder_prefactor(n, k):
    """log sqrt(n! / (n - 2k)!)"""
    return 0.5 * (gammaln(n + 1) - gammaln(n - 2 * k + 1))


def _series_terms(m: np.ndarray, mprime: np.ndarray, k: int, eps: float) -> np.ndarray:
    """
    Signed terms of the alternating l-sum of A_k for outputs |m><m'| (inputs m+2k, m'+2k),
    stacked along a leading axis of length k+1 and built in log space.
    """
    s = m + mprime
    log_prefactor = _log_ladder_prefactor(m + 2 * k, k) + _log_ladder_prefactor(mprime + 2 * k, k)
    terms = []
    for l in range(k + 1):
        # each anticommutator factor of J_{k,l} contributes (2m+2j+2l-1) + (2m'+2j+2l-1)
        log_denominator = np.zeros_like(s, dtype=float)
        for j in range(k + 1):
            if j != l:
                log_denominator = log_denominator + np.log(2.0 * s + 4.0 * (j + l) - 2.0)
        log_magnitude = (
            log_prefactor
            - (eps / 4.0) * _decay_eigenvalue(m, mprime, l)
            - log_denominator
            - gammaln(k - l + 1)
            - gammaln(l + 1)
        )
        terms.append((-1.0) ** l * np.exp(log_magnitude))
    return np.array(terms)


def _kahan_sum(terms: np.ndarray) -> np.ndarray:
    """Compensated sum over the leading axis"""
    total = np.zeros(terms.shape[1:])
    compensation = np.zeros(terms.shape[1:])
    for term in terms:
        y = term - compensation
        t = total + y
        compensation = (t - total) - y
        total = t
    return total


def _chain_by_exponential(m0: int, m0prime: int, length: int, eps: float) -> np.ndarray:
    """
    Exact transfer matrix of one chain |m0+2j><m0'+2j|, j = 0..length-1.

    Entry [i, j] is the weight carried from |m0+2j><m0'+2j| to |m0+2i><m0'+2i|,
    i.e. A_{j-i}(m0+2j, m0'+2j; eps).
    """
    j = np.arange(length)
    m = m0 + 2 * j
    mprime = m0prime + 2 * j
    generator = np.diag(-0.25 * (m * (m - 1) + mprime * (mprime - 1)).astype(float))
    gains = 0.5 * np.sqrt(((m[:-1] + 1) * (m[:-1] + 2) * (mprime[:-1] + 1) * (mprime[:-1] + 2)).astype(float))
    generator[j[:-1], j[1:]] = gains
    return expm(eps * generator)


@lru_cache(maxsize=settings.COEFFICIENT_CACHE_SIZE)
def _coefficient_table(dim: int, eps: float) -> np.ndarray:
    """
    table[k, n, n'] = A_k(n, n'; eps), zero where 2k > min(n, n').

    Series entries whose cancellation bound exceeds the configured limit are
    replaced, chain by chain, with the exponential of the chain generator.
    """
    kmax = (dim - 1) // 2
    table = np.zeros((kmax + 1, dim, dim))
    index = np.arange(dim)
    ill_conditioned = np.zeros((dim, dim), dtype=bool)
    for k in range(kmax + 1):
        size = dim - 2 * k
        m, mprime = np.meshgrid(index[:size], index[:size], indexing="ij")
        with np.errstate(over="ignore", invalid="ignore"):
            terms = _series_terms(m, mprime, k, eps)
            value = _kahan_sum(terms)
            bound = np.sum(np.abs(terms), axis=0) * _UNIT_ROUNDOFF * (k + 1)
        table[k, 2 * k:, 2 * k:] = value
        ill_conditioned[:size, :size] |= bound > settings.SERIES_CONDITION_LIMIT
    # a chain is named by its lowest member, where min(m, m') is 0 or 1
    chains = set()
    for m, mprime in zip(*np.nonzero(np.triu(ill_conditioned))):
        shift = 2 * (min(m, mprime) // 2)
        chains.add((int(m - shift), int(mprime - shift)))
    for m0, m0prime in sorted(chains):
        length = (dim - 1 - max(m0, m0prime)) // 2 + 1
        transfer = _chain_by_exponential(m0, m0prime, length, eps)
        i, j = np.triu_indices(length)
        table[j - i, m0 + 2 * j, m0prime + 2 * j] = transfer[i, j]
        table[j - i, m0prime + 2 * j, m0 + 2 * j] = transfer[i, j]
    if chains:
        logger.info(f"Rebuilt {len(chains)} ill-conditioned coefficient chains (dim={dim}, eps={eps:.6g})")
    table.setflags(write=False)
    return table


class TPAChannel:
    """Service propagating states through the TPA channel"""

    def __init__(self):
        self.ode_min_steps = settings.ODE_MIN_STEPS
        self.ode_steps_per_eps = settings.ODE_STEPS_PER_EPS
        self.ode_stiff_step = settings.ODE_STIFF_STEP
        self.rk4_stability_limit = settings.RK4_STABILITY_LIMIT

    def gamma_to_eps(self, gamma_cap: float) -> float:
        if not 0.0 <= gamma_cap < 1.0:
            raise DomainError(f"gamma must lie in [0, 1), got {gamma_cap}")
        return -math.log1p(-gamma_cap)

    def eps_to_gamma(self, eps: float) -> float:
        if not eps >= 0.0:
            raise DomainError(f"eps must be nonnegative, got {eps}")
        return -math.expm1(-eps)

    def point(self, gamma_cap: float) -> ChannelPoint:
        return ChannelPoint(gamma_cap=gamma_cap, eps=self.gamma_to_eps(gamma_cap))

    def lindblad_apply(self, rho) -> np.ndarray:
        """d rho / d eps for a density matrix or any Hermitian array"""
        rho = np.asarray(getattr(rho, "elements", rho), dtype=complex)
        dim = rho.shape[-1]
        n = np.arange(dim)
        falling = n * (n - 1)
        result = -0.25 * (falling[:, None] + falling[None, :]) * rho
        if dim > 2:
            gain = np.sqrt(((n + 1) * (n + 2))[: dim - 2].astype(float))
            result[..., : dim - 2, : dim - 2] += 0.5 * np.outer(gain, gain) * rho[..., 2:, 2:]
        return result

    def klimov_coefficient(self, n: int, nprime: int, k: int, eps: float) -> float:
        """A_k(n, n'; eps), the weight of |n-2k><n'-2k| in the image of |n><n'|"""
        if k < 0 or 2 * k > min(n, nprime):
            raise DomainError(f"transition order {k} exceeds min({n}, {nprime})/2")
        if eps < 0:
            raise DomainError(f"eps must be nonnegative, got {eps}")
        if eps == 0:
            return 1.0 if k == 0 else 0.0
        m = np.array(n - 2 * k, dtype=float)
        mprime = np.array(nprime - 2 * k, dtype=float)
        return math.fsum(_series_terms(m, mprime, k, eps).ravel())

    def klimov_terms(self, n: int, nprime: int, eps: float) -> List[KlimovTerm]:
        """Every transition order reachable from |n><n'|"""
        return [
            KlimovTerm(n=n, nprime=nprime, k=k, eps=eps, coefficient=self.klimov_coefficient(n, nprime, k, eps))
            for k in range(min(n, nprime) // 2 + 1)
        ]

    def propagate_exact(self, rho0: DensityMatrix, eps: float) -> DensityMatrix:
        if eps < 0:
            raise DomainError(f"eps must be nonnegative, got {eps}")
        return DensityMatrix.trusted(self.propagate_array(rho0.elements, eps))

    def propagate(self, rho0: DensityMatrix, point: ChannelPoint) -> DensityMatrix:
        return self.propagate_exact(rho0, point.eps)

    def propagate_array(self, rho0: np.ndarray, eps: float) -> np.ndarray:
        """
        Array-level exact propagation used by the Fisher-information hot paths.

        Accepts a single matrix or a stack of matrices along leading axes.
        """
        if eps == 0:
            return np.array(rho0, dtype=complex)
        rho0 = np.asarray(rho0, dtype=complex)
        dim = rho0.shape[-1]
        table = _coefficient_table(dim, float(eps))
        upper = np.triu(rho0)
        result = np.zeros_like(upper)
        for k in range(table.shape[0]):
            shift = 2 * k
            result[..., : dim - shift, : dim - shift] += table[k, shift:, shift:] * upper[..., shift:, shift:]
        # computed on the upper triangle, mirrored
        return np.triu(result) + np.swapaxes(np.triu(result, 1).conj(), -1, -2)

    @staticmethod
    def fastest_rate(dim: int) -> float:
        """Largest decay rate of the generator, reached on |D-1><D-1|"""
        return 0.5 * (dim - 1) * (dim - 2)

    def ode_steps(self, dim: int, eps: float) -> int:
        """Default RK4 step count, raised until the fastest decay is resolved"""
        steps = max(self.ode_min_steps, int(math.ceil(eps * self.ode_steps_per_eps)))
        stiff = int(math.ceil(eps * self.fastest_rate(dim) / self.ode_stiff_step))
        return max(steps, stiff)

    def propagate_ode(self, rho0: DensityMatrix, eps: float, steps: Optional[int] = None) -> DensityMatrix:
        """Classical fixed-step RK4 integration of d rho / d eps"""
        if eps < 0:
            raise DomainError(f"eps must be nonnegative, got {eps}")
        dim = rho0.elements.shape[0]
        if steps is None:
            steps = self.ode_steps(dim, eps)
        if steps < 1:
            raise DomainError(f"steps must be at least 1, got {steps}")
        rho = np.array(rho0.elements, dtype=complex)
        if eps == 0:
            return DensityMatrix.trusted(rho)
        minimum = int(math.ceil(eps * self.fastest_rate(dim) / self.rk4_stability_limit))
        if steps < minimum:
            raise DomainError(
                f"{steps} RK4 steps are unstable for dimension {dim} at eps={eps}; use at least {minimum}",
                details={"minimum_steps": minimum},
            )
        logger.debug(f"RK4 oracle: dim={dim}, eps={eps:.6g}, steps={steps}")
        h = eps / steps
        for _ in range(steps):
            k1 = self.lindblad_apply(rho)
            k2 = self.lindblad_apply(rho + 0.5 * h * k1)
            k3 = self.lindblad_apply(rho + 0.5 * h * k2)
            k4 = self.lindblad_apply(rho + h * k3)
            rho = rho + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(rho)):
            raise IntegrationError(f"RK4 integration diverged (dim={dim}, eps={eps}, steps={steps})")
        rho = 0.5 * (rho + rho.conj().T)
        return DensityMatrix.trusted(rho)


# Global channel instance
tpa_channel = TPAChannel()
