"""
Fock State Service
Construction and interrogation of single-mode states in a truncated Fock basis
"""

import logging
import math
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import gammaln
from scipy.stats import poisson

from app.config import settings
from app.models.states import DensityMatrix, FockState, MeanConstraint
from app.services.errors import DimensionError, DomainError, InfeasibleMeanError, TruncationError

logger = logging.getLogger(__name__)


def _coherent_populations(nbar: float, dim: int) -> np.ndarray:
    return poisson.pmf(np.arange(dim), nbar)


def _coherent_tail(nbar: float, dim: int) -> float:
    if nbar == 0:
        return 0.0
    return float(poisson.sf(dim - 1, nbar))


def _coherent_moment_tail(nbar: float, dim: int) -> float:
    """sum_{n >= D} n p(n) = nbar * P(N >= D - 1)"""
    if nbar == 0:
        return 0.0
    return nbar * float(poisson.sf(dim - 2, nbar))


def _squeezed_log_populations(nbar: float, m: np.ndarray) -> np.ndarray:
    """log |c_{2m}|^2 = -log cosh r + m log tanh^2 r + log[(2m)!/(2^m m!)^2]"""
    log_tanh2 = math.log(nbar) - math.log1p(nbar)
    return (
        -0.5 * math.log1p(nbar)
        + m * log_tanh2
        + gammaln(2 * m + 1)
        - 2 * gammaln(m + 1)
        - m * math.log(4.0)
    )


def _squeezed_tail_terms(nbar: float, dim: int) -> tuple:
    tanh2 = nbar / (1 + nbar)
    # successive terms shrink by at most tanh^2 r
    span = int(math.ceil(math.log(1e-22) / math.log(tanh2))) + 8
    m = np.arange((dim + 1) // 2, (dim + 1) // 2 + span, dtype=float)
    return m, np.exp(_squeezed_log_populations(nbar, m))


def _squeezed_tail(nbar: float, dim: int) -> float:
    if nbar == 0:
        return 0.0
    _, terms = _squeezed_tail_terms(nbar, dim)
    return math.fsum(terms)


def _squeezed_moment_tail(nbar: float, dim: int) -> float:
    if nbar == 0:
        return 0.0
    m, terms = _squeezed_tail_terms(nbar, dim)
    return math.fsum(2 * m * terms)


class FockStateService:
    """Service for building probe states and reading off their photon statistics"""

    def __init__(self):
        self.tail_tol = settings.TAIL_TOL
        self.search_start = settings.DIM_SEARCH_START
        self.search_limit = settings.DIM_SEARCH_LIMIT

    def make_fock(self, n: int, dim: int) -> FockState:
        """Number state |n>"""
        if n < 0:
            raise DomainError(f"Fock index must be nonnegative, got {n}")
        if n >= dim:
            raise DimensionError(f"Fock index {n} does not fit dimension {dim}")
        amplitudes = np.zeros(dim, dtype=complex)
        amplitudes[n] = 1.0
        return FockState(dim=dim, amplitudes=amplitudes, tail_mass=0.0, label=f"fock:{n}")

    def make_coherent(self, nbar: float, dim: Optional[int] = None, tail_tol: Optional[float] = None) -> FockState:
        """Coherent state with real amplitude alpha = sqrt(nbar)"""
        if nbar < 0:
            raise DomainError(f"mean photon number must be nonnegative, got {nbar}")
        tail_tol = self.tail_tol if tail_tol is None else tail_tol
        if nbar == 0:
            return self.make_fock(0, dim or 2).model_copy(update={"label": "coherent"})
        if dim is None:
            dim = self.default_dimension(
                lambda d: max(_coherent_tail(nbar, d), _coherent_moment_tail(nbar, d)), tail_tol, nbar
            )
        self._check_mean_fits(nbar, dim)
        tail = _coherent_tail(nbar, dim)
        self._check_tail("coherent", nbar, dim, tail, tail_tol)
        populations = _coherent_populations(nbar, dim)
        amplitudes = np.sqrt(populations / populations.sum())
        return FockState(dim=dim, amplitudes=amplitudes, tail_mass=tail, label="coherent")

    def make_squeezed_vacuum(self, nbar: float, dim: Optional[int] = None,
                             tail_tol: Optional[float] = None) -> FockState:
        """
        Squeezed vacuum S(r)|0> with r = asinh(sqrt(nbar)).

        Amplitudes follow the convention c_{2m} = (-tanh r)^m sqrt((2m)!) / (2^m m! sqrt(cosh r)).
        Flipping the sign pattern is a phase rotation by pi/2 and leaves every
        Fisher quantity unchanged.
        """
        if nbar < 0:
            raise DomainError(f"mean photon number must be nonnegative, got {nbar}")
        tail_tol = self.tail_tol if tail_tol is None else tail_tol
        if dim is None:
            dim = self.default_dimension(
                lambda d: max(_squeezed_tail(nbar, d), _squeezed_moment_tail(nbar, d)), tail_tol, nbar
            )
        self._check_mean_fits(nbar, dim)
        amplitudes = np.zeros(dim, dtype=complex)
        if nbar == 0:
            amplitudes[0] = 1.0
            return FockState(dim=dim, amplitudes=amplitudes, tail_mass=0.0, label="sv")
        tail = _squeezed_tail(nbar, dim)
        self._check_tail("squeezed vacuum", nbar, dim, tail, tail_tol)
        m = np.arange((dim + 1) // 2, dtype=float)
        magnitudes = np.exp(0.5 * _squeezed_log_populations(nbar, m))
        signs = np.where(m % 2 == 0, 1.0, -1.0)
        amplitudes[0::2] = signs * magnitudes
        amplitudes /= np.linalg.norm(amplitudes)
        return FockState(dim=dim, amplitudes=amplitudes, tail_mass=tail, label="sv")

    def make_on(self, nbar: float, occupation: int, dim: Optional[int] = None) -> FockState:
        """sqrt(1 - nbar/N)|0> + sqrt(nbar/N)|N>"""
        if occupation < 1:
            raise DomainError(f"ON occupation must be positive, got {occupation}")
        if nbar < 0:
            raise DomainError(f"mean photon number must be nonnegative, got {nbar}")
        if nbar > occupation:
            raise InfeasibleMeanError(f"mean {nbar} cannot be reached with occupation {occupation}")
        dim = occupation + 1 if dim is None else dim
        if occupation >= dim:
            raise DimensionError(f"occupation {occupation} does not fit dimension {dim}")
        amplitudes = np.zeros(dim, dtype=complex)
        weight = nbar / occupation
        amplitudes[0] = math.sqrt(1.0 - weight)
        amplitudes[occupation] = math.sqrt(weight)
        return FockState(dim=dim, amplitudes=amplitudes, tail_mass=0.0, label=f"on:{occupation}")

    def make_dv(self, coeffs: Sequence[float], dim: Optional[int] = None, label: str = "dv") -> FockState:
        """Normalised superposition sum_j c_j |j> with real nonnegative c_j"""
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.ndim != 1 or coeffs.size == 0:
            raise DomainError("DV coefficients must be a nonempty vector")
        dim = coeffs.size if dim is None else dim
        if coeffs.size > dim:
            raise DimensionError(f"{coeffs.size} coefficients do not fit dimension {dim}")
        if np.any(coeffs < 0):
            raise DomainError("DV coefficients must be nonnegative")
        norm = np.linalg.norm(coeffs)
        if norm == 0:
            raise DomainError("DV coefficients must not all be zero")
        amplitudes = np.zeros(dim, dtype=complex)
        amplitudes[: coeffs.size] = coeffs / norm
        return FockState(dim=dim, amplitudes=amplitudes, tail_mass=0.0, label=label)

    def to_density(self, psi: FockState) -> DensityMatrix:
        return DensityMatrix.trusted(np.outer(psi.amplitudes, psi.amplitudes.conj()))

    def mean_photon(self, rho: DensityMatrix) -> float:
        return float(np.dot(np.arange(rho.dim), self.photon_distribution(rho)))

    def photon_distribution(self, rho: DensityMatrix) -> np.ndarray:
        return np.real(np.diag(rho.elements)).copy()

    def default_dimension(self, tail: Callable[[int], float], tail_tol: float, nbar: float = 0.0) -> int:
        """Smallest dimension whose tail is within tolerance: doubling search, then bisection"""
        floor = max(2, int(math.floor(nbar)) + 2)
        upper = max(self.search_start, floor)
        lower = floor - 1
        while tail(upper) > tail_tol:
            if upper >= self.search_limit:
                raise TruncationError(
                    f"tail stays above {tail_tol:g} up to dimension {self.search_limit}",
                    details={"nbar": nbar},
                )
            lower = upper
            upper = min(2 * upper, self.search_limit)
        while upper - lower > 1:
            middle = (lower + upper) // 2
            if tail(middle) > tail_tol:
                lower = middle
            else:
                upper = middle
        logger.debug(f"Chose dimension {upper} for nbar={nbar} (tail tolerance {tail_tol:g})")
        return upper

    def _check_mean_fits(self, nbar: float, dim: int) -> None:
        if not MeanConstraint(nbar=nbar).fits(dim):
            raise DimensionError(f"mean {nbar} needs a dimension above {nbar + 1}, got {dim}")

    def _check_tail(self, family: str, nbar: float, dim: int, tail: float, tail_tol: float) -> None:
        if tail > tail_tol:
            raise TruncationError(
                f"{family} state with nbar={nbar} loses {tail:.3e} beyond dimension {dim}; "
                f"raise the dimension to bring the tail below {tail_tol:g}",
                details={"dim": dim, "tail_mass": tail},
            )


# Global service instance
fock_service = FockStateService()
