"""
Metrology Service
Fisher-information machinery for estimating the TPA parameter gamma_cap
"""

import logging
import math
from typing import Optional, Union

import numpy as np

from app.config import settings
from app.models.channel import ChannelPoint
from app.models.metrology import FisherReport, SldDecomposition
from app.models.states import DensityMatrix, FockState
from app.services.errors import BoundViolationError, DegenerateStateError, DomainError
from app.services.fock_states import fock_service
from app.services.tpa_channel import tpa_channel

logger = logging.getLogger(__name__)

Probe = Union[FockState, DensityMatrix]


def _initial_array(probe: Probe) -> np.ndarray:
    if isinstance(probe, FockState):
        return np.outer(probe.amplitudes, probe.amplitudes.conj())
    return np.asarray(probe.elements, dtype=complex)


def _check_open_interval(gamma_cap: float) -> None:
    if not 0.0 < gamma_cap < 1.0:
        raise DomainError(f"Fisher information needs gamma in (0, 1), got {gamma_cap}")


class MetrologyService:
    """Service computing quantum and classical Fisher information"""

    def __init__(self):
        self.cutoff_rel = settings.SLD_CUTOFF_REL
        self.pn_floor = settings.PN_FLOOR
        self.pn_numerator_flag = settings.PN_NUMERATOR_FLAG
        self.bound_rtol = settings.FI_BOUND_RTOL
        self.channel = tpa_channel

    # Derivatives and SLD

    def drho_dgamma(self, rho_eps: Union[DensityMatrix, np.ndarray], point: Union[ChannelPoint, float]) -> np.ndarray:
        """d rho / d gamma_cap = L[rho_eps] / (1 - gamma_cap)"""
        gamma_cap = point.gamma_cap if isinstance(point, ChannelPoint) else float(point)
        if gamma_cap >= 1.0:
            raise DomainError("d rho / d gamma is undefined at gamma = 1")
        return self.channel.lindblad_apply(rho_eps) / (1.0 - gamma_cap)

    def sld(self, rho: Union[DensityMatrix, np.ndarray], drho: np.ndarray,
            cutoff: Optional[float] = None) -> SldDecomposition:
        """L = 2 sum_{k,l: lambda_k + lambda_l > cutoff} <l|drho|k> / (lambda_k + lambda_l) |l><k|"""
        eigvals, eigvecs, drho_eig, mask, cutoff = self._eigenframe(rho, drho, cutoff)
        pair_sums = eigvals[:, None] + eigvals[None, :]
        sld_eig = np.zeros_like(drho_eig)
        sld_eig[mask] = 2.0 * drho_eig[mask] / pair_sums[mask]
        sld = eigvecs @ sld_eig @ eigvecs.conj().T
        sld = 0.5 * (sld + sld.conj().T)
        return SldDecomposition(eigvals=eigvals, eigvecs=eigvecs, sld=sld, cutoff=cutoff)

    def _eigenframe(self, rho, drho, cutoff):
        rho = np.asarray(getattr(rho, "elements", rho), dtype=complex)
        rho = 0.5 * (rho + rho.conj().T)
        eigvals, eigvecs = np.linalg.eigh(rho)
        if cutoff is None:
            cutoff = self.cutoff_rel * max(float(eigvals[-1]), 0.0)
        pair_sums = eigvals[:, None] + eigvals[None, :]
        mask = pair_sums > cutoff
        if not np.any(mask):
            raise DegenerateStateError("no eigenvalue pair of the state exceeds the SLD cutoff")
        drho_eig = eigvecs.conj().T @ np.asarray(drho, dtype=complex) @ eigvecs
        return eigvals, eigvecs, drho_eig, mask, cutoff

    def _qfi_array(self, rho: np.ndarray, drho: np.ndarray) -> float:
        return float(self._qfi_stack(rho[None], drho[None])[0])

    def _qfi_stack(self, rho: np.ndarray, drho: np.ndarray) -> np.ndarray:
        """QFI of every matrix in a stack, same cutoff rule as sld"""
        rho = 0.5 * (rho + np.swapaxes(rho.conj(), -1, -2))
        eigvals, eigvecs = np.linalg.eigh(rho)
        cutoff = self.cutoff_rel * np.maximum(eigvals[..., -1], 0.0)
        pair_sums = eigvals[..., :, None] + eigvals[..., None, :]
        mask = pair_sums > cutoff[..., None, None]
        if not np.all(np.any(mask, axis=(-2, -1))):
            raise DegenerateStateError("no eigenvalue pair of the state exceeds the SLD cutoff")
        drho_eig = np.swapaxes(eigvecs.conj(), -1, -2) @ drho @ eigvecs
        terms = np.divide(2.0 * np.abs(drho_eig) ** 2, pair_sums, out=np.zeros(pair_sums.shape), where=mask)
        return terms.sum(axis=(-2, -1))

    # Quantum Fisher information

    def qfi(self, probe: Probe, gamma_cap: float) -> float:
        """Per-shot QFI with respect to gamma_cap"""
        _check_open_interval(gamma_cap)
        rho = self.channel.propagate_array(_initial_array(probe), self.channel.gamma_to_eps(gamma_cap))
        return self._qfi_array(rho, self.drho_dgamma(rho, gamma_cap))

    def qfi_eps(self, probe: Probe, gamma_cap: float) -> float:
        """Per-shot QFI with respect to eps at the same channel point"""
        _check_open_interval(gamma_cap)
        rho = self.channel.propagate_array(_initial_array(probe), self.channel.gamma_to_eps(gamma_cap))
        return self._qfi_array(rho, self.channel.lindblad_apply(rho))

    def qfi_from_amplitudes(self, amplitudes: np.ndarray, gamma_cap: float) -> float:
        """QFI of the pure probe with the given normalised amplitudes"""
        return float(self.qfi_batch(np.asarray(amplitudes)[None], gamma_cap)[0])

    def qfi_batch(self, amplitudes: np.ndarray, gamma_cap: float) -> np.ndarray:
        """QFI of each pure probe given by the rows of a normalised amplitude matrix"""
        _check_open_interval(gamma_cap)
        amplitudes = np.asarray(amplitudes)
        rho0 = amplitudes[:, :, None] * np.conj(amplitudes)[:, None, :]
        rho = self.channel.propagate_array(rho0, self.channel.gamma_to_eps(gamma_cap))
        return self._qfi_stack(rho, self.channel.lindblad_apply(rho) / (1.0 - gamma_cap))

    # Fock-diagonal fast path

    def qfi_contributions(self, populations, gamma_cap: float) -> np.ndarray:
        """Per-output-level terms (d_gamma h_m)^2 / h_m of a Fock-diagonal probe"""
        _check_open_interval(gamma_cap)
        populations = np.asarray(populations, dtype=float)
        if np.any(populations < 0) or abs(populations.sum() - 1.0) > 1e-9:
            raise DomainError("populations must be nonnegative and sum to 1")
        output = self._diagonal_output(populations, self.channel.gamma_to_eps(gamma_cap))
        rates = self._diagonal_rates(output) / (1.0 - gamma_cap)
        return self._fisher_terms(output, rates)

    def qfi_diagonal(self, populations, gamma_cap: float) -> float:
        return math.fsum(self.qfi_contributions(populations, gamma_cap))

    def _diagonal_output(self, populations: np.ndarray, eps: float) -> np.ndarray:
        """h_m = sum_k A_k(m+2k, m+2k; eps) p_{m+2k}"""
        rho0 = np.diag(populations.astype(complex))
        return np.real(np.diag(self.channel.propagate_array(rho0, eps)))

    @staticmethod
    def _diagonal_rates(p: np.ndarray) -> np.ndarray:
        """d p_n / d eps = [(n+1)(n+2) p_{n+2} - n(n-1) p_n] / 2"""
        n = np.arange(p.size)
        gain = np.zeros_like(p)
        gain[:-2] = ((n + 1) * (n + 2))[:-2] * p[2:]
        return 0.5 * (gain - n * (n - 1) * p)

    def _fisher_terms(self, p: np.ndarray, rates: np.ndarray) -> np.ndarray:
        terms = np.zeros_like(p)
        kept = p >= self.pn_floor
        terms[kept] = rates[kept] ** 2 / p[kept]
        skipped = np.abs(rates[~kept])
        if skipped.size and skipped.max() > self.pn_numerator_flag:
            logger.warning(f"Skipped unpopulated levels with derivative up to {skipped.max():.3e}")
        return terms

    # Photon counting

    def fi_photon_counting(self, probe: Probe, gamma_cap: float) -> float:
        """Classical FI of the photon-number distribution, with respect to gamma_cap"""
        return self.fi_photon_counting_eps(probe, gamma_cap) / (1.0 - gamma_cap) ** 2

    def fi_photon_counting_eps(self, probe: Probe, gamma_cap: float) -> float:
        _check_open_interval(gamma_cap)
        rho = self.channel.propagate_array(_initial_array(probe), self.channel.gamma_to_eps(gamma_cap))
        p = np.real(np.diag(rho))
        return math.fsum(self._fisher_terms(p, self._diagonal_rates(p)))

    # Asymptotics and derived ratios

    def asymptotic_qfi_fock(self, n: int, gamma_cap: float) -> float:
        """Small-gamma QFI of |n>: n(n-1) / (2 gamma)"""
        if gamma_cap <= 0:
            raise DomainError(f"asymptotic QFI needs gamma > 0, got {gamma_cap}")
        return n * (n - 1) / (2.0 * gamma_cap)

    def asymptotic_qfi_on(self, nbar: float, occupation: int, gamma_cap: float) -> float:
        """Small-gamma QFI of the ON state: nbar (N-1) / (2 gamma)"""
        if gamma_cap <= 0:
            raise DomainError(f"asymptotic QFI needs gamma > 0, got {gamma_cap}")
        return nbar * (occupation - 1) / (2.0 * gamma_cap)

    def quantum_advantage(self, qfi_probe: float, qfi_coherent: float) -> float:
        if qfi_coherent <= 0:
            raise DomainError(f"coherent benchmark QFI must be positive, got {qfi_coherent}")
        return (qfi_probe - qfi_coherent) / qfi_coherent

    def pn_efficiency(self, fi_pn: float, qfi: float) -> float:
        if qfi <= 0:
            raise DomainError(f"QFI must be positive, got {qfi}")
        eta = fi_pn / qfi
        if eta > 1.0 + self.bound_rtol:
            logger.error(f"Photon-counting FI exceeds the QFI by a ratio of {eta!r}")
            raise BoundViolationError(
                f"photon-counting FI {fi_pn!r} exceeds the QFI {qfi!r}", details={"fi_pn": fi_pn, "qfi": qfi}
            )
        return min(eta, 1.0)

    def rotate_probe(self, probe: Probe, phi: float) -> Probe:
        """Phase rotation e^{-i phi n} s e^{i phi n}"""
        if isinstance(probe, FockState):
            phases = np.exp(-1j * phi * np.arange(probe.dim))
            return probe.model_copy(update={"amplitudes": probe.amplitudes * phases})
        n = np.arange(probe.dim)
        rotated = probe.elements * np.exp(-1j * phi * (n[:, None] - n[None, :]))
        return DensityMatrix.trusted(rotated)

    def fisher_report(self, probe: Probe, gamma_cap: float, probe_id: Optional[str] = None,
                      qfi_coherent: Optional[float] = None) -> FisherReport:
        qfi = self.qfi(probe, gamma_cap)
        fi_pn = self.fi_photon_counting(probe, gamma_cap)
        eta_pn = self.pn_efficiency(fi_pn, qfi) if qfi > 0 else None
        if isinstance(probe, FockState):
            nbar = float(np.dot(np.arange(probe.dim), probe.populations))
            probe_id = probe_id or probe.label
        else:
            nbar = fock_service.mean_photon(probe)
        return FisherReport(
            gamma_cap=gamma_cap,
            probe_id=probe_id or "rho",
            nbar=nbar,
            qfi=qfi,
            fi_pn=fi_pn,
            qa=self.quantum_advantage(qfi, qfi_coherent) if qfi_coherent is not None else None,
            eta_pn=eta_pn,
        )


# Global service instance
metrology_service = MetrologyService()
