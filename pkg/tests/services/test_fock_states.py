import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from app.services.errors import DimensionError, DomainError, InfeasibleMeanError, TruncationError
from app.services.fock_states import fock_service


class TestMakeFock:
    def test_vacuum(self):
        assert_allclose(fock_service.make_fock(0, 4).amplitudes, [1, 0, 0, 0])

    def test_basis_vector(self):
        state = fock_service.make_fock(2, 4)
        assert_allclose(state.amplitudes, [0, 0, 1, 0])
        assert state.tail_mass == 0.0
        assert state.label == "fock:2"

    def test_index_outside_dimension(self):
        with pytest.raises(DimensionError):
            fock_service.make_fock(4, 3)


class TestMakeCoherent:
    def test_zero_mean_is_vacuum(self):
        assert_allclose(fock_service.make_coherent(0.0, 4).amplitudes, [1, 0, 0, 0])

    def test_vacuum_weight(self):
        state = fock_service.make_coherent(2.0, 40)
        assert state.populations[0] == pytest.approx(math.exp(-2), rel=1e-12)

    def test_short_truncation_rejected(self):
        with pytest.raises(TruncationError, match="raise the dimension"):
            fock_service.make_coherent(2.0, 5)

    @pytest.mark.parametrize("nbar", [0.5, 1.0, 2.0, 3.0, 7.5])
    def test_default_dimension_meets_mean(self, nbar):
        state = fock_service.make_coherent(nbar)
        rho = fock_service.to_density(state)
        assert fock_service.mean_photon(rho) == pytest.approx(nbar, abs=1e-9)
        assert state.tail_mass <= 1e-10


class TestMakeSqueezedVacuum:
    def test_zero_mean_is_vacuum(self):
        state = fock_service.make_squeezed_vacuum(0.0, 6)
        assert_allclose(state.populations, [1, 0, 0, 0, 0, 0])

    def test_low_populations(self):
        state = fock_service.make_squeezed_vacuum(2.0)
        assert state.populations[0] == pytest.approx(1 / math.sqrt(3), rel=1e-9)
        assert state.populations[2] == pytest.approx(1 / (3 * math.sqrt(3)), rel=1e-9)

    def test_sixty_levels_truncate_too_much(self):
        # the tail beyond n = 59 is about 1e-6 at nbar = 2
        with pytest.raises(TruncationError):
            fock_service.make_squeezed_vacuum(2.0, 60)

    def test_odd_amplitudes_vanish(self):
        state = fock_service.make_squeezed_vacuum(1.5)
        assert np.all(state.amplitudes[1::2] == 0)

    @pytest.mark.parametrize("nbar", [0.5, 1.0, 2.0])
    def test_default_dimension_meets_mean(self, nbar):
        rho = fock_service.to_density(fock_service.make_squeezed_vacuum(nbar))
        assert fock_service.mean_photon(rho) == pytest.approx(nbar, abs=1e-9)

    def test_mean_must_fit_dimension(self):
        with pytest.raises(DimensionError):
            fock_service.make_squeezed_vacuum(4.0, 4)


class TestMakeOn:
    def test_full_weight_is_fock(self):
        assert_allclose(fock_service.make_on(2.0, 2, 4).amplitudes, [0, 0, 1, 0])

    def test_half_weights(self):
        half = math.sqrt(0.5)
        assert_allclose(fock_service.make_on(2.0, 4, 6).amplitudes, [half, 0, 0, 0, half, 0])

    def test_mean_above_occupation(self):
        with pytest.raises(InfeasibleMeanError):
            fock_service.make_on(3.0, 2, 4)

    def test_mean_photon(self):
        assert fock_service.mean_photon(fock_service.to_density(fock_service.make_on(2.0, 4))) == pytest.approx(2.0)


class TestMakeDv:
    def test_vacuum(self):
        assert_allclose(fock_service.make_dv([1, 0, 0]).amplitudes, [1, 0, 0])

    def test_normalisation(self):
        half = math.sqrt(0.5)
        assert_allclose(fock_service.make_dv([2, 0, 2]).amplitudes, [half, 0, half])

    def test_negative_coefficient(self):
        with pytest.raises(DomainError):
            fock_service.make_dv([1, -1])

    def test_zero_vector(self):
        with pytest.raises(DomainError):
            fock_service.make_dv([0, 0, 0])

    def test_padding_to_dimension(self):
        assert fock_service.make_dv([1, 1], dim=5).dim == 5


class TestStatistics:
    def test_fock_mean(self):
        assert fock_service.mean_photon(fock_service.to_density(fock_service.make_fock(2, 4))) == 2.0

    def test_distribution_sums_to_one(self):
        rho = fock_service.to_density(fock_service.make_coherent(3.0))
        assert fock_service.photon_distribution(rho).sum() == pytest.approx(1.0, abs=1e-12)

    def test_squeezed_distribution_vacuum(self):
        rho = fock_service.to_density(fock_service.make_squeezed_vacuum(2.0))
        assert fock_service.photon_distribution(rho)[0] == pytest.approx(1 / math.sqrt(3), rel=1e-9)


def test_default_dimension_is_minimal():
    tail = lambda d: 2.0 ** -d  # noqa: E731
    dim = fock_service.default_dimension(tail, 1e-10)
    assert tail(dim) <= 1e-10 < tail(dim - 1)
