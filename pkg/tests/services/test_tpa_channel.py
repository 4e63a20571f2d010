import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from app.models.channel import ChannelPoint
from app.services.errors import DomainError, IntegrationError
from app.services.fock_states import fock_service
from app.services.tpa_channel import _chain_by_exponential, _coefficient_table, tpa_channel


def fock_density(n, dim):
    return fock_service.to_density(fock_service.make_fock(n, dim))


class TestReparametrisation:
    def test_zero(self):
        assert tpa_channel.gamma_to_eps(0.0) == 0.0

    def test_half(self):
        assert tpa_channel.eps_to_gamma(math.log(2)) == pytest.approx(0.5, abs=1e-15)

    def test_near_one(self):
        assert tpa_channel.gamma_to_eps(0.99) == pytest.approx(math.log(100), rel=1e-14)

    @pytest.mark.parametrize("gamma_cap", [1.0, 1.5, -0.1])
    def test_out_of_range(self, gamma_cap):
        with pytest.raises(DomainError):
            tpa_channel.gamma_to_eps(gamma_cap)

    @pytest.mark.parametrize("gamma_cap", [1e-6, 0.3, 0.999])
    def test_round_trip(self, gamma_cap):
        assert tpa_channel.eps_to_gamma(tpa_channel.gamma_to_eps(gamma_cap)) == pytest.approx(gamma_cap, abs=1e-14)

    def test_point(self):
        point = tpa_channel.point(0.5)
        assert isinstance(point, ChannelPoint)
        assert point.eps == pytest.approx(math.log(2))


class TestLindbladApply:
    def test_vacuum_and_one_photon_are_fixed(self):
        assert_allclose(tpa_channel.lindblad_apply(fock_density(0, 4)), 0)
        assert_allclose(tpa_channel.lindblad_apply(fock_density(1, 4)), 0)

    def test_two_photons(self):
        expected = np.diag([1.0, 0, -1.0, 0])
        assert_allclose(tpa_channel.lindblad_apply(fock_density(2, 4)), expected, atol=1e-15)

    def test_three_photons(self):
        expected = np.diag([0, 3.0, 0, -3.0])
        assert_allclose(tpa_channel.lindblad_apply(fock_density(3, 4)), expected, atol=1e-14)

    def test_traceless_and_hermitian(self, random_dv_density):
        drho = tpa_channel.lindblad_apply(random_dv_density())
        assert abs(np.trace(drho)) < 1e-12
        assert_allclose(drho, drho.conj().T, atol=1e-14)


class TestKlimovCoefficient:
    @pytest.mark.parametrize("eps", [0.1, 0.7, 2.0])
    def test_two_photon_closed_forms(self, eps):
        assert tpa_channel.klimov_coefficient(2, 2, 0, eps) == pytest.approx(math.exp(-eps), rel=1e-13)
        assert tpa_channel.klimov_coefficient(2, 2, 1, eps) == pytest.approx(-math.expm1(-eps), rel=1e-12)

    def test_identity_at_zero(self):
        assert tpa_channel.klimov_coefficient(6, 4, 0, 0.0) == 1.0
        assert tpa_channel.klimov_coefficient(6, 4, 2, 0.0) == 0.0

    def test_order_too_large(self):
        with pytest.raises(DomainError):
            tpa_channel.klimov_coefficient(3, 5, 2, 0.5)

    def test_terms_conserve_population(self):
        terms = tpa_channel.klimov_terms(7, 7, 0.9)
        assert [term.k for term in terms] == [0, 1, 2, 3]
        assert math.fsum(term.coefficient for term in terms) == pytest.approx(1.0, abs=1e-13)

    def test_series_matches_chain_exponential(self):
        # chain |1+2j><3+2j|, j = 0..4, entry [i, j] carries A_{j-i}
        eps = 0.4
        transfer = _chain_by_exponential(1, 3, 5, eps)
        for i in range(5):
            for j in range(i, 5):
                series = tpa_channel.klimov_coefficient(1 + 2 * j, 3 + 2 * j, j - i, eps)
                assert series == pytest.approx(transfer[i, j], rel=1e-10, abs=1e-14)


class TestPropagateExact:
    def test_zero_eps_is_identity(self, random_dv_density):
        rho0 = random_dv_density()
        assert_allclose(tpa_channel.propagate_exact(rho0, 0.0).elements, rho0.elements)

    @pytest.mark.parametrize("eps", [0.2, 1.0, 4.0])
    def test_two_photon_decay(self, eps):
        rho = tpa_channel.propagate_exact(fock_density(2, 3), eps).elements
        assert_allclose(rho, np.diag([-math.expm1(-eps), 0, math.exp(-eps)]), atol=1e-14)

    @pytest.mark.parametrize("eps", [0.2, 1.0])
    def test_three_photon_decay(self, eps):
        rho = tpa_channel.propagate_exact(fock_density(3, 4), eps).elements
        assert_allclose(rho, np.diag([0, -math.expm1(-3 * eps), 0, math.exp(-3 * eps)]), atol=1e-14)

    def test_propagate_accepts_point(self):
        rho0 = fock_density(4, 5)
        point = ChannelPoint.from_gamma(0.4)
        assert_allclose(
            tpa_channel.propagate(rho0, point).elements, tpa_channel.propagate_exact(rho0, point.eps).elements
        )

    @pytest.mark.parametrize("eps", [0.0, 0.3, 1.0, 3.0, 10.0])
    def test_trace_and_positivity(self, random_dv_density, eps):
        rho = tpa_channel.propagate_exact(random_dv_density(), eps).elements
        assert abs(np.trace(rho).real - 1) < 1e-12
        assert np.linalg.eigvalsh(rho)[0] >= -1e-10
        assert_allclose(rho, rho.conj().T, atol=0)

    def test_parity_conserved(self, random_dv_density):
        rho0 = random_dv_density()
        even = lambda rho: np.real(np.diag(rho.elements))[0::2].sum()  # noqa: E731
        for eps in (0.1, 0.8, 2.5):
            assert even(tpa_channel.propagate_exact(rho0, eps)) == pytest.approx(even(rho0), abs=1e-12)

    def test_energy_non_increasing(self):
        rho0 = fock_service.to_density(fock_service.make_coherent(3.0))
        means = [fock_service.mean_photon(tpa_channel.propagate_exact(rho0, eps)) for eps in np.linspace(0, 3, 13)]
        assert np.all(np.diff(means) <= 1e-12)

    def test_semigroup(self, random_dv_density):
        rho0 = random_dv_density()
        twice = tpa_channel.propagate_exact(tpa_channel.propagate_exact(rho0, 0.4), 0.9)
        assert_allclose(twice.elements, tpa_channel.propagate_exact(rho0, 1.3).elements, atol=1e-10)

    def test_generator_consistency(self, random_dv_density):
        rho0 = random_dv_density()
        h = 1e-6
        difference = (tpa_channel.propagate_exact(rho0, h).elements - rho0.elements) / h
        generator = tpa_channel.lindblad_apply(rho0)
        assert np.max(np.abs(difference - generator)) <= 1e-4 * np.max(np.abs(generator))

    def test_vacuum_and_one_photon_fixed(self):
        for n in (0, 1):
            rho0 = fock_density(n, 3)
            assert_allclose(tpa_channel.propagate_exact(rho0, 2.0).elements, rho0.elements)

    def test_large_dimension_table_is_finite(self):
        table = _coefficient_table(120, 0.05)
        assert np.all(np.isfinite(table))
        rho = tpa_channel.propagate_exact(fock_service.to_density(fock_service.make_squeezed_vacuum(2.0)), 0.05)
        assert abs(np.trace(rho.elements).real - 1) < 1e-12
        assert np.linalg.eigvalsh(rho.elements)[0] >= -1e-10


class TestPropagateOde:
    def test_two_photon_closed_form(self):
        rho = tpa_channel.propagate_ode(fock_density(2, 3), 1.0, steps=1000).elements
        assert_allclose(rho, np.diag([-math.expm1(-1.0), 0, math.exp(-1.0)]), atol=1e-10)

    def test_zero_eps(self, random_dv_density):
        rho0 = random_dv_density()
        assert_allclose(tpa_channel.propagate_ode(rho0, 0.0, steps=5).elements, rho0.elements)

    def test_coherent_matches_exact(self):
        rho0 = fock_service.to_density(fock_service.make_coherent(2.0))
        exact = tpa_channel.propagate_exact(rho0, 0.7).elements
        oracle = tpa_channel.propagate_ode(rho0, 0.7, steps=2000).elements
        assert np.max(np.abs(exact - oracle)) < 1e-8

    def test_oracle_equivalence(self, random_dv_density):
        for _ in range(50):
            rho0 = random_dv_density()
            for eps in (0.1, 0.5, 1.0, 3.0):
                exact = tpa_channel.propagate_exact(rho0, eps).elements
                oracle = tpa_channel.propagate_ode(rho0, eps).elements
                assert np.max(np.abs(exact - oracle)) < 1e-8

    def test_steps_must_be_positive(self, random_dv_density):
        with pytest.raises(DomainError):
            tpa_channel.propagate_ode(random_dv_density(), 0.5, steps=0)

    def test_default_steps_resolve_fastest_decay(self):
        dim = 127
        steps = tpa_channel.ode_steps(dim, 0.7)
        assert 0.7 / steps * tpa_channel.fastest_rate(dim) <= 1.0

    def test_high_dimension_matches_exact(self):
        rho0 = fock_service.to_density(fock_service.make_squeezed_vacuum(2.0))
        assert rho0.dim > 100
        oracle = tpa_channel.propagate_ode(rho0, 0.7).elements
        exact = tpa_channel.propagate_exact(rho0, 0.7).elements
        assert np.all(np.isfinite(oracle))
        assert np.max(np.abs(exact - oracle)) < 1e-8

    def test_unstable_step_count_rejected(self):
        rho0 = fock_service.to_density(fock_service.make_squeezed_vacuum(2.0))
        with pytest.raises(DomainError, match="use at least"):
            tpa_channel.propagate_ode(rho0, 0.7, steps=1000)

    def test_divergence_is_reported(self, monkeypatch):
        monkeypatch.setattr(tpa_channel, "rk4_stability_limit", float("inf"))
        rho0 = fock_service.to_density(fock_service.make_squeezed_vacuum(2.0))
        with pytest.raises(IntegrationError):
            tpa_channel.propagate_ode(rho0, 3.0, steps=1000)
