import math

import numpy as np
import pytest

from lindblad_cptp.exceptions import DimensionError
from lindblad_cptp.linalg import dagger
from lindblad_cptp.models import TruncationPolicy, get_tableau
from lindblad_cptp.services.generator import lindblad_rhs
from lindblad_cptp.services.scenarios import (
    SIGMA_MINUS,
    SIGMA_PLUS,
    JCParams,
    basis_factor,
    build_jaynes_cummings,
    build_stiff_decoherence,
    coherent_amplitudes,
    excited_population,
    lowering_matrix,
    mean_photon_number,
    revival_time,
    total_excitation_operator,
)
from lindblad_cptp.services.simulation import MethodSpec, make_stepper

from ..factories import JCParamsFactory

pytestmark = [pytest.mark.unit]


class TestOperators:
    def test_lowering_matrix(self):
        """``a |l⟩ = √l |l-1⟩``."""
        a = lowering_matrix(4)
        assert a[0, 1] == pytest.approx(1.0)
        assert a[2, 3] == pytest.approx(math.sqrt(3))
        np.testing.assert_allclose(np.diag(dagger(a) @ a).real, [0, 1, 2, 3])

    def test_sigma_convention(self):
        """``σ⁻`` moves the excited level (index 1) to the ground level."""
        excited = np.array([0.0, 1.0])
        np.testing.assert_allclose(SIGMA_MINUS @ excited, [1.0, 0.0])
        np.testing.assert_allclose(SIGMA_PLUS @ SIGMA_MINUS, np.diag([0.0, 1.0]))

    def test_basis_factor_range(self):
        """Levels outside the space are refused."""
        assert basis_factor(3, 2).dense()[2, 2] == pytest.approx(1.0)
        with pytest.raises(ValueError):
            basis_factor(3, 3)


class TestCoherentState:
    def test_normalized_with_mean(self):
        """For a well-resolved state ``⟨n⟩ ≈ v²``."""
        amps = coherent_amplitudes(40, 2.0)
        assert np.linalg.norm(amps) == pytest.approx(1.0)
        assert mean_photon_number(amps) == pytest.approx(4.0, rel=1e-6)

    def test_large_amplitude_is_finite(self):
        """Log-space evaluation keeps ``m = 150`` finite."""
        amps = coherent_amplitudes(150, math.sqrt(50))
        assert np.all(np.isfinite(amps))

    def test_vacuum(self):
        """``v = 0`` is the vacuum."""
        np.testing.assert_array_equal(coherent_amplitudes(3, 0.0), [1.0, 0.0, 0.0])


class TestJaynesCummings:
    def test_default_amplitude(self):
        """``v`` defaults to ``√(m/3)``."""
        p = JCParams(m=30)
        assert p.amplitude == pytest.approx(math.sqrt(10))
        assert p.revival_time == pytest.approx(2 * math.pi * math.sqrt(10))

    @pytest.mark.parametrize(
        'kwargs', [{'m': 1}, {'m': 4, 'lam': 0.0}, {'m': 4, 'kappa': -1.0}, {'m': 4, 'v': -1.0}]
    )
    def test_invalid_params(self, kwargs):
        """Out-of-range parameters are refused."""
        with pytest.raises(ValueError):
            JCParams(**kwargs)

    def test_model_shape(self):
        """``N = 2m`` with one jump and an excited pure start."""
        p = JCParamsFactory(m=5)
        model, v0 = build_jaynes_cummings(p)
        assert model.dim == 10
        assert model.n_jumps == 1
        assert v0.rank == 1
        assert excited_population(v0, 5) == pytest.approx(1.0)

    def test_excitation_number_conserved(self):
        """The resonant coupling commutes with the total excitation number."""
        p = JCParamsFactory(m=5, kappa=0.0)
        model, _ = build_jaynes_cummings(p)
        n_op = total_excitation_operator(5)
        h = model.hamiltonian
        np.testing.assert_allclose(h @ n_op - n_op @ h, 0, atol=1e-12)

    @pytest.mark.parametrize('method', ['if-dense', 'if-lr-exact'])
    def test_excitation_number_constant_along_trajectory(self, method):
        """Without cavity loss ``⟨N⟩`` stays put and ``P_e`` stays a probability."""
        p = JCParamsFactory(m=5, kappa=0.0)
        model, v0 = build_jaynes_cummings(p)
        n_op = total_excitation_operator(5)
        stepper = make_stepper(
            MethodSpec.parse(method),
            model,
            get_tableau('rk4'),
            0.05,
            policy=TruncationPolicy(epsilon=1e-13),
        )
        state = stepper.initial(v0)
        n0 = np.trace(n_op @ stepper.density(state)).real
        for _ in range(200):
            state = stepper.step(state)
            rho = stepper.density(state)
            assert np.trace(n_op @ rho).real == pytest.approx(n0, abs=1e-10)
            assert -1e-12 <= excited_population(rho, 5) <= 1 + 1e-12

    def test_initial_population_rate(self):
        """At ``t = 0`` the excited population starts flat."""
        p = JCParamsFactory(m=6)
        model, v0 = build_jaynes_cummings(p)
        drift = lindblad_rhs(model, v0.dense())
        assert excited_population(drift, 6) == pytest.approx(0.0, abs=1e-12)

    def test_revival_time(self):
        """``t_r = 2π|v|/λ``."""
        assert revival_time(2.0, 3.0) == pytest.approx(3 * math.pi)
        with pytest.raises(ValueError):
            revival_time(0.0, 1.0)


class TestStiffModel:
    def test_structure(self):
        """Two jumps with unit rates and a large-norm Hamiltonian."""
        model = build_stiff_decoherence()
        assert model.dim == 6
        assert model.n_jumps == 2
        assert all(j.rate == 1.0 for j in model.jumps)
        assert np.abs(model.hamiltonian).max() > 1e14

    def test_hamiltonian_shape_checked(self):
        """A substitute Hamiltonian must match ``n``."""
        with pytest.raises(DimensionError):
            build_stiff_decoherence(4, hamiltonian=np.eye(3))


class TestExcitedPopulation:
    def test_dense_and_factor_agree(self):
        """Both forms read the lower-right block."""
        p = JCParamsFactory(m=4)
        _, v0 = build_jaynes_cummings(p)
        assert excited_population(v0.dense(), 4) == pytest.approx(excited_population(v0, 4))

    def test_dimension_mismatch(self):
        """``N`` must equal ``2m``."""
        with pytest.raises(DimensionError):
            excited_population(np.eye(5) / 5, 2)
