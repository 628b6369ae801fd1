import math

import numpy as np
import pytest

from lindblad_cptp.linalg import dagger
from lindblad_cptp.models import LindbladModel
from lindblad_cptp.services.generator import (
    dissipator_columns,
    effective_generator,
    exact_step,
    lindblad_rhs,
    split_rhs,
    vectorized_generator,
)

from ..factories import LowRankFactorFactory

pytestmark = [pytest.mark.unit]


class TestGenerator:
    def test_split_form_matches_standard_form(self, random_model):
        """``J ρ + ρ J† + Σ γ L ρ L†`` is the same generator."""
        rho = LowRankFactorFactory(dim=4, rank=3, seed=2).dense()
        np.testing.assert_allclose(
            split_rhs(random_model, rho), lindblad_rhs(random_model, rho), atol=1e-12
        )

    def test_trace_free(self, random_model):
        """The generator is traceless in ``ρ``."""
        rho = LowRankFactorFactory(dim=4, rank=2, seed=3).dense()
        assert abs(np.trace(lindblad_rhs(random_model, rho))) < 1e-12

    def test_effective_generator_dissipative_part(self, random_model):
        """``J + J† = -Σ γ L†L``."""
        j = effective_generator(random_model).matrix
        expected = -sum(x.rate * dagger(x.operator) @ x.operator for x in random_model.jumps)
        np.testing.assert_allclose(j + dagger(j), expected, atol=1e-12)

    def test_vectorized_generator(self, random_model):
        """``𝕃 vec(ρ) = vec(𝓛ρ)`` with row-major ``vec``."""
        rho = LowRankFactorFactory(dim=4, rank=4, seed=5).dense()
        lv = vectorized_generator(random_model)
        np.testing.assert_allclose(
            lv @ rho.ravel(), lindblad_rhs(random_model, rho).ravel(), atol=1e-12
        )

    def test_exact_step_amplitude_damping(self, decay_model):
        """Excited population decays as ``e^{-t}``."""
        rho = exact_step(decay_model, 0.8, np.diag([0.0, 1.0]))
        assert rho[1, 1].real == pytest.approx(math.exp(-0.8), rel=1e-12)
        assert np.trace(rho).real == pytest.approx(1.0, abs=1e-13)


class TestDissipatorColumns:
    def test_outer_product(self, random_model):
        """``D D† = scale Σ γ L V V† L†``."""
        v = LowRankFactorFactory(dim=4, rank=2, seed=9)
        d = dissipator_columns(random_model, v, 0.3)
        assert d.shape == (4, 2 * random_model.n_jumps)
        expected = 0.3 * sum(
            x.rate * x.operator @ v.dense() @ dagger(x.operator) for x in random_model.jumps
        )
        np.testing.assert_allclose(d @ dagger(d), expected, atol=1e-12)

    def test_no_jumps(self):
        """Without jumps the block is N x 0."""
        model = LindbladModel(np.eye(3))
        assert dissipator_columns(model, np.eye(3)[:, :1], 1.0).shape == (3, 0)

    def test_negative_scale(self, random_model):
        """A negative scale has no real square root."""
        with pytest.raises(ValueError):
            dissipator_columns(random_model, np.eye(4)[:, :1], -1.0)
