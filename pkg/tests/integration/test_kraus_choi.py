"""Kraus form and Choi positivity of the un-normalized IF step on random models."""

import numpy as np
import pytest

from lindblad_cptp.exceptions import TableauError
from lindblad_cptp.models import RK4, ButcherTableau, TruncationPolicy
from lindblad_cptp.models.tableau import EULER, HEUN, RK4_38, SSPRK3
from lindblad_cptp.services.diagnostics import choi_matrix
from lindblad_cptp.services.flow import FlowOperator
from lindblad_cptp.services.generator import exact_step
from lindblad_cptp.services.integrators import (
    apply_kraus,
    extract_kraus,
    if_step_dense,
    if_step_lowrank,
    kraus_count,
    rk_step_dense,
)
from lindblad_cptp.services.simulation import Integrator
from lindblad_cptp.services.verification import choi_probe, linear_step, random_density

from ..factories import LindbladModelFactory, LowRankFactorFactory

pytestmark = [pytest.mark.integration]

CP_TABLEAUS = [EULER, HEUN, SSPRK3, RK4]
MODELS = [(n, jumps) for n in (2, 3, 4, 6) for jumps in (1, 2)]


@pytest.mark.parametrize('tab', CP_TABLEAUS, ids=lambda t: t.name)
@pytest.mark.parametrize(('dim', 'n_jumps'), MODELS)
def test_kraus_reproduces_step(tab, dim, n_jumps):
    """Kraus count follows the recursion and the map matches the IF step to 1e-12."""
    model = LindbladModelFactory(dim=dim, n_jumps=n_jumps, seed=10 * dim + n_jumps)
    flow = FlowOperator.for_model(model)
    dt = 0.05
    kraus = extract_kraus(model, flow, tab, dt)
    assert len(kraus) == kraus_count(tab, n_jumps)

    rng = np.random.default_rng(dim)
    for _ in range(5):
        rho = random_density(dim, rng)
        expected = if_step_dense(model, flow, tab, dt, rho, renormalize=False)
        defect = np.linalg.norm(apply_kraus(kraus, rho) - expected)
        assert defect <= 1e-12 * max(1.0, np.linalg.norm(expected))


@pytest.mark.parametrize('tab', CP_TABLEAUS, ids=lambda t: t.name)
@pytest.mark.parametrize('dt', [0.01, 0.5, 3.0])
def test_choi_is_psd_at_any_step(tab, dt):
    """CP holds without a step size restriction."""
    model = LindbladModelFactory(dim=4, n_jumps=2, seed=99)
    probe = choi_probe(linear_step(Integrator.IF_DENSE, model, tab, dt), 4, workers=2)
    assert probe.min_eig >= -1e-10 * probe.norm


def test_negative_coefficients_rejected():
    """Negative ``a_ij`` or ``b_i`` never reach the Kraus or factor paths."""
    negative_b = ButcherTableau.from_lower(
        'negative-b', [[], [1]], ['3/2', '-1/2'], [0, 1], order=1
    )
    model = LindbladModelFactory(dim=3, n_jumps=1, seed=4)
    flow = FlowOperator.for_model(model)
    v0 = LowRankFactorFactory(dim=3, rank=1)
    for tab in (RK4_38, negative_b):
        with pytest.raises(TableauError):
            extract_kraus(model, flow, tab, 0.1)
        with pytest.raises(TableauError):
            if_step_lowrank(model, flow, tab, 0.1, TruncationPolicy.exact(), v0)


@pytest.mark.parametrize('alpha', [0.5, 2.0, -1.5])
def test_choi_matrix_is_linear_in_the_map(alpha):
    """Scaling the one-step map by ``α`` scales its Choi matrix by ``α``."""
    model = LindbladModelFactory(dim=3, n_jumps=2, seed=21)
    step = linear_step(Integrator.IF_DENSE, model, RK4, 0.2)
    c = choi_matrix(step, 3)
    c_scaled = choi_matrix(lambda rho: alpha * step(rho), 3)
    np.testing.assert_allclose(c_scaled, alpha * c, atol=1e-13)


@pytest.mark.parametrize(
    ('tab', 'order'), [(EULER, 1), (HEUN, 2), (SSPRK3, 3), (RK4, 4)], ids=lambda x: str(x)
)
def test_rk_local_error_order(tab, order):
    """The plain RK step is ``O(Δt^(p+1))`` away from ``e^{Δt 𝕃} ρ``."""
    model = LindbladModelFactory(dim=3, n_jumps=2, seed=22)
    rho = random_density(3, np.random.default_rng(22))
    dts = 0.02 / 2.0 ** np.arange(4)
    errors = [
        np.linalg.norm(
            rk_step_dense(model, tab, dt, rho, renormalize=False) - exact_step(model, dt, rho)
        )
        for dt in dts
    ]
    slope = np.polyfit(np.log(dts), np.log(errors), 1)[0]
    assert slope == pytest.approx(order + 1, abs=0.3)
