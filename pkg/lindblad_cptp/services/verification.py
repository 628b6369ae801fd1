"""Structural checks of the un-normalized one-step map: Kraus reconstruction and Choi probing."""

import logging
from dataclasses import dataclass

import numpy as np

from ..linalg import ComplexMatrix, RealVector, dagger, frobenius
from ..models import ButcherTableau, LindbladModel
from .diagnostics import OneStepMap, choi_hermitian_defect, choi_matrix, choi_spectrum
from .flow import FlowMethod, FlowOperator
from .integrators import (
    apply_kraus,
    extract_kraus,
    if_step_dense,
    kraus_completeness_defect,
    kraus_count,
    rk_step_dense,
)
from .simulation import Integrator

logger = logging.getLogger(__name__)

KRAUS_TOL = 1e-12
CHOI_REL_TOL = 1e-10


def random_density(n: int, rng: np.random.Generator, rank: int | None = None) -> ComplexMatrix:
    """``G G† / Tr(G G†)`` for a complex Gaussian ``n x rank`` matrix ``G``."""
    g = rng.standard_normal((n, rank or n)) + 1j * rng.standard_normal((n, rank or n))
    rho = g @ dagger(g)
    return rho / np.trace(rho).real


def linear_step(
    integrator: Integrator,
    model: LindbladModel,
    tableau: ButcherTableau,
    dt: float,
    *,
    flow: FlowOperator | None = None,
    force: bool = False,
) -> OneStepMap:
    """
    The one-step map without renormalization, which is linear.

    Low-rank runs share the dense IF map: truncation is the only difference and it is not
    linear.
    """
    if integrator == Integrator.RK:
        return lambda rho: rk_step_dense(model, tableau, dt, rho, renormalize=False)
    if integrator == Integrator.IF_LOWRANK:
        logger.info('Probing the dense IF map; truncation is left out')
    flow = flow or FlowOperator.for_model(model, FlowMethod.exact())
    return lambda rho: if_step_dense(
        model, flow, tableau, dt, rho, renormalize=False, force=force
    )


@dataclass(frozen=True, slots=True)
class ChoiProbe:
    spectrum: RealVector
    norm: float
    herm_defect: float

    @property
    def min_eig(self) -> float:
        return float(self.spectrum[0])

    @property
    def relative_min_eig(self) -> float:
        return self.min_eig / self.norm if self.norm else 0.0

    @property
    def is_cp(self) -> bool:
        return self.min_eig >= -CHOI_REL_TOL * self.norm


def choi_probe(step: OneStepMap, n: int, *, workers: int = 1) -> ChoiProbe:
    c = choi_matrix(step, n, workers=workers)
    return ChoiProbe(choi_spectrum(c), frobenius(c), choi_hermitian_defect(c))


@dataclass(frozen=True, slots=True)
class KrausVerification:
    count: int
    expected_count: int
    reconstruction_defect: float
    """Largest ``‖Σ K ρ K† - step(ρ)‖_F / max(1, ‖step(ρ)‖_F)`` over the sampled states."""

    completeness_defect: float
    choi: ChoiProbe

    @property
    def passed(self) -> bool:
        return (
            self.count == self.expected_count
            and self.reconstruction_defect <= KRAUS_TOL
            and self.choi.is_cp
        )


def verify_kraus(
    model: LindbladModel,
    flow: FlowOperator,
    tableau: ButcherTableau,
    dt: float,
    *,
    samples: int = 20,
    seed: int = 0,
    workers: int = 1,
) -> KrausVerification:
    """Compare the extracted Kraus map with the IF step on ``samples`` random states."""
    kraus = extract_kraus(model, flow, tableau, dt)
    step = linear_step(Integrator.IF_DENSE, model, tableau, dt, flow=flow)
    rng = np.random.default_rng(seed)

    defect = 0.0
    for _ in range(samples):
        rho = random_density(model.dim, rng)
        expected = step(rho)
        scale = max(1.0, frobenius(expected))
        defect = max(defect, frobenius(apply_kraus(kraus, rho) - expected) / scale)

    logger.info('Extracted %d Kraus operators, reconstruction defect %.3e', len(kraus), defect)
    return KrausVerification(
        count=len(kraus),
        expected_count=kraus_count(tableau, model.n_jumps),
        reconstruction_defect=defect,
        completeness_defect=kraus_completeness_defect(kraus),
        choi=choi_probe(step, model.dim, workers=workers),
    )
