"""Randomized checks that truncation is a single-operator Kraus map on PSD inputs."""

import numpy as np
import pytest

from lindblad_cptp.linalg import dagger
from lindblad_cptp.models import TruncationPolicy
from lindblad_cptp.services.truncation import kraus_witness, truncate, truncate_with_info

pytestmark = [pytest.mark.integration]

CASES = 500


def random_case(rng: np.random.Generator):
    n = int(rng.integers(2, 13))
    k = int(rng.integers(1, n + 4))
    w = rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))
    w /= np.linalg.norm(w)
    epsilon = float(10 ** rng.uniform(-8, 0))
    rmax = None if rng.random() < 0.5 else int(rng.integers(1, n + 1))
    return w, TruncationPolicy(epsilon=epsilon, rmax=rmax)


def random_unitary(k: int, rng: np.random.Generator) -> np.ndarray:
    q, _ = np.linalg.qr(rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k)))
    return q


def test_random_truncations():
    """PSD output, bounded discard, non-increasing trace and a valid projector witness."""
    rng = np.random.default_rng(20240501)
    for case in range(CASES):
        w, policy = random_case(rng)
        a = w @ dagger(w)

        w_hat, info = truncate_with_info(w, policy)
        t_fact = w_hat.dense()
        assert np.linalg.eigvalsh(t_fact).min() >= -1e-14, case
        assert np.trace(t_fact).real <= np.trace(a).real + 1e-14, case
        if not info.rmax_bound:
            assert info.discarded_energy <= policy.epsilon**2, case
        assert np.trace(t_fact).real + info.discarded_energy == pytest.approx(1.0, abs=1e-12)

        p, t = kraus_witness(a, policy)
        assert np.linalg.norm(p @ p - p) + np.linalg.norm(p - dagger(p)) <= 1e-11, case
        assert np.linalg.eigvalsh(0.5 * (t + dagger(t))).min() >= -1e-12, case
        assert np.trace(t).real <= np.trace(a).real + 1e-12, case


def test_factor_truncation_is_the_projector_map():
    """``Ŵ Ŵ†`` from the factor path equals ``P A P†`` from the dense eigendecomposition."""
    rng = np.random.default_rng(20240502)
    for case in range(CASES):
        w, policy = random_case(rng)
        a = w @ dagger(w)
        p, _ = kraus_witness(a, policy)
        np.testing.assert_allclose(
            truncate(w, policy).dense(), p @ a @ dagger(p), atol=1e-10, err_msg=str(case)
        )


def test_truncation_ignores_column_mixing():
    """``W Z`` and ``W`` describe the same ``ρ`` for unitary ``Z`` and truncate alike."""
    rng = np.random.default_rng(20240503)
    for case in range(CASES):
        w, policy = random_case(rng)
        z = random_unitary(w.shape[1], rng)
        np.testing.assert_allclose(
            truncate(w @ z, policy).dense(),
            truncate(w, policy).dense(),
            atol=1e-10,
            err_msg=str(case),
        )
