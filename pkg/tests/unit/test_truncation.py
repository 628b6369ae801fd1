import numpy as np
import pytest

from lindblad_cptp.exceptions import PositivityError
from lindblad_cptp.linalg import dagger
from lindblad_cptp.models import EpsilonRule, EpsilonRuleKind, TruncationPolicy
from lindblad_cptp.services.truncation import (
    kept_rank,
    kraus_witness,
    resolve_policy,
    truncate,
    truncate_with_info,
)

from ..factories import random_matrix

pytestmark = [pytest.mark.unit]

ENERGIES = np.array([4.0, 1.0, 0.25])


class TestKeptRank:
    def test_zero_epsilon_keeps_everything(self):
        """With ``ε = 0`` no tail is strictly below ``ε²``."""
        assert kept_rank(ENERGIES, TruncationPolicy()) == (3, 3, 0.0)

    def test_tie_keeps_the_vector(self):
        """A tail exactly equal to ``ε²`` is not dropped."""
        r, r_eps, _ = kept_rank(ENERGIES, TruncationPolicy(epsilon=0.5))
        assert (r, r_eps) == (3, 3)

    def test_cutoff(self):
        """The smallest rank whose tail is below ``ε²``."""
        assert kept_rank(ENERGIES, TruncationPolicy(epsilon=0.6)) == (2, 2, 0.25)

    def test_rmax_binds(self):
        """The rank cap wins over the tolerance and the dropped tail grows."""
        assert kept_rank(ENERGIES, TruncationPolicy(epsilon=0.6, rmax=1)) == (1, 2, 1.25)


class TestTruncate:
    def test_exact_policy_is_lossless(self):
        """``ε = 0`` reproduces ``W W†`` with at most ``N`` columns."""
        w = random_matrix(4, 7, seed=1)
        w_hat = truncate(w, TruncationPolicy.exact())
        assert w_hat.rank == 4
        np.testing.assert_allclose(w_hat.dense(), w @ dagger(w), atol=1e-11)

    def test_discarded_energy_and_info(self):
        """The dropped energy is below ``ε²`` and matches the lost trace."""
        w = random_matrix(6, 4, seed=2) @ np.diag([3.0, 1.0, 1e-3, 1e-4])
        policy = TruncationPolicy(epsilon=1e-2)
        w_hat, info = truncate_with_info(w, policy)
        assert info.rank == 2
        assert not info.rmax_bound
        assert info.discarded_energy < policy.epsilon**2
        lost = np.linalg.norm(w) ** 2 - w_hat.trace()
        assert lost == pytest.approx(info.discarded_energy, rel=1e-6, abs=1e-14)

    def test_output_is_dominated_by_input(self):
        """``W W† - Ŵ Ŵ†`` is PSD, so truncation never adds trace."""
        w = random_matrix(5, 5, seed=3)
        w_hat = truncate(w, TruncationPolicy(rmax=2))
        gap = np.linalg.eigvalsh(w @ dagger(w) - w_hat.dense())
        assert gap.min() > -1e-10

    def test_zero_factor_is_degenerate(self):
        """All-zero input gives a rank-1 zero factor."""
        w_hat, info = truncate_with_info(np.zeros((3, 2)), TruncationPolicy())
        assert info.degenerate
        assert w_hat.rank == 1
        assert w_hat.trace() == 0.0


class TestKrausWitness:
    def test_projector_reproduces_truncation(self):
        """``T = P A P†`` with ``P`` an orthogonal projector."""
        w = random_matrix(5, 3, seed=4)
        a = w @ dagger(w)
        p, t = kraus_witness(a, TruncationPolicy(rmax=2))
        np.testing.assert_allclose(p @ p, p, atol=1e-12)
        np.testing.assert_allclose(p @ a @ dagger(p), t, atol=1e-11)
        assert np.linalg.matrix_rank(t, tol=1e-9) == 2

    def test_non_psd_rejected(self):
        """A clearly indefinite matrix has no Kraus witness."""
        with pytest.raises(PositivityError):
            kraus_witness(np.diag([1.0, -0.5]), TruncationPolicy())


class TestResolvePolicy:
    def test_fixed(self):
        """Fixed rules leave the policy alone."""
        policy = TruncationPolicy(epsilon=1e-7)
        assert resolve_policy(policy, EpsilonRule(), 0.1) is policy

    def test_dt_power(self):
        """``ε = Δt^q``, other fields kept."""
        policy = TruncationPolicy(epsilon=1.0, rmax=5)
        resolved = resolve_policy(policy, EpsilonRule(EpsilonRuleKind.DT_POW, 3), 0.1)
        assert resolved.epsilon == pytest.approx(1e-3)
        assert resolved.rmax == 5
