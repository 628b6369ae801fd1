from fractions import Fraction

import numpy as np
import pytest

from lindblad_cptp.exceptions import DimensionError, HermiticityError, TableauError
from lindblad_cptp.models import (
    BUILTIN_TABLEAUS,
    RK4,
    ButcherTableau,
    EpsilonRule,
    EpsilonRuleKind,
    JumpOperator,
    LindbladModel,
    LowRankFactor,
    PreTruncation,
    TruncationPolicy,
    get_tableau,
)
from lindblad_cptp.models.tableau import to_fraction

from ..factories import LindbladModelFactory, LowRankFactorFactory

pytestmark = [pytest.mark.unit]


class TestLindbladModel:
    def test_tuples_become_jump_operators(self):
        """``(rate, L)`` pairs are accepted and normalized."""
        model = LindbladModel(np.eye(2), ((0.5, np.ones((2, 2))),))
        assert isinstance(model.jumps[0], JumpOperator)
        assert model.jumps[0].rate == 0.5
        assert model.n_jumps == 1
        assert model.dim == 2

    def test_non_hermitian_hamiltonian(self):
        """``H`` must be Hermitian."""
        with pytest.raises(HermiticityError):
            LindbladModel(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_jump_shape_mismatch(self):
        """Jump operators must match the Hamiltonian."""
        with pytest.raises(DimensionError):
            LindbladModel(np.eye(2), ((1.0, np.eye(3)),))

    def test_negative_rate(self):
        """Rates are non-negative."""
        with pytest.raises(ValueError):
            JumpOperator(-1.0, np.eye(2))

    def test_arrays_are_read_only(self):
        """The model owns frozen copies of its matrices."""
        h = np.eye(2, dtype=np.complex128)
        model = LindbladModel(h)
        h[0, 0] = 5.0
        assert model.hamiltonian[0, 0] == 1.0
        assert not model.hamiltonian.flags.writeable

    def test_with_rates(self):
        """Scaling rates keeps operators and order."""
        model = LindbladModelFactory(dim=3, n_jumps=2)
        scaled = model.with_rates(2.0)
        assert [j.rate for j in scaled.jumps] == [2 * j.rate for j in model.jumps]

    def test_check_operand(self):
        """Operands with the wrong row count are rejected."""
        model = LindbladModelFactory(dim=3)
        with pytest.raises(DimensionError):
            model.check_operand(np.ones((2, 2)))


class TestLowRankFactor:
    def test_trace_and_dense(self):
        """``Tr(V V†) = ‖V‖_F²`` and ``dense`` forms ``V V†``."""
        v = LowRankFactorFactory(dim=4, rank=2)
        assert v.trace() == pytest.approx(1.0)
        assert np.trace(v.dense()).real == pytest.approx(1.0)
        assert v.dim == 4
        assert v.rank == 2

    def test_rank_above_dimension(self):
        """More columns than rows is not a factor."""
        with pytest.raises(DimensionError):
            LowRankFactor(np.ones((2, 3)))

    def test_from_vector(self):
        """Pure states give rank one."""
        v = LowRankFactor.from_vector([1.0, 0.0, 0.0])
        assert v.v.shape == (3, 1)


class TestTableau:
    def test_rk4(self):
        """Classic RK4 has four stages and a chain of used pairs."""
        assert RK4.stages == 4
        assert RK4.used_pairs() == [(1, 0), (2, 1), (3, 2)]
        assert RK4.b == (Fraction(1, 6), Fraction(1, 3), Fraction(1, 3), Fraction(1, 6))

    def test_from_lower_pads_rows(self):
        """Lower rows are padded with zeros up to the stage count."""
        tab = ButcherTableau.from_lower('mid', [[], ['1/2']], [0, 1], [0, '1/2'], order=2)
        assert tab.a == ((0, 0), (Fraction(1, 2), 0))
        np.testing.assert_allclose(tab.c_array(), [0.0, 0.5])

    def test_implicit_rejected(self):
        """Entries on the diagonal make a tableau implicit."""
        with pytest.raises(TableauError):
            ButcherTableau('implicit', ((1,),), (1,), (1,), 1)

    def test_to_fraction(self):
        """Floats go through their repr; strings may be fractions."""
        assert to_fraction(0.1) == Fraction(1, 10)
        assert to_fraction('2/3') == Fraction(2, 3)
        with pytest.raises(TableauError):
            to_fraction('one half')

    def test_registry(self):
        """Built-ins are looked up case-insensitively; unknown names fail."""
        assert set(BUILTIN_TABLEAUS) == {'euler', 'heun', 'ssprk3', 'rk4', 'rk4-38'}
        assert get_tableau(' RK4 ') is RK4
        with pytest.raises(TableauError):
            get_tableau('dopri5')


class TestTruncationPolicy:
    def test_validation(self):
        """Negative epsilon and zero rank caps are rejected."""
        with pytest.raises(ValueError):
            TruncationPolicy(epsilon=-1.0)
        with pytest.raises(ValueError):
            TruncationPolicy(rmax=0)

    def test_pre_truncation_default_is_dt_power(self):
        """Without an explicit value the pre-truncation tolerance is ``Δt^k``."""
        assert PreTruncation(enabled=True).resolve(0.1, 4) == pytest.approx(1e-4)
        assert PreTruncation(enabled=True, epsilon=1e-6).resolve(0.1, 4) == 1e-6

    def test_epsilon_rule_parse(self):
        """``fixed`` and ``dt_pow:<q>`` parse, anything else fails."""
        assert EpsilonRule.parse('fixed') == EpsilonRule()
        rule = EpsilonRule.parse('dt_pow:5')
        assert rule.kind == EpsilonRuleKind.DT_POW
        assert rule.power == 5.0
        assert str(rule) == 'dt_pow:5'
        for bad in ('dt_pow', 'dt_pow:x', 'dt_pow:0', 'adaptive'):
            with pytest.raises(ValueError):
                EpsilonRule.parse(bad)
