from .lindblad import EffectiveGenerator, JumpOperator, LindbladModel
from .state import DensityMatrix, LowRankFactor
from .tableau import (
    BUILTIN_TABLEAUS,
    RK4,
    ButcherTableau,
    CPValidity,
    TableauViolation,
    ViolationKind,
    get_tableau,
)
from .truncation import (
    EpsilonRule,
    EpsilonRuleKind,
    PreTruncation,
    TruncationInfo,
    TruncationPolicy,
)

__all__ = [
    'BUILTIN_TABLEAUS',
    'RK4',
    'ButcherTableau',
    'CPValidity',
    'DensityMatrix',
    'EffectiveGenerator',
    'EpsilonRule',
    'EpsilonRuleKind',
    'JumpOperator',
    'LindbladModel',
    'LowRankFactor',
    'PreTruncation',
    'TableauViolation',
    'TruncationInfo',
    'TruncationPolicy',
    'ViolationKind',
    'get_tableau',
]
