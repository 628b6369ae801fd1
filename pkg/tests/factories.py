import factory
import numpy as np

from lindblad_cptp.models import JumpOperator, LindbladModel, LowRankFactor
from lindblad_cptp.services.scenarios import JCParams


def random_matrix(n: int, k: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))


def random_unitary(n: int, seed: int) -> np.ndarray:
    q, _ = np.linalg.qr(random_matrix(n, n, seed))
    return q


def random_hermitian(n: int, seed: int) -> np.ndarray:
    g = random_matrix(n, n, seed)
    return 0.5 * (g + g.conj().T)


def random_jumps(n: int, count: int, seed: int) -> tuple[JumpOperator, ...]:
    rng = np.random.default_rng(seed + 1000)
    return tuple(
        JumpOperator(float(rng.uniform(0.2, 1.5)), 0.5 * random_matrix(n, n, seed + 2000 + k))
        for k in range(count)
    )


class LindbladModelFactory(factory.Factory):
    class Meta:
        model = LindbladModel

    class Params:
        dim = 3
        n_jumps = 1
        seed = 0

    hamiltonian = factory.LazyAttribute(lambda o: random_hermitian(o.dim, o.seed))
    jumps = factory.LazyAttribute(lambda o: random_jumps(o.dim, o.n_jumps, o.seed))


class LowRankFactorFactory(factory.Factory):
    """Normalized random factor, ``Tr(V V†) = 1``."""

    class Meta:
        model = LowRankFactor

    class Params:
        dim = 4
        rank = 2
        seed = 0

    v = factory.LazyAttribute(
        lambda o: (m := random_matrix(o.dim, o.rank, o.seed)) / np.linalg.norm(m)
    )


class JCParamsFactory(factory.Factory):
    class Meta:
        model = JCParams

    m = 6
    lam = 1.0
    kappa = 1e-2
