import numpy as np
import pytest

from kreinapprox.instances import factor_gram, random_signature, schur_instance
from kreinapprox.krein import is_fundamental_symmetry, random_fundamental_symmetry, validate_signature


def test_random_signature_is_valid(rng):
    for _ in range(20):
        S = random_signature(rng, int(rng.integers(1, 7)))
        validate_signature(S.J)


@pytest.mark.parametrize("n", [1, 3, 5])
def test_factor_gram_reproduces_gram(rng, n):
    D = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    D = D + D.conj().T
    T, E = factor_gram(rng, D)
    np.testing.assert_allclose(T.conj().T @ E.J @ T, D, atol=1e-10)


def test_fundamental_symmetries_are_seeded(rng):
    S = random_signature(rng, 4, p=2)
    a = random_fundamental_symmetry(S, seed=3)
    assert np.array_equal(a, random_fundamental_symmetry(S, seed=3))
    assert is_fundamental_symmetry(a, S)


@pytest.mark.parametrize("kind", ["complementable", "psd", "leaky"])
def test_schur_instances_have_matching_shapes(rng, kind):
    W, S = schur_instance(rng, kind)
    assert S.basis.shape[0] == W.domain.dim
