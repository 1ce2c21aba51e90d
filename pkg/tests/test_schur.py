import numpy as np
import pytest
from hypothesis import given

from conftest import H, kmap, seeds
from kreinapprox.errors import InvalidFundamentalSymmetry, NotHermitian, NotWeaklyComplementable
from kreinapprox.instances import random_psd, random_signature, schur_instance
from kreinapprox.krein import KreinMap, Subspace, is_krein_selfadjoint, random_fundamental_symmetry
from kreinapprox.schur import (
    block_decompose,
    hilbert_shorted,
    is_complementable,
    is_weakly_complementable,
    krein_schur_complement,
)

E1 = Subspace(np.array([[1.0], [0.0]]), H(1, 1))


class TestBlocks:
    def test_identity(self, rng):
        S = Subspace.span(rng.standard_normal((4, 2)), H(1, 1, 1, 1))
        b = block_decompose(np.eye(4), S)
        np.testing.assert_allclose(b.a, np.eye(2), atol=1e-12)
        np.testing.assert_allclose(b.b, 0, atol=1e-12)
        np.testing.assert_allclose(b.c, np.eye(2), atol=1e-12)

    def test_standard_frame(self):
        b = block_decompose(np.array([[2.0, 1.0], [1.0, 1.0]]), E1)
        # frame columns are fixed up to a unimodular factor
        assert abs(b.a[0, 0]) == pytest.approx(2)
        assert abs(b.b[0, 0]) == pytest.approx(1)
        assert abs(b.c[0, 0]) == pytest.approx(1)

    @given(seeds)
    def test_reassembly(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 7))
        X = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        M = X + X.conj().T
        k = int(rng.integers(0, n + 1))
        S = Subspace.span(rng.standard_normal((n, k)), H(*[1] * n)) if k else Subspace.zero(H(*[1] * n))
        assert np.linalg.norm(block_decompose(M, S).reassemble() - M) <= 1e-12 * max(1, np.linalg.norm(M))

    def test_not_hermitian(self):
        with pytest.raises(NotHermitian):
            block_decompose(np.array([[0, 1], [0, 0]]), E1)


class TestComplementability:
    def test_positive_is_weakly_complementable(self, rng):
        S = H(1, -1, 1)
        W = KreinMap(S.J @ random_psd(rng, 3, 2), S, S)
        sub = Subspace.span(rng.standard_normal((3, 2)), S)
        assert is_weakly_complementable(W, sub)

    def test_examples(self):
        S = H(1, 1)
        swap = kmap([[0, 1], [1, 0]], S)
        assert not is_weakly_complementable(swap, E1)
        assert not is_complementable(swap, E1)
        assert is_weakly_complementable(kmap([[2, 1], [1, 1]], S), E1)
        assert is_complementable(kmap([[2, 1], [1, 1]], S), E1)
        assert is_complementable(KreinMap.zero(S, S), E1)

    @given(seeds)
    def test_weak_and_full_agree(self, seed):
        rng = np.random.default_rng(seed)
        kind = ("complementable", "psd", "leaky")[seed % 3]
        W, S = schur_instance(rng, kind)
        assert is_weakly_complementable(W, S) == is_complementable(W, S)
        if kind == "leaky":
            assert not is_complementable(W, S)


class TestShorted:
    def test_rank_one(self):
        np.testing.assert_allclose(hilbert_shorted(np.ones((2, 2)), E1), 0, atol=1e-12)

    def test_two_by_two(self):
        np.testing.assert_allclose(hilbert_shorted(np.array([[2.0, 1.0], [1.0, 1.0]]), E1),
                                   np.diag([0, 0.5]), atol=1e-12)

    def test_zero_subspace(self, rng):
        M = random_psd(rng, 3)
        np.testing.assert_allclose(hilbert_shorted(M, Subspace.zero(H(1, 1, 1))), M, atol=1e-12)

    def test_not_weakly_complementable(self):
        with pytest.raises(NotWeaklyComplementable):
            hilbert_shorted(np.array([[0.0, 1.0], [1.0, 0.0]]), E1)

    def test_maximality(self, rng):
        M = np.array([[2.0, 1.0], [1.0, 1.0]])
        top = hilbert_shorted(M, E1)
        for _ in range(100):
            # admissible Z: supported on span{e2} with 0 <= Z <= M
            z = rng.uniform(0, 1) * 0.5
            Z = np.diag([0.0, z])
            assert np.linalg.eigvalsh(M - Z)[0] >= -1e-12
            assert np.linalg.eigvalsh(top - Z)[0] >= -1e-8

    @given(seeds)
    def test_maximality_random(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 6))
        k = int(rng.integers(1, n))
        M = random_psd(rng, n)
        S = Subspace.span(rng.standard_normal((n, k)), H(*[1] * n))
        top = hilbert_shorted(M, S)
        Q2 = block_decompose(M, S).frame[:, k:]
        lam, U = np.linalg.eigh(Q2.conj().T @ top @ Q2)
        root = Q2 @ U @ np.diag(np.sqrt(np.clip(lam, 0, None)))
        for _ in range(20):
            # root U D U* root* with a contraction D is admissible and below top
            V = np.linalg.qr(rng.standard_normal((n - k, n - k)))[0]
            K = root @ V @ np.diag(rng.uniform(0, 1, n - k))
            Z = K @ K.conj().T
            assert np.linalg.eigvalsh(M - Z)[0] >= -1e-8
            assert np.linalg.norm(S.basis.conj().T @ Z) <= 1e-8
            assert np.linalg.eigvalsh(top - Z)[0] >= -1e-8
            assert np.linalg.eigvalsh(top - rng.uniform(0, 1) * top)[0] >= -1e-8


class TestKreinSchur:
    def test_hilbert_case(self):
        S = H(1, 1)
        M = np.array([[2.0, 1.0], [1.0, 1.0]])
        Z = krein_schur_complement(kmap(M, S), E1)
        np.testing.assert_allclose(Z.matrix, hilbert_shorted(M, E1), atol=1e-12)

    def test_indefinite_example(self):
        S = H(1, -1)
        W = kmap([[2, 1], [-1, -1]], S)
        sub = Subspace(np.array([[1.0], [0.0]]), S)
        Z = krein_schur_complement(W, sub)
        np.testing.assert_allclose(Z.matrix, np.diag([0, -0.5]), atol=1e-12)
        Z2 = krein_schur_complement(W, sub, random_fundamental_symmetry(S, seed=1))
        np.testing.assert_allclose(Z2.matrix, Z.matrix, atol=1e-10)

    def test_zero(self):
        S = H(1, -1)
        np.testing.assert_allclose(
            krein_schur_complement(KreinMap.zero(S, S), Subspace(np.array([[1.0], [0.0]]), S)).matrix, 0)

    def test_bad_fundamental_symmetry(self):
        S = H(1, -1)
        with pytest.raises(InvalidFundamentalSymmetry):
            krein_schur_complement(KreinMap.identity(S), Subspace(np.array([[1.0], [0.0]]), S), np.eye(2))

    @given(seeds)
    def test_properties(self, seed):
        rng = np.random.default_rng(seed)
        W, S = schur_instance(rng, ("complementable", "psd")[seed % 2])
        Z = krein_schur_complement(W, S)
        H_ = W.domain
        scale = max(1.0, np.linalg.norm(W.matrix, 2))
        assert is_krein_selfadjoint(Z)
        # range in the orthogonal companion of S
        assert np.linalg.norm(S.basis.conj().T @ H_.J @ Z.matrix) <= 1e-10 * scale
        # idempotence
        np.testing.assert_allclose(krein_schur_complement(Z, S).matrix, Z.matrix, atol=1e-8 * scale)
        for i in range(5):
            Zi = krein_schur_complement(W, S, random_fundamental_symmetry(H_, seed=seed + i))
            assert np.max(np.abs(Zi.matrix - Z.matrix)) <= 1e-8 * max(1.0, np.max(np.abs(Z.matrix)))
