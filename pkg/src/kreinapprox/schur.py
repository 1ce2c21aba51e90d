"""Complementability and Schur complements (shorted operators).

The Hilbert-space shorted operator of a Hermitian ``M`` to a subspace ``S``
is computed from the block decomposition against ``S (+) S^perp``::

    M = [[a, b], [b*, c]]   ->   M_/S = [[0, 0], [0, c - b* a^+ b]]

In finite dimensions ``ran |a|^{1/2} = ran a`` so weak complementability is
the inclusion ``ran b <= ran a`` and no matrix square roots are needed.
The Krein version is ``W_/[S] = Jfs (Jfs W)_/S`` with the shorting done in
the Hilbert geometry of ``Jfs``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import (
    InvalidFundamentalSymmetry,
    NotHermitian,
    NotSelfadjoint,
    NotWeaklyComplementable,
)
from .krein import (
    DEFAULT_TOL,
    KreinMap,
    Subspace,
    as_matrix,
    douglas_residual,
    gram,
    hermitian_part,
    is_fundamental_symmetry,
    is_krein_selfadjoint,
    null_basis,
    opnorm,
    pinv,
    spans_whole_space,
)


@dataclass(frozen=True, eq=False)
class BlockDecomposition:
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    frame: np.ndarray

    @property
    def k(self):
        return self.a.shape[0]

    def reassemble(self):
        inner = np.block([[self.a, self.b], [self.b.conj().T, self.c]])
        return self.frame @ inner @ self.frame.conj().T


def adapted_frame(S_basis):
    """Unitary matrix whose first ``k`` columns span ``ran S_basis``."""
    n, k = S_basis.shape
    if k == 0:
        return np.eye(n, dtype=complex)
    Q, _ = sla.qr(S_basis, mode="full")
    return Q


def _split(H, k):
    return H[:k, :k], H[:k, k:], H[k:, k:]


def block_decompose(M, S: Subspace, tol=DEFAULT_TOL) -> BlockDecomposition:
    """Blocks of the Hermitian ``M`` in an orthonormal frame adapted to ``S``."""
    M = as_matrix(M)
    if opnorm(M - M.conj().T) > max(tol.residual_tol, 1e-12) * max(1.0, opnorm(M)):
        raise NotHermitian("block decomposition needs a Hermitian matrix")
    Q = adapted_frame(S.basis)
    a, b, c = _split(hermitian_part(Q.conj().T @ M @ Q), S.dim)
    return BlockDecomposition(a, b, c, Q)


def _weak_residual(a, b, tol, scale):
    if b.size == 0:
        return 0.0
    rel, _ = douglas_residual(a, b, tol, scale=scale, b_scale=scale)
    return rel


def _require_selfadjoint(W, tol):
    if not is_krein_selfadjoint(W, tol):
        raise NotSelfadjoint("W must be Krein-selfadjoint")


def is_weakly_complementable(W: KreinMap, S: Subspace, tol=DEFAULT_TOL):
    """``ran b <= ran a`` for the decomposition of ``J W`` against ``S``."""
    _require_selfadjoint(W, tol)
    M = gram(W)
    blocks = block_decompose(M, S, tol)
    return _weak_residual(blocks.a, blocks.b, tol, opnorm(M)) <= tol.residual_tol


def complement_of_image(W: KreinMap, S: Subspace, tol=DEFAULT_TOL):
    """Orthonormal basis of ``(W S)^[perp] = ker((W B)* J)``."""
    WB = W.matrix @ S.basis
    return null_basis(WB.conj().T @ W.codomain.J, tol, scale=opnorm(W.matrix))


def is_complementable(W: KreinMap, S: Subspace, tol=DEFAULT_TOL):
    """``H = S + (W S)^[perp]`` by a rank test on the concatenated bases."""
    _require_selfadjoint(W, tol)
    return spans_whole_space(S.basis, complement_of_image(W, S, tol), tol=tol)


def _shorted_block(a, b, c, tol, scale):
    if _weak_residual(a, b, tol, scale) > tol.residual_tol:
        raise NotWeaklyComplementable("ran b is not contained in ran a")
    if a.size == 0:
        return c
    return hermitian_part(c - b.conj().T @ pinv(a, tol, scale) @ b)


def hilbert_shorted(M, S: Subspace, tol=DEFAULT_TOL):
    """Shorted operator ``M_/S`` of a Hermitian matrix (standard geometry).

    Raises
    ------
    NotWeaklyComplementable
    """
    blocks = block_decompose(M, S, tol)
    k = blocks.k
    short = _shorted_block(blocks.a, blocks.b, blocks.c, tol, opnorm(M))
    Q2 = blocks.frame[:, k:]
    return hermitian_part(Q2 @ short @ Q2.conj().T)


def jfs_adapted_frame(G, S_basis):
    """Frame ``Q`` with ``Q* G Q = I`` whose first columns span ``S``."""
    L = np.linalg.cholesky(G)
    U = adapted_frame(L.conj().T @ S_basis)
    return sla.solve_triangular(L.conj().T, U, lower=False)


def krein_schur_complement(W: KreinMap, S: Subspace, Jfs=None, tol=DEFAULT_TOL):
    """Schur complement ``W_/[S] = Jfs (Jfs W)_/S``.

    Parameters
    ----------
    W : KreinMap
        Krein-selfadjoint operator on ``H``.
    S : Subspace
        Subspace of ``H``.
    Jfs : array_like, optional
        Fundamental symmetry fixing the Hilbert geometry used for the
        shorting; defaults to the signature of ``H``. The result does not
        depend on this choice.

    Returns
    -------
    KreinMap

    Raises
    ------
    NotWeaklyComplementable
    """
    _require_selfadjoint(W, tol)
    H = W.domain
    if Jfs is None:
        Jfs = H.J
    else:
        Jfs = as_matrix(Jfs)
        if not is_fundamental_symmetry(Jfs, H, tol):
            raise InvalidFundamentalSymmetry("Jfs is not a fundamental symmetry of H")
    G = hermitian_part(H.J @ Jfs)
    Q = jfs_adapted_frame(G, S.basis)
    M = gram(W)
    a, b, c = _split(hermitian_part(Q.conj().T @ M @ Q), S.dim)
    short = _shorted_block(a, b, c, tol, opnorm(M))
    Q2 = Q[:, S.dim:]
    # coordinates -> operator: Q S' Q^{-1} with Q^{-1} = Q* G
    inner = Q2 @ short @ Q2.conj().T @ G
    return KreinMap(Jfs @ inner, H, H)
