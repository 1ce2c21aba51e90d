"""Finite-dimensional Krein spaces.

A Krein space here is ``C^n`` with the indefinite form ``[x, y] = y* J x``
where ``J`` is a Hermitian involution. With this model the Hilbert inner
product attached to ``J`` is the standard one, so Moore-Penrose inverses,
orthogonal projections and orthonormal bases are the usual ones. Other
fundamental decompositions of the same form are represented explicitly by
a fundamental symmetry matrix ``Jfs`` (see :func:`is_fundamental_symmetry`).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import (
    DimensionMismatch,
    InvalidFundamentalSymmetry,
    NoSolution,
    NotHermitian,
    NotInvolution,
    NotSelfadjoint,
)

EPS = np.finfo(float).eps


@dataclass(frozen=True)
class Tolerance:
    """Numerical thresholds used by every existence verdict.

    Parameters
    ----------
    rank_tol : float or None
        Relative singular value cutoff. ``None`` selects the tight
        ``max(shape) * eps``, which misreads rounding noise in products that
        vanish exactly; the default ``1e-10`` does not.
    psd_tol : float
        Relative eigenvalue slack for positivity tests.
    residual_tol : float
        Relative residual bound for consistency and identity checks.
    """

    rank_tol: float | None = 1e-10
    psd_tol: float = 1e-10
    residual_tol: float = 1e-10

    def __post_init__(self):
        for name in ("rank_tol", "psd_tol", "residual_tol"):
            value = getattr(self, name)
            if value is not None and not value >= 0:
                raise ValueError(f"{name} must be nonnegative, got {value!r}")

    def cutoff(self, s_max, shape, scale=None):
        """Singular values at or below this are treated as zero.

        ``scale`` is an absolute reference magnitude (e.g. the norm of the
        operator a block was cut from); it keeps pure rounding noise from
        being promoted to rank when the matrix itself should vanish.
        """
        rel = self.rank_tol if self.rank_tol is not None else max(shape) * EPS
        ref = s_max if scale is None else max(s_max, scale)
        return rel * ref

    def as_dict(self):
        return {
            "rank_tol": self.rank_tol,
            "psd_tol": self.psd_tol,
            "residual_tol": self.residual_tol,
        }


DEFAULT_TOL = Tolerance()


def as_matrix(M, ndim=2):
    """Complex ndarray view of ``M`` (real inputs are embedded)."""
    out = np.asarray(M, dtype=complex)
    if ndim == 2 and out.ndim != 2:
        raise DimensionMismatch(f"expected a matrix, got shape {out.shape}")
    return out


def hermitian_part(M):
    return 0.5 * (M + M.conj().T)


def opnorm(M):
    M = np.asarray(M)
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


# ---------------------------------------------------------------------------
# spaces, maps, subspaces
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SignatureSpace:
    """``C^n`` with the form ``[x, y] = y* J x``.

    Build through :func:`validate_signature` (or the ``diag``/``hilbert``
    shortcuts) so that the Hermitian-involution invariant is checked.
    """

    J: np.ndarray
    inertia: tuple[int, int]

    @property
    def dim(self):
        return self.J.shape[0]

    @classmethod
    def diag(cls, signs, tol=DEFAULT_TOL):
        return validate_signature(np.diag(np.asarray(signs, dtype=float)), tol)

    @classmethod
    def hilbert(cls, n):
        return validate_signature(np.eye(n))

    def form(self, x, y):
        """``[x, y] = y* J x``."""
        return np.vdot(y, self.J @ x)

    def __repr__(self):
        p, q = self.inertia
        return f"SignatureSpace(dim={self.dim}, inertia=({p}, {q}))"


@dataclass(frozen=True, eq=False)
class KreinMap:
    """Matrix of a linear map ``domain -> codomain`` between Krein spaces."""

    matrix: np.ndarray
    domain: SignatureSpace
    codomain: SignatureSpace

    def __post_init__(self):
        M = as_matrix(self.matrix)
        object.__setattr__(self, "matrix", M)
        if M.shape != (self.codomain.dim, self.domain.dim):
            raise DimensionMismatch(
                f"matrix shape {M.shape} does not match "
                f"codomain dim {self.codomain.dim} x domain dim {self.domain.dim}"
            )

    @property
    def shape(self):
        return self.matrix.shape

    @property
    def sharp(self):
        return indefinite_adjoint(self)

    @property
    def is_square(self):
        return self.domain is self.codomain or (
            self.domain.dim == self.codomain.dim
            and np.array_equal(self.domain.J, self.codomain.J)
        )

    def __matmul__(self, other):
        if isinstance(other, KreinMap):
            if other.codomain.dim != self.domain.dim:
                raise DimensionMismatch("maps are not composable")
            return KreinMap(self.matrix @ other.matrix, other.domain, self.codomain)
        return self.matrix @ np.asarray(other)

    def __add__(self, other):
        return KreinMap(self.matrix + other.matrix, self.domain, self.codomain)

    def __sub__(self, other):
        return KreinMap(self.matrix - other.matrix, self.domain, self.codomain)

    def __mul__(self, scalar):
        return KreinMap(scalar * self.matrix, self.domain, self.codomain)

    __rmul__ = __mul__

    @classmethod
    def identity(cls, space):
        return cls(np.eye(space.dim), space, space)

    @classmethod
    def zero(cls, domain, codomain):
        return cls(np.zeros((codomain.dim, domain.dim)), domain, codomain)


@dataclass(frozen=True, eq=False)
class Subspace:
    """A subspace of a signature space, stored by an orthonormal basis."""

    basis: np.ndarray
    ambient: SignatureSpace

    def __post_init__(self):
        B = as_matrix(self.basis)
        if B.shape[0] != self.ambient.dim:
            raise DimensionMismatch(
                f"basis has {B.shape[0]} rows, ambient dim is {self.ambient.dim}"
            )
        if B.shape[1]:
            s = np.linalg.svd(B, compute_uv=False)
            if s[-1] <= max(B.shape) * EPS * s[0] * 10:
                raise DimensionMismatch("subspace basis is not of full column rank")
        object.__setattr__(self, "basis", B)

    @property
    def dim(self):
        return self.basis.shape[1]

    @classmethod
    def span(cls, M, ambient, tol=DEFAULT_TOL, scale=None):
        """Orthonormal basis of ``ran M`` (numerical rank by ``tol``)."""
        return cls(range_basis(as_matrix(M), tol, scale), ambient)

    @classmethod
    def kernel(cls, M, ambient, tol=DEFAULT_TOL, scale=None):
        return cls(null_basis(as_matrix(M), tol, scale), ambient)

    @classmethod
    def zero(cls, ambient):
        return cls(np.zeros((ambient.dim, 0)), ambient)

    @classmethod
    def whole(cls, ambient):
        return cls(np.eye(ambient.dim), ambient)

    @property
    def projector(self):
        """Orthogonal projection onto the subspace (standard geometry)."""
        Q = range_basis(self.basis, DEFAULT_TOL)
        return Q @ Q.conj().T


# ---------------------------------------------------------------------------
# rank, ranges, kernels, pseudoinverses
# ---------------------------------------------------------------------------


def _kept(s, shape, tol, scale):
    if not s.size or s[0] == 0:
        return 0
    return int(np.sum(s > tol.cutoff(s[0], shape, scale)))


def numerical_rank(M, tol=DEFAULT_TOL, scale=None):
    M = np.asarray(M)
    if M.size == 0:
        return 0
    return _kept(np.linalg.svd(M, compute_uv=False), M.shape, tol, scale)


def range_basis(M, tol=DEFAULT_TOL, scale=None):
    """Orthonormal basis of the numerical range of ``M``."""
    M = as_matrix(M)
    if M.size == 0:
        return np.zeros((M.shape[0], 0), dtype=complex)
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    return U[:, : _kept(s, M.shape, tol, scale)]


def null_basis(M, tol=DEFAULT_TOL, scale=None):
    """Orthonormal basis of the numerical kernel of ``M``."""
    M = as_matrix(M)
    n = M.shape[1]
    if M.shape[0] == 0 or n == 0:
        return np.eye(n, dtype=complex)
    _, s, Vh = np.linalg.svd(M, full_matrices=True)
    return Vh[_kept(s, M.shape, tol, scale):].conj().T


def pinv(M, tol=DEFAULT_TOL, scale=None):
    """Moore-Penrose inverse with singular values below the cutoff dropped."""
    M = as_matrix(M)
    if M.size == 0:
        return np.zeros(M.shape[::-1], dtype=complex)
    U, s, Vh = np.linalg.svd(M, full_matrices=False)
    r = _kept(s, M.shape, tol, scale)
    return (Vh[:r].conj().T / s[:r]) @ U[:, :r].conj().T


def douglas_residual(A, B, tol=DEFAULT_TOL, scale=None, b_scale=None):
    """Relative residual ``||(I - A A^+) B|| / ||B||`` and ``A^+ B``.

    ``scale`` feeds the rank cutoff of ``A``; ``b_scale`` replaces ``||B||``
    as the reference magnitude of the residual.
    """
    A, B = as_matrix(A), as_matrix(B)
    X = pinv(A, tol, scale) @ B
    ref = np.linalg.norm(B) if b_scale is None else max(b_scale, np.linalg.norm(B))
    res = np.linalg.norm(A @ X - B)
    return (res / ref if ref > 0 else 0.0), X


def solve_douglas(A, B, tol=DEFAULT_TOL, scale=None, b_scale=None):
    """Minimum-norm solution of ``A X = B``.

    Raises
    ------
    NoSolution
        With reason ``"Inconsistent"`` when ``ran B`` is not contained in
        ``ran A``.
    """
    rel, X = douglas_residual(A, B, tol, scale, b_scale)
    if rel > tol.residual_tol:
        raise NoSolution(
            "Inconsistent",
            f"range inclusion fails (relative residual {rel:.3e})",
            certificate={"douglas_residual": float(rel)},
        )
    return X


def range_included(A, B, tol=DEFAULT_TOL, scale=None, b_scale=None):
    """``ran B`` contained in ``ran A`` (Douglas)."""
    return douglas_residual(A, B, tol, scale, b_scale)[0] <= tol.residual_tol


def min_eigenvalue(H):
    H = np.asarray(H)
    if H.size == 0:
        return 0.0
    return float(np.linalg.eigvalsh(hermitian_part(H))[0])


def is_psd(H, tol=DEFAULT_TOL, scale=None):
    """Hermitian ``H`` is positive semidefinite up to ``psd_tol * scale``."""
    if np.asarray(H).size == 0:
        return True
    if scale is None:
        scale = opnorm(H)
    return min_eigenvalue(H) >= -tol.psd_tol * scale


# ---------------------------------------------------------------------------
# signature operators and adjoints
# ---------------------------------------------------------------------------


def validate_signature(J, tol=DEFAULT_TOL):
    """Check that ``J`` is a Hermitian involution and record its inertia.

    Raises
    ------
    NotHermitian, NotInvolution
    """
    J = as_matrix(J)
    n = J.shape[0]
    if J.shape != (n, n):
        raise DimensionMismatch(f"signature must be square, got {J.shape}")
    thresh = max(tol.residual_tol, 1e-12) * max(1.0, opnorm(J))
    if np.linalg.norm(J - J.conj().T, 2) > thresh:
        raise NotHermitian("signature operator is not Hermitian")
    if n and np.linalg.norm(J @ J - np.eye(n), 2) > thresh:
        raise NotInvolution("signature operator does not square to the identity")
    J = hermitian_part(J)
    w = np.linalg.eigvalsh(J) if n else np.zeros(0)
    return SignatureSpace(J, (int(np.sum(w > 0)), int(np.sum(w < 0))))


def adjoint_matrix(M, J_dom, J_cod):
    """``J_dom M* J_cod``: the matrix of the indefinite adjoint."""
    return J_dom @ M.conj().T @ J_cod


def indefinite_adjoint(T: KreinMap) -> KreinMap:
    """``T#`` characterised by ``[T x, y] = [x, T# y]``."""
    return KreinMap(
        adjoint_matrix(T.matrix, T.domain.J, T.codomain.J), T.codomain, T.domain
    )


def _require_square(W):
    if W.domain.dim != W.codomain.dim:
        raise DimensionMismatch("operator must act on a single space")


def selfadjoint_defect(W: KreinMap):
    _require_square(W)
    return opnorm(W.matrix - adjoint_matrix(W.matrix, W.domain.J, W.codomain.J))


def is_krein_selfadjoint(W: KreinMap, tol=DEFAULT_TOL):
    """``W = W#`` within ``residual_tol * ||W||``."""
    return selfadjoint_defect(W) <= tol.residual_tol * max(opnorm(W.matrix), EPS)


def gram(W: KreinMap):
    """Hermitian matrix ``J W`` of the form ``x -> [W x, x]``."""
    return hermitian_part(W.codomain.J @ W.matrix)


def krein_min_eigenvalue(W: KreinMap):
    return min_eigenvalue(gram(W))


def is_krein_positive(W: KreinMap, tol=DEFAULT_TOL):
    """``[W x, x] >= 0`` for all ``x``.

    Raises
    ------
    NotSelfadjoint
    """
    if not is_krein_selfadjoint(W, tol):
        raise NotSelfadjoint("positivity is only defined for selfadjoint operators")
    return is_psd(gram(W), tol)


def subspace_gram(W: KreinMap, S: Subspace):
    if S.ambient.dim != W.domain.dim:
        raise DimensionMismatch("subspace and operator live in different spaces")
    B = S.basis
    return hermitian_part(B.conj().T @ gram(W) @ B)


def is_w_nonnegative_subspace(W: KreinMap, S: Subspace, tol=DEFAULT_TOL):
    """``[W s, s] >= 0`` for every ``s`` in ``S``."""
    if not is_krein_selfadjoint(W, tol):
        raise NotSelfadjoint("W must be selfadjoint")
    G = subspace_gram(W, S)
    scale = opnorm(gram(W)) * opnorm(S.basis) ** 2
    return is_psd(G, tol, scale=scale)


def orthogonal_companion(S: Subspace, tol=DEFAULT_TOL) -> Subspace:
    """``S^[perp] = ker(B* J)``."""
    if S.dim == 0:
        return Subspace.whole(S.ambient)
    return Subspace(null_basis(S.basis.conj().T @ S.ambient.J, tol), S.ambient)


def spans_whole_space(*bases, tol=DEFAULT_TOL):
    """True when the concatenated orthonormal bases span the ambient space."""
    n = bases[0].shape[0]
    M = np.hstack(bases)
    if n == 0:
        return True
    if M.shape[1] < n:
        return False
    return numerical_rank(M, tol) == n


def is_regular_subspace(S: Subspace, tol=DEFAULT_TOL):
    """``H = S [+] S^[perp]``."""
    return spans_whole_space(S.basis, orthogonal_companion(S, tol).basis, tol=tol)


# ---------------------------------------------------------------------------
# fundamental symmetries and J-traces
# ---------------------------------------------------------------------------


def is_fundamental_symmetry(Jfs, H: SignatureSpace, tol=DEFAULT_TOL):
    """Whether ``Jfs`` is the signature operator of a fundamental decomposition."""
    Jfs = as_matrix(Jfs)
    n = H.dim
    if Jfs.shape != (n, n):
        return False
    scale = max(1.0, opnorm(Jfs))
    if np.linalg.norm(Jfs @ Jfs - np.eye(n), 2) > 1e3 * tol.residual_tol * scale**2:
        return False
    if np.linalg.norm(H.J @ Jfs.conj().T @ H.J - Jfs, 2) > 1e3 * tol.residual_tol * scale:
        return False
    if n == 0:
        return True
    return min_eigenvalue(H.J @ Jfs) > tol.psd_tol


def fundamental_symmetry_from_contraction(H: SignatureSpace, K):
    """Fundamental symmetry whose positive part is the graph of ``K``.

    In coordinates where ``J = diag(I_p, -I_q)`` the maximal positive
    subspace ``{(x, K x)}`` and its companion ``{(K* y, y)}`` give a
    fundamental decomposition whenever ``||K|| < 1`` (``K`` is q x p).
    """
    p, q = H.inertia
    K = as_matrix(K).reshape(q, p)
    if K.size and opnorm(K) >= 1:
        raise InvalidFundamentalSymmetry("K must be a strict contraction")
    w, U = np.linalg.eigh(H.J)
    order = np.argsort(-w, kind="stable")
    U = U[:, order]
    frame = np.block([[np.eye(p), K.conj().T], [K, np.eye(q)]])
    signs = np.diag(np.r_[np.ones(p), -np.ones(q)])
    Jc = frame @ signs @ np.linalg.inv(frame)
    return U @ Jc @ U.conj().T


def random_fundamental_symmetry(H: SignatureSpace, seed=None, max_norm=0.9):
    """Seeded random fundamental symmetry of ``H``.

    Returns ``H.J`` itself when the form is definite.
    """
    p, q = H.inertia
    if p * q == 0:
        return H.J.copy()
    rng = np.random.default_rng(seed)
    K = rng.standard_normal((q, p)) + 1j * rng.standard_normal((q, p))
    K *= rng.uniform(0.05, max_norm) / opnorm(K)
    return fundamental_symmetry_from_contraction(H, K)


def j_trace(T: KreinMap, Jfs=None, tol=DEFAULT_TOL):
    """``tr_J(T) = tr(Jfs T)`` for a fundamental symmetry ``Jfs``.

    Raises
    ------
    InvalidFundamentalSymmetry
    """
    _require_square(T)
    if Jfs is None:
        Jfs = T.domain.J
    elif not is_fundamental_symmetry(Jfs, T.domain, tol):
        raise InvalidFundamentalSymmetry("Jfs is not a fundamental symmetry of H")
    return complex(np.trace(as_matrix(Jfs) @ T.matrix))


def jfs_orthonormal_basis(H: SignatureSpace, Jfs):
    """Columns orthonormal for ``<x, y> = [Jfs x, y] = y* (J Jfs) x``."""
    G = hermitian_part(H.J @ as_matrix(Jfs))
    L = np.linalg.cholesky(G)
    return sla.solve_triangular(L.conj().T, np.eye(H.dim), lower=False)
