"""Indefinite smoothing problems and W-optimal inverses.

Minimise ``[Tx, Tx] + rho [Vx - h0, Vx - h0]`` for a nonzero real ``rho``.
With ``K = (T, V): H -> E1 x E2`` and the form
``[(a1, a2), (b1, b2)]_rho = [a1, b1] + rho [a2, b2]`` the objective is
``[Kx - (0, h0), Kx - (0, h0)]_rho``, so smoothing is weighted least
squares in the augmented space and the normal operator is
``K#K = T#T + rho V#V``.

The augmented form is handled through its Gram matrix ``diag(J1, rho J2)``
rather than a signature matrix, because ``rho J2`` is not an involution
unless ``|rho| = 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, NoSolution, NotSelfadjoint, PathMismatch
from .krein import (
    DEFAULT_TOL,
    KreinMap,
    SignatureSpace,
    Tolerance,
    douglas_residual,
    hermitian_part,
    is_krein_selfadjoint,
    is_psd,
    j_trace,
    min_eigenvalue,
    null_basis,
    opnorm,
    range_basis,
    validate_signature,
)
from .oracle import krein_order_margin, sample_minimality
from .results import Certificate, OperatorSolution, PointSolution, real_value


@dataclass(frozen=True, eq=False)
class SmoothingInstance:
    T: KreinMap
    V: KreinMap
    rho: float
    tol: Tolerance = DEFAULT_TOL

    def __post_init__(self):
        if self.T.domain.dim != self.V.domain.dim:
            raise DimensionMismatch("T and V must share their domain")
        rho = float(np.real(self.rho))
        if not np.isfinite(rho) or rho == 0.0:
            raise ValueError("rho must be a finite nonzero real number")
        object.__setattr__(self, "rho", rho)

    @property
    def H(self):
        return self.T.domain

    @property
    def normal_operator(self) -> KreinMap:
        """``T#T + rho V#V``."""
        return self.T.sharp @ self.T + self.rho * (self.V.sharp @ self.V)

    @property
    def scale(self):
        return opnorm(self.T.matrix) ** 2 + abs(self.rho) * opnorm(self.V.matrix) ** 2

    def objective(self, x, h0):
        Tx = self.T.matrix @ x
        r = self.V.matrix @ x - h0
        return float(np.real(np.vdot(Tx, self.T.codomain.J @ Tx)
                             + self.rho * np.vdot(r, self.V.codomain.J @ r)))


@dataclass(frozen=True, eq=False)
class AugmentedSpace:
    """``E1 x E2`` with ``[(a1, a2), (b1, b2)]_rho = [a1, b1] + rho [a2, b2]``."""

    first: SignatureSpace
    second: SignatureSpace
    rho: float

    @property
    def dim(self):
        return self.first.dim + self.second.dim

    @property
    def gram(self):
        n1, n2 = self.first.dim, self.second.dim
        G = np.zeros((n1 + n2, n1 + n2), dtype=complex)
        G[:n1, :n1] = self.first.J
        G[n1:, n1:] = self.rho * self.second.J
        return G

    def form(self, x, y):
        return np.vdot(y, self.gram @ x)

    def embed_second(self, B):
        """``B -> (0, B)``."""
        B = np.asarray(B, dtype=complex)
        B = B.reshape(B.shape[0], -1)
        return np.vstack([np.zeros((self.first.dim, B.shape[1]), dtype=complex), B])

    def signature_model(self):
        """Equivalent pair ``(J_aug, W)`` with ``J_aug W`` equal to the Gram matrix.

        ``J_aug = diag(J1, sign(rho) J2)`` and ``W = diag(I, |rho| I)``, which
        turns augmented computations into weighted least squares.
        """
        s = np.sign(self.rho)
        J = np.zeros((self.dim, self.dim), dtype=complex)
        n1 = self.first.dim
        J[:n1, :n1] = self.first.J
        J[n1:, n1:] = s * self.second.J
        Jaug = validate_signature(J)
        W = np.diag(np.r_[np.ones(n1), abs(self.rho) * np.ones(self.second.dim)])
        return Jaug, W


@dataclass(frozen=True, eq=False)
class BlockWeight:
    """Block weight ``[[W11, W12], [W12#, W22]]`` on ``H x E``.

    ``W11`` acts on ``H``, ``W22`` on ``E`` and ``W12: E -> H``.
    """

    W11: KreinMap
    W12: KreinMap
    W22: KreinMap

    def __post_init__(self):
        H, E = self.W11.domain, self.W22.domain
        if self.W12.domain.dim != E.dim or self.W12.codomain.dim != H.dim:
            raise DimensionMismatch("W12 must map E into H")

    def validate(self, rho, tol=DEFAULT_TOL):
        """Check that the assembled weight is selfadjoint for ``[., .]_rho``.

        The lower-left block is ``W12#``; the ``rho``-adjoint of the block
        matrix has ``W12# / rho`` there, so ``rho = 1`` or ``W12 = 0`` is
        required.
        """
        for name in ("W11", "W22"):
            if not is_krein_selfadjoint(getattr(self, name), tol):
                raise NotSelfadjoint(f"{name} must be Krein-selfadjoint")
        if rho != 1.0 and opnorm(self.W12.matrix) > 0:
            raise NotSelfadjoint("with W12 != 0 the block weight is rho-selfadjoint only for rho = 1")

    def matrix(self):
        return np.block([[self.W11.matrix, self.W12.matrix],
                         [self.W12.sharp.matrix, self.W22.matrix]])


@dataclass
class OptimalInverse:
    """Min-norm solution ``G`` and a basis ``N`` of the homogeneous solutions."""

    G: np.ndarray
    kernel_basis: np.ndarray
    certificate: Certificate = field(default_factory=Certificate)

    def solution(self, Y):
        """The element ``G + N Y`` of the solution set."""
        return self.G + self.kernel_basis @ np.asarray(Y)


def build_augmented(inst: SmoothingInstance):
    """``K = (T, V)``, the map ``B0 -> (0, B0)`` and the augmented space."""
    aug = AugmentedSpace(inst.T.codomain, inst.V.codomain, inst.rho)
    K = np.vstack([inst.T.matrix, inst.V.matrix])
    return K, aug.embed_second, aug


def augmented_adjoint(K, aug: AugmentedSpace, H: SignatureSpace):
    """``K# = J_H K* G_rho``, the adjoint for the ``rho``-form."""
    return H.J @ K.conj().T @ aug.gram


def _positive(inst: SmoothingInstance):
    C = inst.normal_operator
    G = hermitian_part(inst.H.J @ C.matrix)
    return is_psd(G, inst.tol, scale=inst.scale), min_eigenvalue(G)


def _range_ok(inst: SmoothingInstance):
    C = inst.normal_operator.matrix
    rhs = inst.rho * inst.V.sharp.matrix
    rel, _ = douglas_residual(C, rhs, inst.tol, scale=inst.scale,
                              b_scale=abs(inst.rho) * opnorm(inst.V.matrix))
    return rel <= inst.tol.residual_tol, rel


def ran_k_nonnegative(inst: SmoothingInstance):
    """``ran K`` is nonnegative in the augmented form, from a range basis."""
    K, _, aug = build_augmented(inst)
    B = range_basis(K, inst.tol)
    if B.shape[1] == 0:
        return True
    G = hermitian_part(B.conj().T @ aug.gram @ B)
    return is_psd(G, inst.tol, scale=max(1.0, abs(inst.rho)))


def smoothing_feasible(inst: SmoothingInstance) -> bool:
    """Global solutions exist: ``T#T + rho V#V >= 0`` and ``ran V# <= ran(T#T + rho V#V)``.

    Raises
    ------
    PathMismatch
        When positivity of the normal operator and nonnegativity of ``ran K``
        disagree; these are equivalent and a disagreement is a bug.
    """
    pos, _ = _positive(inst)
    if pos != ran_k_nonnegative(inst):
        raise PathMismatch("positivity of K#K and nonnegativity of ran K disagree")
    return bool(pos and _range_ok(inst)[0])


def solve_smoothing_point(inst: SmoothingInstance, h0) -> PointSolution:
    """Minimum-norm solution of ``(T#T + rho V#V) x = rho V# h0``.

    Raises
    ------
    NoSolution
        ``NotPositive`` or ``Inconsistent``.
    """
    tol = inst.tol
    h0 = np.asarray(h0, dtype=complex).reshape(-1)
    if h0.size != inst.V.codomain.dim:
        raise DimensionMismatch(f"h0 must have length {inst.V.codomain.dim}")
    cert = Certificate()
    pos, lam = _positive(inst)
    cert.min_eigenvalues["normal_operator"] = lam
    if not pos:
        cert.verdict = "no_solution"
        raise NoSolution("NotPositive", "T#T + rho V#V is not Krein-positive", cert)
    C = inst.normal_operator.matrix
    rhs = inst.rho * (inst.V.sharp.matrix @ h0)
    rel, x = douglas_residual(C, rhs[:, None], tol, scale=inst.scale,
                              b_scale=abs(inst.rho) * opnorm(inst.V.matrix) * np.linalg.norm(h0))
    cert.residuals["normal_equation"] = rel
    if rel > tol.residual_tol:
        cert.verdict = "no_solution"
        raise NoSolution("Inconsistent", "normal equation has no solution", cert)
    x = x[:, 0]
    value = inst.objective(x, h0)
    return PointSolution(x, value, cert)


def block_objective(A, W: BlockWeight, rho, x, h):
    """``[W z, z]_rho`` with ``z = (x, A x - h)``."""
    H, E = W.W11.domain, W.W22.domain
    z = np.concatenate([x, A @ x - h])
    G = np.zeros((H.dim + E.dim,) * 2, dtype=complex)
    G[:H.dim, :H.dim] = H.J
    G[H.dim:, H.dim:] = rho * E.J
    return float(np.real(np.vdot(z, G @ W.matrix() @ z)))


def optimal_inverse(A: KreinMap, W: BlockWeight, rho, tol=DEFAULT_TOL, n_check=100,
                    n_samples=100, seed=0) -> OptimalInverse:
    """Min-norm indefinite W-optimal inverse of ``A``.

    Solves ``(W11 + W12 A + rho A#W12# + rho A#W22 A) X = W12 + rho A#W22``.
    The certificate records the worst sampled objective decrease around
    ``G h`` for ``n_check`` random ``h``.

    Raises
    ------
    NoSolution
        ``NotPositive`` or ``Inconsistent``.
    NotSelfadjoint
        The block weight is not ``rho``-selfadjoint.
    """
    rho = float(rho)
    if rho == 0.0:
        raise ValueError("rho must be nonzero")
    if A.domain.dim != W.W11.domain.dim or A.codomain.dim != W.W22.domain.dim:
        raise DimensionMismatch("A must map the space of W11 into the space of W22")
    W.validate(rho, tol)
    H = A.domain
    As = A.sharp
    W11, W12, W22 = W.W11, W.W12, W.W22
    C = W11 + W12 @ A + rho * (As @ W12.sharp) + rho * (As @ W22 @ A)
    rhs = W12.matrix + rho * (As @ W22).matrix
    scale = (opnorm(W11.matrix) + 2 * abs(rho) * opnorm(W12.matrix) * opnorm(A.matrix)
             + abs(rho) * opnorm(W22.matrix) * opnorm(A.matrix) ** 2)
    cert = Certificate()
    Gram = hermitian_part(H.J @ C.matrix)
    cert.min_eigenvalues["coefficient"] = min_eigenvalue(Gram)
    if not is_psd(Gram, tol, scale=scale):
        cert.verdict = "no_solution"
        raise NoSolution("NotPositive", "the coefficient operator is not Krein-positive", cert)
    rhs_scale = opnorm(W12.matrix) + abs(rho) * opnorm(A.matrix) * opnorm(W22.matrix)
    rel, G = douglas_residual(C.matrix, rhs, tol, scale=scale, b_scale=rhs_scale)
    cert.residuals["normal_equation"] = rel
    if rel > tol.residual_tol:
        cert.verdict = "no_solution"
        raise NoSolution("Inconsistent", "the optimal inverse equation has no solution", cert)
    N = null_basis(C.matrix, tol, scale=scale)
    if n_check:
        rng = np.random.default_rng(seed)
        worst = np.inf
        for i in range(n_check):
            h = (rng.standard_normal(A.codomain.dim) + 1j * rng.standard_normal(A.codomain.dim))
            h /= np.sqrt(2)
            obj = lambda x, h=h: block_objective(A.matrix, W, rho, x, h)
            margin = sample_minimality(obj, G @ h, n_samples=n_samples, seed=seed + i)
            ref = max(1.0, scale) * (1.0 + np.linalg.norm(G @ h) + np.linalg.norm(h)) ** 2
            worst = min(worst, margin / ref)
        cert.margins["sampled_minimality"] = worst
    return OptimalInverse(G, N, cert)


def _smoothing_weight(inst: SmoothingInstance):
    E = inst.V.codomain
    return BlockWeight(inst.T.sharp @ inst.T, KreinMap.zero(E, inst.H), KreinMap.identity(E))


def smoothing_optimal_inverse(inst: SmoothingInstance, **kwargs) -> OptimalInverse:
    """Optimal inverse of ``V`` for the blocks ``(T#T, 0, I)``."""
    return optimal_inverse(inst.V, _smoothing_weight(inst), inst.rho, inst.tol, **kwargs)


def smoothing_global_solution(inst: SmoothingInstance) -> OptimalInverse:
    """Bounded ``G`` with ``G h`` solving the smoothing problem for every ``h``.

    Computed in the augmented space as the min-norm solution of
    ``K#K G = K# (0, I)``, with existence decided by nonnegativity of
    ``ran K`` and consistency of that equation.

    Raises
    ------
    NoSolution
    """
    tol = inst.tol
    K, embed, aug = build_augmented(inst)
    Ks = augmented_adjoint(K, aug, inst.H)
    cert = Certificate()
    if not ran_k_nonnegative(inst):
        cert.verdict = "no_solution"
        raise NoSolution("NotPositive", "ran K is not nonnegative", cert)
    KsK = Ks @ K
    rhs = Ks @ embed(np.eye(aug.second.dim))
    rel, G = douglas_residual(KsK, rhs, tol, scale=inst.scale,
                              b_scale=abs(inst.rho) * opnorm(inst.V.matrix))
    cert.residuals["normal_equation"] = rel
    if rel > tol.residual_tol:
        cert.verdict = "no_solution"
        raise NoSolution("Inconsistent", "ran V# is not contained in ran K#K", cert)
    return OptimalInverse(G, null_basis(KsK, tol, scale=inst.scale), cert)


def smoothing_objective(inst: SmoothingInstance, B0: KreinMap, X, Jfs=None):
    """``tr_J((TX)#TX) + rho tr_J((VX - B0)#(VX - B0))``."""
    D = B0.domain
    Xm = KreinMap(np.asarray(X), D, inst.H)
    TX = inst.T @ Xm
    R = inst.V @ Xm - B0
    val = j_trace(TX.sharp @ TX, Jfs, inst.tol) + inst.rho * j_trace(R.sharp @ R, Jfs, inst.tol)
    return val.real


def frechet_derivative(inst: SmoothingInstance, B0: KreinMap, X, Y, Jfs=None):
    """``DF(X)(Y) = 2 Re tr_J(Y# (T#T X + rho V#(V X - B0)))``."""
    D = B0.domain
    Xm = KreinMap(np.asarray(X), D, inst.H)
    Ym = KreinMap(np.asarray(Y), D, inst.H)
    inner = inst.T.sharp @ (inst.T @ Xm) + inst.rho * (inst.V.sharp @ (inst.V @ Xm - B0))
    return 2.0 * j_trace(Ym.sharp @ inner, Jfs, inst.tol).real


def operator_smoothing_min(inst: SmoothingInstance, B0: KreinMap, Jfs=None, n_samples=100,
                           seed=0) -> OperatorSolution:
    """Solve ``min tr_J((TX)#TX) + rho tr_J((VX - B0)#(VX - B0))``.

    The minimiser solves ``(T#T + rho V#V) X = rho V# B0``. The certificate
    holds the smallest eigenvalue of ``F(X) - F(X0)`` in the Krein order
    over ``n_samples`` random ``X``, a check that ``X0`` minimises the
    operator-valued objective and not only its trace.

    Raises
    ------
    NoSolution
        ``NotPositive`` or ``Inconsistent``.
    """
    tol = inst.tol
    if B0.codomain.dim != inst.V.codomain.dim:
        raise DimensionMismatch("B0 must map into the codomain of V")
    D = B0.domain
    cert = Certificate()
    pos, lam = _positive(inst)
    cert.min_eigenvalues["normal_operator"] = lam
    if not pos:
        cert.verdict = "no_solution"
        raise NoSolution("NotPositive", "T#T + rho V#V is not Krein-positive", cert)
    C = inst.normal_operator.matrix
    rhs = inst.rho * inst.V.sharp.matrix @ B0.matrix
    rel, X0 = douglas_residual(C, rhs, tol, scale=inst.scale,
                               b_scale=abs(inst.rho) * opnorm(inst.V.matrix) * opnorm(B0.matrix))
    cert.residuals["normal_equation"] = rel
    if rel > tol.residual_tol:
        cert.verdict = "no_solution"
        raise NoSolution("Inconsistent", "normal equation has no solution", cert)
    value = smoothing_objective(inst, B0, X0, Jfs)
    if n_samples:
        K, embed, aug = build_augmented(inst)
        P0 = K @ X0 - embed(B0.matrix)
        rng = np.random.default_rng(seed)
        worst = np.inf
        for _ in range(n_samples):
            Z = (rng.standard_normal(X0.shape) + 1j * rng.standard_normal(X0.shape)) / np.sqrt(2)
            X = X0 + Z * (1.0 + opnorm(X0)) * 10.0 ** rng.uniform(-3, 0)
            margin = krein_order_margin(K @ X - embed(B0.matrix), P0, aug.gram)
            ref = max(1.0, inst.scale) * (1.0 + opnorm(X) + opnorm(B0.matrix)) ** 2
            worst = min(worst, margin / ref)
        cert.margins["krein_order"] = worst
    return OperatorSolution(X0, value, cert)
