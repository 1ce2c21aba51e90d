"""Indefinite abstract splines.

Minimise ``[Tx, Tx]`` subject to ``Vx = Vh0``. Writing ``x = V^+ V h0 + N y``
with ``N`` an orthonormal basis of ``ker V`` reduces every question to the
Gram matrix ``M = T* J T`` restricted to ``ker V``: a minimiser exists for
every ``h0`` iff ``M`` is nonnegative on ``ker V`` and ``T#T`` is ``ker V``
complementable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    NoSolution,
    NotWeaklyComplementable,
    RangeHypothesisFailed,
)
from .krein import (
    DEFAULT_TOL,
    KreinMap,
    Subspace,
    Tolerance,
    douglas_residual,
    hermitian_part,
    is_w_nonnegative_subspace,
    j_trace,
    min_eigenvalue,
    opnorm,
    pinv,
    range_included,
    subspace_gram,
)
from .oracle import NoMinimum, QuadraticForm, quadratic_min
from .results import Certificate, OperatorSolution, PointSolution, check_paths, real_value
from .schur import is_complementable, krein_schur_complement


@dataclass(frozen=True, eq=False)
class SplineInstance:
    T: KreinMap
    V: KreinMap
    tol: Tolerance = DEFAULT_TOL

    def __post_init__(self):
        if self.T.domain.dim != self.V.domain.dim:
            raise DimensionMismatch("T and V must share their domain")

    @property
    def H(self):
        return self.T.domain

    @property
    def TsT(self) -> KreinMap:
        return self.T.sharp @ self.T

    @property
    def gram(self):
        """``T* J T``, the Gram matrix of ``x -> [Tx, Tx]``."""
        T = self.T.matrix
        return hermitian_part(T.conj().T @ self.T.codomain.J @ T)

    @property
    def kernel_V(self) -> Subspace:
        return Subspace.kernel(self.V.matrix, self.H, self.tol)

    @property
    def V_pinv(self):
        return pinv(self.V.matrix, self.tol)

    def objective(self, x):
        Tx = self.T.matrix @ x
        return float(np.real(np.vdot(Tx, self.T.codomain.J @ Tx)))

    @property
    def _scale(self):
        return opnorm(self.T.matrix) ** 2


@dataclass(frozen=True)
class SplineSolvability:
    kernel_nonnegative: bool
    complementable: bool

    @property
    def global_exists(self):
        return self.kernel_nonnegative and self.complementable


def spline_solvability(inst: SplineInstance) -> SplineSolvability:
    N = inst.kernel_V
    TsT = inst.TsT
    return SplineSolvability(
        bool(is_w_nonnegative_subspace(TsT, N, inst.tol)),
        bool(is_complementable(TsT, N, inst.tol)),
    )


def _kernel_form(inst, N, xp):
    M = inst.gram
    return QuadraticForm(N.conj().T @ M @ N, N.conj().T @ M @ xp,
                         float(np.real(np.vdot(xp, M @ xp))))


def solve_spline_point(inst: SplineInstance, h0) -> PointSolution:
    """Minimum-norm spline ``x0`` interpolating ``V x0 = V h0`` and ``[T x0, T x0]``.

    Raises
    ------
    NoSolution
        ``NotNonnegative`` when ``T(ker V)`` is not nonnegative,
        ``Inconsistent`` when the quadratic over ``ker V`` is unbounded below.
    """
    tol = inst.tol
    h0 = np.asarray(h0, dtype=complex).reshape(-1)
    if h0.size != inst.H.dim:
        raise DimensionMismatch(f"h0 must have length {inst.H.dim}")
    N = inst.kernel_V.basis
    xp = inst.V_pinv @ (inst.V.matrix @ h0)
    cert = Certificate()
    q = _kernel_form(inst, N, xp)
    cert.min_eigenvalues["kernel_gram"] = min_eigenvalue(q.M)
    scale = inst._scale
    try:
        y, _ = quadratic_min(q, tol, m_scale=scale, v_scale=scale * np.linalg.norm(xp))
    except NoMinimum as exc:
        cert.verdict = "no_solution"
        reason = "NotNonnegative" if exc.reason == "Indefinite" else exc.reason
        raise NoSolution(reason, str(exc), cert) from exc
    x0 = xp + N @ y
    Vn = max(opnorm(inst.V.matrix), 1.0)
    cert.residuals["constraint"] = float(
        np.linalg.norm(inst.V.matrix @ (x0 - h0)) / (Vn * max(1.0, np.linalg.norm(h0))))
    Tx0 = inst.T.matrix @ x0
    TN = inst.T.matrix @ N
    cert.residuals["kernel_orthogonality"] = float(
        np.linalg.norm(TN.conj().T @ inst.T.codomain.J @ Tx0)
        / (max(scale, 1.0) * max(1.0, np.linalg.norm(x0))))
    value = real_value(np.vdot(Tx0, inst.T.codomain.J @ Tx0), scale * np.vdot(x0, x0).real)
    return PointSolution(x0, value, cert)


def _kernel_normal_solve(inst, B0):
    """Min-norm solution of ``P_N M P_N X = -P_N M V^+ B0`` and its residual."""
    P = inst.kernel_V.projector
    M = inst.gram
    VB = inst.V_pinv @ B0
    coef = P @ M @ P
    rhs = -P @ M @ VB
    scale = max(inst._scale, opnorm(M))
    rel, X = douglas_residual(coef, rhs, inst.tol, scale=scale,
                              b_scale=scale * opnorm(VB))
    return rel, P @ X + VB, VB


def operator_spline_min(inst: SplineInstance, B0: KreinMap, Jfs=None) -> OperatorSolution:
    """Solve ``min tr_J((TX)# TX)`` subject to ``V X = B0``.

    The value is computed from the minimiser and, when ``T#T`` is ``ker V``
    complementable, as ``tr_J((V^+ B0)# (T#T)_/[ker V] (V^+ B0))``.

    Raises
    ------
    RangeHypothesisFailed
        ``ran B0`` is not contained in ``ran V``.
    NoSolution
    PathMismatch
    """
    tol = inst.tol
    if B0.codomain.dim != inst.V.codomain.dim:
        raise DimensionMismatch("B0 must map into the codomain of V")
    D = B0.domain
    Jfs = D.J if Jfs is None else np.asarray(Jfs, dtype=complex)
    cert = Certificate()
    if not range_included(inst.V.matrix, B0.matrix, tol, b_scale=opnorm(inst.V.matrix) * opnorm(B0.matrix)):
        cert.verdict = "no_solution"
        raise RangeHypothesisFailed("ran B0 is not contained in ran V", cert)
    N = inst.kernel_V
    G = subspace_gram(inst.TsT, N)
    cert.min_eigenvalues["kernel_gram"] = min_eigenvalue(G)
    if not is_w_nonnegative_subspace(inst.TsT, N, tol):
        cert.verdict = "no_solution"
        raise NoSolution("NotNonnegative", "T(ker V) is not nonnegative", cert)
    rel, X0, VB = _kernel_normal_solve(inst, B0.matrix)
    cert.residuals["normal_equation"] = rel
    if rel > tol.residual_tol:
        cert.verdict = "no_solution"
        raise NoSolution("Inconsistent", "the normal equation has no solution", cert)
    cert.residuals["constraint"] = opnorm(inst.V.matrix @ X0 - B0.matrix) / max(
        1.0, opnorm(B0.matrix))

    X0map = KreinMap(X0, D, inst.H)
    TX = inst.T @ X0map
    scale = inst._scale * max(1.0, opnorm(X0)) ** 2
    v1 = real_value(j_trace(TX.sharp @ TX, Jfs, tol), scale, "tr_J((TX)#TX)")
    try:
        short = krein_schur_complement(inst.TsT, N, None, tol)
    except NotWeaklyComplementable:
        short = None
    if short is not None:
        Y = KreinMap(VB, D, inst.H)
        v2 = real_value(j_trace(Y.sharp @ short @ Y, Jfs, tol), scale, "Schur path")
        check_paths(v1, v2, "trace_value", cert)
    return OperatorSolution(X0, v1, cert)


def spline_global_solution(inst: SplineInstance) -> np.ndarray:
    """Operator ``G`` with ``G h`` a spline interpolating ``V h`` for every ``h``.

    Raises
    ------
    NoSolution
    """
    X0 = operator_spline_min(inst, inst.V).X
    P_perp = inst.V_pinv @ inst.V.matrix
    return X0 @ P_perp
