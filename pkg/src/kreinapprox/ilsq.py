"""Indefinite weighted least squares.

For ``A: K -> H`` and a Krein-selfadjoint weight ``W`` on ``H`` a vector
``u`` minimises ``[W(Au - x), Au - x]`` iff ``ran A`` is W-nonnegative and
``A# W (A u - x) = 0``. A bounded global solution (W-inverse) exists iff the
normal equation ``A# W (A X - I) = 0`` is solvable, and the operator problem
``min tr_J((AX - I)# W (AX - I))`` then has value ``tr_J(W_/[ran A])``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, NoSolution, NotSelfadjoint, PathMismatch
from .krein import (
    DEFAULT_TOL,
    KreinMap,
    Subspace,
    Tolerance,
    douglas_residual,
    is_krein_selfadjoint,
    is_regular_subspace,
    is_w_nonnegative_subspace,
    j_trace,
    min_eigenvalue,
    null_basis,
    opnorm,
    pinv,
    spans_whole_space,
    subspace_gram,
)
from .oracle import NoMinimum, ilsq_form, quadratic_min
from .results import Certificate, OperatorSolution, PointSolution, check_paths, real_value
from .schur import krein_schur_complement


@dataclass(frozen=True, eq=False)
class IlsqInstance:
    A: KreinMap
    W: KreinMap
    tol: Tolerance = DEFAULT_TOL

    def __post_init__(self):
        if self.W.domain.dim != self.A.codomain.dim or self.W.codomain.dim != self.A.codomain.dim:
            raise DimensionMismatch("W must act on the codomain of A")
        if not is_krein_selfadjoint(self.W, self.tol):
            raise NotSelfadjoint("the weight W must be Krein-selfadjoint")

    @property
    def H(self):
        return self.A.codomain

    @property
    def K(self):
        return self.A.domain

    @property
    def range_A(self):
        return Subspace.span(self.A.matrix, self.H, self.tol)

    def objective(self, z, x):
        r = self.A.matrix @ z - x
        return float(np.real(np.vdot(r, self.H.J @ self.W.matrix @ r)))

    # products that vanish in exact arithmetic are judged against these
    @property
    def _scales(self):
        a, w = opnorm(self.A.matrix), opnorm(self.W.matrix)
        return a * a * w, a * w


@dataclass
class IlsqReport:
    """Independent evaluations of the four equivalent existence conditions."""

    ran_A_nonnegative: bool
    pointwise_all: bool
    range_sum_full: bool
    normal_solvable: bool
    inverse_exists: bool
    w_inverse: np.ndarray | None = None
    kernel_basis: np.ndarray | None = None
    certificate: Certificate = field(default_factory=Certificate)

    @property
    def conditions(self):
        """(pointwise for a basis, range sum, normal equation, oracle inverse), each with nonnegativity."""
        return (
            self.pointwise_all,
            self.ran_A_nonnegative and self.range_sum_full,
            self.ran_A_nonnegative and self.normal_solvable,
            self.inverse_exists,
        )

    @property
    def consistent(self):
        return len(set(self.conditions)) == 1

    @property
    def solvable(self):
        return all(self.conditions)

    def solution(self, Y):
        """Element ``G0 + N Y`` of the set of W-inverses."""
        if self.w_inverse is None:
            raise NoSolution("Inconsistent", "no W-inverse exists")
        return self.w_inverse + self.kernel_basis @ np.asarray(Y)


def ran_a_nonnegative(inst: IlsqInstance):
    return is_w_nonnegative_subspace(inst.W, inst.range_A, inst.tol)


def _normal_parts(inst):
    As = inst.A.sharp.matrix
    AsW = As @ inst.W.matrix
    return AsW @ inst.A.matrix, AsW


def solve_ilss_point(inst: IlsqInstance, x) -> PointSolution:
    """Minimum-norm W-ILSS ``u`` of ``A z = x`` and the value ``[W(Au-x), Au-x]``.

    Raises
    ------
    NoSolution
        ``NotNonnegative`` when ``ran A`` is not W-nonnegative,
        ``Inconsistent`` when ``A#WAu = A#Wx`` has no solution.
    """
    tol = inst.tol
    x = np.asarray(x, dtype=complex).reshape(-1)
    if x.size != inst.H.dim:
        raise DimensionMismatch(f"x must have length {inst.H.dim}")
    cert = Certificate()
    S = inst.range_A
    cert.min_eigenvalues["ran_A_gram"] = min_eigenvalue(subspace_gram(inst.W, S)) if S.dim else 0.0
    if not is_w_nonnegative_subspace(inst.W, S, tol):
        cert.verdict = "no_solution"
        raise NoSolution("NotNonnegative", "ran A is not W-nonnegative", cert)
    coef, AsW = _normal_parts(inst)
    s_coef, s_rhs = inst._scales
    rhs = AsW @ x
    rel, u = douglas_residual(coef, rhs[:, None], tol, scale=s_coef,
                              b_scale=s_rhs * np.linalg.norm(x))
    cert.residuals["normal_equation"] = rel
    if rel > tol.residual_tol:
        cert.verdict = "no_solution"
        raise NoSolution("Inconsistent", "normal equation has no solution", cert)
    u = u[:, 0]
    r = inst.A.matrix @ u - x
    value = real_value(np.vdot(r, inst.H.J @ inst.W.matrix @ r), opnorm(inst.W.matrix) * np.vdot(x, x).real)
    return PointSolution(u, value, cert)


def _oracle_inverse(inst: IlsqInstance, n_check=4, seed=0):
    """Build ``G`` column by column from closed-form minimisers and check it.

    Decides existence of a W-inverse through the Hermitian reduction only,
    without the normal equation.
    """
    tol = inst.tol
    H, A, W = inst.H, inst.A.matrix, inst.W.matrix
    s_m, s_v = inst._scales
    cols = []
    for j in range(H.dim):
        e = np.zeros(H.dim, dtype=complex)
        e[j] = 1.0
        try:
            u, _ = quadratic_min(ilsq_form(A, H.J, W, e), tol, m_scale=s_m, v_scale=s_v)
        except NoMinimum:
            return None
        cols.append(u)
    G = np.column_stack(cols) if cols else np.zeros((inst.K.dim, 0), dtype=complex)
    rng = np.random.default_rng(seed)
    for _ in range(n_check):
        x = rng.standard_normal(H.dim) + 1j * rng.standard_normal(H.dim)
        q = ilsq_form(A, H.J, W, x)
        try:
            _, best = quadratic_min(q, tol, m_scale=s_m, v_scale=s_v * np.linalg.norm(x))
        except NoMinimum:
            return None
        scale = 1.0 + abs(best) + s_m * (np.linalg.norm(G @ x) + np.linalg.norm(x)) ** 2
        if abs(q(G @ x) - best) > 1e-8 * scale:
            return None
    return G


def analyze_w_inverse(inst: IlsqInstance) -> IlsqReport:
    """Evaluate the equivalent conditions for existence of a W-inverse.

    Each condition is computed on its own path: (a) pointwise solves at a
    basis of ``H``; (b) rank of ``[ran A | ker A#W]``; (c) Douglas
    solvability of the normal equation; (d) a candidate ``G`` assembled from
    closed-form minimisers and checked against the definition. When the
    normal equation is solvable the minimum-Frobenius-norm solution is
    returned together with a kernel basis parametrising all W-inverses.
    """
    tol = inst.tol
    H = inst.H
    nonneg = ran_a_nonnegative(inst)
    cert = Certificate()
    S = inst.range_A
    cert.min_eigenvalues["ran_A_gram"] = min_eigenvalue(subspace_gram(inst.W, S)) if S.dim else 0.0

    pointwise = True
    for j in range(H.dim):
        e = np.zeros(H.dim)
        e[j] = 1.0
        try:
            solve_ilss_point(inst, e)
        except NoSolution:
            pointwise = False
            break

    coef, AsW = _normal_parts(inst)
    s_coef, s_rhs = inst._scales
    ker_AsW = null_basis(AsW, tol, scale=s_rhs)
    range_sum = spans_whole_space(S.basis, ker_AsW, tol=tol)

    rel, G0 = douglas_residual(coef, AsW, tol, scale=s_coef, b_scale=s_rhs)
    cert.residuals["normal_equation"] = rel
    normal = bool(rel <= tol.residual_tol)

    inverse = _oracle_inverse(inst) is not None

    report = IlsqReport(nonneg, pointwise, range_sum, normal, inverse, certificate=cert)
    if normal and nonneg:
        report.w_inverse = G0
        report.kernel_basis = null_basis(coef, tol, scale=s_coef)
    else:
        cert.verdict = "no_solution"
    return report


def operator_ilsq_min(inst: IlsqInstance, Jfs=None) -> OperatorSolution:
    """Solve ``min_X tr_J((AX - I)# W (AX - I))``.

    The value is computed twice, from the minimiser and as
    ``tr_J(W_/[ran A])``; the two must agree.

    Raises
    ------
    NoSolution
    PathMismatch
        Internal inconsistency; never a valid outcome.
    """
    H = inst.H
    Jfs = H.J if Jfs is None else np.asarray(Jfs, dtype=complex)
    report = analyze_w_inverse(inst)
    cert = report.certificate
    if not report.ran_A_nonnegative:
        raise NoSolution("NotNonnegative", "ran A is not W-nonnegative", cert)
    if report.w_inverse is None:
        raise NoSolution("Inconsistent", "normal equation has no solution", cert)
    X0 = report.w_inverse
    R = KreinMap(inst.A.matrix @ X0 - np.eye(H.dim), H, H)
    residual_op = R.sharp @ inst.W @ R
    scale = opnorm(inst.W.matrix)
    v1 = real_value(j_trace(residual_op, Jfs, inst.tol), scale, "tr_J residual")
    try:
        short = krein_schur_complement(inst.W, inst.range_A, Jfs, inst.tol)
    except NoSolution as exc:
        raise PathMismatch("W-inverse exists but W is not ran A complementable") from exc
    v2 = real_value(j_trace(short, Jfs, inst.tol), scale, "tr_J Schur complement")
    check_paths(v1, v2, "trace_value", cert)
    cert.residuals["operator_min_vs_schur"] = opnorm(residual_op.matrix - short.matrix) / max(1.0, scale)
    return OperatorSolution(X0, v1, cert)


def check_regularity_consequence(inst: IlsqInstance):
    """With ``W = I``: existence of an indefinite inverse forces ``ran A`` regular."""
    if not np.allclose(inst.W.matrix, np.eye(inst.H.dim)):
        raise ValueError("the regularity consequence is stated for W = I")
    return (not analyze_w_inverse(inst).solvable) or is_regular_subspace(inst.range_A, inst.tol)
