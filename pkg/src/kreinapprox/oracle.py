"""Independent verification tools.

Everything here works on plain Hermitian reductions (``J``-Gram matrices)
and shares no code with the Krein solvers it is used to audit: no
indefinite adjoints, no SVD-based pseudoinverses from :mod:`kreinapprox.krein`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NoSolution

_EPS = np.finfo(float).eps


class NoMinimum(NoSolution):
    """Quadratic form unbounded below (``Indefinite`` or ``Inconsistent``)."""


@dataclass(frozen=True, eq=False)
class QuadraticForm:
    """``q(z) = z* M z + 2 Re(v* z) + c`` with ``M`` Hermitian."""

    M: np.ndarray
    v: np.ndarray
    c: float = 0.0

    def __post_init__(self):
        M = np.atleast_2d(np.asarray(self.M, dtype=complex))
        v = np.atleast_1d(np.asarray(self.v, dtype=complex))
        if M.shape != (v.size, v.size):
            raise ValueError(f"M has shape {M.shape}, v has size {v.size}")
        if np.linalg.norm(M - M.conj().T) > 1e-12 * max(1.0, np.linalg.norm(M)):
            raise ValueError("M must be Hermitian")
        object.__setattr__(self, "M", 0.5 * (M + M.conj().T))
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "c", float(np.real(self.c)))

    def __call__(self, z):
        z = np.asarray(z)
        return float(np.real(np.vdot(z, self.M @ z) + 2 * np.vdot(self.v, z))) + self.c

    def batch(self, Z):
        """Evaluate at the rows of ``Z``."""
        Z = np.asarray(Z)
        quad = np.einsum("ij,jk,ik->i", Z.conj(), self.M, Z)
        return np.real(quad + 2 * (Z @ self.v.conj())) + self.c


def quadratic_min(q: QuadraticForm, tol=None, m_scale=None, v_scale=None):
    """Closed-form minimum of a Hermitian quadratic form.

    A minimum exists iff ``M >= 0`` and ``v`` lies in ``ran M``; then the
    minimum-norm minimiser is ``-M^+ v`` and the value ``c - v* M^+ v``.

    Parameters
    ----------
    q : QuadraticForm
    tol : Tolerance, optional
        Only ``psd_tol``, ``residual_tol`` and ``rank_tol`` are read.
    m_scale, v_scale : float, optional
        Absolute reference magnitudes for ``M`` and ``v``; needed when the
        form was assembled from products that vanish in exact arithmetic.

    Returns
    -------
    argmin : ndarray
    value : float

    Raises
    ------
    NoMinimum
    """
    psd_tol = 1e-10 if tol is None else tol.psd_tol
    res_tol = 1e-10 if tol is None else tol.residual_tol
    rank_rel = 1e-10 if tol is None else tol.rank_tol
    k = q.v.size
    if k == 0:
        return np.zeros(0, dtype=complex), q.c
    lam, U = np.linalg.eigh(q.M)
    top = max(float(np.max(np.abs(lam))), m_scale or 0.0)
    if lam[0] < -psd_tol * top:
        raise NoMinimum("Indefinite", f"smallest eigenvalue {lam[0]:.3e}")
    rel = rank_rel if rank_rel is not None else k * _EPS
    keep = lam > rel * top if top > 0 else np.zeros(k, dtype=bool)
    w = U.conj().T @ q.v
    ref = max(float(np.linalg.norm(q.v)), v_scale or 0.0)
    leak = float(np.linalg.norm(w[~keep]))
    if ref > 0 and leak > res_tol * ref:
        raise NoMinimum("Inconsistent", f"linear term leaves ran M ({leak:.3e})")
    coef = np.zeros(k, dtype=complex)
    coef[keep] = w[keep] / lam[keep]
    argmin = -(U @ coef)
    value = q.c - float(np.real(np.vdot(w[keep], coef[keep])))
    return argmin, value


def sample_minimality(objective, candidate, n_samples=1000, radius=None, seed=0,
                      vectorized=False):
    """Worst objective decrease found around ``candidate``.

    Perturbations are complex Gaussian directions scaled by ``radius``
    (default ``1 + ||candidate||``) times a log-uniform factor in
    ``[1e-3, 1]`` so both local and distant descent is probed. Returns
    ``min_s objective(s) - objective(candidate)``; a certified minimum
    needs this to be ``>= -tol``.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    x0 = np.asarray(candidate, dtype=complex)
    if radius is None:
        radius = 1.0 + float(np.linalg.norm(x0))
    rng = np.random.default_rng(seed)
    shape = (n_samples,) + x0.shape
    dirs = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
    scales = radius * 10.0 ** rng.uniform(-3.0, 0.0, n_samples)
    samples = x0 + dirs * scales.reshape((-1,) + (1,) * x0.ndim)
    f0 = float(objective(x0[None])[0]) if vectorized else float(objective(x0))
    if vectorized:
        vals = np.asarray(objective(samples), dtype=float)
    else:
        vals = np.array([objective(s) for s in samples], dtype=float)
    return float(np.min(vals - f0))


def fd_gradient(F, X, Y, step=1e-5):
    """Central difference ``(F(X + tY) - F(X - tY)) / 2t``."""
    if step <= 0:
        raise ValueError("step must be positive")
    X = np.asarray(X)
    Y = np.asarray(Y)
    return (F(X + step * Y) - F(X - step * Y)) / (2 * step)


# ---------------------------------------------------------------------------
# Hermitian reductions used as independent references
# ---------------------------------------------------------------------------


def ilsq_form(A, J, W, x):
    """``z -> [W(Az - x), Az - x]`` as a :class:`QuadraticForm`."""
    A, J, W = (np.asarray(m, dtype=complex) for m in (A, J, W))
    x = np.asarray(x, dtype=complex)
    G = J @ W
    G = 0.5 * (G + G.conj().T)
    return QuadraticForm(A.conj().T @ G @ A, -(A.conj().T @ G @ x),
                         float(np.real(np.vdot(x, G @ x))))


def basis_sum_trace(T, J, Jfs):
    """``sum_n [T e_n, e_n]`` over an orthonormal basis of ``<.,.>_Jfs``.

    The basis is built from a Cholesky factor of the Gram matrix ``J Jfs``
    (no trace identity involved).
    """
    T, J, Jfs = (np.asarray(m, dtype=complex) for m in (T, J, Jfs))
    G = J @ Jfs
    L = np.linalg.cholesky(0.5 * (G + G.conj().T))
    E = np.linalg.inv(L.conj().T)
    return complex(sum(np.vdot(E[:, i], J @ T @ E[:, i]) for i in range(E.shape[1])))


def krein_order_margin(P, P0, gram_cod):
    """Smallest eigenvalue of ``P* G P - P0* G P0``.

    Nonnegative iff ``(P0)# P0 <= P# P`` in the Krein order of the domain
    when the domain signature is used for the ``#``.
    """
    P, P0, G = (np.asarray(m, dtype=complex) for m in (P, P0, gram_cod))
    D = P.conj().T @ G @ P - P0.conj().T @ G @ P0
    return float(np.linalg.eigvalsh(0.5 * (D + D.conj().T))[0])
