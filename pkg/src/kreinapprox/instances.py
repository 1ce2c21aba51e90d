"""Seeded generators of random and engineered problem instances.

Feasible instances in indefinite geometry are essentially never hit by
rejection sampling, so they are built from their block structure: pick the
relevant subspace, prescribe the Gram blocks against it (nonnegative or
not, complementable or not) and assemble operators with that Gram matrix.
"""

from __future__ import annotations

import numpy as np

from .krein import KreinMap, SignatureSpace, range_basis, validate_signature

ILSQ_KINDS = ("feasible", "not_nonnegative", "range_fails", "random", "zero")
SPLINE_KINDS = ("feasible", "not_nonnegative", "not_complementable", "random", "injective")
SMOOTHING_KINDS = ("feasible", "not_positive", "range_fails", "random")


def cgauss(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_unitary(rng, n):
    if n == 0:
        return np.zeros((0, 0), dtype=complex)
    Q, R = np.linalg.qr(cgauss(rng, n, n))
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def random_hermitian(rng, n):
    X = cgauss(rng, n, n)
    return 0.5 * (X + X.conj().T)


def random_psd(rng, n, rank=None):
    rank = n if rank is None else rank
    X = cgauss(rng, n, rank)
    return X @ X.conj().T


def random_signature(rng, n, p=None, dense=True) -> SignatureSpace:
    """Signature space of dimension ``n`` with ``p`` positive directions."""
    p = int(rng.integers(0, n + 1)) if p is None else p
    D = np.diag(np.r_[np.ones(p), -np.ones(n - p)])
    if dense and n:
        U = random_unitary(rng, n)
        D = U @ D @ U.conj().T
    return validate_signature(D)


def canonical_frame(H: SignatureSpace):
    """Unitary ``U`` with ``J = U diag(I_p, -I_q) U*``."""
    w, U = np.linalg.eigh(H.J)
    return U[:, np.argsort(-w, kind="stable")]


def _blocks(rng, k, m, kind):
    """Hermitian blocks ``a`` (k x k), ``b`` (k x m) of the requested type.

    ``psd``: a >= 0 and ran b <= ran a.
    ``indefinite``: a has a negative eigenvalue.
    ``leaky``: a >= 0 singular and ran b not in ran a.
    """
    if kind == "psd":
        rank = int(rng.integers(0, k + 1))
        a = random_psd(rng, k, rank)
        b = a @ cgauss(rng, k, m)
    elif kind == "indefinite":
        U = random_unitary(rng, k)
        lam = rng.uniform(0.2, 2.0, k) * rng.choice([-1, 1], k)
        lam[0] = -abs(lam[0])
        a = (U * lam) @ U.conj().T
        b = cgauss(rng, k, m)
    elif kind == "leaky":
        rank = int(rng.integers(0, k))
        U = random_unitary(rng, k)
        lam = np.r_[rng.uniform(0.2, 2.0, rank), np.zeros(k - rank)]
        a = (U * lam) @ U.conj().T
        b = a @ cgauss(rng, k, m) + U[:, rank:] @ cgauss(rng, k - rank, m)
    else:
        raise ValueError(kind)
    return 0.5 * (a + a.conj().T), b


def gram_with_blocks(rng, Q, k, kind):
    """Hermitian ``M`` whose blocks against ``span Q[:, :k]`` are of ``kind``."""
    n = Q.shape[0]
    a, b = _blocks(rng, k, n - k, kind)
    c = random_hermitian(rng, n - k)
    M = Q @ np.block([[a, b], [b.conj().T, c]]) @ Q.conj().T
    return 0.5 * (M + M.conj().T)


def factor_gram(rng, D):
    """Operator ``T`` and codomain space with ``T* J T = D``."""
    lam, U = np.linalg.eigh(0.5 * (D + D.conj().T))
    # exact zeros come back as rounding noise; a square root would amplify it
    lam[np.abs(lam) <= 1e-12 * max(1.0, np.max(np.abs(lam), initial=0.0))] = 0.0
    signs = np.where(lam >= 0, 1.0, -1.0)
    # random codomain rotation keeps J dense
    P = random_unitary(rng, len(lam))
    T = P @ (np.sqrt(np.abs(lam))[:, None] * U.conj().T)
    J = P @ np.diag(signs) @ P.conj().T
    return T, validate_signature(J)


# ---------------------------------------------------------------------------
# weighted least squares
# ---------------------------------------------------------------------------


def ilsq_instance(rng, kind, max_dim=6):
    """Return ``(A, W)`` for the requested kind (see ``ILSQ_KINDS``)."""
    from .ilsq import IlsqInstance

    m = int(rng.integers(1, max_dim + 1))
    if kind == "range_fails" and m < 2:
        m = 2
    H = random_signature(rng, m)
    Q = random_unitary(rng, m)
    if kind == "random":
        n = int(rng.integers(1, max_dim + 1))
        K = random_signature(rng, n)
        A = cgauss(rng, m, n)
        M = random_hermitian(rng, m)
    else:
        if kind == "zero":
            r = 0
        elif kind == "range_fails":
            r = int(rng.integers(1, m))
        elif kind == "not_nonnegative":
            r = int(rng.integers(1, m + 1))
        else:
            r = int(rng.integers(0, m + 1))
        block = {"feasible": "psd", "zero": "psd", "not_nonnegative": "indefinite",
                 "range_fails": "leaky"}[kind]
        M = gram_with_blocks(rng, Q, r, block)
        n = max(1, r + int(rng.integers(0, 3)))
        K = random_signature(rng, n)
        C = cgauss(rng, r, n)
        A = Q[:, :r] @ C if r else np.zeros((m, n), dtype=complex)
    W = H.J @ M
    return IlsqInstance(KreinMap(A, K, H), KreinMap(W, H, H))


def identity_weight_instance(rng, kind, max_dim=6):
    """``W = I`` instances: ``positive`` ran A, ``neutral`` ran A, or ``random``."""
    from .ilsq import IlsqInstance

    if kind == "random":
        m = int(rng.integers(1, max_dim + 1))
        H = random_signature(rng, m)
        n = int(rng.integers(1, max_dim + 1))
        A = cgauss(rng, m, n)
    else:
        m = int(rng.integers(2, max_dim + 1))
        p = int(rng.integers(1, m))
        H = random_signature(rng, m, p)
        U = canonical_frame(H)
        q = m - p
        if kind == "positive":
            r = int(rng.integers(1, p + 1))
            E = random_unitary(rng, p)[:, :r]
            Kc = cgauss(rng, q, p)
            Kc *= rng.uniform(0.0, 0.9) / max(np.linalg.norm(Kc, 2), 1e-300)
            S = U @ np.vstack([E, Kc @ E])
        elif kind == "neutral":
            e = random_unitary(rng, p)[:, :1]
            f = random_unitary(rng, q)[:, :1]
            S = U @ np.vstack([e, f])
        else:
            raise ValueError(kind)
        n = S.shape[1] + int(rng.integers(0, 3))
        A = S @ cgauss(rng, S.shape[1], n)
    K = random_signature(rng, A.shape[1])
    return IlsqInstance(KreinMap(A, K, H), KreinMap.identity(H))


# ---------------------------------------------------------------------------
# splines
# ---------------------------------------------------------------------------


def _constraint_with_kernel(rng, n, d):
    """``V`` with ``ker V`` of dimension ``d`` and an orthonormal frame ``[N, N_perp]``."""
    Q = random_unitary(rng, n)
    m2 = max(1, n - d + int(rng.integers(0, 2)))
    C = cgauss(rng, m2, n - d)
    V = C @ Q[:, d:].conj().T if n > d else np.zeros((m2, n), dtype=complex)
    return V, Q, random_signature(rng, m2)


def spline_instance(rng, kind, max_dim=6):
    """Return a ``SplineInstance`` of the requested kind (see ``SPLINE_KINDS``)."""
    from .spline import SplineInstance

    n = int(rng.integers(1, max_dim + 1))
    if kind == "not_complementable":
        n = max(n, 2)
    H = random_signature(rng, n)
    if kind == "random":
        E1 = random_signature(rng, int(rng.integers(1, max_dim + 1)))
        E2 = random_signature(rng, int(rng.integers(1, max_dim + 1)))
        T = cgauss(rng, E1.dim, n)
        V = cgauss(rng, E2.dim, n)
        if rng.random() < 0.5:
            # rank-deficient V so that ker V is nontrivial
            r = int(rng.integers(0, min(E2.dim, n) + 1))
            V = cgauss(rng, E2.dim, r) @ cgauss(rng, r, n)
        return SplineInstance(KreinMap(T, H, E1), KreinMap(V, H, E2))
    if kind == "injective":
        d = 0
    elif kind == "not_complementable":
        d = int(rng.integers(1, n))
    elif kind == "not_nonnegative":
        d = int(rng.integers(1, n + 1))
    else:
        d = int(rng.integers(0, n + 1))
    V, Q, E2 = _constraint_with_kernel(rng, n, d)
    block = {"feasible": "psd", "injective": "psd", "not_nonnegative": "indefinite",
             "not_complementable": "leaky"}[kind]
    M = gram_with_blocks(rng, Q, d, block)
    T, E1 = factor_gram(rng, M)
    return SplineInstance(KreinMap(T, H, E1), KreinMap(V, H, E2))


# ---------------------------------------------------------------------------
# Schur complements
# ---------------------------------------------------------------------------


def schur_instance(rng, kind, max_dim=6):
    """``(W, S)`` with ``kind`` in ``complementable`` / ``psd`` / ``leaky``."""
    from .krein import Subspace

    n = int(rng.integers(2 if kind == "leaky" else 1, max_dim + 1))
    H = random_signature(rng, n)
    Q = random_unitary(rng, n)
    k = int(rng.integers(1, n)) if kind == "leaky" else int(rng.integers(0, n + 1))
    if kind == "complementable":
        M = random_hermitian(rng, n)
    else:
        M = gram_with_blocks(rng, Q, k, kind)
    S = Subspace(Q[:, :k] @ random_unitary(rng, k) if k else np.zeros((n, 0)), H)
    return KreinMap(H.J @ M, H, H), S


# ---------------------------------------------------------------------------
# smoothing
# ---------------------------------------------------------------------------


def smoothing_instance(rng, kind, max_dim=6):
    """Return a ``SmoothingInstance`` of the requested kind (see ``SMOOTHING_KINDS``).

    Feasible instances prescribe the Gram matrix ``D`` of ``T#T + rho V#V``
    with ``ran V* <= ran D`` and recover ``T`` from ``D - rho V* J2 V``.
    """
    from .smoothing import SmoothingInstance

    n = int(rng.integers(1, max_dim + 1))
    H = random_signature(rng, n)
    rho = float(rng.uniform(0.2, 3.0) * rng.choice([-1.0, 1.0]))
    m2 = int(rng.integers(1, max_dim + 1))
    E2 = random_signature(rng, m2)
    if kind == "random":
        E1 = random_signature(rng, int(rng.integers(1, max_dim + 1)))
        T = cgauss(rng, E1.dim, n)
        V = cgauss(rng, m2, n)
        return SmoothingInstance(KreinMap(T, H, E1), KreinMap(V, H, E2), rho)
    r = int(rng.integers(1, min(m2, n) + 1)) if kind != "range_fails" else int(rng.integers(1, n + 1))
    V = cgauss(rng, m2, r) @ cgauss(rng, r, n)
    Vs = V.conj().T
    if kind == "feasible":
        R = range_basis(Vs)
        extra = int(rng.integers(0, n - R.shape[1] + 1))
        F = np.hstack([R @ cgauss(rng, R.shape[1], R.shape[1]), cgauss(rng, n, extra)])
        D = F @ F.conj().T
    elif kind == "not_positive":
        D = random_hermitian(rng, n)
        w, U = np.linalg.eigh(D)
        w[0] = -abs(w[0]) - 0.2
        D = (U * w) @ U.conj().T
    elif kind == "range_fails":
        # PSD of rank < n whose range misses part of ran V*
        Q = random_unitary(rng, n)
        k = int(rng.integers(0, n))
        D = Q[:, :k] @ random_psd(rng, k) @ Q[:, :k].conj().T
        # make sure V* has a component in ker D
        V = V + cgauss(rng, m2, 1) @ Q[:, -1:].conj().T
        Vs = V.conj().T
    else:
        raise ValueError(kind)
    E = D - rho * Vs @ E2.J @ V
    T, E1 = factor_gram(rng, E)
    return SmoothingInstance(KreinMap(T, H, E1), KreinMap(V, H, E2), rho)
