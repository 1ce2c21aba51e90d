import numpy as np
import pytest
from hypothesis import given

from conftest import H, kmap, seeds
from kreinapprox.errors import NoSolution, NotSelfadjoint
from kreinapprox.ilsq import (
    IlsqInstance,
    analyze_w_inverse,
    check_regularity_consequence,
    operator_ilsq_min,
    solve_ilss_point,
)
from kreinapprox.instances import ILSQ_KINDS, cgauss, identity_weight_instance, ilsq_instance, random_psd
from kreinapprox.krein import KreinMap, random_fundamental_symmetry, validate_signature
from kreinapprox.oracle import sample_minimality
from kreinapprox.schur import is_complementable


def instance(A, W, J=None, K=None):
    Hs = H(*[1] * len(W)) if J is None else validate_signature(np.asarray(J))
    A = np.asarray(A, dtype=complex)
    Ks = H(*[1] * A.shape[1]) if K is None else K
    return IlsqInstance(KreinMap(A, Ks, Hs), KreinMap(np.asarray(W, dtype=complex), Hs, Hs))


E1 = [[1], [0]]


class TestPoint:
    def test_classical(self):
        s = solve_ilss_point(instance(E1, np.eye(2)), [1, 1])
        assert s.x[0] == pytest.approx(1)
        assert s.value == pytest.approx(1)

    def test_indefinite_weight(self):
        s = solve_ilss_point(instance(E1, np.diag([1, -1])), [2, 5])
        assert s.x[0] == pytest.approx(2)
        assert s.value == pytest.approx(-25)

    def test_not_nonnegative(self):
        with pytest.raises(NoSolution) as exc:
            solve_ilss_point(instance(E1, np.diag([-1, 1])), [1, 1])
        assert exc.value.reason == "NotNonnegative"

    def test_inconsistent(self):
        # ran A = span{e1} is neutral for W = swap: A#WA = 0, A#Wx != 0
        with pytest.raises(NoSolution) as exc:
            solve_ilss_point(instance(E1, [[0, 1], [1, 0]]), [0, 1])
        assert exc.value.reason == "Inconsistent"

    def test_weight_must_be_selfadjoint(self):
        with pytest.raises(NotSelfadjoint):
            instance(E1, [[0, 1], [1, 0]], J=np.diag([1, -1]))

    @given(seeds)
    def test_sampled_minimality(self, seed):
        rng = np.random.default_rng(seed)
        inst = ilsq_instance(rng, "feasible")
        x = cgauss(rng, inst.H.dim)
        s = solve_ilss_point(inst, x)
        scale = (1 + np.linalg.norm(inst.A.matrix, 2)) ** 2 * max(1, np.linalg.norm(inst.W.matrix, 2)) \
            * (1 + np.linalg.norm(s.x) + np.linalg.norm(x)) ** 2
        margin = sample_minimality(lambda z: inst.objective(z, x), s.x, 200, seed=seed)
        assert margin >= -1e-8 * scale


class TestWInverse:
    def test_zero_operator(self):
        r = analyze_w_inverse(instance(np.zeros((2, 1)), np.diag([1, -1])))
        assert r.conditions == (True, True, True, True)
        np.testing.assert_allclose(r.w_inverse, 0)

    def test_indefinite_weight(self):
        r = analyze_w_inverse(instance(E1, np.diag([1, -1])))
        assert r.solvable and r.consistent
        np.testing.assert_allclose(r.w_inverse, [[1, 0]], atol=1e-12)

    def test_negative_weight(self):
        r = analyze_w_inverse(instance(E1, np.diag([-1, 1])))
        assert r.conditions == (False, False, False, False)
        assert r.w_inverse is None
        with pytest.raises(NoSolution):
            r.solution(np.zeros((0, 2)))

    @pytest.mark.parametrize("kind", ILSQ_KINDS)
    def test_equivalence_by_kind(self, kind):
        rng = np.random.default_rng(ILSQ_KINDS.index(kind))
        for _ in range(40):
            r = analyze_w_inverse(ilsq_instance(rng, kind))
            assert r.consistent, r.conditions
            if kind in ("feasible", "zero"):
                assert r.solvable
            if kind in ("not_nonnegative", "range_fails"):
                assert not r.solvable

    @given(seeds)
    def test_solution_set(self, seed):
        rng = np.random.default_rng(seed)
        inst = ilsq_instance(rng, "feasible")
        r = analyze_w_inverse(inst)
        N = r.kernel_basis
        A, W = inst.A, inst.W
        scale = max(1, np.linalg.norm(A.matrix, 2)) ** 2 * max(1, np.linalg.norm(W.matrix, 2))

        def normal_residual(X):
            R = KreinMap(A.matrix @ X - np.eye(inst.H.dim), inst.H, inst.H)
            return np.linalg.norm((A.sharp @ W @ R).matrix)

        Y = cgauss(rng, N.shape[1], inst.H.dim)
        X = r.solution(Y)
        assert normal_residual(X) <= 1e-9 * scale * (1 + np.linalg.norm(X))
        # perturbing outside the solution set breaks the normal equation
        # unless the perturbation is invisible to A#WA
        P = cgauss(rng, inst.K.dim, inst.H.dim)
        coef = (A.sharp @ W @ A).matrix
        if np.linalg.norm(coef @ P) > 1e-6 * scale:
            assert normal_residual(r.w_inverse + P) > 1e-9 * scale

    @given(seeds)
    def test_global_pointwise_coherence(self, seed):
        rng = np.random.default_rng(seed)
        inst = ilsq_instance(rng, "feasible")
        G = analyze_w_inverse(inst).w_inverse
        for _ in range(5):
            x = cgauss(rng, inst.H.dim)
            v = solve_ilss_point(inst, x).value
            w = inst.objective(G @ x, x)
            assert abs(v - w) <= 1e-8 * (1 + abs(v)) * max(1, np.linalg.norm(x)) ** 2

    @given(seeds)
    def test_complementable_when_inverse_exists(self, seed):
        rng = np.random.default_rng(seed)
        inst = ilsq_instance(rng, ("feasible", "random", "zero")[seed % 3])
        if analyze_w_inverse(inst).solvable:
            assert is_complementable(inst.W, inst.range_A, inst.tol)

    def test_hilbert_reduction(self, rng):
        for _ in range(20):
            m, n = int(rng.integers(1, 7)), int(rng.integers(1, 7))
            A = cgauss(rng, m, n)
            W = random_psd(rng, m, int(rng.integers(1, m + 1)))
            x = cgauss(rng, m)
            s = solve_ilss_point(instance(A, W), x)
            # textbook: min-norm least squares for ||W^(1/2) (A u - x)||
            lam, U = np.linalg.eigh(W)
            lam[lam < 1e-12 * lam[-1]] = 0.0
            R = U @ np.diag(np.sqrt(lam)) @ U.conj().T
            u = np.linalg.pinv(R @ A, rcond=1e-10) @ (R @ x)
            r = A @ u - x
            ref = (1 + np.linalg.norm(x)) ** 2 * max(1, np.linalg.norm(W, 2))
            assert s.value == pytest.approx(np.real(np.vdot(r, W @ r)), abs=1e-8 * ref)
            np.testing.assert_allclose(s.x, u, atol=1e-8 * (1 + np.linalg.norm(u)))


class TestOperatorMin:
    def test_example(self):
        s = operator_ilsq_min(instance(E1, np.diag([1, -1])))
        np.testing.assert_allclose(s.X, [[1, 0]], atol=1e-12)
        assert s.value == pytest.approx(-1)
        v1, v2 = s.certificate.two_path["trace_value"]
        assert v1 == pytest.approx(v2)

    def test_invertible_positive(self, rng):
        S = H(1, -1, 1)
        W = KreinMap(S.J @ random_psd(rng, 3), S, S)
        inst = IlsqInstance(KreinMap(cgauss(rng, 3, 3), S, S), W)
        assert operator_ilsq_min(inst).value == pytest.approx(0, abs=1e-9)

    def test_zero_operator(self, rng):
        S = H(1, -1)
        W = kmap([[2, 1], [-1, -1]], S)
        inst = IlsqInstance(KreinMap.zero(S, S), W)
        Jfs = random_fundamental_symmetry(S, seed=4)
        s = operator_ilsq_min(inst, Jfs)
        np.testing.assert_allclose(s.X, 0)
        assert s.value == pytest.approx(np.trace(Jfs @ W.matrix).real)

    def test_no_solution(self):
        with pytest.raises(NoSolution):
            operator_ilsq_min(instance(E1, np.diag([-1, 1])))

    @given(seeds)
    def test_two_paths_for_many_fundamental_symmetries(self, seed):
        rng = np.random.default_rng(seed)
        inst = ilsq_instance(rng, "feasible")
        for i in range(3):
            s = operator_ilsq_min(inst, random_fundamental_symmetry(inst.H, seed=seed + i))
            v1, v2 = s.certificate.two_path["trace_value"]
            assert abs(v1 - v2) <= 1e-8 * (1 + abs(v1))
            assert s.certificate.residuals["operator_min_vs_schur"] <= 1e-8


class TestRegularity:
    def test_examples(self):
        assert check_regularity_consequence(instance(E1, np.eye(2), J=np.diag([1, -1])))
        neutral = instance(E1, np.eye(2), J=[[0, 1], [1, 0]])
        r = analyze_w_inverse(neutral)
        assert r.ran_A_nonnegative and not r.range_sum_full and not r.solvable
        assert check_regularity_consequence(neutral)
        assert check_regularity_consequence(instance(np.zeros((2, 1)), np.eye(2), J=np.diag([1, -1])))

    def test_requires_identity_weight(self):
        with pytest.raises(ValueError):
            check_regularity_consequence(instance(E1, np.diag([1, -1])))

    @given(seeds)
    def test_generated(self, seed):
        rng = np.random.default_rng(seed)
        kind = ("positive", "neutral", "random")[seed % 3]
        inst = identity_weight_instance(rng, kind)
        r = analyze_w_inverse(inst)
        assert r.consistent
        assert r.solvable == (kind == "positive") or kind == "random"
        assert check_regularity_consequence(inst)
