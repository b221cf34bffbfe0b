import numpy as np
import pytest
from numpy.testing import assert_allclose

from convexweight import hermitian as hm
from convexweight.solver import kernels
from convexweight.solver.kernels import _numpy_impl
from convexweight.solver.program import ConeProgram, SolverFailure
from conftest import PAULI_Z, rand_herm, rand_psd


def lambda_min_program(h):
    """max t s.t. t * I <= h, with t free via a split scalar pair."""
    n = h.shape[0]
    p = ConeProgram()
    tp = p.add_scalar("tp")
    tm = p.add_scalar("tm")
    p.add_objective(tp, np.array([[1.0]]))
    p.add_objective(tm, np.array([[-1.0]]))
    p.add_dominance([(1.0, tp, ("eye", n)), (-1.0, tm, ("eye", n))], h, "s")
    return p


class TestBasicPrograms:
    def test_dominance_saturates(self):
        p = ConeProgram()
        x = p.add_block(2, "x")
        p.add_objective(x, np.eye(2))
        p.add_dominance([(1.0, x, None)], np.diag([2.0, 3.0]), "s")
        r = p.solve()
        assert r.status == "optimal"
        assert abs(r.value - 5.0) <= 1e-6
        assert_allclose(r.primal("x"), np.diag([2.0, 3.0]), atol=1e-5)

    def test_positive_part(self):
        p = ConeProgram()
        x = p.add_block(2, "x")
        p.add_objective(x, PAULI_Z)
        p.add_dominance([(1.0, x, None)], np.eye(2), "s")
        r = p.solve()
        assert r.status == "optimal"
        assert abs(r.value - 1.0) <= 1e-6
        assert_allclose(r.primal("x"), np.diag([1.0, 0.0]), atol=1e-5)

    def test_lambda_min_matches_eigh(self, rng):
        for _ in range(10):
            n = int(rng.integers(2, 6))
            h = rand_herm(rng, n, scale=rng.uniform(0.2, 5.0))
            r = lambda_min_program(h).solve()
            assert r.status == "optimal"
            assert abs(r.value - np.linalg.eigvalsh(h).min()) <= 1e-7 * (
                1 + hm.operator_norm(h))

    def test_deterministic(self, rng):
        h = rand_herm(rng, 3)
        r1 = lambda_min_program(h).solve()
        r2 = lambda_min_program(h).solve()
        assert r1.value == r2.value
        assert r1.iterations == r2.iterations


class TestStatuses:
    def test_primal_infeasible_trace(self):
        p = ConeProgram()
        x = p.add_block(2, "x")
        p.add_row({x: np.eye(2)}, -1.0)
        assert p.solve().status == "primal_infeasible"

    def test_primal_infeasible_inconsistent_rows(self):
        # q * I pinned to a non-scalar matrix: detected at compile time
        p = ConeProgram()
        q = p.add_scalar("q")
        p.add_block_equality([(1.0, q, ("eye", 2))], np.diag([1.0, 2.0]))
        assert p.solve().status == "primal_infeasible"

    def test_dual_infeasible_unbounded(self):
        p = ConeProgram()
        x = p.add_block(2, "x")
        p.add_objective(x, np.eye(2))
        p.add_row({x: np.diag([1.0, 0.0])}, 1.0)
        assert p.solve().status == "dual_infeasible"

    def test_solve_or_raise(self):
        p = ConeProgram()
        x = p.add_block(2, "x")
        p.add_row({x: np.eye(2)}, -1.0)
        with pytest.raises(SolverFailure):
            p.solve_or_raise()


def bounded_random_program(rng, n=4, m=3):
    p = ConeProgram()
    x = p.add_block(n, "x")
    x0 = rand_psd(rng, n) + 0.1 * np.eye(n)
    c = rand_herm(rng, n)
    p.add_objective(x, c)
    rows = [np.eye(n, dtype=complex)] + [rand_herm(rng, n) for _ in range(m)]
    for f in rows:
        p.add_row({x: f}, hm.hs_inner(f, x0))
    return p, c, rows, x0


class TestOptimalityCertificates:
    def test_weak_duality_and_slackness(self, rng):
        for _ in range(15):
            p, c, rows, x0 = bounded_random_program(rng)
            r = p.solve()
            assert r.status == "optimal"
            z = sum(yk * f for yk, f in zip(r.y, rows)) - c
            x = r.primal("x")
            scale = max(1.0, hm.operator_norm(c))
            # dual feasibility, complementary slackness, matching values
            assert np.linalg.eigvalsh(z).min() >= -1e-7 * scale
            assert np.linalg.eigvalsh(x).min() >= -1e-9
            assert abs(hm.hs_inner(x, z)) <= 1e-6 * scale
            dual_val = sum(yk * hm.hs_inner(f, x0) for yk, f in zip(r.y, rows))
            assert dual_val - r.value >= -1e-7 * scale
            assert abs(dual_val - r.value) <= 1e-6 * scale

    def test_scaling_equivariance(self, rng):
        p1, c, rows, x0 = bounded_random_program(rng)
        r1 = p1.solve()
        scale = 3.7
        p2 = ConeProgram()
        x = p2.add_block(4, "x")
        p2.add_objective(x, scale * c)
        for f in rows:
            p2.add_row({x: f}, hm.hs_inner(f, x0))
        r2 = p2.solve()
        assert abs(r2.value - scale * r1.value) <= 1e-6 * (1 + abs(r1.value))
        assert np.abs(r2.primal("x") - r1.primal("x")).max() <= 1e-5

    def test_redundant_rows_tolerated(self, rng):
        p = ConeProgram()
        x = p.add_block(3, "x")
        p.add_objective(x, np.eye(3))
        f = rand_herm(rng, 3)
        p.add_row({x: np.eye(3)}, 1.0)
        p.add_row({x: f}, hm.hs_inner(f, np.eye(3) / 3))
        p.add_row({x: 2 * f}, 2 * hm.hs_inner(f, np.eye(3) / 3))  # dependent
        r = p.solve()
        assert r.status == "optimal"
        assert abs(r.value - 1.0) <= 1e-6

    def test_multi_block(self, rng):
        # max tr(X) + tr(Y) with X <= A, Y <= B decouples blockwise
        a, b = rand_psd(rng, 2), rand_psd(rng, 3)
        p = ConeProgram()
        x = p.add_block(2, "x")
        y = p.add_block(3, "y")
        p.add_objective(x, np.eye(2))
        p.add_objective(y, np.eye(3))
        p.add_dominance([(1.0, x, None)], a, "sx")
        p.add_dominance([(1.0, y, None)], b, "sy")
        r = p.solve()
        want = np.trace(a).real + np.trace(b).real
        assert abs(r.value - want) <= 1e-6 * (1 + want)

    def test_gap_tolerance_override(self, rng, monkeypatch):
        monkeypatch.setenv("CW_SOLVER_TOL", "1e-4")
        p, *_ = bounded_random_program(rng)
        loose = p.solve()
        assert loose.status == "optimal"
        assert loose.gap <= 1e-4


class TestDualExtraction:
    def test_dominance_dual_is_witness(self, rng):
        # max <C, X> s.t. X <= B: dual slack on the slack block is Y >= 0
        # with value <B, Y>
        c = rand_herm(rng, 3)
        b = rand_psd(rng, 3) + 0.1 * np.eye(3)
        p = ConeProgram()
        x = p.add_block(3, "x")
        p.add_objective(x, c)
        p.add_dominance([(1.0, x, None)], b, "s")
        r = p.solve()
        yw = r.dual("s")
        assert np.linalg.eigvalsh(yw).min() >= -1e-8
        assert abs(hm.hs_inner(b, yw) - r.value) <= 1e-6 * (1 + abs(r.value))


class TestKernels:
    def test_agree_with_numpy(self, rng):
        for n, m in [(2, 3), (5, 7), (8, 4)]:
            a = np.ascontiguousarray(rng.normal(size=(m, n, n)))
            a = (a + a.transpose(0, 2, 1)) / 2
            w = rand_psd(rng, n).real
            w = np.ascontiguousarray((w + w.T) / 2)
            y = rng.normal(size=m)
            x = np.ascontiguousarray(rand_herm(rng, n).real)
            assert_allclose(kernels.gram_conjugated(a, w),
                            _numpy_impl.gram_conjugated(a, w), atol=1e-10)
            assert_allclose(kernels.weighted_sum(a, y),
                            _numpy_impl.weighted_sum(a, y), atol=1e-12)
            assert_allclose(kernels.inner_products(a, x),
                            _numpy_impl.inner_products(a, x), atol=1e-12)
