"""Lemke solver tests against brute-force active-set enumeration."""

import numpy as np
import pytest

from ccto import (BUILDERS, DimensionMismatch, DimensionTooLarge, LcpInstance,
                  NoSolution, complementarity_residual,
                  enumerate_lcp_solutions, is_p_matrix, solve_lcp)
from conftest import random_p_matrix


def test_trivial_nonnegative_q():
    inst = LcpInstance(F=np.eye(2), q=np.array([1.0, 2.0]))
    sol = solve_lcp(inst)
    assert np.allclose(sol.lam, 0.0)
    assert np.allclose(sol.y, inst.q)
    assert sol.residual == 0.0


def test_simple_negative_q():
    inst = LcpInstance(F=np.eye(1), q=np.array([-3.0]))
    sol = solve_lcp(inst)
    assert np.allclose(sol.lam, [3.0])
    assert np.allclose(sol.y, [0.0])


def test_degenerate_flag():
    sol = solve_lcp(LcpInstance(F=np.eye(1), q=np.array([0.0])))
    assert sol.degenerate


def test_no_solution_raises():
    # y = -lam - 1 >= 0 requires lam <= -1, impossible with lam >= 0.
    inst = LcpInstance(F=np.array([[-1.0]]), q=np.array([-1.0]))
    with pytest.raises(NoSolution):
        solve_lcp(inst)


def test_residual_helper():
    assert complementarity_residual([1.0, 0.0], [0.0, 2.0]) == 0.0
    assert complementarity_residual([1.0], [0.5]) == 0.5
    assert complementarity_residual([-0.25], [1.0]) == 0.25
    with pytest.raises(DimensionMismatch):
        complementarity_residual([1.0], [1.0, 2.0])


def test_is_p_matrix():
    assert is_p_matrix(np.eye(3))
    assert not is_p_matrix(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert not is_p_matrix(np.array([[0.0]]))
    with pytest.raises(DimensionMismatch):
        is_p_matrix(np.ones((2, 3)))
    with pytest.raises(DimensionTooLarge):
        is_p_matrix(np.eye(13))


def test_random_p_matrix_instances_match_enumeration():
    rng = np.random.default_rng(20240817)
    for _ in range(200):
        n = int(rng.integers(1, 5))
        F = random_p_matrix(rng, n)
        assert is_p_matrix(F)
        q = rng.uniform(-2.0, 2.0, n)
        inst = LcpInstance(F=F, q=q)
        sol = solve_lcp(inst)
        assert sol.residual <= 1e-8
        assert np.min(sol.lam) >= 0.0 and np.min(sol.y) >= 0.0
        assert np.allclose(F @ sol.lam + q, sol.y, atol=1e-8)
        enum = enumerate_lcp_solutions(inst)
        # A P-matrix LCP has exactly one solution.
        assert len(enum) == 1
        assert np.allclose(sol.lam, enum[0].lam, atol=1e-8)


def test_benchmark_f_matrices_from_start_state():
    for name, build in BUILDERS.items():
        p = build()
        m = p.model
        q = m.D @ p.x_s + m.h
        sol = solve_lcp(LcpInstance(F=m.F, q=q))
        assert sol.residual <= 1e-8, name
        assert complementarity_residual(sol.lam, sol.y) <= 1e-8, name


def test_determinism():
    rng = np.random.default_rng(7)
    F = random_p_matrix(rng, 4)
    q = rng.uniform(-1.0, 1.0, 4)
    a = solve_lcp(LcpInstance(F=F, q=q))
    b = solve_lcp(LcpInstance(F=F, q=q))
    assert np.array_equal(a.lam, b.lam) and np.array_equal(a.y, b.y)
