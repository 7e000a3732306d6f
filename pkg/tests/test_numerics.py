"""Tests for the dense linear-algebra kernels."""

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from tmiqp.numerics import (SingularMatrixError, min_eigenvalue_symmetric,
                            solve_stein, solve_symmetric_indefinite)


def test_stein_scalar_closed_form():
    # P - a^2 P = w  =>  P = w / (1 - a^2); a=0.5, w=1 gives 4/3
    sol = solve_stein([[0.5]], [[1.0]])
    assert sol.P.shape == (1, 1)
    assert abs(sol.P[0, 0] - 4.0 / 3.0) < 1e-12
    assert sol.residual_norm < 1e-12


def test_stein_unstable_scalar():
    # a=2: P - 4P = w => P = -w/3, perfectly well posed despite |a|>1
    sol = solve_stein([[2.0]], [[3.0]])
    assert abs(sol.P[0, 0] + 1.0) < 1e-12


def test_stein_matches_scipy_lyapunov_oracle():
    rng = np.random.default_rng(3)
    for _ in range(10):
        n = rng.integers(2, 6)
        A = rng.normal(size=(n, n))
        A *= 0.9 / max(1.0, np.abs(np.linalg.eigvals(A)).max())
        W = rng.normal(size=(n, n))
        W = W + W.T
        sol = solve_stein(A, W)
        # scipy solves X - a X a' = q; our P - A'PA = W maps via a = A'
        ref = scipy.linalg.solve_discrete_lyapunov(A.T, W)
        assert np.allclose(sol.P, ref, atol=1e-9)


def test_stein_singular_map_rejected():
    with pytest.raises(SingularMatrixError):
        solve_stein(np.eye(2), np.eye(2))


def test_stein_input_validation():
    with pytest.raises(ValueError):
        solve_stein(np.eye(2), np.eye(3))
    with pytest.raises(ValueError):
        solve_stein(np.eye(2), [[0.0, 1.0], [0.0, 0.0]])  # asymmetric W
    with pytest.raises(ValueError):
        solve_stein([[np.nan]], [[1.0]])


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 5), st.integers(0, 10_000))
def test_stein_residual_property(n, seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(n, n))
    A *= 0.8 / max(1.0, np.abs(np.linalg.eigvals(A)).max())
    W = rng.normal(size=(n, n))
    W = W + W.T
    sol = solve_stein(A, W)
    assert sol.residual_norm < 1e-8 * (1.0 + np.abs(W).max())
    assert np.allclose(sol.P, sol.P.T)


def test_min_eigenvalue_symmetric():
    assert abs(min_eigenvalue_symmetric(np.diag([3.0, -2.0, 7.0])) + 2.0) < 1e-14
    # asymmetric input is symmetrized first
    M = np.array([[1.0, 4.0], [0.0, 1.0]])
    assert abs(min_eigenvalue_symmetric(M) + 1.0) < 1e-12


def test_symmetric_indefinite_solve():
    rng = np.random.default_rng(11)
    n = 8
    K = rng.normal(size=(n, n))
    K = K + K.T  # indefinite with high probability
    b = rng.normal(size=n)
    x = solve_symmetric_indefinite(K, b)
    assert np.allclose(K @ x, b, atol=1e-8)


def test_symmetric_indefinite_singular_raises():
    K = np.zeros((3, 3))
    with pytest.raises(SingularMatrixError):
        solve_symmetric_indefinite(K, np.ones(3))


def test_symmetric_indefinite_dimension_mismatch():
    with pytest.raises(ValueError):
        solve_symmetric_indefinite(np.eye(3), np.ones(2))
