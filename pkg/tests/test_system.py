"""Difference matrix, regularized normal system, and the cached solve."""

from __future__ import annotations

import numpy as np
import pytest

from evdeblur.lowerlevel import (DifferenceSystem, apply_difference_transpose,
                                 build_difference_system, difference_matrix,
                                 solve_dynamics)


def gaussian_elimination(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Straight-line dense solve with partial pivoting (independent oracle)."""
    a = np.array(a, dtype=np.float64)
    b = np.array(b, dtype=np.float64)
    n = a.shape[0]
    for col in range(n - 1):
        pivot = col + int(np.argmax(np.abs(a[col:, col])))
        if pivot != col:
            a[[col, pivot]] = a[[pivot, col]]
            b[[col, pivot]] = b[[pivot, col]]
        for row in range(col + 1, n):
            factor = a[row, col] / a[col, col]
            a[row, col:] -= factor * a[col, col:]
            b[row] -= factor * b[col]
    x = np.zeros(n)
    for row in range(n - 1, -1, -1):
        x[row] = (b[row] - a[row, row + 1:] @ x[row + 1:]) / a[row, row]
    return x


def dense_difference(n: int) -> np.ndarray:
    # Built independently of the module under test.
    return np.eye(n - 1, n, k=1) - np.eye(n - 1, n)


# ---------------------------------------------------------------------------
# assembly


def test_difference_matrix_small():
    assert np.array_equal(difference_matrix(3),
                          [[-1.0, 1.0, 0.0], [0.0, -1.0, 1.0]])
    with pytest.raises(ValueError, match="n >= 2"):
        difference_matrix(1)


def test_matrix_hand_values_n3():
    system = build_difference_system(3, 1e-3)
    expect = np.array([[1.001, -1.0, 0.0],
                       [-1.0, 2.001, -1.0],
                       [0.0, -1.0, 1.001]])
    assert np.allclose(system.matrix, expect, atol=1e-15)


def test_matrix_smallest_case_n2():
    lam = 0.25
    system = build_difference_system(2, lam)
    assert np.allclose(system.matrix, [[1.0 + lam, -1.0], [-1.0, 1.0 + lam]],
                       atol=1e-15)


def test_matrix_equals_normal_equations():
    for n in (2, 3, 5, 9):
        lam = 0.01
        system = build_difference_system(n, lam)
        a = dense_difference(n)
        assert np.allclose(system.matrix, a.T @ a + lam * np.eye(n), atol=1e-14)


def test_eigenvalues_at_least_lambda2():
    for n in (2, 4, 12):
        lam = 1e-3
        system = build_difference_system(n, lam)
        eigs = np.linalg.eigvalsh(system.matrix)
        assert eigs.min() >= lam - 1e-12


def test_solve_map_residual():
    for n in (2, 3, 10, 25):
        system = build_difference_system(n, 1e-3)
        a_t = dense_difference(n).T
        residual = system.matrix @ system.solve_map - a_t
        for j in range(n - 1):
            scale = max(1.0, np.abs(a_t[:, j]).max())
            assert np.abs(residual[:, j]).max() < 1e-12 * scale


def test_curvature_columns_equal_scaled_inverse():
    # Two routes to the same object: the assembled pattern columns versus
    # lambda2 * K^{-1}, which they equal identically since the pattern matrix
    # is -D and K^{-1} D^T D = I - lambda2 K^{-1}.
    for n in (2, 3, 7):
        lam = 1e-3
        system = build_difference_system(n, lam)
        direct = lam * np.linalg.inv(system.matrix)
        assert np.allclose(system.curvature_columns, direct, atol=1e-12)


def test_build_rejects_bad_parameters():
    with pytest.raises(ValueError, match="2 frames"):
        build_difference_system(1, 1e-3)
    with pytest.raises(ValueError, match="lambda2"):
        build_difference_system(3, 0.0)


def test_system_is_immutable():
    system = build_difference_system(3, 1e-3)
    with pytest.raises(ValueError):
        system.matrix[0, 0] = 5.0


# ---------------------------------------------------------------------------
# solving


def test_solve_zero_rhs():
    system = build_difference_system(6, 1e-3)
    assert np.array_equal(solve_dynamics(system, np.zeros(5)), np.zeros(6))


def test_solve_hand_case_n2():
    system = build_difference_system(2, 1e-3)
    u = solve_dynamics(system, np.array([1.0]))
    # [[1.001, -1], [-1, 1.001]] u = (-1, 1) has u = (-1, 1) / 2.001.
    assert np.allclose(u, [-1.0 / 2.001, 1.0 / 2.001], rtol=1e-13)


def test_solve_matches_dense_oracle():
    rng = np.random.default_rng(10)
    for _ in range(30):
        n = int(rng.integers(2, 51))
        lam = float(rng.uniform(1e-4, 1e-1))
        system = build_difference_system(n, lam)
        b = rng.normal(size=n - 1)
        u = solve_dynamics(system, b)
        oracle = gaussian_elimination(system.matrix, dense_difference(n).T @ b)
        assert np.linalg.norm(u - oracle) < 1e-10 * max(1.0, np.linalg.norm(oracle))


def test_solve_linearity():
    rng = np.random.default_rng(11)
    system = build_difference_system(8, 1e-3)
    b = rng.normal(size=7)
    u = solve_dynamics(system, b)
    assert np.allclose(solve_dynamics(system, -b), -u, atol=1e-13)
    assert np.allclose(solve_dynamics(system, 2.5 * b), 2.5 * u, rtol=1e-12)


def test_cached_factor_is_bit_identical():
    rng = np.random.default_rng(12)
    b = rng.normal(size=9)
    system = build_difference_system(10, 1e-3)
    first = solve_dynamics(system, b)
    again = solve_dynamics(system, b)
    rebuilt = solve_dynamics(build_difference_system(10, 1e-3), b)
    assert np.array_equal(first, again)
    assert np.array_equal(first, rebuilt)


def test_solve_rejects_wrong_length():
    system = build_difference_system(4, 1e-3)
    with pytest.raises(ValueError, match="increments"):
        solve_dynamics(system, np.zeros(4))


def test_apply_inverse():
    rng = np.random.default_rng(13)
    system = build_difference_system(7, 1e-3)
    x = rng.normal(size=7)
    recovered = system.apply_inverse(system.matrix @ x)
    assert np.allclose(recovered, x, rtol=1e-10)
    with pytest.raises(ValueError, match="length-7"):
        system.apply_inverse(np.zeros(6))


def test_apply_difference_transpose_matches_dense():
    rng = np.random.default_rng(14)
    for n in (2, 3, 8):
        b = rng.normal(size=n - 1)
        assert np.allclose(apply_difference_transpose(b),
                           dense_difference(n).T @ b, atol=1e-14)
