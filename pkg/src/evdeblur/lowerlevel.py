"""The lower-level linear problem shared by every pixel.

The dynamics-only representation ``u`` of a pixel solves a ridge-regularized
least-squares fit of its consecutive-frame increments:

    minimize  0.5 * || D u - b ||^2  +  0.5 * lambda2 * || u ||^2

with ``D`` the (n-1) x n forward-difference matrix.  The normal matrix
``D^T D + lambda2 * I`` is symmetric tridiagonal and positive definite, so one
Cholesky factorization per frame count serves every pixel; the closed-form
solution is ``u = (D^T D + lambda2 I)^{-1} D^T b``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded

from .events import _freeze


def difference_matrix(n: int) -> np.ndarray:
    """Dense (n-1) x n forward-difference matrix: rows (..., -1, +1, ...)."""
    if n < 2:
        raise ValueError("difference matrix needs n >= 2")
    mat = np.zeros((n - 1, n))
    rows = np.arange(n - 1)
    mat[rows, rows] = -1.0
    mat[rows, rows + 1] = 1.0
    return mat


def apply_difference_transpose(increments: np.ndarray) -> np.ndarray:
    """Compute D^T b without materializing D."""
    b = np.asarray(increments, dtype=np.float64)
    out = np.empty(b.size + 1)
    out[0] = -b[0]
    out[-1] = b[-1]
    out[1:-1] = b[:-1] - b[1:]
    return out


@dataclass(frozen=True)
class DifferenceSystem:
    """Factorized normal system of the lower-level problem.

    Attributes
    ----------
    n_frames : int
    lambda2 : float
    matrix : np.ndarray
        Dense normal matrix, kept for inspection and tests.
    solve_map : np.ndarray
        The n x (n-1) map sending increments ``b`` to the solution ``u``.
    curvature_columns : np.ndarray
        Column ``i`` is the direction along which the reduced objective's
        second derivative in ``z_i`` acts: the solve map applied to the
        ``i``-th increment-Jacobian column pattern, plus the ``i``-th unit
        vector.
    """

    n_frames: int
    lambda2: float
    matrix: np.ndarray
    solve_map: np.ndarray
    curvature_columns: np.ndarray
    _factor: np.ndarray

    def __post_init__(self) -> None:
        for name in ("matrix", "solve_map", "curvature_columns", "_factor"):
            object.__setattr__(self, name, _freeze(getattr(self, name)))

    def apply_inverse(self, rhs: np.ndarray) -> np.ndarray:
        """Solve the normal system against a full-length right-hand side."""
        rhs = np.asarray(rhs, dtype=np.float64)
        if rhs.shape[0] != self.n_frames:
            raise ValueError(f"expected a length-{self.n_frames} right-hand side")
        return cho_solve_banded((self._factor, False), rhs)


def build_difference_system(n_frames: int, lambda2: float) -> DifferenceSystem:
    """Assemble and factorize the normal system for ``n_frames`` frames.

    The tridiagonal stencil is written down directly (diagonal
    ``1 + lambda2, 2 + lambda2, ..., 2 + lambda2, 1 + lambda2``, off-diagonals
    ``-1``) rather than formed as a matrix product.  The banded Cholesky
    factorization needs no pivoting since the matrix is positive definite for
    any ``lambda2 > 0``.
    """
    if n_frames < 2:
        raise ValueError("need at least 2 frames")
    if lambda2 <= 0:
        raise ValueError("lambda2 must be > 0")
    n = n_frames
    diag = np.full(n, 2.0 + lambda2)
    diag[0] = diag[-1] = 1.0 + lambda2
    dense = np.diag(diag)
    off = np.arange(n - 1)
    dense[off, off + 1] = -1.0
    dense[off + 1, off] = -1.0

    banded = np.zeros((2, n))
    banded[0, 1:] = -1.0
    banded[1, :] = diag
    factor = cholesky_banded(banded)

    solve_map = cho_solve_banded((factor, False), difference_matrix(n).T)

    # Column pattern of the increment Jacobian for variable i: +1 at row i
    # (when i < n-1) and -1 at row i-1 (when i >= 1).
    pattern = np.zeros((n - 1, n))
    idx = np.arange(n)
    head = idx[idx < n - 1]
    pattern[head, head] = 1.0
    tail = idx[idx >= 1]
    pattern[tail - 1, tail] = -1.0
    curvature = solve_map @ pattern + np.eye(n)

    return DifferenceSystem(n_frames=n, lambda2=float(lambda2), matrix=dense,
                            solve_map=solve_map, curvature_columns=curvature,
                            _factor=factor)


def solve_dynamics(system: DifferenceSystem, increments: np.ndarray) -> np.ndarray:
    """Solve for the dynamics vector ``u`` given increment targets ``b``."""
    b = np.asarray(increments, dtype=np.float64)
    if b.shape != (system.n_frames - 1,):
        raise ValueError(f"expected {system.n_frames - 1} increments")
    return system.apply_inverse(apply_difference_transpose(b))
