"""Per-pixel solvers for the reduced deblurring objective.

Substituting the lower level's closed-form solution ``u(z)`` into the upper
level leaves a smooth objective in the per-frame kernel exponents ``z``:

    J(z) = 0.5 * || u(z) + k(z) - d ||^2  +  0.5 * lambda1 * || z ||^2,

with ``d`` the observed log intensities and ``k(z)`` the log kernel.  Because
``u`` is linear in the increments ``b(z)`` and ``b``, ``k`` are separable in
the ``z_i``, the gradient and Hessian have closed forms:

    grad J = M^T r + lambda1 * z,         M = S B'(z) + diag(k'(z)),
    Hess J = M^T M + diag(k_i''(z) * (c_i . r)) + lambda1 * I,

where ``r = u + k - d`` is the residual, ``S`` the lower-level solve map,
``B'`` the increment Jacobian, and ``c_i`` the system's curvature columns.
``newton_solve`` minimizes J with a damped Newton method (Levenberg shifts
until the shifted Hessian factorizes, Armijo backtracking, gradient-step
fallback); ``lambda1_lower_bound`` evaluates the regularization weight above
which J is strictly convex on a sup-norm ball, making the solve globally
well-posed.  ``medi_baseline`` implements the single-exponent EDI-style
reference method used for comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .kernel import (KernelEval, PixelProblem, eval_kernel, log_kernel,
                     log_increments_jacobian)
from .lowerlevel import DifferenceSystem, difference_matrix

_MAX_BACKTRACKS = 30
_MAX_SHIFT_TRIES = 80
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class NewtonConfig:
    """Damped-Newton settings; defaults match the CLI defaults."""

    grad_tol: float = 1e-8
    max_iters: int = 50
    armijo_c: float = 1e-4
    backtrack_factor: float = 0.5
    levenberg_floor: float = 1e-8
    z0: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.grad_tol <= 0:
            raise ValueError("grad_tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not 0 < self.armijo_c < 1:
            raise ValueError("armijo_c must be in (0, 1)")
        if not 0 < self.backtrack_factor < 1:
            raise ValueError("backtrack_factor must be in (0, 1)")
        if self.levenberg_floor <= 0:
            raise ValueError("levenberg_floor must be positive")


@dataclass
class PixelSolution:
    """Result of one pixel's solve.

    ``z`` holds the per-frame kernel exponents, ``dynamics`` the lower-level
    solution at ``z``, and ``log_reconstruction`` the deblurred log
    intensities ``d - k(z)``.  The traces record the gradient norm and
    objective value at the initial point and after each accepted step.
    """

    z: np.ndarray
    dynamics: np.ndarray
    log_reconstruction: np.ndarray
    grad_norm_trace: np.ndarray
    objective_trace: np.ndarray
    converged: bool
    iterations: int


@dataclass(frozen=True)
class ObjectiveEval:
    """Objective value with residual, gradient, coupling matrix, Hessian."""

    value: float
    residual: np.ndarray
    gradient: np.ndarray
    coupling: np.ndarray
    hessian: np.ndarray
    dynamics: np.ndarray
    kernel: KernelEval = field(repr=False)


def _check_z(problem: PixelProblem, z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (problem.n_frames,):
        raise ValueError(f"z must have shape ({problem.n_frames},)")
    return z


def _check_system(problem: PixelProblem, system: DifferenceSystem) -> None:
    if system.n_frames != problem.n_frames:
        raise ValueError("system and problem disagree on the frame count")
    if system.lambda2 != problem.lambda2:
        raise ValueError("system and problem disagree on lambda2")


def _residual_parts(problem: PixelProblem, system: DifferenceSystem,
                    kernel_values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # The residual u + k - d equals -lambda2 * Kinv (d - k) identically
    # (substitute u = Kinv D^T D (d - k) and D^T D = K - lambda2 I).  Solving
    # against d - k directly avoids the 1/lambda2 noise amplification the
    # u-then-subtract route suffers, keeping the objective smooth enough for
    # the line search to resolve late-stage Newton steps.
    sharp = problem.log_intensities - kernel_values
    residual = -system.lambda2 * system.apply_inverse(sharp)
    return sharp + residual, residual


def objective(problem: PixelProblem, system: DifferenceSystem,
              z: np.ndarray) -> float:
    """Reduced objective J(z); cheap path without derivatives."""
    z = _check_z(problem, z)
    _check_system(problem, system)
    _, residual = _residual_parts(problem, system, log_kernel(problem, z))
    return 0.5 * float(residual @ residual) + 0.5 * problem.lambda1 * float(z @ z)


def evaluate(problem: PixelProblem, system: DifferenceSystem,
             z: np.ndarray) -> ObjectiveEval:
    """Objective, residual, gradient, coupling matrix, and Hessian at ``z``."""
    z = _check_z(problem, z)
    _check_system(problem, system)
    ker = eval_kernel(problem, z, order=2)
    dynamics, residual = _residual_parts(problem, system, ker.values)
    value = 0.5 * float(residual @ residual) + 0.5 * problem.lambda1 * float(z @ z)

    n = problem.n_frames
    jac = np.zeros((n - 1, n))
    rows = np.arange(n - 1)
    jac[rows, rows] = ker.deriv[:-1]
    jac[rows, rows + 1] = -ker.deriv[1:]
    coupling = system.solve_map @ jac + np.diag(ker.deriv)

    grad = coupling.T @ residual + problem.lambda1 * z
    diag_term = ker.second_deriv * (system.curvature_columns.T @ residual)
    hess = coupling.T @ coupling + np.diag(diag_term) + problem.lambda1 * np.eye(n)
    return ObjectiveEval(value=value, residual=residual, gradient=grad,
                         coupling=coupling, hessian=hess, dynamics=dynamics,
                         kernel=ker)


def gradient(problem: PixelProblem, system: DifferenceSystem,
             z: np.ndarray) -> np.ndarray:
    return evaluate(problem, system, z).gradient


def hessian(problem: PixelProblem, system: DifferenceSystem,
            z: np.ndarray) -> np.ndarray:
    return evaluate(problem, system, z).hessian


def lambda1_lower_bound(problem: PixelProblem, system: DifferenceSystem,
                        delta: float) -> float:
    """Regularization weight above which J is strictly convex on a ball.

    For any ``z`` with sup-norm at most ``delta``, the Hessian's diagonal
    correction is bounded in magnitude by the returned value; choosing
    ``lambda1`` strictly above it makes the Hessian positive definite on the
    whole ball.  Event-free pixels yield 0 (the objective is already convex).
    """
    if delta < 0:
        raise ValueError("delta must be >= 0")
    if system.n_frames != problem.n_frames:
        raise ValueError("system and problem disagree on the frame count")
    curv_max = 0.0
    traj_max = 0.0
    for traj in problem.trajectories:
        lo = float(traj.values.min())
        hi = float(traj.values.max())
        curv_max = max(curv_max, 0.5 * (hi - lo) ** 2)
        traj_max = max(traj_max, abs(lo), hi)
    col_norm = float(np.abs(system.curvature_columns).sum(axis=0).max())
    map_norm = float(np.abs(system.solve_map).sum(axis=1).max())
    d_norm = float(np.abs(problem.log_intensities).max())
    residual_norm = map_norm * (2.0 * d_norm + 2.0 * traj_max * delta) \
        + traj_max * delta + d_norm
    return col_norm * curv_max * residual_norm


def _newton_direction(hess: np.ndarray, grad: np.ndarray,
                      floor: float) -> np.ndarray | None:
    shift = 0.0
    identity = np.eye(hess.shape[0])
    for attempt in range(_MAX_SHIFT_TRIES + 1):
        try:
            factor = cho_factor(hess + shift * identity, lower=True)
        except np.linalg.LinAlgError:
            shift = floor * 4.0 ** attempt
            continue
        return cho_solve(factor, -grad)
    return None


def newton_solve(problem: PixelProblem, system: DifferenceSystem,
                 config: NewtonConfig | None = None) -> PixelSolution:
    """Minimize the reduced objective with a damped Newton iteration.

    From ``z0`` (zeros by default), each iteration solves the Newton system,
    shifting the Hessian by growing Levenberg multiples of
    ``levenberg_floor`` until it factorizes, then backtracks along the
    direction under the Armijo condition.  If 30 halvings fail, one
    gradient-descent step of size ``1 / (1 + ||Hess||_inf)`` is tried; if that
    fails too the solve stops unconverged.  Convergence is declared when the
    gradient 2-norm drops below ``grad_tol``.
    """
    cfg = config or NewtonConfig()
    n = problem.n_frames
    if cfg.z0 is None:
        z = np.zeros(n)
    else:
        z = _check_z(problem, cfg.z0).copy()

    current = evaluate(problem, system, z)
    grad_trace = [float(np.linalg.norm(current.gradient))]
    obj_trace = [current.value]
    iterations = 0
    converged = grad_trace[-1] < cfg.grad_tol

    while not converged and iterations < cfg.max_iters:
        direction = _newton_direction(current.hessian, current.gradient,
                                      cfg.levenberg_floor)
        # Sufficient decrease cannot be certified once the predicted drop
        # falls below the floating-point resolution of J; the allowance keeps
        # the full Newton step acceptable in that regime.
        allowance = 4.0 * np.finfo(np.float64).eps * max(1.0, abs(current.value))
        accepted = None
        if direction is not None:
            slope = float(current.gradient @ direction)
            step = 1.0
            for _ in range(_MAX_BACKTRACKS):
                candidate = z + step * direction
                value = objective(problem, system, candidate)
                if value <= current.value + cfg.armijo_c * step * slope + allowance:
                    accepted = candidate
                    break
                step *= cfg.backtrack_factor
        if accepted is None:
            hess_norm = float(np.abs(current.hessian).sum(axis=1).max())
            step = 1.0 / (1.0 + hess_norm)
            candidate = z - step * current.gradient
            value = objective(problem, system, candidate)
            decrease = cfg.armijo_c * step * float(current.gradient @ current.gradient)
            if value <= current.value - decrease + allowance:
                accepted = candidate
            else:
                break
        z = accepted
        iterations += 1
        current = evaluate(problem, system, z)
        grad_trace.append(float(np.linalg.norm(current.gradient)))
        obj_trace.append(current.value)
        converged = grad_trace[-1] < cfg.grad_tol

    return PixelSolution(
        z=z,
        dynamics=current.dynamics,
        log_reconstruction=current.dynamics - current.residual,
        grad_norm_trace=np.asarray(grad_trace),
        objective_trace=np.asarray(obj_trace),
        converged=bool(converged),
        iterations=iterations,
    )


def medi_baseline(problem: PixelProblem, system: DifferenceSystem,
                  z_grid: np.ndarray, refine: bool = True) -> PixelSolution:
    """Single-exponent mEDI reference solve.

    A common scalar exponent ties all frames together: the stacked system
    ``[D; I] v = [z * gap_sums; d - k(z 1)]`` is solved for the sharp log
    intensities ``v`` in the least-squares sense, and ``z`` is scored by the
    squared data misfit of the middle frame.  The best grid value is refined
    by golden-section search between its grid neighbors unless ``refine`` is
    false.  Returns a :class:`PixelSolution` with the scalar broadcast into
    ``z``; the dynamics slot is zero and the traces are placeholders.
    """
    grid = np.atleast_1d(np.asarray(z_grid, dtype=np.float64))
    if grid.size < 1:
        raise ValueError("z_grid must contain at least one value")
    if system.n_frames != problem.n_frames:
        raise ValueError("system and problem disagree on the frame count")
    n = problem.n_frames
    stacked = np.vstack([difference_matrix(n), np.eye(n)])
    gaps = problem.gap_sums if problem.gap_sums is not None else np.zeros(n - 1)
    d = problem.log_intensities
    middle = (n + 1) // 2 - 1
    evaluations = 0

    best = {"score": np.inf, "z": float(grid[0]), "sharp": None}

    def score(z_scalar: float) -> float:
        nonlocal evaluations
        evaluations += 1
        kernel_values = log_kernel(problem, np.full(n, z_scalar))
        rhs = np.concatenate([z_scalar * gaps, d - kernel_values])
        sharp = np.linalg.lstsq(stacked, rhs, rcond=None)[0]
        misfit = sharp[middle] + kernel_values[middle] - d[middle]
        value = 0.5 * float(misfit * misfit)
        if value < best["score"]:
            best.update(score=value, z=z_scalar, sharp=sharp)
        return value

    grid_scores = [score(float(g)) for g in grid]
    best_idx = int(np.argmin(grid_scores))

    if refine and grid.size > 1:
        a = float(grid[max(best_idx - 1, 0)])
        b = float(grid[min(best_idx + 1, grid.size - 1)])
        c = b - _GOLDEN * (b - a)
        e = a + _GOLDEN * (b - a)
        fc = score(c)
        fe = score(e)
        for _ in range(60):
            if b - a < 1e-8 * max(1.0, abs(b)):
                break
            if fc <= fe:
                b, e, fe = e, c, fc
                c = b - _GOLDEN * (b - a)
                fc = score(c)
            else:
                a, c, fc = c, e, fe
                e = a + _GOLDEN * (b - a)
                fe = score(e)

    best_z = float(best["z"])
    best_sharp = best["sharp"]
    best_score = float(best["score"])

    return PixelSolution(
        z=np.full(n, best_z),
        dynamics=np.zeros(n),
        log_reconstruction=best_sharp,
        grad_norm_trace=np.zeros(1),
        objective_trace=np.asarray([best_score]),
        converged=True,
        iterations=evaluations,
    )
