"""Per-pixel blur-kernel evaluation in the log domain.

For one pixel, frame ``i``'s observed log intensity is modeled as the latent
log intensity plus a kernel term

    log_kernel_i(z_i) = log( (1 / |I_i|) * integral over I_i of
                              exp(z_i * E_i(t)) dt ),

where ``E_i`` is the cumulative event sum over the exposure interval ``I_i``
(see :func:`evdeblur.events.pixel_event_trajectory`) and ``z_i`` scales the
per-event log-intensity step.  The integral is evaluated with the composite
trapezoid rule on the trajectory's (generally non-uniform) sample grid, with
a max-shift so ``exp`` never overflows.

First and second derivatives in ``z_i`` are the weighted mean and variance of
``E_i`` under the quadrature-weighted ``exp(z_i * E_i)`` measure, which keeps
the second derivative nonnegative by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .events import Trajectory

_SPAN_RTOL = 1e-9


def _trapezoid_weights(times: np.ndarray) -> np.ndarray:
    dt = np.diff(times)
    w = np.empty(times.size)
    w[0] = dt[0] / 2.0
    w[-1] = dt[-1] / 2.0
    w[1:-1] = (dt[:-1] + dt[1:]) / 2.0
    return w


@dataclass(frozen=True)
class PixelProblem:
    """All data of one pixel's deblurring problem.

    Attributes
    ----------
    log_intensities : np.ndarray
        Per-frame log of the standardized observed intensity at the pixel.
    trajectories : tuple of Trajectory
        Cumulative event-sum samples over each frame's exposure interval.
    interval_lengths : np.ndarray
        Exposure durations |I_i|; each trajectory's samples must span its
        interval exactly (so the kernel vanishes at z = 0).
    lambda1, lambda2 : float
        Upper-level (>= 0) and lower-level (> 0) regularization weights.
    gap_sums : np.ndarray or None
        Signed event sums between consecutive reference times; only the mEDI
        baseline consumes these.  Treated as zeros when absent.
    """

    log_intensities: np.ndarray
    trajectories: tuple[Trajectory, ...]
    interval_lengths: np.ndarray
    lambda1: float
    lambda2: float
    gap_sums: np.ndarray | None = None
    weights: tuple[np.ndarray, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        d = np.asarray(self.log_intensities, dtype=np.float64)
        lengths = np.asarray(self.interval_lengths, dtype=np.float64)
        if d.ndim != 1 or d.size < 2:
            raise ValueError("need log intensities for at least 2 frames")
        n = d.size
        if len(self.trajectories) != n or lengths.shape != (n,):
            raise ValueError("per-frame fields must have matching lengths")
        if not np.all(np.isfinite(d)):
            raise ValueError("log intensities must be finite")
        if np.any(lengths <= 0):
            raise ValueError("interval lengths must be positive")
        if self.lambda1 < 0:
            raise ValueError("lambda1 must be >= 0")
        if self.lambda2 <= 0:
            raise ValueError("lambda2 must be > 0")
        weights = []
        trajectories = []
        for i, traj in enumerate(self.trajectories):
            times = np.asarray(traj.times, dtype=np.float64)
            values = np.asarray(traj.values, dtype=np.float64)
            if times.ndim != 1 or times.size < 2 or values.shape != times.shape:
                raise ValueError(f"trajectory {i} needs >= 2 matched samples")
            if np.any(np.diff(times) <= 0):
                raise ValueError(f"trajectory {i} times must be strictly increasing")
            span = float(times[-1] - times[0])
            if abs(span - lengths[i]) > _SPAN_RTOL * max(1.0, lengths[i]):
                raise ValueError(
                    f"trajectory {i} spans {span:g}, expected interval length "
                    f"{lengths[i]:g}"
                )
            trajectories.append(Trajectory(times=times, values=values))
            weights.append(_trapezoid_weights(times))
        object.__setattr__(self, "log_intensities", d)
        object.__setattr__(self, "interval_lengths", lengths)
        object.__setattr__(self, "trajectories", tuple(trajectories))
        if self.gap_sums is not None:
            gaps = np.asarray(self.gap_sums, dtype=np.float64)
            if gaps.shape != (n - 1,):
                raise ValueError("gap_sums must have one entry per frame gap")
            object.__setattr__(self, "gap_sums", gaps)
        object.__setattr__(self, "weights", tuple(weights))

    @property
    def n_frames(self) -> int:
        return int(self.log_intensities.size)


@dataclass(frozen=True)
class KernelEval:
    """Log kernel values with first and second derivatives, per frame."""

    values: np.ndarray
    deriv: np.ndarray
    second_deriv: np.ndarray


def _moments(weights: np.ndarray, values: np.ndarray, length: float,
             z_i: float, order: int) -> tuple[float, float, float]:
    """(value, d/dz, d2/dz2) of the log kernel for one trajectory."""
    a = z_i * values
    shift = a.max()
    we = weights * np.exp(a - shift)
    s0 = we.sum()
    value = shift + np.log(s0 / length)
    if order < 1:
        return value, 0.0, 0.0
    mean = np.dot(we, values) / s0
    if order < 2:
        return value, mean, 0.0
    centered = values - mean
    variance = np.dot(we, centered * centered) / s0
    return value, mean, max(variance, 0.0)


def eval_kernel(problem: PixelProblem, z: np.ndarray, order: int = 2) -> KernelEval:
    """Evaluate the log kernel and its derivatives at ``z``.

    ``order`` limits how many derivatives are computed (0, 1, or 2); skipped
    entries are zero-filled.
    """
    z = np.asarray(z, dtype=np.float64)
    n = problem.n_frames
    if z.shape != (n,):
        raise ValueError(f"z must have shape ({n},)")
    values = np.empty(n)
    deriv = np.zeros(n)
    second = np.zeros(n)
    for i in range(n):
        values[i], deriv[i], second[i] = _moments(
            problem.weights[i], problem.trajectories[i].values,
            float(problem.interval_lengths[i]), float(z[i]), order)
    return KernelEval(values=values, deriv=deriv, second_deriv=second)


def log_kernel(problem: PixelProblem, z: np.ndarray) -> np.ndarray:
    """Per-frame log kernel values; zero at z = 0 or for event-free frames."""
    return eval_kernel(problem, z, order=0).values


def log_kernel_deriv(problem: PixelProblem, z: np.ndarray) -> np.ndarray:
    """Elementwise derivative: the exp-weighted mean of the trajectory."""
    return eval_kernel(problem, z, order=1).deriv


def log_kernel_second_deriv(problem: PixelProblem, z: np.ndarray) -> np.ndarray:
    """Elementwise second derivative: the exp-weighted variance (>= 0)."""
    return eval_kernel(problem, z, order=2).second_deriv


def log_increments(problem: PixelProblem, z: np.ndarray) -> np.ndarray:
    """Differences of the deblurred log intensity between consecutive frames.

    Entry ``i`` is ``(d_{i+1} - k_{i+1}(z)) - (d_i - k_i(z))`` where ``d`` is
    the observed log intensity and ``k`` the log kernel.
    """
    sharp = problem.log_intensities - log_kernel(problem, z)
    return np.diff(sharp)


def log_increments_jacobian(problem: PixelProblem, z: np.ndarray) -> np.ndarray:
    """Jacobian of :func:`log_increments`: bidiagonal in the kernel slopes.

    Row ``i`` carries ``+k_i'(z)`` in column ``i`` and ``-k_{i+1}'(z)`` in
    column ``i + 1``.
    """
    slope = log_kernel_deriv(problem, z)
    n = problem.n_frames
    jac = np.zeros((n - 1, n))
    rows = np.arange(n - 1)
    jac[rows, rows] = slope[:-1]
    jac[rows, rows + 1] = -slope[1:]
    return jac
