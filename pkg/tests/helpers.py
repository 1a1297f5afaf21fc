"""Shared builders and finite-difference utilities for the test suite."""

from __future__ import annotations

from typing import Callable

import numpy as np

from evdeblur.events import EventStream, Trajectory
from evdeblur.kernel import PixelProblem


def constant_trajectory(value: float, length: float = 1.0, start: float = 0.0,
                        n_samples: int = 4) -> Trajectory:
    times = np.linspace(start, start + length, n_samples)
    return Trajectory(times=times, values=np.full(n_samples, float(value)))


def random_trajectory(rng: np.random.Generator, length: float = 1.0,
                      start: float = 0.0, max_extra: int = 7,
                      ensure_event: bool = False) -> Trajectory:
    """Strictly increasing samples spanning [start, start + length].

    Values are integer cumulative sums, shaped like a compressed event
    column; with ``ensure_event`` the trajectory is guaranteed non-constant.
    """
    n_extra = int(rng.integers(0, max_extra + 1))
    interior = rng.uniform(start, start + length, n_extra)
    times = np.unique(np.concatenate([[start, start + length], interior]))
    while True:
        steps = rng.integers(-2, 3, times.size)
        steps[0] = 0
        values = np.cumsum(steps).astype(np.float64)
        if not ensure_event or np.ptp(values) > 0:
            return Trajectory(times=times, values=values)


def random_problem(rng: np.random.Generator, n_frames: int,
                   lambda1: float = 1.0, lambda2: float = 1e-3,
                   ensure_events: bool = False,
                   with_gap_sums: bool = False) -> PixelProblem:
    """A synthetic pixel problem with random trajectories and intensities."""
    lengths = rng.uniform(0.5, 1.5, n_frames)
    gaps = rng.uniform(0.0, 0.3, n_frames)
    starts = np.cumsum(lengths + gaps) - lengths
    trajectories = tuple(
        random_trajectory(rng, length=float(lengths[i]), start=float(starts[i]),
                          ensure_event=ensure_events)
        for i in range(n_frames)
    )
    spans = np.array([t.times[-1] - t.times[0] for t in trajectories])
    gap_sums = (rng.integers(-3, 4, n_frames - 1).astype(np.float64)
                if with_gap_sums else None)
    return PixelProblem(
        log_intensities=rng.uniform(-3.0, -0.01, n_frames),
        trajectories=trajectories,
        interval_lengths=spans,
        lambda1=lambda1,
        lambda2=lambda2,
        gap_sums=gap_sums,
    )


def rebuild(problem: PixelProblem, **overrides) -> PixelProblem:
    """Copy a (frozen) problem with some fields replaced."""
    fields = dict(
        log_intensities=problem.log_intensities,
        trajectories=problem.trajectories,
        interval_lengths=problem.interval_lengths,
        lambda1=problem.lambda1,
        lambda2=problem.lambda2,
        gap_sums=problem.gap_sums,
    )
    fields.update(overrides)
    return PixelProblem(**fields)


def random_stream(rng: np.random.Generator, n_events: int, n_x: int, n_y: int,
                  t_max: float = 1.0, duplicate_times: bool = False) -> EventStream:
    t = np.sort(rng.uniform(0.0, t_max, n_events))
    if duplicate_times:
        # Coarse rounding forces repeated timestamps, exercising bin merging.
        t = np.sort(np.round(t, 2))
    return EventStream(
        t=t,
        x=rng.integers(0, n_x, n_events),
        y=rng.integers(0, n_y, n_events),
        p=rng.choice([-1, 1], n_events),
        n_x=n_x,
        n_y=n_y,
    )


def central_gradient(f: Callable[[np.ndarray], float], z: np.ndarray,
                     h: float = 1e-5) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    out = np.empty(z.size)
    for i in range(z.size):
        zp = z.copy()
        zm = z.copy()
        zp[i] += h
        zm[i] -= h
        out[i] = (f(zp) - f(zm)) / (2.0 * h)
    return out


def central_jacobian(f: Callable[[np.ndarray], np.ndarray], z: np.ndarray,
                     h: float = 1e-5) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    cols = []
    for i in range(z.size):
        zp = z.copy()
        zm = z.copy()
        zp[i] += h
        zm[i] -= h
        cols.append((np.asarray(f(zp)) - np.asarray(f(zm))) / (2.0 * h))
    return np.stack(cols, axis=1)


def relative_error(approx: np.ndarray, exact: np.ndarray) -> float:
    approx = np.asarray(approx, dtype=np.float64)
    exact = np.asarray(exact, dtype=np.float64)
    return float(np.linalg.norm((approx - exact).ravel())
                 / max(1.0, np.linalg.norm(exact.ravel())))
