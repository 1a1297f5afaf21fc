"""Reconstruction assembly and image quality metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .events import LogFrames, _freeze
from .solver import PixelSolution

_SSIM_WINDOW = 8
_SSIM_C1 = 0.01 ** 2
_SSIM_C2 = 0.03 ** 2


@dataclass(frozen=True)
class ReconstructionSet:
    """Assembled per-frame outputs of a deblurring run.

    ``v_frames`` are the deblurred intensities in (0, 1]; ``u_frames`` the
    dynamics-only representation min-max normalized per frame for display;
    ``z_map`` the per-pixel exponents (zero where skipped); ``skipped_mask``
    marks event-free pixels, whose ``v_frames`` entries equal the
    standardized input exactly.
    """

    v_frames: np.ndarray
    u_frames: np.ndarray
    z_map: np.ndarray
    skipped_mask: np.ndarray

    def __post_init__(self) -> None:
        for name in ("v_frames", "u_frames", "z_map", "skipped_mask"):
            object.__setattr__(self, name, _freeze(getattr(self, name)))


def assemble(log_frames: LogFrames,
             solutions: Mapping[tuple[int, int], PixelSolution],
             active_mask: np.ndarray) -> ReconstructionSet:
    """Combine per-pixel solutions into full reconstruction frames.

    ``solutions`` must cover exactly the pixels flagged by ``active_mask``
    (keys are ``(x, y)`` pairs); a missing or surplus solution raises with the
    offending pixel named.  Skipped pixels keep the standardized input in
    ``v_frames`` and zeros in ``u_frames`` and ``z_map``.
    """
    mask = np.asarray(active_mask, dtype=bool)
    n, n_rows, n_cols = log_frames.values.shape
    if mask.shape != (n_rows, n_cols):
        raise ValueError("active mask shape does not match the frames")

    v = np.exp(log_frames.values)
    u = np.zeros_like(v)
    z_map = np.zeros_like(v)

    ys, xs = np.nonzero(mask)
    active_keys = {(int(x), int(y)) for x, y in zip(xs, ys)}
    surplus = set(solutions.keys()) - active_keys
    if surplus:
        x, y = sorted(surplus)[0]
        raise ValueError(f"solution given for event-free pixel ({x}, {y})")
    for x, y in sorted(active_keys):
        sol = solutions.get((x, y))
        if sol is None:
            raise ValueError(f"missing solution for event pixel ({x}, {y})")
        v[:, y, x] = np.exp(sol.log_reconstruction)
        u[:, y, x] = sol.dynamics
        z_map[:, y, x] = sol.z

    np.minimum(v, 1.0, out=v)
    for i in range(n):
        lo = u[i].min()
        hi = u[i].max()
        if hi > lo:
            u[i] = (u[i] - lo) / (hi - lo)
        else:
            u[i] = 0.0
    return ReconstructionSet(v_frames=v, u_frames=u, z_map=z_map,
                             skipped_mask=~mask)


def _check_pair(reference: np.ndarray, test: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(reference, dtype=np.float64)
    b = np.asarray(test, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError("metrics expect 2-D images")
    if a.shape != b.shape:
        raise ValueError(f"image shapes differ: {a.shape} vs {b.shape}")
    for name, arr in (("reference", a), ("test", b)):
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"{name} image has non-finite values")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError(f"{name} image values must lie in [0, 1]")
    return a, b


def psnr(reference: np.ndarray, test: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB for unit dynamic range.

    Identical images return ``inf``.
    """
    a, b = _check_pair(reference, test)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def ssim(reference: np.ndarray, test: np.ndarray) -> float:
    """Mean structural similarity with an 8x8 sliding uniform window.

    Local statistics are plain (population) moments over each dense 8x8
    window; constants C1 = 0.01^2 and C2 = 0.03^2 assume unit dynamic range.
    Images smaller than the window fall back to a single global window.
    """
    a, b = _check_pair(reference, test)
    if min(a.shape) < _SSIM_WINDOW:
        wa = a[None, None]
        wb = b[None, None]
    else:
        wa = np.lib.stride_tricks.sliding_window_view(a, (_SSIM_WINDOW, _SSIM_WINDOW))
        wb = np.lib.stride_tricks.sliding_window_view(b, (_SSIM_WINDOW, _SSIM_WINDOW))
    mu_a = wa.mean(axis=(-2, -1))
    mu_b = wb.mean(axis=(-2, -1))
    var_a = (wa * wa).mean(axis=(-2, -1)) - mu_a * mu_a
    var_b = (wb * wb).mean(axis=(-2, -1)) - mu_b * mu_b
    cov = (wa * wb).mean(axis=(-2, -1)) - mu_a * mu_b
    numer = (2.0 * mu_a * mu_b + _SSIM_C1) * (2.0 * cov + _SSIM_C2)
    denom = (mu_a * mu_a + mu_b * mu_b + _SSIM_C1) * (var_a + var_b + _SSIM_C2)
    return float(np.mean(numer / denom))
