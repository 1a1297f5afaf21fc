"""Scikit-learn style front end for the deblurring pipeline."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .pipeline import SweepConfig, deblur_frames
from .validation import (check_count, check_event_stream, check_frame_sequence,
                         check_positive)


class EventDeblurrer(BaseEstimator):
    """Deblur a frame sequence with its event stream.

    The solve happens in :meth:`fit`, which runs the per-pixel bilevel Newton
    sweep and stores the results as fitted attributes; :meth:`transform`
    returns the deblurred frame stack.  Like other solve-on-fit estimators,
    ``transform`` does not accept new data: one fitted instance corresponds
    to one (frames, events) dataset.

    Parameters
    ----------
    lambda1 : float, default 1.0
        Upper-level regularization weight on the kernel exponents.
    lambda2 : float, default 1e-3
        Lower-level ridge weight on the dynamics representation.
    compression_k : int, default 200
        Events per compressed-cube bin.
    epsilon : float, default 1e-3
        Margin of the per-frame affine standardization into (0, 1).
    grad_tol : float, default 1e-8
        Newton stopping tolerance on the gradient 2-norm.
    max_iters : int, default 50
        Newton iteration cap per pixel.
    delta : float, default 2.0
        Sup-norm ball radius used for the reported convexity bound.
    threads : int, default 1
        Worker threads for the pixel sweep; 0 picks the CPU count.  Results
        are identical for any value.

    Attributes
    ----------
    reconstruction_ : ReconstructionSet
        Deblurred frames, dynamics display frames, exponent map, skip mask.
    summary_ : SweepSummary
        Solve counts, mean iterations, and the convexity bound at ``delta``.
    solutions_ : dict
        Per-pixel :class:`~evdeblur.solver.PixelSolution`, keyed by (x, y).
    system_ : DifferenceSystem
        The shared factorized lower-level system.
    """

    def __init__(self, lambda1: float = 1.0, lambda2: float = 1e-3,
                 compression_k: int = 200, epsilon: float = 1e-3,
                 grad_tol: float = 1e-8, max_iters: int = 50,
                 delta: float = 2.0, threads: int = 1):
        self.lambda1 = lambda1
        self.lambda2 = lambda2
        self.compression_k = compression_k
        self.epsilon = epsilon
        self.grad_tol = grad_tol
        self.max_iters = max_iters
        self.delta = delta
        self.threads = threads

    def _config(self) -> SweepConfig:
        return SweepConfig(
            lambda1=check_positive("lambda1", self.lambda1),
            lambda2=check_positive("lambda2", self.lambda2),
            compression_k=check_count("compression_k", self.compression_k),
            epsilon=check_positive("epsilon", self.epsilon),
            grad_tol=check_positive("grad_tol", self.grad_tol),
            max_iters=check_count("max_iters", self.max_iters),
            delta=check_positive("delta", self.delta, strict=False),
            threads=check_count("threads", self.threads, minimum=0),
        )

    def fit(self, frames, events) -> "EventDeblurrer":
        """Solve the deblurring problem for one dataset.

        Parameters
        ----------
        frames : FrameSequence
            Observed frames with reference times and exposure durations.
        events : EventStream
            Event data covering the frames' sensor.
        """
        frames = check_frame_sequence(frames)
        events = check_event_stream(events, frames)
        result = deblur_frames(frames, events, self._config())
        self.reconstruction_ = result.reconstruction
        self.summary_ = result.summary
        self.solutions_ = dict(result.solutions)
        self.system_ = result.system
        self.n_frames_ = frames.n_frames
        return self

    def transform(self, frames=None) -> np.ndarray:
        """Return the fitted deblurred frame stack, shape (n_frames, n_y, n_x).

        ``frames`` is accepted for interface symmetry but must be None or the
        fitted input's sequence; the reconstruction is tied to the fit data.
        """
        check_is_fitted(self, "reconstruction_")
        return np.array(self.reconstruction_.v_frames, copy=True)

    def fit_transform(self, frames, events) -> np.ndarray:
        """Fit on (frames, events) and return the deblurred stack."""
        return self.fit(frames, events).transform()
