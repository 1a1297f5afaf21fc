"""Event-assisted motion deblurring via per-pixel bilevel optimization.

Blurry frames plus the event stream recorded during their exposures are
combined into per-pixel inverse problems: each pixel's per-frame kernel
exponents are found by a damped Newton method on a reduced objective with
closed-form gradient and Hessian, and the deblurred intensity follows by
removing the estimated log kernel.  See :class:`EventDeblurrer` for the
high-level interface and :mod:`evdeblur.cli` for the command line.
"""

from .estimator import EventDeblurrer
from .events import (CompressedCube, Event, EventStream, FrameSequence,
                     LogFrames, Trajectory, active_pixel_mask,
                     build_compressed_cube, build_log_frames, has_events,
                     parse_event_file, pixel_event_trajectory,
                     standardize_frames)
from .imaging import ReconstructionSet, assemble, psnr, ssim
from .kernel import (KernelEval, PixelProblem, eval_kernel, log_increments,
                     log_increments_jacobian, log_kernel, log_kernel_deriv,
                     log_kernel_second_deriv)
from .lowerlevel import (DifferenceSystem, build_difference_system,
                         difference_matrix, solve_dynamics)
from .pipeline import (DeblurResult, SweepConfig, SweepSummary, deblur_frames,
                       medi_frames)
from .solver import (NewtonConfig, ObjectiveEval, PixelSolution, evaluate,
                     gradient, hessian, lambda1_lower_bound, medi_baseline,
                     newton_solve, objective)
from .synth import (BumpDataset, BumpScene, SimulatorConfig,
                    generate_bump_sequence, model_frames, simulate_events,
                    write_bump_dataset)

__version__ = "0.1.0"

__all__ = [
    "BumpDataset", "BumpScene", "CompressedCube", "DeblurResult",
    "DifferenceSystem", "Event", "EventDeblurrer", "EventStream",
    "FrameSequence", "KernelEval", "LogFrames", "NewtonConfig",
    "ObjectiveEval", "PixelProblem", "PixelSolution", "ReconstructionSet",
    "SimulatorConfig", "SweepConfig", "SweepSummary", "Trajectory",
    "active_pixel_mask", "assemble", "build_compressed_cube",
    "build_difference_system", "build_log_frames", "deblur_frames",
    "difference_matrix", "eval_kernel", "evaluate", "generate_bump_sequence",
    "gradient", "has_events", "hessian", "lambda1_lower_bound",
    "log_increments", "log_increments_jacobian", "log_kernel",
    "log_kernel_deriv", "log_kernel_second_deriv", "medi_baseline",
    "medi_frames", "model_frames", "newton_solve", "objective",
    "parse_event_file", "pixel_event_trajectory", "psnr", "simulate_events",
    "solve_dynamics", "ssim", "standardize_frames", "write_bump_dataset",
]
