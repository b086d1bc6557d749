"""Multiview point-set registration for robotic hand-eye calibration."""

from ._core import (
    assess,
    benchmark_aa,
    calibrate,
    compare_to_ground_truth,
    err_rotation,
    err_translation,
    kernel_se3,
    se3_distance,
    simulate,
    so3_exp,
    so3_log,
)

__all__ = [
    "assess",
    "benchmark_aa",
    "calibrate",
    "compare_to_ground_truth",
    "err_rotation",
    "err_translation",
    "kernel_se3",
    "se3_distance",
    "simulate",
    "so3_exp",
    "so3_log",
]

__version__ = "0.1.0"
