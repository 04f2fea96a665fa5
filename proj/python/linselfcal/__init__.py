"""Two-view focal self-calibration, order-consistency match filtering and pairwise averaging."""

from ._core import (
    Error,
    IoError,
    NumericalError,
    ParseError,
    PreconditionError,
    calibrate_fundamental,
    calibrate_pair,
    confidence_counts,
    delta_f,
    estimate_f_eightpoint,
    geodesic_distance,
    lis_thresholded,
    make_scene,
    recursive_verify,
    register_rotations,
    run_pair_benchmark,
    select_focal,
    weiszfeld_single,
)

__all__ = [
    "Error",
    "IoError",
    "NumericalError",
    "ParseError",
    "PreconditionError",
    "calibrate_fundamental",
    "calibrate_pair",
    "confidence_counts",
    "delta_f",
    "estimate_f_eightpoint",
    "geodesic_distance",
    "lis_thresholded",
    "make_scene",
    "recursive_verify",
    "register_rotations",
    "run_pair_benchmark",
    "select_focal",
    "weiszfeld_single",
]
