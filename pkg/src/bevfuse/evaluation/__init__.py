"""Metrics and reports: rotated-IoU matching, displacement errors,
operating points, average precision, binned comparisons."""

from ..boxes import rotated_iou
from .matching import MatchResult, match
from .metrics import MissingTimestampError, ade_fde, ade_k, interp_at
from .reports import OperatingPoint, average_precision, binned_report, bucket_index, operating_point
from .runner import (
    ObjectOutcome,
    evaluate_model,
    evaluate_predictions,
    outcomes_from_predictions,
    predict_frame_record,
    read_predictions,
    summarize,
    write_predictions,
)

__all__ = [
    "MatchResult",
    "MissingTimestampError",
    "ObjectOutcome",
    "OperatingPoint",
    "ade_fde",
    "ade_k",
    "average_precision",
    "binned_report",
    "bucket_index",
    "evaluate_model",
    "evaluate_predictions",
    "interp_at",
    "match",
    "operating_point",
    "outcomes_from_predictions",
    "predict_frame_record",
    "read_predictions",
    "rotated_iou",
    "summarize",
    "write_predictions",
]
