"""Split-level reports: recall operating point, average precision, and
bucketed comparisons between two runs."""

from dataclasses import dataclass

import numpy as np


@dataclass
class OperatingPoint:
    threshold: float
    achieved_recall: float
    reached: bool
    degenerate: bool = False


def operating_point(matched_scores, n_labels, target_recall=0.8):
    """Highest score threshold whose recall clears the target.

    matched_scores are the detection scores of all true-positive matches
    over the split (matching is greedy in score order, so thresholding is
    a prefix operation). A target of zero is degenerate: it is satisfied
    by an infinite threshold with an empty true-positive set, which is
    flagged. An unreachable target is flagged and reported at the maximum
    achievable recall.
    """
    if n_labels <= 0:
        raise ValueError("operating point needs at least one ground-truth label")
    if target_recall <= 0:
        return OperatingPoint(np.inf, 0.0, True, degenerate=True)
    scores = np.sort(np.asarray(matched_scores, dtype=float))[::-1]
    max_recall = len(scores) / n_labels
    if max_recall < target_recall:
        thr = float(scores[-1]) if len(scores) else np.inf
        return OperatingPoint(thr, max_recall, False)
    need = int(np.ceil(target_recall * n_labels))
    thr = float(scores[need - 1])
    achieved = float((scores >= thr).sum()) / n_labels
    return OperatingPoint(thr, achieved, True)


def average_precision(det_scores, det_is_tp, n_labels):
    """Area under the interpolated precision-recall curve.

    det_scores/det_is_tp describe every detection of the split; labels
    never matched count as missed recall.
    """
    if n_labels <= 0:
        raise ValueError("average precision needs at least one ground-truth label")
    scores = np.asarray(det_scores, dtype=float)
    flags = np.asarray(det_is_tp, dtype=bool)
    if scores.size == 0:
        return 0.0
    order = np.argsort(-scores, kind="stable")
    tp = np.cumsum(flags[order])
    fp = np.cumsum(~flags[order])
    recall = tp / n_labels
    precision = tp / np.maximum(tp + fp, 1)
    # precision envelope, integrated over recall steps
    env = np.maximum.accumulate(precision[::-1])[::-1]
    prev_r = 0.0
    ap = 0.0
    for r, p in zip(recall, env):
        ap += (r - prev_r) * p
        prev_r = r
    return float(ap)


def bucket_index(value, edges):
    """[lo, hi) buckets; a value exactly on a boundary goes to the upper
    bucket. Returns -1 outside the edge span."""
    edges = np.asarray(edges, dtype=float)
    idx = int(np.searchsorted(edges, value, side="right")) - 1
    if idx < 0 or idx >= len(edges) - 1:
        return -1
    return idx


def binned_report(outcomes_a, outcomes_b, axis, edges):
    """Relative FDE improvement of run B over run A per bucket of a
    ground-truth characteristic.

    Outcomes are per-label records from two evaluation runs over the same
    split, already filtered to their operating points. Buckets that have
    no matched objects in either run are reported as absent (None), never
    as zero.
    """
    buckets = []
    for i in range(len(edges) - 1):
        in_a = [o for o in outcomes_a if bucket_index(getattr(o, axis), edges) == i]
        in_b = [o for o in outcomes_b if bucket_index(getattr(o, axis), edges) == i]
        fde_a = [o.fde for o in in_a if o.matched]
        fde_b = [o.fde for o in in_b if o.matched]
        entry = {
            "axis": axis,
            "lo": float(edges[i]),
            "hi": float(edges[i + 1]),
            "count_a": len(fde_a),
            "count_b": len(fde_b),
        }
        if fde_a and fde_b:
            mean_a = float(np.mean(fde_a))
            mean_b = float(np.mean(fde_b))
            entry["fde_a"] = mean_a
            entry["fde_b"] = mean_b
            entry["improvement_pct"] = (
                100.0 * (mean_a - mean_b) / mean_a if mean_a > 0 else None
            )
        else:
            entry["fde_a"] = entry["fde_b"] = entry["improvement_pct"] = None
        buckets.append(entry)
    return buckets
