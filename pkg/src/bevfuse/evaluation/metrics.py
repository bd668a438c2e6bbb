"""Displacement metrics over trajectory waypoints."""

import numpy as np


class MissingTimestampError(ValueError):
    pass


def interp_at(times, points, t):
    """Linear interpolation of a waypoint track at time t."""
    times = np.asarray(times, dtype=float)
    points = np.asarray(points, dtype=float)
    if t < times[0] - 1e-9 or t > times[-1] + 1e-9:
        raise MissingTimestampError(
            f"time {t} outside waypoint span [{times[0]}, {times[-1]}]"
        )
    i = int(np.clip(np.searchsorted(times, t) - 1, 0, len(times) - 2))
    t0, t1 = times[i], times[i + 1]
    u = 0.0 if t1 == t0 else np.clip((t - t0) / (t1 - t0), 0.0, 1.0)
    return points[i] + u * (points[i + 1] - points[i])


def ade_fde(pred_times, pred_xy, gt_times, gt_xy, eval_times=(0.0, 1.0, 2.0, 3.0)):
    """Average and final displacement error at the metric timestamps.

    ADE averages the L2 error over eval_times (a quarter of the sum for
    the default four); FDE is the error at the last of them. Both tracks
    are sampled by linear interpolation where the timestamps do not line
    up; a requested time outside either track's span is an error.
    """
    errors = []
    for t in eval_times:
        p = interp_at(pred_times, pred_xy, t)
        g = interp_at(gt_times, gt_xy, t)
        errors.append(float(np.hypot(*(p - g))))
    return float(np.mean(errors)), errors[-1]


def ade_of_hypothesis(pred_times, pred_xy, gt_times, gt_xy, eval_times=(0.0, 1.0, 2.0, 3.0)):
    return ade_fde(pred_times, pred_xy, gt_times, gt_xy, eval_times)[0]


def ade_k(hypothesis_ades, confidences, k):
    """Minimum ADE among the k most confident hypotheses.

    Confidence ties break toward the lower hypothesis index.
    """
    ades = np.asarray(hypothesis_ades, dtype=float)
    confs = np.asarray(confidences, dtype=float)
    if not 1 <= k <= len(ades):
        raise ValueError(f"k={k} outside [1, {len(ades)}]")
    order = sorted(range(len(ades)), key=lambda i: (-confs[i], i))[:k]
    return float(ades[order].min())
