"""Model evaluation over a dataset split: prediction dumps, per-object
outcomes, and the aggregate report."""

import json
from dataclasses import dataclass, field

import numpy as np

from ..model.network import prepare_frame
from .matching import match
from .metrics import ade_fde, ade_k
from .reports import average_precision, operating_point

PRED_SCHEMA_VERSION = 1


@dataclass
class ObjectOutcome:
    """Evaluation record for one ground-truth object."""

    frame_id: str
    actor_id: int
    speed: float
    accel: float  # magnitude
    distance: float
    lidar_points: int
    matched: bool = False
    score: float = float("nan")
    iou: float = float("nan")
    ade: float = float("nan")  # most-confident hypothesis
    fde: float = float("nan")
    hyp_ades: list = field(default_factory=list)
    hyp_fdes: list = field(default_factory=list)
    confidences: list = field(default_factory=list)


def predict_frame_record(model, frame, cfg):
    """Run inference on one frame and return a JSON-serializable record."""
    inputs = prepare_frame(frame, cfg)
    detections, trajectories = model.predict_frame(inputs, score_threshold=0.0)
    step = cfg.model.step_s
    dets = []
    for det, hyps in zip(detections, trajectories):
        dets.append(
            {
                "box": [det.x, det.y, det.theta, det.w, det.h],
                "score": det.score,
                "cell_index": det.cell_index,
                "hypotheses": [
                    {
                        "confidence": h.confidence,
                        "times": [round((i + 1) * step, 3) for i in range(len(h.waypoints))],
                        "waypoints": np.round(h.waypoints, 6).tolist(),
                        "sigmas": np.round(h.sigmas, 6).tolist(),
                    }
                    for h in hyps
                ],
            }
        )
    return {
        "schema_version": PRED_SCHEMA_VERSION,
        "frame_id": frame.frame_id,
        "detections": dets,
    }


def write_predictions(path, records):
    with open(path, "w", encoding="utf-8") as f:
        for rec in records:
            f.write(json.dumps(rec, separators=(",", ":")))
            f.write("\n")


def read_predictions(path):
    records = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records


@dataclass
class _RecordDetection:
    """Detection view over a dump record, as the matcher expects it."""

    x: float
    y: float
    theta: float
    w: float
    h: float
    score: float
    cell_index: int
    hypotheses: list

    @property
    def box(self):
        return np.array([self.x, self.y, self.theta, self.w, self.h])


def _record_detections(record):
    out = []
    for d in record["detections"]:
        x, y, theta, w, h = d["box"]
        out.append(
            _RecordDetection(x, y, theta, w, h, d["score"], d["cell_index"], d["hypotheses"])
        )
    return out


def outcomes_from_predictions(records, frames, iou_min=0.5):
    """Join prediction dumps with dataset labels into per-object outcomes.

    Also returns the per-detection (score, is_tp) pairs needed for AP.
    """
    by_id = {f.frame_id: f for f in frames}
    outcomes = []
    det_scores = []
    det_is_tp = []
    for rec in records:
        frame = by_id.get(rec["frame_id"])
        if frame is None:
            raise KeyError(f"prediction record for unknown frame {rec['frame_id']!r}")
        dets = _record_detections(rec)
        result = match(dets, frame.labels, iou_min=iou_min)
        matched_labels = {}
        for di, lj, iou in result.pairs:
            matched_labels[lj] = (di, iou)
        for j, lb in enumerate(frame.labels):
            outcome = ObjectOutcome(
                frame_id=frame.frame_id,
                actor_id=lb.actor_id,
                speed=lb.speed,
                accel=abs(lb.accel),
                distance=lb.distance_to_ego,
                lidar_points=lb.lidar_point_count,
            )
            if j in matched_labels:
                di, iou = matched_labels[j]
                det = dets[di]
                outcome.matched = True
                outcome.score = det.score
                outcome.iou = iou
                gt_times = lb.waypoints[:, 0]
                gt_xy = lb.waypoints[:, 1:3]
                for hyp in det.hypotheses:
                    times = np.concatenate([[0.0], np.asarray(hyp["times"], dtype=float)])
                    track = np.vstack([[det.x, det.y], np.asarray(hyp["waypoints"], dtype=float)])
                    a, f = ade_fde(times, track, gt_times, gt_xy)
                    outcome.hyp_ades.append(a)
                    outcome.hyp_fdes.append(f)
                    outcome.confidences.append(hyp["confidence"])
                best = max(
                    range(len(outcome.confidences)),
                    key=lambda i: (outcome.confidences[i], -i),
                )
                outcome.ade = outcome.hyp_ades[best]
                outcome.fde = outcome.hyp_fdes[best]
            outcomes.append(outcome)
        for di, det in enumerate(dets):
            det_scores.append(det.score)
            det_is_tp.append(any(pi == di for pi, _, _ in result.pairs))
    return outcomes, np.asarray(det_scores), np.asarray(det_is_tp, dtype=bool)


def _subset_metrics(outcomes, threshold, ks):
    tp = [o for o in outcomes if o.matched and o.score >= threshold]
    entry = {"count": len(outcomes), "true_positives": len(tp)}
    if tp:
        entry["ade"] = float(np.mean([o.ade for o in tp]))
        entry["fde"] = float(np.mean([o.fde for o in tp]))
        for k in ks:
            vals = [
                ade_k(o.hyp_ades, o.confidences, min(k, len(o.hyp_ades))) for o in tp
            ]
            entry[f"ade_{k}"] = float(np.mean(vals))
    else:
        entry["ade"] = entry["fde"] = None
    return entry


def summarize(outcomes, det_records, target_recall=0.8, moving_speed=0.5, hard_accel=3.0, ks=(1,)):
    """Aggregate report at the recall operating point."""
    n_labels = len(outcomes)
    matched_scores = [o.score for o in outcomes if o.matched]
    op = operating_point(matched_scores, n_labels, target_recall)
    subsets = {
        "all": outcomes,
        "moving": [o for o in outcomes if o.speed > moving_speed],
        "hard_accel": [o for o in outcomes if o.accel > hard_accel],
    }
    report = {
        "n_labels": n_labels,
        "target_recall": target_recall,
        "threshold": None if np.isinf(op.threshold) else op.threshold,
        "achieved_recall": op.achieved_recall,
        "recall_reached": op.reached,
        "degenerate": op.degenerate,
        "subsets": {
            name: _subset_metrics(subset, op.threshold, ks) for name, subset in subsets.items()
        },
    }
    return report


def evaluate_predictions(records, frames, cfg, target_recall=0.8, moving_speed=0.5, hard_accel=3.0):
    """Dump records + dataset -> full report (including AP at 0.5/0.7)."""
    ks = sorted({k for k in (1, 3, 5, 10, 15) if k <= cfg.model.hypotheses} | {1})
    outcomes, scores, is_tp_05 = outcomes_from_predictions(records, frames, iou_min=0.5)
    report = summarize(
        outcomes,
        (scores, is_tp_05),
        target_recall=target_recall,
        moving_speed=moving_speed,
        hard_accel=hard_accel,
        ks=ks,
    )
    n_labels = len(outcomes)
    report["ap"] = {"0.5": average_precision(scores, is_tp_05, n_labels)}
    _, scores7, is_tp_07 = outcomes_from_predictions(records, frames, iou_min=0.7)
    report["ap"]["0.7"] = average_precision(scores7, is_tp_07, n_labels)
    return report, outcomes


def evaluate_model(model, frames, cfg, target_recall=0.8, moving_speed=0.5, hard_accel=3.0):
    records = [predict_frame_record(model, frame, cfg) for frame in frames]
    report, outcomes = evaluate_predictions(
        records, frames, cfg, target_recall, moving_speed, hard_accel
    )
    return report, outcomes, records
