"""Detection-to-label assignment."""

from dataclasses import dataclass, field

import numpy as np

from ..boxes import rotated_iou


@dataclass
class MatchResult:
    pairs: list = field(default_factory=list)  # (det_idx, label_idx, iou)
    unmatched_detections: list = field(default_factory=list)
    unmatched_labels: list = field(default_factory=list)


def match(detections, labels, iou_min=0.5):
    """Greedy one-to-one matching in descending detection score order.

    Each detection takes the unmatched label of highest IoU, provided the
    IoU clears the threshold; each label is used at most once. Greedy over
    a score-sorted list means the matches for any score threshold are the
    prefix of this result.
    """
    order = sorted(range(len(detections)), key=lambda i: (-detections[i].score, i))
    label_boxes = [np.asarray(lb.box, dtype=float) for lb in labels]
    taken = [False] * len(labels)
    result = MatchResult()
    for di in order:
        det_box = detections[di].box
        best_iou, best_j = 0.0, -1
        for j, lbox in enumerate(label_boxes):
            if taken[j]:
                continue
            iou = rotated_iou(det_box, lbox)
            if iou > best_iou:
                best_iou, best_j = iou, j
        if best_j >= 0 and best_iou >= iou_min:
            taken[best_j] = True
            result.pairs.append((di, best_j, best_iou))
        else:
            result.unmatched_detections.append(di)
    result.unmatched_labels = [j for j, used in enumerate(taken) if not used]
    return result
