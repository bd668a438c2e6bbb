"""Dense single-stage detection head: per-cell classification and box
regression, decoding, and rotated-IoU NMS."""

from dataclasses import dataclass

import numpy as np

from ..boxes import rotated_iou
from ..tensor import Conv2d, Module, Value, ops

HEAD_CHANNELS = 7  # logit, dx, dy, sin, cos, log length, log width


@dataclass
class Detection:
    x: float
    y: float
    theta: float
    w: float  # extent along heading
    h: float  # lateral extent
    score: float
    cell_index: int

    @property
    def box(self):
        return np.array([self.x, self.y, self.theta, self.w, self.h])


class DetectionHead(Module):
    """Separate classification and regression towers over shared features;
    their losses carry very different scales, so sharing a trunk lets one
    task starve the other."""

    def __init__(self, rng, in_channels, hidden=32, prior_prob=0.01):
        self.cls_conv = Conv2d(rng, in_channels, hidden, k=3)
        self.cls_out = Conv2d(rng, hidden, 1, k=1, pad=0, gain=0.1)
        self.reg_conv = Conv2d(rng, in_channels, hidden, k=3)
        self.reg_out = Conv2d(rng, hidden, HEAD_CHANNELS - 1, k=1, pad=0, gain=0.1)
        # rare-positive prior keeps focal loss stable at initialization
        self.cls_out.b.data[0] = -np.log((1.0 - prior_prob) / prior_prob)

    def __call__(self, features):
        logit = self.cls_out(ops.relu(self.cls_conv(features)))
        reg = self.reg_out(ops.relu(self.reg_conv(features)))
        return ops.concat([logit, reg], axis=0)


def build_detection_targets(labels, grid):
    """Per-cell targets: a cell is positive iff it contains an object center.

    Returns (positive mask (ny, nx), regression targets (n_pos, 6),
    positive cell flat indices). Regression rows are
    (dx, dy, sin, cos, log l, log w) relative to the cell center.
    """
    pos = np.zeros((grid.ny, grid.nx), dtype=bool)
    reg_rows = []
    cell_ids = []
    for lb in labels:
        x, y, theta, length, width = lb.box
        if not bool(grid.contains(x, y)):
            continue
        r, c = grid.metric_to_cell(x, y)
        r, c = int(r), int(c)
        if pos[r, c]:
            continue  # one target per cell; the first (arbitrary) label wins
        pos[r, c] = True
        cx, cy = grid.cell_center(r, c)
        reg_rows.append(
            [x - cx, y - cy, np.sin(theta), np.cos(theta), np.log(length), np.log(width)]
        )
        cell_ids.append(r * grid.nx + c)
    reg = np.array(reg_rows) if reg_rows else np.zeros((0, 6))
    return pos, reg, np.array(cell_ids, dtype=np.int64)


def stable_sigmoid(x):
    out = np.empty_like(x, dtype=float)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def decode_detections(head_map, grid, top_k=200, nms_iou=0.3, score_threshold=0.0):
    """Per-cell decode -> top-k by score -> greedy rotated-IoU NMS."""
    arr = head_map.data if isinstance(head_map, Value) else np.asarray(head_map)
    logits = arr[0].ravel()
    scores = stable_sigmoid(logits)
    k = min(top_k, scores.size)
    order = np.argsort(-scores, kind="stable")[:k]
    order = order[scores[order] >= score_threshold]
    if order.size == 0:
        return []
    rows, cols = np.divmod(order, grid.nx)
    cx = grid.x_min + (cols + 0.5) * grid.cell_size
    cy = grid.y_min + (rows + 0.5) * grid.cell_size
    flat = arr.reshape(HEAD_CHANNELS, -1)
    dx, dy = flat[1, order], flat[2, order]
    theta = np.arctan2(flat[3, order], flat[4, order])
    length = np.exp(np.clip(flat[5, order], np.log(0.5), np.log(25.0)))
    width = np.exp(np.clip(flat[6, order], np.log(0.5), np.log(25.0)))
    candidates = [
        Detection(
            x=float(cx[i] + dx[i]),
            y=float(cy[i] + dy[i]),
            theta=float(theta[i]),
            w=float(length[i]),
            h=float(width[i]),
            score=float(scores[order[i]]),
            cell_index=int(order[i]),
        )
        for i in range(order.size)
    ]
    return nms(candidates, nms_iou)


def nms(detections, iou_threshold):
    """Greedy suppression in descending score order (ties by cell index)."""
    ranked = sorted(detections, key=lambda d: (-d.score, d.cell_index))
    kept = []
    for det in ranked:
        if all(rotated_iou(det.box, other.box) <= iou_threshold for other in kept):
            kept.append(det)
    return kept
