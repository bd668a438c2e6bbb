"""Training losses: focal classification, smooth-L1 box regression,
Laplace-KL waypoint regression, and the multi-hypothesis assignments."""

import numpy as np

from .tensor import ops
from .tensor.autodiff import Value

PROB_MARGIN = 1e-7


class LossInputError(ValueError):
    pass


def focal_loss(probs, positive_mask, gamma=2.0, alpha=0.25):
    """Mean over cells of -alpha_t (1 - p_t)^gamma log(p_t).

    probs are per-cell foreground probabilities in (0, 1); positive cells
    are the ones containing an object center.
    """
    if not isinstance(probs, Value):
        probs = ops.as_value(probs)
    data = probs.data
    if np.any(data < -1e-6) or np.any(data > 1.0 + 1e-6):
        raise LossInputError(
            f"probabilities outside (0, 1): min {data.min():.3g}, max {data.max():.3g}"
        )
    p = ops.clip(probs, PROB_MARGIN, 1.0 - PROB_MARGIN)
    mask = np.asarray(positive_mask, dtype=data.dtype)
    if mask.shape != data.shape:
        raise LossInputError(f"mask shape {mask.shape} != probs shape {data.shape}")
    mask_v = ops.as_value(mask)
    inv_v = ops.as_value(1.0 - mask)
    p_t = ops.add(ops.mul(p, mask_v), ops.mul(ops.sub(1.0, p), inv_v))
    alpha_t = ops.as_value(alpha * mask + (1.0 - alpha) * (1.0 - mask))
    modulator = ops.pow_const(ops.sub(1.0, p_t), gamma) if gamma != 0 else None
    nll = ops.neg(ops.log(p_t))
    term = ops.mul(alpha_t, nll) if modulator is None else ops.mul(alpha_t, ops.mul(modulator, nll))
    return ops.mean(term)


def smooth_l1(pred, target, delta=1.0):
    """Huber-style loss, mean over all parameters of all matched positives."""
    target = np.asarray(target)
    if pred.shape != target.shape:
        raise LossInputError(f"pred {pred.shape} vs target {target.shape}")
    return ops.mean(ops.huber(ops.sub(pred, ops.as_value(target)), delta))


def laplace_kl(mu, b, mu_target, b_gt):
    """KL(Laplace(mu*, b_gt) || Laplace(mu, b)) per element, summed.

    Per axis: log(b/b_gt) + (b_gt exp(-|dmu|/b_gt) + |dmu|) / b - 1.
    """
    if b_gt <= 0:
        raise LossInputError(f"ground-truth scale must be positive, got {b_gt}")
    if np.any(b.data <= 0):
        raise LossInputError("predicted Laplace scale must be positive")
    mu_target = np.asarray(mu_target)
    if mu.shape != mu_target.shape or b.shape != mu.shape:
        raise LossInputError(f"shape mismatch: mu {mu.shape}, b {b.shape}, target {mu_target.shape}")
    delta = ops.abs_(ops.sub(mu, ops.as_value(mu_target)))
    decay = ops.mul(ops.exp(ops.mul(delta, -1.0 / b_gt)), b_gt)
    ratio = ops.div(ops.add(decay, delta), b)
    per_elem = ops.add(ops.sub(ops.log(b), np.log(b_gt)), ops.sub(ratio, 1.0))
    return ops.sum_(per_elem)


def ade_per_hypothesis(waypoints, gt):
    """(H,) mean L2 error of each hypothesis, computed on raw data."""
    diff = waypoints - gt[None, :, :]
    return np.linalg.norm(diff, axis=2).mean(axis=1)


def trajectory_loss(offsets, sigmas, logits, gt_actor, mode, b_gt=0.2, beta=1.0, anchors=None):
    """Loss for one object's trajectory head outputs.

    offsets/sigmas are (H*T, 2) Values in the actor frame, logits (1, H) or
    None, gt_actor the (T, 2) ground-truth future. Mode selects the
    assignment: single (regression only), mtp (winner = lowest-ADE
    hypothesis), multipath (winner = nearest anchor). Returns
    (loss Value, winner index).
    """
    gt_actor = np.asarray(gt_actor)
    t = gt_actor.shape[0]
    if mode == "single":
        kl = laplace_kl(offsets, sigmas, gt_actor, b_gt)
        return kl, 0
    if logits is None:
        raise LossInputError(f"{mode} loss requires confidence logits")
    h = logits.shape[1]
    if mode == "mtp":
        ade = ade_per_hypothesis(offsets.data.reshape(h, t, 2), gt_actor)
        winner = int(ade.argmin())  # ties resolve to the lower index
    elif mode == "multipath":
        if anchors is None:
            raise LossInputError("multipath loss requires the anchor set")
        ade = ade_per_hypothesis(np.asarray(anchors), gt_actor)
        winner = int(ade.argmin())
    else:
        raise LossInputError(f"unknown trajectory loss mode {mode!r}")
    mu = ops.narrow(offsets, 0, winner * t, t)
    b = ops.narrow(sigmas, 0, winner * t, t)
    kl = laplace_kl(mu, b, gt_actor, b_gt)
    log_probs = ops.log_softmax(logits, axis=1)
    ce = ops.neg(ops.reshape(ops.narrow(log_probs, 1, winner, 1), ()))
    return ops.add(kl, ops.mul(ce, beta)), winner


def detection_loss(head_map, pos_mask, reg_targets, pos_cells, loss_cfg):
    """Focal classification over all cells plus smooth-L1 on positives.

    Returns (cls Value, reg Value or None).
    """
    n = pos_mask.size
    flat = ops.reshape(head_map, (head_map.shape[0], n))
    probs = ops.sigmoid(ops.reshape(ops.narrow(flat, 0, 0, 1), pos_mask.shape))
    cls = focal_loss(probs, pos_mask, gamma=loss_cfg.focal_gamma, alpha=loss_cfg.focal_alpha)
    if len(pos_cells) == 0:
        return cls, None
    reg_map = ops.transpose2d(ops.narrow(flat, 0, 1, 6))  # (n, 6)
    pred = ops.gather_rows(reg_map, pos_cells)
    reg = smooth_l1(pred, reg_targets, delta=loss_cfg.smooth_l1_delta)
    return cls, reg
