"""End-to-end training loop: joint detection + trajectory loss, Adam with
step decay, deterministic batching, metrics log, checkpoints."""

import csv
import os
from dataclasses import dataclass, replace

import numpy as np

from .losses import detection_loss, trajectory_loss
from .model.detection import build_detection_targets
from .model.network import FusionModel, prepare_frame
from .model.trajectory import ego_to_actor, kmeans_trajectories
from .tensor import Adam, Tape, backward, load_checkpoint, ops, save_checkpoint, set_default_dtype
from .tensor.autodiff import get_default_dtype

OPT_PREFIX = "_opt/"
ANCHOR_KEY = "_anchors"


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class TrainResult:
    checkpoint_path: str
    metrics_path: str
    steps: int
    final_loss: float


def collect_future_tracks(frames, steps, step_s):
    """Actor-frame ground-truth futures of every labeled object."""
    tracks = []
    for frame in frames:
        for lb in frame.labels:
            track = label_future_actor_frame(lb, steps, step_s)
            if track is not None:
                tracks.append(track)
    return np.asarray(tracks)


def label_future_actor_frame(label, steps, step_s):
    """(steps, 2) future in the label's box frame, or None if truncated."""
    expected = np.arange(1, steps + 1) * step_s
    times = label.waypoints[:, 0]
    if len(times) < steps + 1 or not np.allclose(times[1 : steps + 1], expected, atol=1e-6):
        return None
    xy = label.waypoints[1 : steps + 1, 1:3]
    return ego_to_actor(xy, label.box[:2], label.box[2])


def fit_anchors(frames, cfg, seed):
    """k-means anchors over the training split's actor-frame futures."""
    tracks = collect_future_tracks(frames, cfg.model.horizon_steps, cfg.model.step_s)
    return kmeans_trajectories(tracks, cfg.model.hypotheses, np.random.default_rng(seed))


def build_model(cfg, seed, frames=None, anchors=None):
    rng = np.random.default_rng(seed)
    if cfg.model.traj_head == "multipath" and anchors is None:
        if frames is None:
            raise ValueError("multipath model needs training frames or anchors")
        anchors = fit_anchors(frames, cfg, seed)
    return FusionModel(rng, cfg, anchors=anchors)


def frame_loss(model, frame, cfg, inputs=None):
    """Joint loss for one frame; trajectory crops are taken at the label
    boxes (teacher forcing). Returns (loss Value, component floats)."""
    if inputs is None:
        inputs = prepare_frame(frame, cfg)
    head_map, pyramid = model.forward_features(inputs)
    grid = model.lidar_grid
    pos_mask, reg_targets, pos_cells = build_detection_targets(frame.labels, grid)
    cls, reg = detection_loss(head_map, pos_mask, reg_targets, pos_cells, cfg.loss)
    total = cls if reg is None else ops.add(cls, ops.mul(reg, cfg.loss.alpha_reg))
    parts = {
        "cls": cls.item(),
        "reg": 0.0 if reg is None else reg.item(),
        "traj": 0.0,
        "skipped_labels": 0,
    }
    traj_terms = []
    anchors = getattr(model.traj_head, "anchors", None)
    for lb in frame.labels:
        gt_actor = label_future_actor_frame(lb, cfg.model.horizon_steps, cfg.model.step_s)
        if gt_actor is None:
            parts["skipped_labels"] += 1
            continue
        offsets, sigmas, logits = model.traj_outputs(pyramid, tuple(lb.box[:2]), lb.box[2])
        term, _ = trajectory_loss(
            offsets,
            sigmas,
            logits,
            gt_actor,
            cfg.model.traj_head,
            b_gt=cfg.loss.b_gt,
            beta=cfg.loss.beta_cls,
            anchors=anchors,
        )
        traj_terms.append(term)
    if traj_terms:
        traj = ops.mean(ops.stack_scalars(traj_terms))
        parts["traj"] = traj.item()
        total = ops.add(total, ops.mul(traj, cfg.loss.lambda_traj))
    return total, parts


def augment_frame(frame, rng, max_rot=np.pi / 4, max_shift=1.0, scale_range=(0.95, 1.05)):
    """Random global rotation/translation/scaling of all point clouds and
    labels jointly; velocities rotate and scale with the world."""
    theta = rng.uniform(-max_rot, max_rot)
    shift = rng.uniform(-max_shift, max_shift, size=2)
    z_shift = rng.uniform(-0.2, 0.2)
    scale = rng.uniform(*scale_range)
    c, s = np.cos(theta), np.sin(theta)
    rot = np.array([[c, -s], [s, c]])

    def xf_pos(xy):
        return (np.asarray(xy) @ rot.T) * scale + shift

    def xf_vec(xy):
        return (np.asarray(xy) @ rot.T) * scale

    lidar = []
    for sw in frame.lidar_sweeps:
        pts = sw.points.copy()
        if len(pts):
            pts[:, :2] = xf_pos(pts[:, :2])
            pts[:, 2] = pts[:, 2] * scale + z_shift
        lidar.append(replace(sw, points=pts))
    radar = []
    for sw in frame.radar_sweeps:
        pts = sw.points.copy()
        if len(pts):
            pts[:, 0:2] = xf_pos(pts[:, 0:2])
            pts[:, 3:5] = xf_vec(pts[:, 3:5])
        radar.append(replace(sw, points=pts))
    lanes = [replace(ln, centerline=xf_pos(ln.centerline)) for ln in frame.lanes]
    labels = []
    for lb in frame.labels:
        box = lb.box.copy()
        box[:2] = xf_pos(box[:2])
        box[2] = box[2] + theta
        box[3:5] = box[3:5] * scale
        wp = lb.waypoints.copy()
        wp[:, 1:3] = xf_pos(wp[:, 1:3])
        labels.append(
            replace(lb, box=box, waypoints=wp, speed=lb.speed * scale,
                    distance_to_ego=float(np.hypot(*box[:2])))
        )
    return replace(frame, lidar_sweeps=lidar, radar_sweeps=radar, lanes=lanes, labels=labels)


def lr_at(step, total_steps, opt_cfg):
    lr = opt_cfg.lr
    for frac in opt_cfg.lr_decay_at:
        if step >= frac * total_steps:
            lr *= opt_cfg.lr_decay_factor
    return lr


def save_train_checkpoint(path, model, optimizer, anchors=None):
    tensors = dict(model.named_parameters())
    for key, arr in optimizer.state_tensors().items():
        tensors[OPT_PREFIX + key] = arr
    if anchors is not None:
        tensors[ANCHOR_KEY] = np.asarray(anchors)
    save_checkpoint(path, tensors)


def load_train_checkpoint(path):
    """Split a checkpoint into (model state, optimizer state, anchors)."""
    blob = load_checkpoint(path)
    model_state = {}
    opt_state = {}
    anchors = None
    for key, arr in blob.items():
        if key == ANCHOR_KEY:
            anchors = np.asarray(arr, dtype=float)
        elif key.startswith(OPT_PREFIX):
            opt_state[key[len(OPT_PREFIX) :]] = arr
        else:
            model_state[key] = arr
    return model_state, opt_state, anchors


def load_model(cfg, checkpoint_path):
    """Rebuild a model for inference from a training checkpoint."""
    model_state, _, anchors = load_train_checkpoint(checkpoint_path)
    model = build_model(cfg, seed=0, anchors=anchors)
    model.load_state_dict({k: np.asarray(v, dtype=get_default_dtype()) for k, v in model_state.items()})
    return model


def train(frames, cfg, seed, out_dir, resume=None, log_every=10):
    """Deterministic training run; writes metrics CSV and checkpoints.

    Returns a TrainResult. The dataset is shuffled per pass with a seeded
    generator; a NaN loss aborts with step diagnostics.
    """
    os.makedirs(out_dir, exist_ok=True)
    set_default_dtype(np.float32 if cfg.optimizer.precision == "float32" else np.float64)
    if not frames:
        raise ValueError("empty training dataset")
    opt_cfg = cfg.optimizer
    steps_per_epoch = max(1, int(np.ceil(len(frames) / opt_cfg.batch_size)))
    total_steps = opt_cfg.max_steps or int(np.ceil(opt_cfg.epochs * steps_per_epoch))

    anchors = None
    if cfg.model.traj_head == "multipath":
        anchors = fit_anchors(frames, cfg, seed)
    model = build_model(cfg, seed, anchors=anchors)
    optimizer = Adam(
        list(model.named_parameters()),
        lr=opt_cfg.lr,
        betas=(opt_cfg.beta1, opt_cfg.beta2),
        eps=opt_cfg.eps,
    )
    if resume:
        model_state, opt_state, saved_anchors = load_train_checkpoint(resume)
        model.load_state_dict(
            {k: np.asarray(v, dtype=get_default_dtype()) for k, v in model_state.items()}
        )
        if opt_state:
            optimizer.load_state_tensors(opt_state)
        if saved_anchors is not None:
            anchors = saved_anchors

    order_rng = np.random.default_rng(seed + 1)
    aug_rng = np.random.default_rng(seed + 2)
    # voxelization and rasterization are pure per frame; cache them unless
    # augmentation rewrites the points every visit
    input_cache = None if opt_cfg.augment else [prepare_frame(f, cfg) for f in frames]
    metrics_path = os.path.join(out_dir, "metrics.csv")
    ckpt_path = os.path.join(out_dir, "model.ckpt")
    start_step = optimizer.step_count
    queue = []
    final_loss = float("nan")
    with open(metrics_path, "a" if resume else "w", newline="", encoding="utf-8") as mf:
        writer = csv.writer(mf)
        if not resume:
            writer.writerow(["step", "loss", "cls", "reg", "traj", "lr"])
        for step in range(start_step, total_steps):
            if len(queue) < opt_cfg.batch_size:
                queue.extend(order_rng.permutation(len(frames)).tolist())
            batch_ids = [queue.pop(0) for _ in range(opt_cfg.batch_size)]
            optimizer.lr = lr_at(step, total_steps, opt_cfg)
            with Tape() as tape:
                terms = []
                agg = {"cls": 0.0, "reg": 0.0, "traj": 0.0}
                for fi in batch_ids:
                    frame = frames[fi]
                    inputs = None
                    if opt_cfg.augment:
                        frame = augment_frame(frame, aug_rng)
                    elif input_cache is not None:
                        inputs = input_cache[fi]
                    loss, parts = frame_loss(model, frame, cfg, inputs=inputs)
                    terms.append(loss)
                    for key in agg:
                        agg[key] += parts[key] / len(batch_ids)
                total = ops.mean(ops.stack_scalars(terms))
                if not np.isfinite(total.item()):
                    raise TrainingDiverged(
                        f"non-finite loss at step {step}: {total.item()} "
                        f"(cls={agg['cls']:.4g} reg={agg['reg']:.4g} traj={agg['traj']:.4g})"
                    )
                backward(total, tape)
            # a batch may legitimately leave parts of the model untouched
            # (no labels -> no trajectory terms, empty sweeps -> no radar
            # points); those parameters simply see a zero gradient
            for _, p in optimizer.named_params:
                if p.grad is None:
                    p.grad = np.zeros_like(p.data)
            optimizer.step()
            optimizer.zero_grad()
            final_loss = total.item()
            if step % log_every == 0 or step == total_steps - 1:
                writer.writerow(
                    [step, f"{final_loss:.6f}", f"{agg['cls']:.6f}", f"{agg['reg']:.6f}",
                     f"{agg['traj']:.6f}", f"{optimizer.lr:.6g}"]
                )
            if opt_cfg.checkpoint_every and (step + 1) % opt_cfg.checkpoint_every == 0:
                save_train_checkpoint(
                    os.path.join(out_dir, f"step_{step + 1}.ckpt"), model, optimizer, anchors
                )
    save_train_checkpoint(ckpt_path, model, optimizer, anchors)
    return TrainResult(ckpt_path, metrics_path, total_steps, final_loss)
