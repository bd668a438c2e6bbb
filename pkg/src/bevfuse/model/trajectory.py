"""Trajectory heads on rotated-ROI feature patches.

All heads predict waypoints in the actor frame (x along the box heading)
at fixed fractional-second steps, each waypoint a 2D Laplace distribution
(position plus per-axis scale). Outputs are converted to the ego frame
when decoded. Three formulations: a single hypothesis, an anchorless
multi-hypothesis head, and an anchor-residual multi-hypothesis head.
"""

from dataclasses import dataclass

import numpy as np

from ..tensor import MLP, Module, ops

SIGMA_FLOOR = 0.01


@dataclass
class TrajectoryHypothesis:
    waypoints: np.ndarray  # (T, 2) ego frame
    sigmas: np.ndarray  # (T, 2) actor-frame per-axis Laplace scales
    confidence: float


def actor_to_ego(points, center_xy, theta):
    c, s = np.cos(theta), np.sin(theta)
    rot = np.array([[c, -s], [s, c]])
    return np.asarray(points) @ rot.T + np.asarray(center_xy)


def ego_to_actor(points, center_xy, theta):
    c, s = np.cos(theta), np.sin(theta)
    rot = np.array([[c, -s], [s, c]])
    return (np.asarray(points) - np.asarray(center_xy)) @ rot


class TrajectoryHeadBase(Module):
    def __init__(self, rng, in_channels, patch_cells, steps, hypotheses, hidden=128):
        self.steps = steps
        self.hypotheses = hypotheses
        self.in_dim = in_channels * patch_cells * patch_cells
        self.trunk = MLP(rng, (self.in_dim, hidden, hidden))
        self.way_out = MLP(rng, (hidden, hypotheses * steps * 4), out_gain=0.1)
        self.conf_out = MLP(rng, (hidden, hypotheses), out_gain=0.1) if hypotheses > 1 else None

    def raw_outputs(self, patch):
        """offsets (H*T, 2), sigmas (H*T, 2) positive, conf logits (1, H) or None."""
        flat = ops.reshape(patch, (1, self.in_dim))
        hid = ops.relu(self.trunk(flat))
        raw = ops.reshape(self.way_out(hid), (self.hypotheses * self.steps, 4))
        offsets = ops.narrow(raw, 1, 0, 2)
        sigmas = ops.add(ops.softplus(ops.narrow(raw, 1, 2, 2)), SIGMA_FLOOR)
        logits = self.conf_out(hid) if self.conf_out is not None else None
        return offsets, sigmas, logits


class SingleHypothesisHead(TrajectoryHeadBase):
    """One trajectory per object, confidence fixed at 1."""

    def __init__(self, rng, in_channels, patch_cells, steps, hidden=128):
        super().__init__(rng, in_channels, patch_cells, steps, hypotheses=1, hidden=hidden)

    def __call__(self, patch):
        offsets, sigmas, _ = self.raw_outputs(patch)
        return offsets, sigmas, None


class MtpHead(TrajectoryHeadBase):
    """Anchorless multi-hypothesis head with softmax confidences."""

    def __call__(self, patch):
        return self.raw_outputs(patch)


class MultiPathHead(TrajectoryHeadBase):
    """Anchor-based head: fixed anchor trajectories plus learned residuals."""

    def __init__(self, rng, in_channels, patch_cells, steps, anchors, hidden=128):
        anchors = np.asarray(anchors, dtype=float)
        if anchors.ndim != 3 or anchors.shape[1] != steps or anchors.shape[2] != 2:
            raise ValueError(f"anchors must be (H, {steps}, 2), got {anchors.shape}")
        super().__init__(
            rng, in_channels, patch_cells, steps, hypotheses=anchors.shape[0], hidden=hidden
        )
        self.anchors = anchors  # constant, not learned

    def __call__(self, patch):
        offsets, sigmas, logits = self.raw_outputs(patch)
        anchored = ops.add(offsets, ops.as_value(self.anchors.reshape(-1, 2)))
        return anchored, sigmas, logits


def decode_hypotheses(offsets, sigmas, logits, center_xy, theta):
    """Value outputs -> list of TrajectoryHypothesis in the ego frame."""
    off = offsets.data.reshape(-1, 2)
    sig = sigmas.data.reshape(-1, 2)
    steps = off.shape[0] if logits is None else off.shape[0] // logits.data.size
    if logits is None:
        confs = np.ones(1)
    else:
        z = logits.data.ravel()
        e = np.exp(z - z.max())
        confs = e / e.sum()
    out = []
    for h, conf in enumerate(confs):
        sl = slice(h * steps, (h + 1) * steps)
        out.append(
            TrajectoryHypothesis(
                waypoints=actor_to_ego(off[sl], center_xy, theta),
                sigmas=sig[sl].copy(),
                confidence=float(conf),
            )
        )
    return out


def kmeans_trajectories(samples, k, rng, n_iter=50):
    """Lloyd's k-means with k-means++ seeding over flattened trajectories.

    samples: (N, T, 2) actor-frame futures. Returns (k, T, 2) centroids.
    Empty clusters are reseeded on the farthest samples, and ties are
    resolved by lower index so the result is deterministic given rng.
    """
    pts = np.asarray(samples, dtype=float)
    n, t, _ = pts.shape
    if n < k:
        raise ValueError(f"need at least {k} trajectories to fit {k} anchors, got {n}")
    flat = pts.reshape(n, t * 2)
    centers = np.empty((k, t * 2))
    centers[0] = flat[rng.integers(n)]
    d2 = ((flat - centers[0]) ** 2).sum(axis=1)
    for i in range(1, k):
        probs = d2 / d2.sum() if d2.sum() > 0 else np.full(n, 1.0 / n)
        centers[i] = flat[rng.choice(n, p=probs)]
        d2 = np.minimum(d2, ((flat - centers[i]) ** 2).sum(axis=1))
    for _ in range(n_iter):
        dists = ((flat[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        assign = dists.argmin(axis=1)
        new_centers = centers.copy()
        for i in range(k):
            members = flat[assign == i]
            if len(members):
                new_centers[i] = members.mean(axis=0)
            else:
                new_centers[i] = flat[dists.min(axis=1).argmax()]
        if np.allclose(new_centers, centers):
            centers = new_centers
            break
        centers = new_centers
    return centers.reshape(k, t, 2)
