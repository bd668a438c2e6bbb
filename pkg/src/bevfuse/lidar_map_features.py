"""Lidar occupancy voxelization and the lidar/map feature branches."""

import numpy as np

from .tensor import Conv2d, Module, ops


def voxelize(sweeps_points, grid, z_range, z_bins):
    """Binary occupancy volume (L * z_bins, ny, nx) from L lidar sweeps.

    Points outside the grid or the z range are dropped; a cell-bin is 1
    iff at least one point discretizes into it, so the result is invariant
    to point multiplicity and ordering.
    """
    if z_bins <= 0:
        raise ValueError(f"z_bins must be positive, got {z_bins}")
    z_lo, z_hi = z_range
    if z_hi <= z_lo:
        raise ValueError(f"empty z range [{z_lo}, {z_hi}]")
    n_sweeps = len(sweeps_points)
    occ = np.zeros((n_sweeps * z_bins, grid.ny, grid.nx))
    bin_h = (z_hi - z_lo) / z_bins
    for s, pts in enumerate(sweeps_points):
        pts = np.asarray(pts, dtype=float).reshape(-1, 3)
        if len(pts) == 0:
            continue
        keep = grid.contains(pts[:, 0], pts[:, 1]) & (pts[:, 2] >= z_lo) & (pts[:, 2] < z_hi)
        pts = pts[keep]
        if len(pts) == 0:
            continue
        r, c = grid.metric_to_cell(pts[:, 0], pts[:, 1])
        zb = np.floor((pts[:, 2] - z_lo) / bin_h).astype(np.int64)
        zb = np.clip(zb, 0, z_bins - 1)
        occ[s * z_bins + zb, r, c] = 1.0
    return occ


class ModalityEncoder(Module):
    """One lightweight conv then a strided ladder to the 1x/2x/4x scales."""

    def __init__(self, rng, in_channels, stem_channels, out_channels, scales=(1, 2, 4)):
        self.stem = Conv2d(rng, in_channels, stem_channels, k=3)
        self.scale_convs = []
        prev = stem_channels
        for s in sorted(scales):
            stride = 1 if s == 1 else 2
            self.scale_convs.append(Conv2d(rng, prev, out_channels, k=3, stride=stride))
            prev = out_channels

    def __call__(self, x):
        x = ops.relu(self.stem(ops.as_value(x)))
        out = []
        for conv in self.scale_convs:
            x = ops.relu(conv(x))
            out.append(x)
        return out
