"""Actor-centric rotated ROI crops of the backbone feature map."""

import numpy as np

from ..tensor import ops


def rotated_roi_points(center_xy, theta, size_m, out_cells, grid):
    """(out_cells^2, 2) continuous (col, row) sample coordinates.

    The crop is centered at center_xy, rotated so +u runs along theta, and
    covers size_m x size_m meters; samples are the crop's cell centers.
    """
    half = size_m / 2.0
    ticks = (np.arange(out_cells) + 0.5) / out_cells * size_m - half
    u, v = np.meshgrid(ticks, ticks)  # v indexes crop rows, u crop cols
    c, s = np.cos(theta), np.sin(theta)
    x = center_xy[0] + c * u - s * v
    y = center_xy[1] + s * u + c * v
    col, row = grid.metric_to_continuous(x.ravel(), y.ravel())
    return np.column_stack([col, row])


def crop_rotated_roi(features, center_xy, theta, size_m, out_cells, grid):
    """Bilinear crop of (C, ny, nx) features -> (C, out_cells, out_cells).

    Samples falling outside the feature map read zero.
    """
    pts = rotated_roi_points(center_xy, theta, size_m, out_cells, grid)
    sampled = ops.grid_sample(features, pts)  # (P, C)
    c = features.shape[0]
    return ops.reshape(ops.transpose2d(sampled), (c, out_cells, out_cells))
