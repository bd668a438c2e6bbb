"""Spatio-temporal radar features on a BEV grid.

Per sweep, each grid cell gathers its K nearest radar points within a
distance threshold, runs the point feature concatenated with the
cell-relative offset through a small per-sweep MLP, and sums the results
(an empty cell keeps a zero vector). The per-sweep cell features are then
concatenated in chronological order and fused by a second MLP, and finally
resampled onto the backbone scales with learned convolutions.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .grid import BevGridSpec
from .tensor import MLP, Conv2d, Module, ops
from .tensor.autodiff import ShapeError

POINT_FEATURE_DIM = 5  # x, y, rcs, vx, vy


@dataclass
class AssociationGraph:
    """Cell -> point links for one sweep: (n_cells, K) indices, -1 padded."""

    indices: np.ndarray
    offsets: np.ndarray  # (n_cells, K, 2) point minus cell center, 0 where padded
    k: int
    d: float

    @property
    def n_links(self):
        return int((self.indices >= 0).sum())


def build_association(points_xy, grid, k, d):
    """K nearest points within d grid cells of each cell center.

    d is measured in radar-grid cell units and may be +inf (unbounded).
    Ties are broken toward the lower point index so the graph is
    deterministic. One point may serve many cells; cells with no point in
    range get an empty list.
    """
    if k < 1:
        raise ValueError(f"neighbor count must be >= 1, got {k}")
    if d < 0:
        raise ValueError(f"distance threshold must be >= 0, got {d}")
    centers = np.ascontiguousarray(grid.cell_centers())
    pts = np.ascontiguousarray(np.asarray(points_xy, dtype=float).reshape(-1, 2))
    radius = d * grid.cell_size if np.isfinite(d) else np.inf
    idx = kernels.nearest_points(pts, centers, k, radius)
    offsets = np.zeros((len(centers), k, 2))
    linked = idx >= 0
    if linked.any():
        rows, cols = np.nonzero(linked)
        offsets[rows, cols] = pts[idx[rows, cols]] - centers[rows]
    return AssociationGraph(indices=idx, offsets=offsets, k=k, d=d)


def prune_points(points, grid, margin):
    """Drop points more than margin meters outside the grid extent."""
    pts = np.asarray(points, dtype=float).reshape(-1, POINT_FEATURE_DIM)
    keep = (
        (pts[:, 0] >= grid.x_min - margin)
        & (pts[:, 0] <= grid.x_max + margin)
        & (pts[:, 1] >= grid.y_min - margin)
        & (pts[:, 1] <= grid.y_max + margin)
        & np.isfinite(pts).all(axis=1)
    )
    return pts[keep]


def spatial_features(graph, points, mlp, out_dim, feature_scale=None):
    """Per-cell sum of the point MLP over associated points (one sweep).

    The MLP input is the point feature vector concatenated with the
    cell-relative offset; cells with an empty association keep exactly the
    zero vector.
    """
    n_cells = graph.indices.shape[0]
    linked = graph.indices >= 0
    if not linked.any():
        return ops.as_value(np.zeros((n_cells, out_dim)))
    rows, cols = np.nonzero(linked)
    pt_idx = graph.indices[rows, cols]
    pts = np.asarray(points, dtype=float)
    raw = np.concatenate([pts[pt_idx], graph.offsets[rows, cols]], axis=1)
    if feature_scale is not None:
        raw = raw * feature_scale[None, :]
    encoded = mlp(ops.as_value(raw))
    if encoded.shape[1] != out_dim:
        raise ShapeError(f"point MLP produced {encoded.shape[1]} channels, expected {out_dim}")
    return ops.scatter_add_rows(encoded, rows, n_cells)


class RadarFeaturizer(Module):
    """Full radar branch: association, per-sweep encoding, temporal fusion."""

    def __init__(
        self,
        rng,
        grid,
        sweep_count,
        k=1,
        d=10.0,
        point_channels=32,
        point_hidden=32,
        fused_channels=64,
        fuse_hidden=64,
        roi_margin=10.0,
        share_sweep_weights=False,
        position_scale=None,
    ):
        self.grid = grid
        self.sweep_count = sweep_count
        self.k = k
        self.d = d
        self.point_channels = point_channels
        self.fused_channels = fused_channels
        self.roi_margin = roi_margin
        self.share_sweep_weights = share_sweep_weights
        in_dim = POINT_FEATURE_DIM + 2
        n_mlps = 1 if share_sweep_weights else sweep_count
        self.point_mlps = [
            MLP(rng, (in_dim, point_hidden, point_channels)) for _ in range(n_mlps)
        ]
        self.fuse_mlp = MLP(rng, (sweep_count * point_channels, fuse_hidden, fused_channels))
        # fixed input conditioning: positions/offsets, reflectivity and
        # speeds are brought to comparable scale before the MLP
        pos = position_scale if position_scale is not None else max(grid.x_max - grid.x_min, 1.0) / 2
        self.feature_scale = np.array([1 / pos, 1 / pos, 1 / 20.0, 1 / 10.0, 1 / 10.0, 1 / pos, 1 / pos])

    def point_mlp(self, m):
        return self.point_mlps[0] if self.share_sweep_weights else self.point_mlps[m]

    def sweep_features(self, m, points):
        pts = prune_points(points, self.grid, self.roi_margin)
        graph = build_association(pts[:, :2], self.grid, self.k, self.d)
        # positions enter the point feature relative to the grid center so
        # the whole map is exactly translation equivariant with the grid
        recentered = pts.copy()
        recentered[:, 0] -= 0.5 * (self.grid.x_min + self.grid.x_max)
        recentered[:, 1] -= 0.5 * (self.grid.y_min + self.grid.y_max)
        return spatial_features(
            graph, recentered, self.point_mlp(m), self.point_channels, self.feature_scale
        )

    def __call__(self, sweeps_points):
        """sweeps_points: list of (P_m, 5) arrays, oldest first, length M.

        Returns the fused feature volume as (C, ny, nx).
        """
        if len(sweeps_points) != self.sweep_count:
            raise ShapeError(
                f"expected {self.sweep_count} radar sweeps, got {len(sweeps_points)}"
            )
        per_sweep = [self.sweep_features(m, pts) for m, pts in enumerate(sweeps_points)]
        stacked = ops.concat(per_sweep, axis=1)
        fused = self.fuse_mlp(stacked)
        grid_map = ops.reshape(
            ops.transpose2d(fused), (self.fused_channels, self.grid.ny, self.grid.nx)
        )
        return grid_map


class RadarRescaler(Module):
    """Resample the radar volume onto each backbone scale.

    The radar grid must relate to each target scale by an integer factor:
    integer upsampling uses nearest-neighbor resize followed by a 3x3
    convolution, downsampling uses stride-2 convolutions.
    """

    def __init__(self, rng, radar_grid, lidar_grid, in_channels, out_channels, scales=(1, 2, 4)):
        self.scales = tuple(scales)
        self.plans = []
        convs = []
        for s in self.scales:
            target_nx = lidar_grid.nx // s
            target_ny = lidar_grid.ny // s
            if lidar_grid.nx % s or lidar_grid.ny % s:
                raise ShapeError(f"lidar grid {lidar_grid.nx}x{lidar_grid.ny} not divisible by scale {s}")
            if target_nx >= radar_grid.nx:
                if target_nx % radar_grid.nx or target_ny % radar_grid.ny:
                    raise ShapeError(
                        f"non-integer upsample from {radar_grid.nx} to {target_nx} cells"
                    )
                factor = target_nx // radar_grid.nx
                if target_ny // radar_grid.ny != factor:
                    raise ShapeError("anisotropic radar-to-backbone resampling")
                self.plans.append(("up", factor))
                convs.append([Conv2d(rng, in_channels, out_channels, k=3)])
            else:
                if radar_grid.nx % target_nx:
                    raise ShapeError(
                        f"non-integer downsample from {radar_grid.nx} to {target_nx} cells"
                    )
                factor = radar_grid.nx // target_nx
                n_halvings = int(round(np.log2(factor)))
                if 2**n_halvings != factor:
                    raise ShapeError(f"downsample factor {factor} is not a power of two")
                self.plans.append(("down", n_halvings))
                stack = [Conv2d(rng, in_channels, out_channels, k=3, stride=2)]
                for _ in range(n_halvings - 1):
                    stack.append(Conv2d(rng, out_channels, out_channels, k=3, stride=2))
                convs.append(stack)
        self.convs = convs

    def __call__(self, volume):
        out = []
        for (mode, arg), stack in zip(self.plans, self.convs):
            x = volume
            if mode == "up":
                if arg > 1:
                    x = ops.upsample_nearest(x, arg)
                x = stack[0](x)
            else:
                for conv in stack:
                    x = conv(x)
            out.append(ops.relu(x))
        return out
