"""Bird's-eye-view grid specification shared by all modalities."""

from dataclasses import dataclass

import numpy as np


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class BevGridSpec:
    """Rectangular ROI discretized at a fixed cells-per-meter resolution.

    Rows index y, columns index x; cell (r, c) covers
    [x_min + c/cpm, x_min + (c+1)/cpm) x [y_min + r/cpm, y_min + (r+1)/cpm).
    """

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    cells_per_meter: float

    def __post_init__(self):
        if self.x_max <= self.x_min or self.y_max <= self.y_min:
            raise GridError(f"empty ROI: x [{self.x_min}, {self.x_max}], y [{self.y_min}, {self.y_max}]")
        if self.cells_per_meter <= 0:
            raise GridError(f"resolution must be positive, got {self.cells_per_meter}")
        if abs(self.nx - (self.x_max - self.x_min) * self.cells_per_meter) > 1e-6:
            raise GridError("ROI width is not an integer number of cells")
        if abs(self.ny - (self.y_max - self.y_min) * self.cells_per_meter) > 1e-6:
            raise GridError("ROI height is not an integer number of cells")

    @property
    def nx(self):
        return int(round((self.x_max - self.x_min) * self.cells_per_meter))

    @property
    def ny(self):
        return int(round((self.y_max - self.y_min) * self.cells_per_meter))

    @property
    def cell_size(self):
        return 1.0 / self.cells_per_meter

    def cell_centers(self):
        """(ny*nx, 2) metric coordinates of all cell centers, row-major."""
        xs = self.x_min + (np.arange(self.nx) + 0.5) * self.cell_size
        ys = self.y_min + (np.arange(self.ny) + 0.5) * self.cell_size
        gx, gy = np.meshgrid(xs, ys)
        return np.column_stack([gx.ravel(), gy.ravel()])

    def cell_center(self, r, c):
        return (
            self.x_min + (c + 0.5) * self.cell_size,
            self.y_min + (r + 0.5) * self.cell_size,
        )

    def metric_to_cell(self, x, y):
        """Integer (r, c) containing the point; may fall outside the grid."""
        c = np.floor((np.asarray(x) - self.x_min) * self.cells_per_meter).astype(np.int64)
        r = np.floor((np.asarray(y) - self.y_min) * self.cells_per_meter).astype(np.int64)
        return r, c

    def metric_to_continuous(self, x, y):
        """(col, row) float coordinates where integers are cell centers."""
        col = (np.asarray(x) - self.x_min) * self.cells_per_meter - 0.5
        row = (np.asarray(y) - self.y_min) * self.cells_per_meter - 0.5
        return col, row

    def contains(self, x, y):
        return (
            (np.asarray(x) >= self.x_min)
            & (np.asarray(x) < self.x_max)
            & (np.asarray(y) >= self.y_min)
            & (np.asarray(y) < self.y_max)
        )

    def scaled(self, ratio):
        """Same extent at ratio x the resolution (radar grid, pyramid scales)."""
        return BevGridSpec(self.x_min, self.x_max, self.y_min, self.y_max, self.cells_per_meter * ratio)
