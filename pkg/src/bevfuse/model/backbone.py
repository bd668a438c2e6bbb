"""Reduced multiscale backbone: parallel 1x/2x/4x branches with cross-scale
exchange, repeated blocks, then a pyramid merge back to full resolution."""

from ..tensor import Conv2d, Module, ops


class MultiScaleBlock(Module):
    """One block: a 3x3 conv per scale, then ladder exchange between
    neighboring scales (1x1 convs, nearest-neighbor resize up)."""

    def __init__(self, rng, channels):
        c1, c2, c4 = channels
        self.conv1 = Conv2d(rng, c1, c1, k=3)
        self.conv2 = Conv2d(rng, c2, c2, k=3)
        self.conv4 = Conv2d(rng, c4, c4, k=3)
        self.from2to1 = Conv2d(rng, c2, c1, k=1, pad=0)
        self.from1to2 = Conv2d(rng, c1, c2, k=1, pad=0, stride=2)
        self.from4to2 = Conv2d(rng, c4, c2, k=1, pad=0)
        self.from2to4 = Conv2d(rng, c2, c4, k=1, pad=0, stride=2)

    def __call__(self, feats):
        x1, x2, x4 = feats
        y1 = ops.relu(self.conv1(x1))
        y2 = ops.relu(self.conv2(x2))
        y4 = ops.relu(self.conv4(x4))
        z1 = ops.relu(ops.add(y1, ops.upsample_nearest(self.from2to1(y2), 2)))
        z2 = ops.relu(
            ops.add(ops.add(y2, self.from1to2(y1)), ops.upsample_nearest(self.from4to2(y4), 2))
        )
        z4 = ops.relu(ops.add(y4, self.from2to4(y2)))
        return z1, z2, z4


class Backbone(Module):
    """Stacked multiscale blocks plus a pyramid merge to per-cell features
    at the lidar grid resolution."""

    def __init__(self, rng, in_channels, branch_channels, out_channels, n_blocks=3):
        c1, c2, c4 = branch_channels
        i1, i2, i4 = in_channels
        self.entry1 = Conv2d(rng, i1, c1, k=3)
        self.entry2 = Conv2d(rng, i2, c2, k=3)
        self.entry4 = Conv2d(rng, i4, c4, k=3)
        self.blocks = [MultiScaleBlock(rng, branch_channels) for _ in range(n_blocks)]
        self.merge = Conv2d(rng, c1 + c2 + c4, out_channels, k=1, pad=0)
        self.post = Conv2d(rng, out_channels, out_channels, k=3)
        self.out_channels = out_channels

    def __call__(self, feats_per_scale):
        x1 = ops.relu(self.entry1(feats_per_scale[0]))
        x2 = ops.relu(self.entry2(feats_per_scale[1]))
        x4 = ops.relu(self.entry4(feats_per_scale[2]))
        feats = (x1, x2, x4)
        for block in self.blocks:
            feats = block(feats)
        x1, x2, x4 = feats
        merged = ops.concat(
            [x1, ops.upsample_nearest(x2, 2), ops.upsample_nearest(x4, 4)], axis=0
        )
        return ops.relu(self.post(ops.relu(self.merge(merged))))
