"""End-to-end fusion model: per-modality encoders, multiscale backbone,
detection head, and an actor-centric trajectory head."""

import numpy as np

from ..lidar_map_features import ModalityEncoder, voxelize
from ..radar_features import RadarFeaturizer, RadarRescaler
from ..sim.mapgen import rasterize_map
from ..tensor import Module, ops
from ..tensor.autodiff import ShapeError
from .backbone import Backbone
from .detection import DetectionHead, decode_detections
from .roi import crop_rotated_roi
from .trajectory import MtpHead, MultiPathHead, SingleHypothesisHead, decode_hypotheses


def prepare_frame(frame, cfg):
    """LabeledFrame -> plain model inputs (occupancy, map raster, radar points).

    A frame may carry more history than the model consumes (e.g. the
    radar-history ablation re-reads one dataset); the newest sweeps are
    taken. Fewer sweeps than configured is an error.
    """
    lidar_grid = cfg.grid.lidar_grid()
    if len(frame.lidar_sweeps) < cfg.sim.lidar_sweeps:
        raise ShapeError(
            f"frame has {len(frame.lidar_sweeps)} lidar sweeps, config wants {cfg.sim.lidar_sweeps}"
        )
    m = cfg.sim.radar_sweep_count
    if len(frame.radar_sweeps) < m:
        raise ShapeError(
            f"frame has {len(frame.radar_sweeps)} radar sweeps, config wants {m}"
        )
    lidar = frame.lidar_sweeps[-cfg.sim.lidar_sweeps :]
    occupancy = voxelize(
        [s.points for s in lidar], lidar_grid, cfg.grid.z_range, cfg.grid.z_bins
    )
    raster = rasterize_map(frame.lanes, lidar_grid)
    radar = [s.points for s in frame.radar_sweeps[-m:]]
    return {"occupancy": occupancy, "map_raster": raster, "radar_sweeps": radar}


class FusionModel(Module):
    def __init__(self, rng, cfg, anchors=None):
        self.cfg = cfg
        self.lidar_grid = cfg.grid.lidar_grid()
        self.radar_grid = cfg.radar_grid()
        m = cfg.model
        occ_channels = cfg.sim.lidar_sweeps * cfg.grid.z_bins
        self.lidar_enc = ModalityEncoder(rng, occ_channels, m.lidar_stem_channels, m.lidar_scale_channels)
        self.map_enc = ModalityEncoder(rng, 3, m.map_stem_channels, m.map_scale_channels)
        in_ch = m.lidar_scale_channels + m.map_scale_channels
        if m.radar_enabled:
            self.radar = RadarFeaturizer(
                rng,
                self.radar_grid,
                sweep_count=cfg.sim.radar_sweep_count,
                k=m.radar_k,
                d=m.radar_d,
                point_channels=m.radar_point_channels,
                point_hidden=m.radar_point_hidden,
                fused_channels=m.radar_fused_channels,
                fuse_hidden=m.radar_fuse_hidden,
                roi_margin=m.radar_roi_margin,
                share_sweep_weights=m.radar_share_sweep_weights,
            )
            self.radar_rescale = RadarRescaler(
                rng, self.radar_grid, self.lidar_grid, m.radar_fused_channels, m.radar_scale_channels
            )
            in_ch += m.radar_scale_channels
        self.backbone = Backbone(
            rng, (in_ch, in_ch, in_ch), m.branch_channels, m.backbone_channels, m.backbone_blocks
        )
        self.det_head = DetectionHead(rng, m.backbone_channels, hidden=m.det_hidden)
        steps = m.horizon_steps
        if m.traj_head == "single":
            self.traj_head = SingleHypothesisHead(
                rng, m.backbone_channels, m.roi_cells, steps, hidden=m.traj_hidden
            )
        elif m.traj_head == "mtp":
            self.traj_head = MtpHead(
                rng, m.backbone_channels, m.roi_cells, steps, m.hypotheses, hidden=m.traj_hidden
            )
        else:
            if anchors is None:
                raise ValueError("multipath head requires fitted anchor trajectories")
            if len(anchors) != m.hypotheses:
                raise ValueError(f"got {len(anchors)} anchors for {m.hypotheses} hypotheses")
            self.traj_head = MultiPathHead(
                rng, m.backbone_channels, m.roi_cells, steps, anchors, hidden=m.traj_hidden
            )

    def forward_features(self, inputs):
        """Model inputs -> (detection head map, pyramid features), both Values."""
        lidar_scales = self.lidar_enc(inputs["occupancy"])
        map_scales = self.map_enc(inputs["map_raster"])
        per_scale = []
        if self.cfg.model.radar_enabled:
            volume = self.radar(inputs["radar_sweeps"])
            radar_scales = self.radar_rescale(volume)
            for l, mp, r in zip(lidar_scales, map_scales, radar_scales):
                per_scale.append(ops.concat([l, mp, r], axis=0))
        else:
            for l, mp in zip(lidar_scales, map_scales):
                per_scale.append(ops.concat([l, mp], axis=0))
        pyramid = self.backbone(per_scale)
        head_map = self.det_head(pyramid)
        return head_map, pyramid

    def traj_outputs(self, pyramid, center_xy, theta):
        """Raw trajectory head Values for an actor-centric crop."""
        patch = crop_rotated_roi(
            pyramid,
            center_xy,
            theta,
            self.cfg.model.roi_size_m,
            self.cfg.model.roi_cells,
            self.lidar_grid,
        )
        return self.traj_head(patch)

    def detect(self, head_map, score_threshold=None):
        thr = self.cfg.model.score_threshold if score_threshold is None else score_threshold
        return decode_detections(
            head_map,
            self.lidar_grid,
            top_k=self.cfg.model.top_k,
            nms_iou=self.cfg.model.nms_iou,
            score_threshold=thr,
        )

    def predict_frame(self, inputs, score_threshold=None):
        """Full inference on one frame: detections plus their hypotheses."""
        head_map, pyramid = self.forward_features(inputs)
        detections = self.detect(head_map, score_threshold)
        trajectories = []
        for det in detections:
            offsets, sigmas, logits = self.traj_outputs(pyramid, (det.x, det.y), det.theta)
            trajectories.append(decode_hypotheses(offsets, sigmas, logits, (det.x, det.y), det.theta))
        return detections, trajectories
