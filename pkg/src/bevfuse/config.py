"""Run configuration: versioned, sectioned, YAML-serialized.

Sections mirror the pipeline: ``sim`` (scene generator), ``grid`` (BEV
discretization), ``model`` (network), ``loss`` (weights), ``optimizer``
(training schedule). Unknown keys are rejected by name so a typo fails
loudly instead of silently using a default.
"""

import dataclasses
from dataclasses import dataclass, field

import numpy as np
import yaml

from .grid import BevGridSpec
from .sim.types import SimConfig

CONFIG_VERSION = 1


class ConfigError(ValueError):
    pass


@dataclass
class GridConfig:
    roi_half: float = 16.0
    cells_per_meter: float = 2.0
    z_range: tuple = (-0.5, 3.5)
    z_bins: int = 4

    def lidar_grid(self):
        h = self.roi_half
        return BevGridSpec(-h, h, -h, h, self.cells_per_meter)


@dataclass
class ModelConfig:
    radar_enabled: bool = True
    radar_resolution_ratio: float = 0.25
    radar_k: int = 1
    radar_d: float = 10.0  # in radar-grid cells; may be inf
    radar_point_channels: int = 32
    radar_point_hidden: int = 32
    radar_fused_channels: int = 64
    radar_fuse_hidden: int = 64
    radar_share_sweep_weights: bool = False
    radar_roi_margin: float = 10.0
    radar_scale_channels: int = 16
    lidar_stem_channels: int = 24
    lidar_scale_channels: int = 24
    map_stem_channels: int = 8
    map_scale_channels: int = 8
    branch_channels: tuple = (24, 32, 40)
    backbone_channels: int = 40
    backbone_blocks: int = 3
    det_hidden: int = 32
    nms_iou: float = 0.3
    top_k: int = 200
    score_threshold: float = 0.05
    traj_head: str = "single"  # single | mtp | multipath
    hypotheses: int = 1
    roi_size_m: float = 40.0
    roi_cells: int = 10
    traj_hidden: int = 128
    horizon_s: float = 3.0
    step_s: float = 0.5

    def __post_init__(self):
        if self.traj_head not in ("single", "mtp", "multipath"):
            raise ConfigError(f"unknown traj_head {self.traj_head!r}")
        if self.hypotheses < 1:
            raise ConfigError(f"hypotheses must be >= 1, got {self.hypotheses}")
        if self.traj_head == "single" and self.hypotheses != 1:
            raise ConfigError("single-hypothesis head requires hypotheses == 1")

    @property
    def horizon_steps(self):
        return int(round(self.horizon_s / self.step_s))


@dataclass
class LossConfig:
    lambda_traj: float = 1.0
    alpha_reg: float = 1.0
    beta_cls: float = 1.0
    focal_gamma: float = 2.0
    focal_alpha: float = 0.25
    smooth_l1_delta: float = 1.0
    b_gt: float = 0.2

    def __post_init__(self):
        for name in ("lambda_traj", "alpha_reg", "beta_cls", "focal_gamma", "focal_alpha"):
            if getattr(self, name) < 0:
                raise ConfigError(f"loss weight {name} must be >= 0")
        if self.b_gt <= 0:
            raise ConfigError("b_gt must be > 0")


@dataclass
class OptimizerConfig:
    lr: float = 0.0004
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch_size: int = 4
    epochs: float = 2.0
    lr_decay_at: tuple = (0.75, 0.95)  # fractions of total steps
    lr_decay_factor: float = 0.1
    precision: str = "float32"
    checkpoint_every: int = 500
    augment: bool = False
    max_steps: int = 0  # 0: derived from epochs

    def __post_init__(self):
        if self.precision not in ("float32", "float64"):
            raise ConfigError(f"precision must be float32 or float64, got {self.precision!r}")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")


@dataclass
class Config:
    sim: SimConfig = field(default_factory=SimConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    loss: LossConfig = field(default_factory=LossConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)

    def radar_grid(self):
        return self.grid.lidar_grid().scaled(self.model.radar_resolution_ratio)

    def validate(self):
        lidar = self.grid.lidar_grid()
        radar = self.radar_grid()
        if radar.nx < 1 or radar.ny < 1:
            raise ConfigError("radar grid has no cells; raise the resolution ratio")
        for s in (1, 2, 4):
            if lidar.nx % s or lidar.ny % s:
                raise ConfigError(f"lidar grid {lidar.nx} not divisible by backbone scale {s}")
        return self


_SECTIONS = {
    "sim": SimConfig,
    "grid": GridConfig,
    "model": ModelConfig,
    "loss": LossConfig,
    "optimizer": OptimizerConfig,
}


def _coerce(cls, data, section):
    if not isinstance(data, dict):
        raise ConfigError(f"section {section!r} must be a mapping")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"unknown key {unknown[0]!r} in section {section!r}")
    kwargs = {}
    for key, val in data.items():
        if isinstance(val, list):
            val = tuple(val)
        if isinstance(val, str) and val.lower() in (".inf", "inf", "+inf"):
            val = np.inf
        kwargs[key] = val
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"section {section!r}: {exc}") from exc


def config_from_dict(data):
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    version = data.get("config_version", CONFIG_VERSION)
    if version != CONFIG_VERSION:
        raise ConfigError(f"unsupported config_version {version!r}")
    unknown = sorted(set(data) - set(_SECTIONS) - {"config_version"})
    if unknown:
        raise ConfigError(f"unknown section {unknown[0]!r}")
    kwargs = {
        name: _coerce(cls, data.get(name, {}), name) for name, cls in _SECTIONS.items()
    }
    return Config(**kwargs).validate()


def config_to_dict(cfg):
    out = {"config_version": CONFIG_VERSION}
    for name in _SECTIONS:
        section = dataclasses.asdict(getattr(cfg, name))
        for key, val in section.items():
            if isinstance(val, tuple):
                section[key] = list(val)
            elif isinstance(val, float) and np.isinf(val):
                section[key] = ".inf"
        out[name] = section
    return out


def load_config(path):
    with open(path, encoding="utf-8") as f:
        try:
            data = yaml.safe_load(f) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: invalid YAML ({exc})") from exc
    return config_from_dict(data)


def save_config(path, cfg):
    with open(path, "w", encoding="utf-8") as f:
        yaml.safe_dump(config_to_dict(cfg), f, sort_keys=True)
