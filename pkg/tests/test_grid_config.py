"""Grid bijection and config round-trip/validation tests."""

import numpy as np
import pytest
import yaml

from bevfuse.config import (
    Config,
    ConfigError,
    config_from_dict,
    config_to_dict,
    load_config,
    save_config,
)
from bevfuse.grid import BevGridSpec, GridError


class TestGrid:
    def test_cell_center_round_trip(self):
        grid = BevGridSpec(-16, 16, -8, 8, 2.0)
        assert (grid.nx, grid.ny) == (64, 32)
        for r, c in [(0, 0), (5, 17), (31, 63)]:
            x, y = grid.cell_center(r, c)
            rr, cc = grid.metric_to_cell(x, y)
            assert (rr, cc) == (r, c)

    def test_continuous_coordinates_center_cells(self):
        grid = BevGridSpec(-16, 16, -16, 16, 2.0)
        x, y = grid.cell_center(10, 20)
        col, row = grid.metric_to_continuous(x, y)
        assert col == pytest.approx(20.0)
        assert row == pytest.approx(10.0)

    def test_cell_centers_layout_row_major(self):
        grid = BevGridSpec(-2, 2, -2, 2, 1.0)
        centers = grid.cell_centers()
        np.testing.assert_allclose(centers[0], [-1.5, -1.5])
        np.testing.assert_allclose(centers[1], [-0.5, -1.5])  # x varies fastest
        np.testing.assert_allclose(centers[grid.nx], [-1.5, -0.5])

    def test_empty_roi_rejected(self):
        with pytest.raises(GridError, match="ROI"):
            BevGridSpec(3, 3, -1, 1, 2.0)

    def test_negative_resolution_rejected(self):
        with pytest.raises(GridError, match="resolution"):
            BevGridSpec(-1, 1, -1, 1, -2.0)

    def test_fractional_cell_count_rejected(self):
        with pytest.raises(GridError, match="integer"):
            BevGridSpec(0, 1.3, 0, 1.3, 2.0)

    def test_scaled_preserves_extent(self):
        grid = BevGridSpec(-16, 16, -16, 16, 2.0)
        radar = grid.scaled(0.25)
        assert (radar.x_min, radar.x_max) == (-16, 16)
        assert radar.nx == 16


class TestConfig:
    def test_defaults_validate(self):
        Config().validate()

    def test_yaml_round_trip(self, tmp_path):
        cfg = Config()
        cfg.model.radar_d = np.inf
        path = tmp_path / "c.yaml"
        save_config(path, cfg)
        loaded = load_config(path)
        assert np.isinf(loaded.model.radar_d)
        assert config_to_dict(loaded) == config_to_dict(cfg)

    def test_unknown_key_named_in_error(self):
        with pytest.raises(ConfigError, match="radar_dd"):
            config_from_dict({"model": {"radar_dd": 5}})

    def test_unknown_section_rejected(self):
        with pytest.raises(ConfigError, match="extras"):
            config_from_dict({"extras": {}})

    def test_bad_version_rejected(self):
        with pytest.raises(ConfigError, match="config_version"):
            config_from_dict({"config_version": 99})

    def test_invalid_traj_head_rejected(self):
        with pytest.raises(ConfigError, match="traj_head"):
            config_from_dict({"model": {"traj_head": "transformer"}})

    def test_hypotheses_consistency_enforced(self):
        with pytest.raises(ConfigError, match="single"):
            config_from_dict({"model": {"traj_head": "single", "hypotheses": 4}})

    def test_radar_grid_derived_from_ratio(self):
        cfg = Config()
        cfg.model.radar_resolution_ratio = 0.5
        radar = cfg.radar_grid()
        assert radar.nx == cfg.grid.lidar_grid().nx // 2

    def test_invalid_yaml_reported(self, tmp_path):
        path = tmp_path / "broken.yaml"
        path.write_text("model: [unclosed")
        with pytest.raises(ConfigError, match="YAML"):
            load_config(path)
