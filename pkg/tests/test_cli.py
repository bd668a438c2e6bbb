"""CLI contracts: exit codes, file outputs, determinism, ablation plumbing."""

import json
import os

import numpy as np
import pytest
import yaml

from bevfuse.cli import ABLATION_AXES, apply_axis, main
from bevfuse.config import Config, config_from_dict, config_to_dict
from bevfuse.manifest import read_manifest

TINY = {
    "sim": {
        "roi_half": 16.0,
        "scenes": 2,
        "frames_per_scene": 2,
        "n_actors_min": 2,
        "n_actors_max": 4,
        "p_static": 0.4,
        "p_cv": 0.25,
        "p_ca": 0.2,
        "p_turn": 0.1,
        "p_stopgo": 0.05,
    },
    "grid": {"roi_half": 16.0},
    "model": {
        "radar_point_channels": 8,
        "radar_point_hidden": 8,
        "radar_fused_channels": 8,
        "radar_fuse_hidden": 8,
        "radar_scale_channels": 6,
        "lidar_stem_channels": 8,
        "lidar_scale_channels": 8,
        "map_stem_channels": 4,
        "map_scale_channels": 4,
        "branch_channels": [8, 10, 12],
        "backbone_channels": 12,
        "det_hidden": 8,
        "traj_hidden": 16,
        "roi_cells": 5,
    },
    "optimizer": {"max_steps": 3, "batch_size": 2, "checkpoint_every": 0},
}


@pytest.fixture
def tiny_config_path(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text(yaml.safe_dump(TINY))
    return str(path)


def run(*argv):
    return main(list(argv))


class TestGenerate:
    def test_writes_expected_line_count(self, tiny_config_path, tmp_path):
        out = tmp_path / "data"
        assert run("generate", "--config", tiny_config_path, "--seed", "0", "--out", str(out)) == 0
        lines = (out / "frames.jsonl").read_text().strip().splitlines()
        assert len(lines) == 4  # 2 scenes x 2 frames
        manifest = read_manifest(out)
        assert manifest["command"] == "generate"
        assert manifest["artifacts"]["dataset"] == "frames.jsonl"

    def test_same_seed_byte_identical(self, tiny_config_path, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        run("generate", "--config", tiny_config_path, "--seed", "3", "--out", str(a))
        run("generate", "--config", tiny_config_path, "--seed", "3", "--out", str(b))
        assert (a / "frames.jsonl").read_bytes() == (b / "frames.jsonl").read_bytes()

    def test_corrupt_config_key_names_key(self, tmp_path, capsys):
        bad = dict(TINY)
        bad["sim"] = dict(TINY["sim"], lidar_sigmaa=0.5)
        path = tmp_path / "bad.yaml"
        path.write_text(yaml.safe_dump(bad))
        code = run("generate", "--config", str(path), "--out", str(tmp_path / "o"))
        assert code != 0
        assert "lidar_sigmaa" in capsys.readouterr().err

    def test_out_root_env_fallback(self, tiny_config_path, tmp_path, monkeypatch):
        monkeypatch.setenv("BEVFUSE_OUT_ROOT", str(tmp_path / "root"))
        assert run("generate", "--config", tiny_config_path, "--seed", "1") == 0
        assert (tmp_path / "root" / "generate_seed1" / "frames.jsonl").exists()

    def test_missing_out_and_env_fails(self, tiny_config_path, monkeypatch, capsys):
        monkeypatch.delenv("BEVFUSE_OUT_ROOT", raising=False)
        assert run("generate", "--config", tiny_config_path) == 2
        assert "BEVFUSE_OUT_ROOT" in capsys.readouterr().err


@pytest.fixture
def dataset(tiny_config_path, tmp_path):
    out = tmp_path / "data"
    run("generate", "--config", tiny_config_path, "--seed", "0", "--out", str(out))
    return str(out / "frames.jsonl")


class TestTrainEval:
    def test_smoke_train_writes_checkpoint(self, tiny_config_path, dataset, tmp_path):
        out = tmp_path / "train"
        code = run("train", "--config", tiny_config_path, "--seed", "0",
                   "--data", dataset, "--out", str(out))
        assert code == 0
        assert (out / "model.ckpt").exists()
        assert (out / "metrics.csv").exists()
        assert read_manifest(out)["command"] == "train"

    def test_missing_dataset_nonzero_exit(self, tiny_config_path, tmp_path, capsys):
        code = run("train", "--config", tiny_config_path, "--data",
                   str(tmp_path / "absent.jsonl"), "--out", str(tmp_path / "t"))
        assert code == 2
        assert "not found" in capsys.readouterr().err

    def test_resume_continues(self, tiny_config_path, dataset, tmp_path):
        first = tmp_path / "t1"
        run("train", "--config", tiny_config_path, "--data", dataset, "--out", str(first))
        cfg2 = dict(TINY)
        cfg2["optimizer"] = dict(TINY["optimizer"], max_steps=6)
        cfg2_path = tmp_path / "cfg2.yaml"
        cfg2_path.write_text(yaml.safe_dump(cfg2))
        second = tmp_path / "t2"
        code = run("train", "--config", str(cfg2_path), "--data", dataset,
                   "--out", str(second), "--resume", str(first / "model.ckpt"))
        assert code == 0
        from bevfuse.training import load_train_checkpoint

        _, opt_state, _ = load_train_checkpoint(second / "model.ckpt")
        assert int(opt_state["step"].ravel()[0]) == 6

    def test_eval_outputs_and_determinism(self, tiny_config_path, dataset, tmp_path):
        train_out = tmp_path / "train"
        run("train", "--config", tiny_config_path, "--data", dataset, "--out", str(train_out))
        evals = []
        for name in ("e1", "e2"):
            out = tmp_path / name
            code = run("eval", "--config", tiny_config_path, "--data", dataset,
                       "--checkpoint", str(train_out / "model.ckpt"), "--out", str(out))
            assert code == 0
            for artifact in ("report.json", "predictions.jsonl", "metrics.csv"):
                assert (out / artifact).exists()
            evals.append(out)
        assert (evals[0] / "report.json").read_bytes() == (evals[1] / "report.json").read_bytes()
        assert (
            evals[0] / "predictions.jsonl"
        ).read_bytes() == (evals[1] / "predictions.jsonl").read_bytes()


class TestAblate:
    def test_unknown_axis_lists_valid_axes(self, tiny_config_path, dataset, tmp_path, capsys):
        code = run("ablate", "--config", tiny_config_path, "--axis", "bogus",
                   "--values", "1", "--train-data", dataset, "--eval-data", dataset,
                   "--out", str(tmp_path / "a"))
        assert code == 2
        err = capsys.readouterr().err
        for axis in ABLATION_AXES:
            assert axis in err

    def test_axis_values_apply_to_config(self):
        cfg = config_from_dict({"config_version": 1, **TINY})
        assert apply_axis(cfg, "d", "25").model.radar_d == 25.0
        assert np.isinf(apply_axis(cfg, "d", "inf").model.radar_d)
        assert apply_axis(cfg, "history", "0.2").sim.radar_history_s == 0.2
        assert apply_axis(cfg, "resolution", "0.5").model.radar_resolution_ratio == 0.5
        assert apply_axis(cfg, "K", "2").model.radar_k == 2
        assert apply_axis(cfg, "radar_on_off", "off").model.radar_enabled is False

    def test_single_value_sweep_equals_train_plus_eval(self, tiny_config_path, dataset, tmp_path):
        out = tmp_path / "ablate"
        code = run("ablate", "--config", tiny_config_path, "--axis", "d", "--values", "10",
                   "--seeds", "0", "--train-data", dataset, "--eval-data", dataset,
                   "--out", str(out))
        assert code == 0
        cell = out / "d_10_seed0"
        assert (out / "ablation.csv").exists()
        # composition check: a manual train+eval run reproduces the cell
        manual_train = tmp_path / "manual_train"
        run("train", "--config", tiny_config_path, "--seed", "0",
            "--data", dataset, "--out", str(manual_train))
        manual_eval = tmp_path / "manual_eval"
        run("eval", "--config", tiny_config_path, "--seed", "0", "--data", dataset,
            "--checkpoint", str(manual_train / "model.ckpt"), "--out", str(manual_eval))
        cell_report = json.loads((cell / "report.json").read_text())
        manual_report = json.loads((manual_eval / "report.json").read_text())
        assert cell_report == manual_report

    def test_history_axis_accepts_table_values(self, tiny_config_path):
        cfg = config_from_dict({"config_version": 1, **TINY})
        for value in ("0", "0.1", "0.2", "0.5"):
            applied = apply_axis(config_from_dict(config_to_dict(cfg)), "history", value)
            assert applied.sim.radar_history_s == float(value)

    def test_resolution_axis_accepts_table_values(self, tiny_config_path):
        cfg = config_from_dict({"config_version": 1, **TINY})
        for value in ("0.125", "0.25", "0.5", "1.0"):
            applied = apply_axis(config_from_dict(config_to_dict(cfg)), "resolution", value)
            assert applied.model.radar_resolution_ratio == float(value)
