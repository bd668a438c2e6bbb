"""Trajectory head contracts: shapes, confidences, anchors, k-means."""

import numpy as np
import pytest

from bevfuse.model.trajectory import (
    MtpHead,
    MultiPathHead,
    SingleHypothesisHead,
    actor_to_ego,
    decode_hypotheses,
    ego_to_actor,
    kmeans_trajectories,
)
from bevfuse.tensor import ops

STEPS = 6
PATCH = (5, 4, 4)


def patch_value(rng):
    return ops.as_value(rng.normal(size=PATCH))


class TestSingleHead:
    def test_confidence_is_exactly_one(self, rng):
        head = SingleHypothesisHead(rng, *PATCH[:1], patch_cells=4, steps=STEPS)
        offsets, sigmas, logits = head(patch_value(rng))
        hyps = decode_hypotheses(offsets, sigmas, logits, (1.0, 2.0), 0.3)
        assert len(hyps) == 1
        assert hyps[0].confidence == 1.0

    @pytest.mark.parametrize("seed", range(10))
    def test_sigmas_strictly_positive(self, seed):
        rng = np.random.default_rng(seed)
        head = SingleHypothesisHead(rng, 5, patch_cells=4, steps=STEPS)
        _, sigmas, _ = head(patch_value(rng))
        assert np.all(sigmas.data > 0)

    def test_waypoint_count_matches_horizon(self, rng):
        head = SingleHypothesisHead(rng, 5, patch_cells=4, steps=STEPS)
        offsets, sigmas, logits = head(patch_value(rng))
        hyps = decode_hypotheses(offsets, sigmas, logits, (0.0, 0.0), 0.0)
        assert hyps[0].waypoints.shape == (STEPS, 2)

    def test_frame_conversion_round_trip(self, rng):
        pts = rng.normal(size=(STEPS, 2))
        center, theta = (3.0, -1.5), 0.8
        np.testing.assert_allclose(
            ego_to_actor(actor_to_ego(pts, center, theta), center, theta), pts, atol=1e-12
        )


class TestMtpHead:
    def test_confidences_sum_to_one(self, rng):
        head = MtpHead(rng, 5, patch_cells=4, steps=STEPS, hypotheses=8)
        offsets, sigmas, logits = head(patch_value(rng))
        hyps = decode_hypotheses(offsets, sigmas, logits, (0.0, 0.0), 0.0)
        assert len(hyps) == 8
        assert sum(h.confidence for h in hyps) == pytest.approx(1.0, abs=1e-6)

    def test_single_hypothesis_degenerates(self, rng):
        head = MtpHead(rng, 5, patch_cells=4, steps=STEPS, hypotheses=1)
        offsets, sigmas, logits = head(patch_value(rng))
        hyps = decode_hypotheses(offsets, sigmas, logits, (0.0, 0.0), 0.0)
        assert len(hyps) == 1
        assert hyps[0].confidence == pytest.approx(1.0)
        assert hyps[0].waypoints.shape == (STEPS, 2)

    def test_hypotheses_differ_at_init(self, rng):
        head = MtpHead(rng, 5, patch_cells=4, steps=STEPS, hypotheses=6)
        offsets, _, _ = head(patch_value(rng))
        ways = offsets.data.reshape(6, STEPS, 2)
        for i in range(6):
            for j in range(i + 1, 6):
                assert np.linalg.norm(ways[i] - ways[j]) > 0


class TestMultiPathHead:
    def anchors(self, rng, h=4):
        return rng.normal(size=(h, STEPS, 2)) * 3

    def test_zero_residuals_reproduce_anchors(self, rng):
        anchors = self.anchors(rng)
        head = MultiPathHead(rng, 5, patch_cells=4, steps=STEPS, anchors=anchors)
        for layer in head.way_out.layers:
            layer.w.data[:] = 0.0
            if layer.b is not None:
                layer.b.data[:] = 0.0
        offsets, _, _ = head(patch_value(rng))
        np.testing.assert_allclose(offsets.data.reshape(4, STEPS, 2), anchors, atol=1e-12)

    def test_confidences_sum_to_one(self, rng):
        head = MultiPathHead(rng, 5, patch_cells=4, steps=STEPS, anchors=self.anchors(rng))
        offsets, sigmas, logits = head(patch_value(rng))
        hyps = decode_hypotheses(offsets, sigmas, logits, (0.0, 0.0), 0.0)
        assert sum(h.confidence for h in hyps) == pytest.approx(1.0, abs=1e-6)

    def test_anchor_count_mismatch_rejected(self, rng):
        with pytest.raises(ValueError, match="anchors"):
            MultiPathHead(rng, 5, patch_cells=4, steps=STEPS, anchors=np.zeros((4, 3, 2)))


class TestKmeans:
    def test_recovers_three_separable_clusters(self, rng):
        centers = np.array(
            [
                [[i, 0.0] for i in range(1, STEPS + 1)],
                [[0.0, -i] for i in range(1, STEPS + 1)],
                [[-2.0 * i, i] for i in range(1, STEPS + 1)],
            ]
        )
        samples = []
        for c in centers:
            for _ in range(40):
                samples.append(c + rng.normal(scale=0.05, size=(STEPS, 2)))
        samples = np.array(samples)
        fitted = kmeans_trajectories(samples, 3, np.random.default_rng(3))
        # each true centroid is matched by exactly one fitted anchor
        used = set()
        for c in centers:
            dists = [np.linalg.norm(f - c) for f in fitted]
            best = int(np.argmin(dists))
            assert dists[best] < 0.5
            used.add(best)
        assert used == {0, 1, 2}

    def test_deterministic_given_rng_seed(self, rng):
        samples = rng.normal(size=(50, STEPS, 2))
        a = kmeans_trajectories(samples, 4, np.random.default_rng(11))
        b = kmeans_trajectories(samples, 4, np.random.default_rng(11))
        np.testing.assert_array_equal(a, b)

    def test_too_few_samples_rejected(self, rng):
        with pytest.raises(ValueError, match="at least"):
            kmeans_trajectories(rng.normal(size=(2, STEPS, 2)), 5, rng)
