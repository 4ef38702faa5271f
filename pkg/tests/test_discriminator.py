import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tidyplan.categories import N_CATEGORIES, category_index
from tidyplan.datagen import DiscRecord
from tidyplan.discriminator import (
    FEATURE_DIM,
    DiscConfig,
    featurize,
    score,
    score_features,
    threshold_sweep,
    train_discriminator,
)
from tidyplan.nn import init_params
from tidyplan.world import Scene, Workspace

from conftest import random_scene, square


WS = Workspace(1.0, 0.7, 16, 16, 4)


def scene_of(*objects) -> Scene:
    return Scene(WS, tuple(objects), "mixed")


class TestFeaturize:
    def test_feature_length(self, basic_scene):
        feats = featurize(basic_scene)
        assert feats.shape == (FEATURE_DIM,)
        assert FEATURE_DIM == 13 + N_CATEGORIES

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_permutation_invariant(self, seed):
        rng = np.random.default_rng(seed)
        scene = random_scene(rng, n_objects=5)
        shuffled = Scene(
            scene.workspace,
            tuple(scene.objects[i] for i in rng.permutation(5)),
            scene.environment_tag,
        )
        assert np.array_equal(featurize(scene), featurize(shuffled))

    def test_axis_aligned_orientation_residuals_zero(self):
        scene = scene_of(
            square(1, 0.2, 0.2, theta=0.0),
            square(2, 0.5, 0.2, theta=90.0),
            square(3, 0.8, 0.2, theta=270.0),
        )
        assert np.array_equal(featurize(scene)[3:6], [0.0, 0.0, 0.0])

    def test_diagonal_orientation_residual_is_one(self):
        feats = featurize(scene_of(square(1, 0.5, 0.35, theta=45.0)))
        assert np.array_equal(feats[3:6], [1.0, 1.0, 1.0])

    def test_single_object_pairwise_sentinels_zero(self):
        feats = featurize(scene_of(square(1, 0.25, 0.25)))
        assert np.array_equal(feats[0:3], [0.0, 0.0, 0.0])
        assert np.array_equal(feats[6:9], [0.0, 0.0, 0.0])
        assert feats[12] == 0.0

    def test_centered_centroid_zero_offset(self):
        feats = featurize(scene_of(square(1, 0.5, 0.35)))
        assert feats[10] == 0.0 and feats[11] == 0.0

    def test_centroid_offset_normalized(self):
        # lone object at the +x edge: offset (1.0 - 0.5)/0.5 = 1
        feats = featurize(scene_of(square(1, 1.0, 0.35)))
        assert feats[10] == 1.0 and feats[11] == 0.0

    def test_category_histogram_counts_over_eight(self):
        feats = featurize(scene_of(square(1, 0.2, 0.2), square(2, 0.6, 0.2)))
        hist = feats[13:]
        assert hist[category_index("cup")] == 0.25
        assert hist.sum() == 0.25

    def test_collinear_pair_alignment_zero_and_gap_stats(self):
        scene = scene_of(square(1, 0.2, 0.35), square(2, 0.7, 0.35))
        feats = featurize(scene)
        assert np.array_equal(feats[0:3], [0.0, 0.0, 0.0])
        diag = math.hypot(1.0, 0.7)
        assert math.isclose(feats[6], 0.5 / diag, rel_tol=1e-12)
        assert feats[7] == 0.0

    def test_overlap_fraction(self):
        scene = scene_of(square(1, 0.40, 0.35), square(2, 0.44, 0.35))
        assert featurize(scene)[8] == 1.0

    def test_oob_fraction(self):
        scene = scene_of(square(1, 0.5, 0.35), square(2, 0.02, 0.35))
        assert featurize(scene)[9] == 0.5

    def test_two_label_entropy(self):
        # one sees "right", the other "left": two equally likely labels of ten
        scene = scene_of(square(1, 0.2, 0.35), square(2, 0.7, 0.35))
        assert math.isclose(featurize(scene)[12], math.log(2) / math.log(10), rel_tol=1e-12)


class TestScore:
    def test_in_unit_interval(self, small_models):
        disc = small_models[0]
        rng = np.random.default_rng(0)
        for _ in range(20):
            s = score(disc, random_scene(rng))
            assert 0.0 < s < 1.0

    def test_batched_scores_match_scalar(self, small_models, basic_scene):
        disc = small_models[0]
        feats = featurize(basic_scene)[None, :]
        assert score_features(disc, feats)[0] == score(disc, basic_scene)


def toy_records(label: float, n: int = 48, split: str = "train") -> list[DiscRecord]:
    rng = np.random.default_rng(5)
    return [DiscRecord(scene=random_scene(rng, n_objects=3), label=label, split=split) for _ in range(n)]


class TestTrainDiscriminator:
    def test_learns_constant_one(self):
        params, log = train_discriminator(
            toy_records(1.0), DiscConfig(hidden=(16,), epochs=200, lr=1e-2, seed=0)
        )
        scores = [score(params, r.scene) for r in toy_records(1.0)]
        assert np.mean(scores) >= 0.95
        assert log.train_loss[-1] < log.train_loss[0]

    def test_log_lengths(self, small_dataset):
        disc_records, _, _ = small_dataset
        _, log = train_discriminator(disc_records[:200], DiscConfig(hidden=(8,), epochs=5, seed=0))
        assert len(log.train_loss) == 5

    def test_no_validation_records_empty_log(self):
        _, log = train_discriminator(toy_records(1.0, n=16), DiscConfig(hidden=(8,), epochs=2, seed=0))
        assert log.validation_loss == []

    def test_deterministic(self):
        records = toy_records(0.5, n=16)
        cfg = DiscConfig(hidden=(8,), epochs=3, seed=9)
        a, _ = train_discriminator(records, cfg)
        b, _ = train_discriminator(records, cfg)
        for x, y in zip(a.weights + a.biases, b.weights + b.biases):
            assert np.array_equal(x, y)

    def test_requires_train_split(self):
        with pytest.raises(ValueError, match="train split nonempty required"):
            train_discriminator(toy_records(1.0, n=8, split="validation"))


class TestThresholdSweep:
    def test_zero_threshold_full_recall(self, small_models, small_dataset):
        disc = small_models[0]
        records = small_dataset[0][:300]
        rows = threshold_sweep(disc, records, [0.0])
        assert rows[0]["recall"] == 1.0

    def test_above_one_no_predictions(self, small_models, small_dataset):
        disc = small_models[0]
        rows = threshold_sweep(disc, small_dataset[0][:300], [1.1])
        assert rows[0]["recall"] == 0.0
        assert rows[0]["precision"] is None

    def test_recall_monotone_in_threshold(self, small_models, small_dataset):
        disc = small_models[0]
        rows = threshold_sweep(disc, small_dataset[0][:500], np.linspace(0.0, 1.0, 11))
        recalls = [r["recall"] for r in rows]
        assert all(a >= b for a, b in zip(recalls, recalls[1:]))

    def test_no_positives_degenerate(self, small_models):
        disc = small_models[0]
        with pytest.raises(ValueError, match="degenerate sweep"):
            threshold_sweep(disc, toy_records(0.5, n=8), [0.5])

    def test_untrained_net_still_sweeps(self):
        params = init_params((FEATURE_DIM, 4, 1), ("relu", "sigmoid"), np.random.default_rng(0))
        rows = threshold_sweep(params, toy_records(1.0, n=8), [0.0, 0.5])
        assert {r["threshold"] for r in rows} == {0.0, 0.5}
