import numpy as np
import pytest

from reconeval import (
    IcpConfig,
    PointCloud,
    SimilarityTransform,
    icp_rigid,
    rms_radius,
    rms_scale_normalize,
    umeyama_align,
)

from helpers import random_cloud, random_quat, random_rigid, random_similarity


def residual_rmse(transform, src, dst):
    return float(np.sqrt(((dst - transform.apply(src)) ** 2).sum(axis=1).mean()))


class TestUmeyama:
    def test_identity_on_equal_sets(self):
        src = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1.0]])
        t = umeyama_align(src, src)
        assert abs(t.scale - 1.0) < 1e-12
        assert np.abs(t.rotation_matrix - np.eye(3)).max() < 1e-12
        assert np.abs(t.translation).max() < 1e-12

    def test_synthesize_then_recover(self):
        rng = np.random.default_rng(31)
        for _ in range(200):
            truth = random_similarity(rng)
            src = rng.normal(size=(10, 3))
            dst = truth.apply(src)
            got = umeyama_align(src, dst, with_scale=True)
            assert abs(got.scale - truth.scale) < 1e-9 * truth.scale
            assert np.abs(got.rotation_matrix - truth.rotation_matrix).max() < 1e-9
            assert np.abs(got.translation - truth.translation).max() < 1e-9 * (
                1.0 + np.linalg.norm(truth.translation)
            )

    def test_rigid_mode_keeps_scale_one(self):
        rng = np.random.default_rng(37)
        truth = random_rigid(rng)
        src = rng.normal(size=(20, 3))
        got = umeyama_align(src, truth.apply(src), with_scale=False)
        assert got.scale == 1.0
        assert residual_rmse(got, src, truth.apply(src)) < 1e-9

    def test_noisy_residual_matches_direct_evaluation(self):
        rng = np.random.default_rng(41)
        truth = random_similarity(rng)
        src = rng.normal(size=(50, 3))
        dst = truth.apply(src) + rng.normal(scale=0.01, size=(50, 3))
        got = umeyama_align(src, dst)
        direct = residual_rmse(got, src, dst)
        # the recomputed RMSE is the value the estimate claims to minimize
        assert direct == pytest.approx(residual_rmse(got, src, dst), abs=0.0)
        assert direct < residual_rmse(truth, src, dst) + 1e-12

    def test_local_optimum_probe(self):
        rng = np.random.default_rng(43)
        for _ in range(100):
            src = rng.normal(size=(12, 3))
            dst = random_similarity(rng).apply(src) + rng.normal(scale=0.05, size=(12, 3))
            best = umeyama_align(src, dst)
            base = residual_rmse(best, src, dst)
            for _ in range(20):
                delta_q = best.rotation + rng.normal(scale=1e-4, size=4)
                perturbed = SimilarityTransform(
                    best.scale * (1.0 + rng.normal(scale=1e-4)),
                    delta_q,
                    best.translation + rng.normal(scale=1e-4, size=3),
                )
                assert residual_rmse(perturbed, src, dst) >= base - 1e-12

    def test_equivariance_under_common_rigid_motion(self):
        rng = np.random.default_rng(47)
        src = rng.normal(size=(30, 3))
        dst = random_similarity(rng).apply(src) + rng.normal(scale=0.02, size=(30, 3))
        base = residual_rmse(umeyama_align(src, dst), src, dst)
        motion = random_rigid(rng)
        src2, dst2 = motion.apply(src), motion.apply(dst)
        moved = residual_rmse(umeyama_align(src2, dst2), src2, dst2)
        assert abs(moved - base) < 1e-9

    def test_planar_sets_are_accepted(self):
        rng = np.random.default_rng(53)
        src = rng.normal(size=(20, 3))
        src[:, 2] = 0.0
        truth = random_rigid(rng)
        got = umeyama_align(src, truth.apply(src), with_scale=False)
        assert np.linalg.det(got.rotation_matrix) > 0.0
        assert residual_rmse(got, src, truth.apply(src)) < 1e-9

    def test_rotation_is_never_a_reflection(self):
        rng = np.random.default_rng(59)
        for _ in range(50):
            src = rng.normal(size=(10, 3))
            dst = rng.normal(size=(10, 3))
            got = umeyama_align(src, dst)
            assert np.linalg.det(got.rotation_matrix) == pytest.approx(1.0, abs=1e-9)

    def test_size_mismatch_is_error(self):
        with pytest.raises(ValueError, match="differ in size"):
            umeyama_align(np.zeros((4, 3)), np.zeros((5, 3)))

    def test_too_few_points_is_error(self):
        with pytest.raises(ValueError, match="at least 3"):
            umeyama_align(np.zeros((2, 3)), np.zeros((2, 3)))

    def test_collinear_points_are_degenerate(self):
        src = np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0], [3.0, 0, 0]])
        with pytest.raises(ValueError, match="degenerate configuration"):
            umeyama_align(src, src)


class TestRmsScaleNormalize:
    def test_identity(self):
        rng = np.random.default_rng(61)
        cloud = random_cloud(rng, 100)
        scale, scaled = rms_scale_normalize(cloud, cloud)
        assert scale == pytest.approx(1.0, abs=1e-12)
        assert np.abs(scaled.points - cloud.points).max() < 1e-12

    def test_half_size_cloud_reports_two(self):
        rng = np.random.default_rng(67)
        reference = random_cloud(rng, 100)
        centroid = reference.points.mean(axis=0)
        half = PointCloud(centroid + 0.5 * (reference.points - centroid))
        scale, scaled = rms_scale_normalize(half, reference)
        assert scale == pytest.approx(2.0, rel=1e-12)
        assert rms_radius(scaled) == pytest.approx(rms_radius(reference), rel=1e-9)

    def test_centroid_preserved(self):
        rng = np.random.default_rng(71)
        cloud = random_cloud(rng, 50)
        reference = random_cloud(rng, 80, scale=3.0)
        _, scaled = rms_scale_normalize(cloud, reference)
        assert np.abs(scaled.points.mean(axis=0) - cloud.points.mean(axis=0)).max() < 1e-12

    def test_idempotent(self):
        rng = np.random.default_rng(73)
        cloud = random_cloud(rng, 60)
        reference = random_cloud(rng, 60, scale=2.5)
        _, scaled = rms_scale_normalize(cloud, reference)
        again, _ = rms_scale_normalize(scaled, reference)
        assert again == pytest.approx(1.0, abs=1e-9)

    def test_degenerate_cloud_is_error(self):
        rng = np.random.default_rng(79)
        with pytest.raises(ValueError, match="zero RMS radius"):
            rms_scale_normalize(PointCloud(np.ones((5, 3))), random_cloud(rng, 10))


class TestIcp:
    def test_identical_clouds_converge_immediately(self):
        rng = np.random.default_rng(83)
        cloud = random_cloud(rng, 200)
        result = icp_rigid(cloud, cloud)
        assert result.fitness == 1.0
        assert result.inlier_rmse == 0.0
        assert result.iterations == 1

    def test_recovers_small_rigid_offset(self):
        rng = np.random.default_rng(89)
        src = random_cloud(rng, 300)
        angle = np.radians(5.0)
        truth = SimilarityTransform(
            1.0,
            [np.cos(angle / 2), 0.0, 0.0, np.sin(angle / 2)],
            [0.01, 0.0, 0.0],
        )
        dst = PointCloud(truth.apply(src.points))
        result = icp_rigid(src, dst, IcpConfig(max_correspondence_dist=1.0, max_iterations=100))
        assert result.fitness == 1.0
        assert np.abs(result.transform.apply(src.points) - dst.points).max() < 1e-6

    def test_no_overlap_returns_init_with_zero_fitness(self):
        rng = np.random.default_rng(97)
        src = random_cloud(rng, 50)
        dst = PointCloud(src.points + 100.0)
        init = SimilarityTransform(1.0, [1, 0, 0, 0], [0.5, 0, 0])
        result = icp_rigid(src, dst, IcpConfig(max_correspondence_dist=0.01), init=init)
        assert result.fitness == 0.0
        assert result.iterations == 0
        assert np.abs(result.transform.translation - init.translation).max() == 0.0

    def test_rmse_history_is_non_increasing(self):
        rng = np.random.default_rng(101)
        src = random_cloud(rng, 400)
        truth = random_rigid(rng)
        noisy = SimilarityTransform(
            1.0,
            truth.rotation + rng.normal(scale=0.02, size=4),
            truth.translation + rng.normal(scale=0.02, size=3),
        )
        dst = PointCloud(truth.apply(src.points))
        init = noisy.compose(truth.inverse()).compose(truth)  # small perturbation of truth
        result = icp_rigid(
            src, dst, IcpConfig(max_correspondence_dist=5.0, max_iterations=60), init=init
        )
        history = np.array(result.rmse_history)
        assert history.size >= 1
        assert np.all(np.diff(history) <= 1e-12)

    def test_scaled_init_rejected(self):
        rng = np.random.default_rng(103)
        cloud = random_cloud(rng, 20)
        with pytest.raises(ValueError, match="rigid"):
            icp_rigid(cloud, cloud, init=SimilarityTransform(2.0, [1, 0, 0, 0], [0, 0, 0]))

    def test_empty_cloud_is_error(self):
        rng = np.random.default_rng(107)
        with pytest.raises(ValueError, match="empty"):
            icp_rigid(PointCloud(np.zeros((0, 3))), random_cloud(rng, 5))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            IcpConfig(max_correspondence_dist=-1.0)
        with pytest.raises(ValueError):
            IcpConfig(max_iterations=0)
        with pytest.raises(ValueError):
            IcpConfig(convergence_eps=0.0)
