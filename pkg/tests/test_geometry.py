import numpy as np
import pytest

from reconeval import (
    CameraPinhole,
    PointCloud,
    SimilarityTransform,
    SpatialIndex,
    Trajectory,
    TriangleMesh,
    apply_similarity,
    nearest_neighbor,
    voxelize,
)
from reconeval.geometry import matrix_to_quat, quat_canonical, quat_to_matrix

from helpers import random_cloud, random_quat, random_similarity
from oracles import apply_homogeneous, linear_scan_nn, recount_voxels, similarity_homogeneous


class TestSimilarityTransform:
    def test_identity(self):
        t = SimilarityTransform.identity()
        assert np.allclose(t.apply([1.0, 2.0, 3.0]), [1.0, 2.0, 3.0])

    def test_pure_scaling(self):
        t = SimilarityTransform(2.0, [1, 0, 0, 0], [0, 0, 0])
        assert np.allclose(t.apply([1.0, 0.0, 0.0]), [2.0, 0.0, 0.0])

    def test_matches_matrix_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            t = random_similarity(rng)
            mat = similarity_homogeneous(t)
            p = rng.normal(size=3)
            expected = apply_homogeneous(mat, p)
            assert np.abs(apply_similarity(t, p) - expected).max() < 1e-12

    def test_inverse_roundtrip(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            t = random_similarity(rng)
            p = rng.normal(scale=10.0, size=3)
            back = t.inverse().apply(t.apply(p))
            assert np.abs(back - p).max() < 1e-9 * (1.0 + np.linalg.norm(p))

    def test_compose(self):
        rng = np.random.default_rng(13)
        a = random_similarity(rng)
        b = random_similarity(rng)
        p = rng.normal(size=3)
        assert np.allclose(a.compose(b).apply(p), a.apply(b.apply(p)), atol=1e-12)

    def test_rejects_bad_scale(self):
        with pytest.raises(ValueError):
            SimilarityTransform(0.0, [1, 0, 0, 0], [0, 0, 0])
        with pytest.raises(ValueError):
            SimilarityTransform(-1.0, [1, 0, 0, 0], [0, 0, 0])


class TestQuaternions:
    def test_canonicalization(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            q = rng.normal(size=4) * rng.uniform(0.1, 10.0)
            canon = quat_canonical(q)
            assert canon[0] >= 0.0
            assert abs(np.linalg.norm(canon) - 1.0) < 1e-12

    def test_matrix_roundtrip_matches_scipy(self):
        from scipy.spatial.transform import Rotation

        rng = np.random.default_rng(5)
        for _ in range(100):
            q = random_quat(rng)
            w, x, y, z = q
            expected = Rotation.from_quat([x, y, z, w]).as_matrix()
            assert np.abs(quat_to_matrix(q) - expected).max() < 1e-12
            back = matrix_to_quat(expected)
            assert np.abs(back - q).max() < 1e-9

    def test_matrix_to_quat_near_pi_rotations(self):
        # exercises every branch of the largest-pivot conversion
        for axis in np.eye(3):
            rot = quat_to_matrix(np.array([np.cos(1.57), *(np.sin(1.57) * axis)]))
            q = matrix_to_quat(rot)
            assert np.abs(quat_to_matrix(q) - rot).max() < 1e-12


class TestVoxelize:
    def test_same_cell_by_floor_rule(self):
        cloud = PointCloud([[0.001, 0, 0], [0.019, 0, 0]])
        grid = voxelize(cloud, 0.02, origin=[0, 0, 0])
        assert grid.counts == {(0, 0, 0): 2}

    def test_cell_boundary(self):
        cloud = PointCloud([[0.001, 0, 0], [0.021, 0, 0]])
        grid = voxelize(cloud, 0.02, origin=[0, 0, 0])
        assert grid.counts == {(0, 0, 0): 1, (1, 0, 0): 1}

    def test_conservation_uniform_cube(self):
        rng = np.random.default_rng(17)
        cloud = PointCloud(rng.uniform(0.0, 1.0, size=(10_000, 3)))
        grid = voxelize(cloud, 0.1, origin=[0, 0, 0])
        assert grid.total_points == 10_000
        assert len(grid) <= 1000

    def test_matches_recount_oracle(self):
        rng = np.random.default_rng(19)
        cloud = random_cloud(rng, 500, scale=0.3)
        origin = cloud.points.min(axis=0)
        grid = voxelize(cloud, 0.05)
        assert grid.counts == recount_voxels(cloud.points, 0.05, origin)

    def test_default_origin_is_min_corner(self):
        cloud = PointCloud([[1.0, 2.0, 3.0], [1.5, 2.5, 3.5]])
        grid = voxelize(cloud, 10.0)
        assert np.allclose(grid.origin, [1.0, 2.0, 3.0])
        assert grid.counts == {(0, 0, 0): 2}

    def test_empty_cloud_is_error(self):
        with pytest.raises(ValueError, match="empty point cloud"):
            voxelize(PointCloud(np.zeros((0, 3))), 0.02)

    def test_center(self):
        grid = voxelize(PointCloud([[0.0, 0.0, 0.0]]), 0.02, origin=[0, 0, 0])
        assert np.allclose(grid.center((0, 0, 0)), [0.01, 0.01, 0.01])


class TestSpatialIndex:
    def test_single_point_3_4_5(self):
        index = SpatialIndex(PointCloud([[0.0, 0.0, 0.0]]))
        assert nearest_neighbor(index, [3.0, 4.0, 0.0]) == (0, 5.0)

    def test_query_at_indexed_point(self):
        index = SpatialIndex(PointCloud([[1.0, 1.0, 1.0], [2.0, 2.0, 2.0]]))
        idx, dist = index.nearest([2.0, 2.0, 2.0])
        assert (idx, dist) == (1, 0.0)

    def test_matches_linear_scan(self):
        rng = np.random.default_rng(23)
        points = rng.uniform(-1, 1, size=(500, 3))
        index = SpatialIndex(points)
        for query in rng.uniform(-1, 1, size=(100, 3)):
            assert index.nearest(query) == linear_scan_nn(points, query)

    def test_tie_breaks_to_lowest_index(self):
        points = np.array([[1.0, 0, 0], [-1.0, 0, 0], [0, 1.0, 0], [0, -1.0, 0]])
        index = SpatialIndex(points)
        idx, dist = index.nearest([0.0, 0.0, 0.0])
        assert idx == 0 and dist == 1.0

    def test_batch_query_matches_scalar(self):
        rng = np.random.default_rng(29)
        points = rng.uniform(-1, 1, size=(200, 3))
        queries = rng.uniform(-1, 1, size=(50, 3))
        index = SpatialIndex(points)
        idx, dists = index.query(queries)
        for q, i, d in zip(queries, idx, dists):
            oi, od = linear_scan_nn(points, q)
            assert i == oi and d == od

    def test_empty_cloud_is_error(self):
        with pytest.raises(ValueError):
            SpatialIndex(np.zeros((0, 3)))


class TestDomainTypes:
    def test_trajectory_requires_increasing_times(self):
        with pytest.raises(ValueError, match="strictly increasing"):
            Trajectory([0.0, 0.0], np.zeros((2, 3)), [[1, 0, 0, 0]] * 2)

    def test_trajectory_indexing(self):
        traj = Trajectory([0.0, 1.0], [[0, 0, 0], [1, 0, 0]], [[1, 0, 0, 0], [-1, 0, 0, 0]])
        pose = traj[1]
        assert pose.time == 1.0
        assert pose.quaternion[0] == 1.0  # canonicalized to w >= 0

    def test_pointcloud_rejects_nan(self):
        with pytest.raises(ValueError):
            PointCloud([[np.nan, 0, 0]])

    def test_pointcloud_color_shape(self):
        with pytest.raises(ValueError):
            PointCloud([[0, 0, 0]], colors=[[1, 2, 3], [4, 5, 6]])

    def test_mesh_rejects_out_of_range_index(self):
        with pytest.raises(ValueError, match="out of range"):
            TriangleMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 3]])

    def test_camera_validation(self):
        with pytest.raises(ValueError):
            CameraPinhole(0.0, 1.0, 1.0, 1.0, 2, 2, np.eye(3), np.zeros(3))
        with pytest.raises(ValueError):
            CameraPinhole(1.0, 1.0, 5.0, 1.0, 2, 2, np.eye(3), np.zeros(3))

    def test_camera_projection(self):
        cam = CameraPinhole(100.0, 100.0, 50.0, 50.0, 100, 100, np.eye(3), np.zeros(3))
        uv, depth = cam.project([[0.0, 0.0, 2.0], [0.0, 0.0, -2.0]])
        assert np.allclose(uv[0], [50.0, 50.0])
        assert depth[0] == 2.0 and depth[1] == -2.0
