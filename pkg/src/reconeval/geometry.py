"""Core geometric types: poses, trajectories, similarity transforms, point
clouds, meshes, voxel grids, pinhole cameras, and an exact nearest-neighbor
index.

All positions are in meters unless a function states otherwise. Quaternions
use the Hamilton convention and are stored scalar-first as (w, x, y, z),
canonicalized so that w >= 0.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np
from scipy.spatial import cKDTree


def _query_workers() -> int:
    """Worker count for KD-tree queries (RECONEVAL_THREADS, default 1).

    Results are independent of the worker count; this only affects speed.
    """
    try:
        return max(1, int(os.environ.get("RECONEVAL_THREADS", "1")))
    except ValueError:
        return 1


def _finite_array(values, name: str, shape=None) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if shape is not None and arr.shape != shape:
        raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


# ---------------------------------------------------------------------------
# quaternions


def quat_canonical(q) -> np.ndarray:
    """Normalize a (w, x, y, z) quaternion and flip its sign so that w >= 0."""
    q = _finite_array(q, "quaternion", (4,))
    norm = float(np.linalg.norm(q))
    if norm == 0.0:
        raise ValueError("zero quaternion")
    q = q / norm
    if q[0] < 0.0:
        q = -q
    return q


def quat_to_matrix(q) -> np.ndarray:
    """Rotation matrix of a unit quaternion (w, x, y, z)."""
    w, x, y, z = np.asarray(q, dtype=np.float64)
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def matrix_to_quat(rot) -> np.ndarray:
    """Canonical unit quaternion (w, x, y, z) of a rotation matrix.

    Uses the largest-pivot branch for numerical stability near 180-degree
    rotations.
    """
    m = np.asarray(rot, dtype=np.float64)
    if m.shape != (3, 3):
        raise ValueError(f"rotation matrix must be 3x3, got {m.shape}")
    tr = m[0, 0] + m[1, 1] + m[2, 2]
    if tr > 0.0:
        s = 2.0 * np.sqrt(tr + 1.0)
        q = np.array(
            [0.25 * s, (m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s]
        )
    elif m[0, 0] >= m[1, 1] and m[0, 0] >= m[2, 2]:
        s = 2.0 * np.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2])
        q = np.array(
            [(m[2, 1] - m[1, 2]) / s, 0.25 * s, (m[0, 1] + m[1, 0]) / s, (m[0, 2] + m[2, 0]) / s]
        )
    elif m[1, 1] >= m[2, 2]:
        s = 2.0 * np.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2])
        q = np.array(
            [(m[0, 2] - m[2, 0]) / s, (m[0, 1] + m[1, 0]) / s, 0.25 * s, (m[1, 2] + m[2, 1]) / s]
        )
    else:
        s = 2.0 * np.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1])
        q = np.array(
            [(m[1, 0] - m[0, 1]) / s, (m[0, 2] + m[2, 0]) / s, (m[1, 2] + m[2, 1]) / s, 0.25 * s]
        )
    return quat_canonical(q)


# ---------------------------------------------------------------------------
# transforms


@dataclass(frozen=True, eq=False)
class SimilarityTransform:
    """Scale + rotation + translation, applied as p -> scale * R @ p + t."""

    scale: float
    rotation: np.ndarray  # unit quaternion (w, x, y, z)
    translation: np.ndarray  # (3,) meters

    def __post_init__(self):
        scale = float(self.scale)
        if not np.isfinite(scale) or scale <= 0.0:
            raise ValueError(f"scale must be positive and finite, got {scale}")
        object.__setattr__(self, "scale", scale)
        object.__setattr__(self, "rotation", _readonly(quat_canonical(self.rotation)))
        object.__setattr__(
            self, "translation", _readonly(_finite_array(self.translation, "translation", (3,)))
        )

    @staticmethod
    def identity() -> "SimilarityTransform":
        return SimilarityTransform(1.0, np.array([1.0, 0.0, 0.0, 0.0]), np.zeros(3))

    @classmethod
    def from_rotation_matrix(cls, scale: float, rot, translation) -> "SimilarityTransform":
        return cls(scale, matrix_to_quat(rot), translation)

    @cached_property
    def rotation_matrix(self) -> np.ndarray:
        return _readonly(quat_to_matrix(self.rotation))

    @cached_property
    def matrix(self) -> np.ndarray:
        """4x4 homogeneous matrix with the scaled rotation in the upper block."""
        m = np.eye(4)
        m[:3, :3] = self.scale * self.rotation_matrix
        m[:3, 3] = self.translation
        return _readonly(m)

    def apply(self, points) -> np.ndarray:
        """Transform one (3,) point or an (n, 3) array of points."""
        pts = np.asarray(points, dtype=np.float64)
        return self.scale * (pts @ self.rotation_matrix.T) + self.translation

    def inverse(self) -> "SimilarityTransform":
        inv_scale = 1.0 / self.scale
        rot_inv = self.rotation_matrix.T
        return SimilarityTransform.from_rotation_matrix(
            inv_scale, rot_inv, -inv_scale * (rot_inv @ self.translation)
        )

    def compose(self, other: "SimilarityTransform") -> "SimilarityTransform":
        """Transform equivalent to applying ``other`` first, then ``self``."""
        rot = self.rotation_matrix @ other.rotation_matrix
        t = self.scale * (self.rotation_matrix @ other.translation) + self.translation
        return SimilarityTransform.from_rotation_matrix(self.scale * other.scale, rot, t)


def apply_similarity(transform: SimilarityTransform, points) -> np.ndarray:
    """Functional alias for :meth:`SimilarityTransform.apply`."""
    return transform.apply(points)


# ---------------------------------------------------------------------------
# trajectories


class TimedPose(NamedTuple):
    time: float
    position: np.ndarray  # (3,)
    quaternion: np.ndarray  # (w, x, y, z)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Timestamped poses with strictly increasing timestamps."""

    times: np.ndarray  # (n,) seconds
    positions: np.ndarray  # (n, 3) meters
    quaternions: np.ndarray  # (n, 4) scalar-first, canonical

    def __post_init__(self):
        times = _finite_array(self.times, "times")
        if times.ndim != 1 or times.size < 1:
            raise ValueError("trajectory needs at least one pose")
        n = times.size
        positions = _finite_array(self.positions, "positions", (n, 3))
        quats = _finite_array(self.quaternions, "quaternions", (n, 4))
        if np.any(np.diff(times) <= 0.0):
            raise ValueError("timestamps must be strictly increasing")
        quats = np.stack([quat_canonical(q) for q in quats])
        object.__setattr__(self, "times", _readonly(times))
        object.__setattr__(self, "positions", _readonly(positions))
        object.__setattr__(self, "quaternions", _readonly(quats))

    def __len__(self) -> int:
        return int(self.times.size)

    def __getitem__(self, i: int) -> TimedPose:
        return TimedPose(float(self.times[i]), self.positions[i], self.quaternions[i])

    def pose_matrices(self) -> np.ndarray:
        """(n, 4, 4) homogeneous pose matrices (rotation + position)."""
        mats = np.tile(np.eye(4), (len(self), 1, 1))
        for i, q in enumerate(self.quaternions):
            mats[i, :3, :3] = quat_to_matrix(q)
        mats[:, :3, 3] = self.positions
        return mats

    @classmethod
    def from_poses(cls, poses) -> "Trajectory":
        poses = list(poses)
        return cls(
            np.array([p.time for p in poses]),
            np.array([p.position for p in poses]),
            np.array([p.quaternion for p in poses]),
        )


# ---------------------------------------------------------------------------
# point clouds and meshes


@dataclass(frozen=True, eq=False)
class PointCloud:
    points: np.ndarray  # (n, 3) meters
    colors: np.ndarray | None = None  # (n, 3) uint8 sRGB

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        if not np.all(np.isfinite(pts)):
            raise ValueError("point cloud contains non-finite coordinates")
        object.__setattr__(self, "points", _readonly(pts))
        if self.colors is not None:
            colors = np.asarray(self.colors, dtype=np.uint8)
            if colors.shape != (pts.shape[0], 3):
                raise ValueError(
                    f"colors must have shape ({pts.shape[0]}, 3), got {colors.shape}"
                )
            object.__setattr__(self, "colors", _readonly(colors))

    def __len__(self) -> int:
        return int(self.points.shape[0])

    def transformed(self, transform: SimilarityTransform) -> "PointCloud":
        return PointCloud(transform.apply(self.points), self.colors)


@dataclass(frozen=True, eq=False)
class TriangleMesh:
    vertices: np.ndarray  # (n, 3) meters
    faces: np.ndarray  # (m, 3) vertex indices

    def __post_init__(self):
        verts = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        if not np.all(np.isfinite(verts)):
            raise ValueError("mesh vertices contain non-finite coordinates")
        faces = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        if faces.size and (faces.min() < 0 or faces.max() >= verts.shape[0]):
            raise ValueError("face index out of range")
        object.__setattr__(self, "vertices", _readonly(verts))
        object.__setattr__(self, "faces", _readonly(faces))

    @property
    def n_vertices(self) -> int:
        return int(self.vertices.shape[0])

    @property
    def n_faces(self) -> int:
        return int(self.faces.shape[0])


# ---------------------------------------------------------------------------
# voxel grids


@dataclass(frozen=True, eq=False)
class VoxelGrid:
    """Occupancy counts over a regular grid anchored at ``origin``.

    A point p falls in the voxel with index floor((p - origin) / voxel_size),
    taken per axis. Only occupied voxels are stored.
    """

    voxel_size: float
    origin: np.ndarray  # (3,)
    counts: dict  # (i, j, k) -> point count

    def __post_init__(self):
        size = float(self.voxel_size)
        if not np.isfinite(size) or size <= 0.0:
            raise ValueError(f"voxel_size must be positive, got {size}")
        object.__setattr__(self, "voxel_size", size)
        object.__setattr__(self, "origin", _readonly(_finite_array(self.origin, "origin", (3,))))
        object.__setattr__(self, "counts", dict(self.counts))

    def __len__(self) -> int:
        return len(self.counts)

    @property
    def total_points(self) -> int:
        return sum(self.counts.values())

    def center(self, index) -> np.ndarray:
        """World-space center of the voxel with the given (i, j, k) index."""
        return self.origin + (np.asarray(index, dtype=np.float64) + 0.5) * self.voxel_size


def voxelize(cloud: PointCloud, voxel_size: float, origin=None) -> VoxelGrid:
    """Partition a point cloud into an occupancy-counting voxel grid.

    ``origin`` defaults to the axis-aligned minimum corner of the cloud so a
    given cloud always voxelizes the same way.
    """
    if len(cloud) == 0:
        raise ValueError("empty point cloud")
    if voxel_size <= 0.0:
        raise ValueError(f"voxel_size must be positive, got {voxel_size}")
    pts = cloud.points
    if origin is None:
        origin = pts.min(axis=0)
    origin = _finite_array(origin, "origin", (3,))
    indices = np.floor((pts - origin) / voxel_size).astype(np.int64)
    uniq, counts = np.unique(indices, axis=0, return_counts=True)
    occupancy = {tuple(int(v) for v in idx): int(c) for idx, c in zip(uniq, counts)}
    return VoxelGrid(voxel_size, origin, occupancy)


# ---------------------------------------------------------------------------
# nearest-neighbor index


def _euclidean(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Euclidean distance along the last axis.

    Kept as an explicit square-sum-sqrt so distances are bit-identical to a
    scalar left-to-right evaluation (np.linalg.norm routes 1-D inputs
    through BLAS dot, which can differ in the last ulp).
    """
    diff = a - b
    return np.sqrt((diff * diff).sum(axis=-1))


class SpatialIndex:
    """Immutable exact nearest-neighbor index over a point cloud.

    Backed by a KD-tree; distances returned to callers are recomputed with
    plain vector arithmetic so they match a linear scan bit for bit, and
    single-point queries break exact distance ties toward the lowest point
    index.
    """

    def __init__(self, points):
        if isinstance(points, PointCloud):
            points = points.points
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        if pts.shape[0] == 0:
            raise ValueError("cannot index an empty point cloud")
        if not np.all(np.isfinite(pts)):
            raise ValueError("indexed points contain non-finite coordinates")
        self._points = _readonly(pts)
        self._tree = cKDTree(pts)

    def __len__(self) -> int:
        return int(self._points.shape[0])

    @property
    def points(self) -> np.ndarray:
        return self._points

    def nearest(self, query) -> tuple[int, float]:
        """(point index, distance) of the nearest indexed point, ties to the
        lowest index."""
        q = _finite_array(query, "query", (3,))
        dist, idx = self._tree.query(q)
        candidates = self._tree.query_ball_point(q, dist)
        if candidates:
            dists = _euclidean(self._points[candidates], q)
            dmin = dists.min()
            best = min(c for c, d in zip(candidates, dists) if d == dmin)
            return int(best), float(dmin)
        return int(idx), float(_euclidean(self._points[idx], q))

    def query(self, queries) -> tuple[np.ndarray, np.ndarray]:
        """Batch nearest-neighbor lookup: (indices, distances), one per query."""
        q = np.asarray(queries, dtype=np.float64).reshape(-1, 3)
        _, idx = self._tree.query(q, workers=_query_workers())
        return idx, _euclidean(self._points[idx], q)

    def query_k(self, queries, k: int) -> tuple[np.ndarray, np.ndarray]:
        """k-nearest lookup: (indices (m, k), distances (m, k)) sorted by
        distance."""
        if not 1 <= k <= len(self):
            raise ValueError(f"k must be in [1, {len(self)}], got {k}")
        q = np.asarray(queries, dtype=np.float64).reshape(-1, 3)
        _, idx = self._tree.query(q, k=k, workers=_query_workers())
        idx = idx.reshape(q.shape[0], k)
        return idx, _euclidean(self._points[idx], q[:, None, :])


def nearest_neighbor(index: SpatialIndex, query) -> tuple[int, float]:
    """Functional alias for :meth:`SpatialIndex.nearest`."""
    return index.nearest(query)


# ---------------------------------------------------------------------------
# cameras


@dataclass(frozen=True, eq=False)
class CameraPinhole:
    """Pinhole camera with a world-to-camera rigid pose.

    A world point X maps to the camera frame as R @ X + t; points with
    positive camera-frame z are in front of the camera.
    """

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    rotation: np.ndarray  # (3, 3) world-to-camera
    translation: np.ndarray  # (3,)

    def __post_init__(self):
        for name in ("fx", "fy", "cx", "cy"):
            object.__setattr__(self, name, float(getattr(self, name)))
        for name in ("width", "height"):
            object.__setattr__(self, name, int(getattr(self, name)))
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image dimensions must be positive")
        if not (0.0 < self.cx < self.width) or not (0.0 < self.cy < self.height):
            raise ValueError("principal point must lie inside the image")
        rot = _finite_array(self.rotation, "rotation", (3, 3))
        if abs(np.linalg.det(rot) - 1.0) > 1e-6:
            raise ValueError("rotation must be a proper rotation matrix")
        object.__setattr__(self, "rotation", _readonly(rot))
        object.__setattr__(
            self, "translation", _readonly(_finite_array(self.translation, "translation", (3,)))
        )

    def project(self, points) -> tuple[np.ndarray, np.ndarray]:
        """Project world points; returns (pixel coordinates (n, 2), depths (n,)).

        Pixel coordinates are meaningful only where depth > 0.
        """
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        cam = pts @ self.rotation.T + self.translation
        depth = cam[:, 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            u = self.fx * cam[:, 0] / depth + self.cx
            v = self.fy * cam[:, 1] / depth + self.cy
        return np.stack([u, v], axis=1), depth
