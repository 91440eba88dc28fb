"""Shared builders for test inputs: transforms, meshes, clouds, images."""

from __future__ import annotations

import numpy as np

from reconeval import Image8, PointCloud, SimilarityTransform, Trajectory, TriangleMesh


def random_quat(rng) -> np.ndarray:
    """Uniform random unit quaternion (w, x, y, z)."""
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    return q if q[0] >= 0 else -q


def random_similarity(rng, scale_range=(0.2, 5.0)) -> SimilarityTransform:
    return SimilarityTransform(
        rng.uniform(*scale_range), random_quat(rng), rng.normal(scale=2.0, size=3)
    )


def random_rigid(rng) -> SimilarityTransform:
    return SimilarityTransform(1.0, random_quat(rng), rng.normal(scale=2.0, size=3))


def random_cloud(rng, n: int, scale: float = 1.0) -> PointCloud:
    return PointCloud(rng.uniform(-scale, scale, size=(n, 3)))


def random_image(rng, height: int, width: int, channels: int = 3) -> Image8:
    return Image8(rng.integers(0, 256, size=(height, width, channels), dtype=np.uint8))


def identity_trajectory(times, positions) -> Trajectory:
    n = len(times)
    quats = np.zeros((n, 4))
    quats[:, 0] = 1.0
    return Trajectory(np.asarray(times, float), np.asarray(positions, float), quats)


def random_trajectory(rng, n: int) -> Trajectory:
    times = np.cumsum(rng.uniform(0.05, 0.15, size=n))
    positions = np.cumsum(rng.normal(scale=0.05, size=(n, 3)), axis=0)
    quats = np.stack([random_quat(rng) for _ in range(n)])
    return Trajectory(times, positions, quats)


def transform_trajectory(traj: Trajectory, transform: SimilarityTransform) -> Trajectory:
    """Apply a global transform to every pose (left multiplication)."""
    from reconeval.geometry import matrix_to_quat, quat_to_matrix

    positions = transform.apply(traj.positions)
    rot = transform.rotation_matrix
    quats = np.stack([matrix_to_quat(rot @ quat_to_matrix(q)) for q in traj.quaternions])
    return Trajectory(traj.times, positions, quats)


def cube_mesh() -> TriangleMesh:
    """Closed axis-aligned unit cube, 12 triangles."""
    verts = np.array([[x, y, z] for x in (0, 1) for y in (0, 1) for z in (0, 1)], float)

    def quad(a, b, c, d):
        return [(a, b, c), (a, c, d)]

    faces = []
    faces += quad(0, 1, 3, 2)
    faces += quad(4, 6, 7, 5)
    faces += quad(0, 4, 5, 1)
    faces += quad(2, 3, 7, 6)
    faces += quad(0, 2, 6, 4)
    faces += quad(1, 5, 7, 3)
    return TriangleMesh(verts, np.array(faces))


def icosphere(subdivisions: int, radius: float = 0.1) -> TriangleMesh:
    """Subdivided icosahedron with vertices projected onto the sphere."""
    t = (1 + 5**0.5) / 2
    verts = np.array(
        [
            [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
            [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
            [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
        ],
        dtype=float,
    )
    faces = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ]
    )
    for _ in range(subdivisions):
        verts_list = list(verts)
        cache: dict = {}

        def midpoint(a, b):
            key = (min(a, b), max(a, b))
            if key not in cache:
                cache[key] = len(verts_list)
                verts_list.append((verts_list[a] + verts_list[b]) / 2)
            return cache[key]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        verts = np.array(verts_list)
        faces = np.array(new_faces)
    verts = verts / np.linalg.norm(verts, axis=1, keepdims=True) * radius
    return TriangleMesh(verts, faces)
