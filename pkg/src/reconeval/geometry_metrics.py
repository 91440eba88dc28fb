"""Point-cloud comparison metrics and mesh statistics.

Cloud metrics take meter-scale inputs and report distances in millimeters;
roughness is a mean squared plane deviation in square meters. Mesh
statistics report surface area in cm^2 and mean curvature in 1/cm.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .alignment import IcpConfig, IcpResult, icp_rigid, rms_scale_normalize
from .geometry import PointCloud, SpatialIndex, TriangleMesh

_M_TO_MM = 1000.0


@dataclass(frozen=True)
class CloudMetrics:
    chamfer_rms_mm: float
    mean_nn_distance_mm: float
    surface_roughness: float  # m^2, mean squared deviation from local planes


@dataclass(frozen=True)
class MeshStats:
    triangles: int
    surface_area_cm2: float
    avg_curvature_per_cm: float
    degenerate_triangles: int  # zero-area faces excluded from curvature


@dataclass(frozen=True, eq=False)
class CloudComparison:
    """One row of the cloud-alignment evaluation protocol."""

    scale_rms: float  # factor applied to the evaluated cloud
    icp_fitness: float
    chamfer_rms_mm: float
    surface_roughness: float
    mean_nn_distance_mm: float
    icp: IcpResult


def chamfer_rms(a: PointCloud, b: PointCloud) -> float:
    """Symmetric RMS nearest-neighbor distance between two clouds, in mm.

    sqrt((sum of squared NN distances a->b plus b->a) / (|a| + |b|)).
    """
    if len(a) == 0 or len(b) == 0:
        raise ValueError("empty point cloud")
    _, d_ab = SpatialIndex(b).query(a.points)
    _, d_ba = SpatialIndex(a).query(b.points)
    total = float((d_ab**2).sum() + (d_ba**2).sum())
    return _M_TO_MM * float(np.sqrt(total / (len(a) + len(b))))


def mean_nn_distance(a: PointCloud) -> float:
    """Mean distance of each point to its nearest other point, in mm."""
    if len(a) < 2:
        raise ValueError(f"need at least 2 points, got {len(a)}")
    _, dists = SpatialIndex(a).query_k(a.points, k=2)
    return _M_TO_MM * float(dists[:, 1].mean())


def surface_roughness(a: PointCloud, k: int = 16) -> float:
    """Mean squared orthogonal deviation from local best-fit planes (m^2).

    For every point, a total-least-squares plane is fit to its k nearest
    neighbors (the point itself excluded); the point's roughness is its
    squared orthogonal distance to that plane.
    """
    if k < 3:
        raise ValueError(f"k must be >= 3, got {k}")
    if len(a) < k + 1:
        raise ValueError(f"need at least k + 1 = {k + 1} points, got {len(a)}")
    pts = a.points
    idx, _ = SpatialIndex(a).query_k(pts, k=k + 1)
    neighbors = pts[idx[:, 1:]]  # (n, k, 3), excluding each point itself
    centers = neighbors.mean(axis=1)
    centered = neighbors - centers[:, None, :]
    cov = np.einsum("nki,nkj->nij", centered, centered)
    _, eigvecs = np.linalg.eigh(cov)
    normals = eigvecs[:, :, 0]  # smallest-eigenvalue direction
    offsets = np.einsum("ni,ni->n", pts - centers, normals)
    return float((offsets**2).mean())


def cloud_metrics(cloud: PointCloud, reference: PointCloud, k: int = 16) -> CloudMetrics:
    """Bundle the three cloud metrics of a cloud against a reference."""
    return CloudMetrics(
        chamfer_rms_mm=chamfer_rms(cloud, reference),
        mean_nn_distance_mm=mean_nn_distance(cloud),
        surface_roughness=surface_roughness(cloud, k=k),
    )


def evaluate_cloud_pair(
    cloud: PointCloud,
    reference: PointCloud,
    k: int = 16,
    icp_config: IcpConfig | None = None,
) -> CloudComparison:
    """Full cloud evaluation protocol against a reference cloud.

    The evaluated cloud is scale-normalized to the reference (RMS radius),
    refined with rigid ICP, and the geometry metrics are computed on the
    aligned result.
    """
    scale, scaled = rms_scale_normalize(cloud, reference)
    icp = icp_rigid(scaled, reference, config=icp_config)
    aligned = scaled.transformed(icp.transform)
    return CloudComparison(
        scale_rms=scale,
        icp_fitness=icp.fitness,
        chamfer_rms_mm=chamfer_rms(aligned, reference),
        surface_roughness=surface_roughness(aligned, k=k),
        mean_nn_distance_mm=mean_nn_distance(aligned),
        icp=icp,
    )


# ---------------------------------------------------------------------------
# mesh statistics


def _face_geometry(mesh: TriangleMesh):
    v = mesh.vertices
    f = mesh.faces
    e0 = v[f[:, 1]] - v[f[:, 0]]
    e1 = v[f[:, 2]] - v[f[:, 0]]
    cross = np.cross(e0, e1)
    areas = 0.5 * np.linalg.norm(cross, axis=1)
    edge_sq = (
        (e0**2).sum(axis=1)
        + (e1**2).sum(axis=1)
        + ((v[f[:, 2]] - v[f[:, 1]]) ** 2).sum(axis=1)
    )
    # Scale-invariant degeneracy test: sliver/zero faces are excluded from
    # curvature because their cotangents diverge.
    degenerate = areas <= 1e-12 * edge_sq
    return areas, degenerate


def _boundary_vertices(faces: np.ndarray, n_vertices: int) -> np.ndarray:
    edges = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    edges = np.sort(edges, axis=1)
    _, first, counts = np.unique(edges, axis=0, return_index=True, return_counts=True)
    boundary = np.zeros(n_vertices, dtype=bool)
    for e in edges[first[counts == 1]]:
        boundary[e[0]] = True
        boundary[e[1]] = True
    return boundary


def _mean_curvature(mesh: TriangleMesh, faces: np.ndarray, areas: np.ndarray):
    """Per-vertex mean-curvature magnitude |H| and mixed Voronoi areas.

    Uses the cotangent discretization of the Laplace-Beltrami mean-curvature
    normal: |H_i| = |sum_j (cot a_ij + cot b_ij)(x_i - x_j)| / (4 A_i), with
    the mixed Voronoi vertex areas of the standard discrete-operator
    construction (obtuse triangles donate area/2 to the obtuse corner and
    area/4 to the others).
    """
    v = mesh.vertices
    n = mesh.n_vertices
    laplace = np.zeros((n, 3))
    vertex_area = np.zeros(n)

    corners = v[faces]  # (m, 3, 3)
    for local in range(3):
        i = faces[:, local]
        j = faces[:, (local + 1) % 3]
        k = faces[:, (local + 2) % 3]
        u1 = v[j] - v[i]
        u2 = v[k] - v[i]
        # cot of the angle at corner i = dot / (2 * area)
        cot_i = np.einsum("nd,nd->n", u1, u2) / (2.0 * areas)
        # the angle at i is opposite edge (j, k): accumulate the cotangent
        # Laplacian contributions on that edge's endpoints
        np.add.at(laplace, j, cot_i[:, None] * (v[j] - v[k]))
        np.add.at(laplace, k, cot_i[:, None] * (v[k] - v[j]))

    # mixed Voronoi areas
    cots = np.empty((faces.shape[0], 3))
    for local in range(3):
        u1 = corners[:, (local + 1) % 3] - corners[:, local]
        u2 = corners[:, (local + 2) % 3] - corners[:, local]
        cots[:, local] = np.einsum("nd,nd->n", u1, u2) / (2.0 * areas)
    obtuse_corner = np.argmin(cots, axis=1)
    has_obtuse = cots[np.arange(len(faces)), obtuse_corner] < 0.0
    for local in range(3):
        i = faces[:, local]
        j = faces[:, (local + 1) % 3]
        k = faces[:, (local + 2) % 3]
        l_ij = ((v[i] - v[j]) ** 2).sum(axis=1)
        l_ik = ((v[i] - v[k]) ** 2).sum(axis=1)
        voronoi = (l_ij * cots[:, (local + 2) % 3] + l_ik * cots[:, (local + 1) % 3]) / 8.0
        share = np.where(
            has_obtuse,
            np.where(obtuse_corner == local, areas / 2.0, areas / 4.0),
            voronoi,
        )
        np.add.at(vertex_area, i, share)

    h = np.zeros(n)
    ok = vertex_area > 0.0
    h[ok] = np.linalg.norm(laplace[ok], axis=1) / (4.0 * vertex_area[ok])
    return h, vertex_area


def mesh_stats(mesh: TriangleMesh, unit_scale_to_cm: float = 100.0) -> MeshStats:
    """Triangle count, surface area (cm^2), and mean curvature (1/cm).

    The average curvature is the vertex-area-weighted mean of |H| over
    interior vertices (boundary vertices are skipped); zero-area triangles
    are excluded from the curvature computation and counted separately.
    unit_scale_to_cm converts the mesh's length unit to centimeters
    (100 for meters).
    """
    if mesh.n_faces == 0:
        raise ValueError("empty mesh")
    if not unit_scale_to_cm > 0.0:
        raise ValueError(f"unit_scale_to_cm must be positive, got {unit_scale_to_cm}")
    areas, degenerate = _face_geometry(mesh)
    area_cm2 = float(areas.sum()) * unit_scale_to_cm**2

    good = mesh.faces[~degenerate]
    avg_curvature = 0.0
    if good.shape[0] > 0:
        h, vertex_area = _mean_curvature(mesh, good, areas[~degenerate])
        boundary = _boundary_vertices(good, mesh.n_vertices)
        interior = ~boundary & (vertex_area > 0.0)
        total_area = float(vertex_area[interior].sum())
        if total_area > 0.0:
            weighted = float((h[interior] * vertex_area[interior]).sum())
            avg_curvature = weighted / total_area / unit_scale_to_cm

    return MeshStats(
        triangles=mesh.n_faces,
        surface_area_cm2=area_cm2,
        avg_curvature_per_cm=avg_curvature,
        degenerate_triangles=int(degenerate.sum()),
    )
