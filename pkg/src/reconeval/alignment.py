"""Similarity and rigid alignment between point sets and clouds.

Implements the closed-form least-squares similarity estimate with the
reflection sign fix, RMS-radius scale normalization against a reference
cloud, and point-to-point rigid ICP with an inlier-fraction fitness score.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import PointCloud, SimilarityTransform, SpatialIndex


def umeyama_align(src, dst, with_scale: bool = True) -> SimilarityTransform:
    """Least-squares similarity (or rigid, with_scale=False) mapping src onto dst.

    Minimizes sum |dst_i - (s R src_i + t)|^2 over corresponding points. The
    rotation is a proper rotation (det +1): if the best orthogonal map would
    be a reflection, the sign of the smallest singular direction is flipped.

    Parameters
    ----------
    src, dst : (n, 3) arrays of corresponding points, n >= 3.
    with_scale : estimate scale as well; otherwise scale is fixed at 1.

    Raises
    ------
    ValueError if the sizes differ, fewer than 3 points are given, or the
    configuration is degenerate (cross-covariance rank < 2, e.g. collinear
    points).
    """
    src = np.asarray(src, dtype=np.float64).reshape(-1, 3)
    dst = np.asarray(dst, dtype=np.float64).reshape(-1, 3)
    if src.shape != dst.shape:
        raise ValueError(f"point sets differ in size: {src.shape[0]} vs {dst.shape[0]}")
    n = src.shape[0]
    if n < 3:
        raise ValueError(f"need at least 3 point pairs, got {n}")

    mu_src = src.mean(axis=0)
    mu_dst = dst.mean(axis=0)
    x = src - mu_src
    y = dst - mu_dst
    cov = y.T @ x / n
    u, sv, vt = np.linalg.svd(cov)
    if sv[0] <= 0.0 or np.sum(sv > 1e-9 * sv[0]) < 2:
        raise ValueError("degenerate configuration")

    sign = np.ones(3)
    if np.linalg.det(u) * np.linalg.det(vt) < 0.0:
        sign[2] = -1.0
    rot = u @ np.diag(sign) @ vt

    if with_scale:
        var_src = float((x**2).sum()) / n
        scale = float((sv * sign).sum()) / var_src
        if not scale > 0.0:
            raise ValueError("degenerate configuration")
    else:
        scale = 1.0

    translation = mu_dst - scale * (rot @ mu_src)
    return SimilarityTransform.from_rotation_matrix(scale, rot, translation)


def rms_radius(cloud: PointCloud) -> float:
    """Root-mean-square distance of the points from their centroid."""
    if len(cloud) == 0:
        raise ValueError("empty point cloud")
    centered = cloud.points - cloud.points.mean(axis=0)
    return float(np.sqrt((centered**2).sum(axis=1).mean()))


def rms_scale_normalize(cloud: PointCloud, reference: PointCloud) -> tuple[float, PointCloud]:
    """Scale a cloud about its centroid so its RMS radius matches the reference.

    Returns (scale, scaled_cloud); the scale is the multiplicative factor
    applied to the evaluated cloud.
    """
    r_cloud = rms_radius(cloud)
    r_ref = rms_radius(reference)
    if r_cloud == 0.0 or r_ref == 0.0:
        raise ValueError("cloud has zero RMS radius (all points identical)")
    scale = r_ref / r_cloud
    centroid = cloud.points.mean(axis=0)
    scaled = centroid + scale * (cloud.points - centroid)
    return scale, PointCloud(scaled, cloud.colors)


@dataclass(frozen=True)
class IcpConfig:
    """Point-to-point ICP parameters.

    max_correspondence_dist defaults to 5x the mean nearest-neighbor spacing
    of the target cloud, which adapts the gate to the cloud's density.
    """

    max_correspondence_dist: float | None = None  # meters
    max_iterations: int = 50
    convergence_eps: float = 1e-8  # relative inlier-RMSE change

    def __post_init__(self):
        if self.max_correspondence_dist is not None and not self.max_correspondence_dist > 0.0:
            raise ValueError("max_correspondence_dist must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not self.convergence_eps > 0.0:
            raise ValueError("convergence_eps must be positive")


@dataclass(frozen=True)
class IcpResult:
    transform: SimilarityTransform  # rigid (scale 1)
    fitness: float  # inlier fraction of source points at the final iteration
    inlier_rmse: float  # meters, over kept correspondences
    iterations: int
    rmse_history: tuple  # inlier RMSE after each update, for convergence checks


def _mean_nn_spacing(index: SpatialIndex) -> float:
    _, dists = index.query_k(index.points, k=2)
    return float(dists[:, 1].mean())


def icp_rigid(
    src: PointCloud,
    dst: PointCloud,
    config: IcpConfig | None = None,
    init: SimilarityTransform | None = None,
) -> IcpResult:
    """Point-to-point rigid ICP aligning src onto dst.

    Alternates (a) nearest-neighbor correspondences of the transformed source
    in the target, gated by the correspondence distance, and (b) a rigid
    least-squares fit on the kept pairs. Stops on max_iterations or when the
    inlier RMSE change falls below convergence_eps relatively. If no source
    point finds a correspondence within the gate at any iteration, the result
    carries the initial transform with fitness 0 (not an error).
    """
    if len(src) == 0 or len(dst) == 0:
        raise ValueError("empty point cloud")
    config = config or IcpConfig()
    init = init or SimilarityTransform.identity()
    if abs(init.scale - 1.0) > 1e-12:
        raise ValueError("icp_rigid requires a rigid (scale 1) initial transform")

    index = SpatialIndex(dst)
    max_dist = config.max_correspondence_dist
    if max_dist is None:
        if len(dst) < 2:
            raise ValueError(
                "cannot derive a correspondence distance from a single-point target; "
                "set max_correspondence_dist explicitly"
            )
        max_dist = 5.0 * _mean_nn_spacing(index)

    src_pts = src.points
    transform = init

    def correspond(t: SimilarityTransform):
        idx, dists = index.query(t.apply(src_pts))
        keep = dists <= max_dist
        return idx, dists, keep

    idx, dists, keep = correspond(transform)
    if not keep.any():
        return IcpResult(init, 0.0, 0.0, 0, ())

    rmse = float(np.sqrt((dists[keep] ** 2).mean()))
    history: list[float] = []
    iterations = 0
    for _ in range(config.max_iterations):
        iterations += 1
        if rmse == 0.0:  # correspondences already perfect, nothing to refine
            history.append(rmse)
            break
        if keep.sum() < 3:
            break
        try:
            transform = umeyama_align(src_pts[keep], index.points[idx[keep]], with_scale=False)
        except ValueError:
            break  # degenerate correspondence geometry; keep the last estimate
        idx, dists, keep = correspond(transform)
        if not keep.any():
            return IcpResult(init, 0.0, 0.0, iterations, tuple(history))
        prev_rmse = rmse
        rmse = float(np.sqrt((dists[keep] ** 2).mean()))
        history.append(rmse)
        if abs(prev_rmse - rmse) <= config.convergence_eps * max(prev_rmse, 1e-300):
            break

    fitness = float(keep.sum()) / len(src)
    return IcpResult(transform, fitness, rmse, iterations, tuple(history))
