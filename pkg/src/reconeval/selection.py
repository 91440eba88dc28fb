"""Cross-domain view selection: find weakly reconstructed voxels of an
underwater cloud and greedily pick the complementary images that cover the
most of them.

A voxel is weak when it is occupied by fewer points than a threshold
(defaults: 2 cm voxels, threshold 3). Candidate images score one point per
weak-voxel center that projects in front of the camera and inside the image
bounds; the greedy pass repeatedly takes the image with the largest number
of not-yet-covered weak voxels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import CameraPinhole, PointCloud, VoxelGrid, voxelize

DEFAULT_VOXEL_SIZE = 0.02  # meters
DEFAULT_WEAK_THRESHOLD = 3  # voxels with fewer points than this are weak


@dataclass(frozen=True, eq=False)
class WeakVoxelSet:
    """Occupied voxels whose point count falls below the weak threshold."""

    indices: np.ndarray  # (n, 3) voxel index triples, lexicographically sorted
    centers: np.ndarray  # (n, 3) world-space voxel centers
    counts: np.ndarray  # (n,) point counts (0 for enumerated empty voxels)
    voxel_size: float
    origin: np.ndarray  # (3,)

    def __len__(self) -> int:
        return int(self.indices.shape[0])


@dataclass(frozen=True)
class CandidateImage:
    image_id: str
    camera: CameraPinhole


@dataclass(frozen=True, eq=False)
class SelectionResult:
    selected: tuple  # image ids in pick order
    marginal_gains: tuple  # newly covered weak voxels per pick, all > 0
    covered: int
    total_weak: int
    coverage_curve: tuple  # cumulative covered fraction per pick


def find_weak_voxels(
    cloud: PointCloud,
    voxel_size: float = DEFAULT_VOXEL_SIZE,
    threshold: int = DEFAULT_WEAK_THRESHOLD,
    origin=None,
    bounds=None,
) -> WeakVoxelSet:
    """Weak voxels of a point cloud.

    Only occupied voxels are considered by default; enumerating empty space
    needs a scene bound, so completely empty voxels are included (with count
    0) only when ``bounds`` = (min_corner, max_corner) is given.
    """
    if threshold < 1:
        raise ValueError(f"threshold must be >= 1, got {threshold}")
    grid = voxelize(cloud, voxel_size, origin=origin)
    weak = {idx: count for idx, count in grid.counts.items() if count < threshold}
    if bounds is not None:
        lo = np.floor((np.asarray(bounds[0], float) - grid.origin) / grid.voxel_size).astype(int)
        hi = np.floor((np.asarray(bounds[1], float) - grid.origin) / grid.voxel_size).astype(int)
        for i in range(lo[0], hi[0] + 1):
            for j in range(lo[1], hi[1] + 1):
                for k in range(lo[2], hi[2] + 1):
                    idx = (i, j, k)
                    if idx not in grid.counts:
                        weak[idx] = 0
    ordered = sorted(weak.items())
    indices = np.array([idx for idx, _ in ordered], dtype=np.int64).reshape(-1, 3)
    counts = np.array([c for _, c in ordered], dtype=np.int64)
    centers = grid.origin + (indices + 0.5) * grid.voxel_size
    return WeakVoxelSet(indices, centers, counts, grid.voxel_size, grid.origin)


def _visible_mask(
    camera: CameraPinhole,
    centers: np.ndarray,
    min_depth: float | None = None,
    max_depth: float | None = None,
) -> np.ndarray:
    uv, depth = camera.project(centers)
    visible = depth > 0.0
    if min_depth is not None:
        visible &= depth >= min_depth
    if max_depth is not None:
        visible &= depth <= max_depth
    visible &= (uv[:, 0] >= 0.0) & (uv[:, 0] < camera.width)
    visible &= (uv[:, 1] >= 0.0) & (uv[:, 1] < camera.height)
    return visible


def score_image(
    image: CandidateImage,
    weak: WeakVoxelSet,
    min_depth: float | None = None,
    max_depth: float | None = None,
) -> int:
    """Number of weak-voxel centers the image observes.

    A center counts when its camera-frame depth is positive (optionally
    inside the [min_depth, max_depth] band) and its pinhole projection lands
    inside [0, width) x [0, height).
    """
    if len(weak) == 0:
        return 0
    return int(_visible_mask(image.camera, weak.centers, min_depth, max_depth).sum())


def greedy_select(
    candidates,
    weak: WeakVoxelSet,
    budget: int | None = None,
    min_depth: float | None = None,
    max_depth: float | None = None,
) -> SelectionResult:
    """Greedy maximum-coverage selection of candidate images over weak voxels.

    Repeatedly picks the candidate covering the most not-yet-covered weak
    voxels, breaking ties by lexicographically smallest image id, and stops
    when the best marginal gain is zero or the budget is exhausted.
    """
    candidates = list(candidates)
    if not candidates:
        raise ValueError("no candidate images")
    ids = [c.image_id for c in candidates]
    if len(set(ids)) != len(ids):
        raise ValueError("candidate image ids must be unique")
    if budget is not None and budget < 0:
        raise ValueError(f"budget must be non-negative, got {budget}")

    total_weak = len(weak)
    if total_weak == 0:
        return SelectionResult((), (), 0, 0, ())

    coverage = np.stack(
        [_visible_mask(c.camera, weak.centers, min_depth, max_depth) for c in candidates]
    )
    remaining = np.ones(total_weak, dtype=bool)
    available = np.ones(len(candidates), dtype=bool)
    selected: list[str] = []
    gains: list[int] = []
    curve: list[float] = []
    covered = 0
    max_picks = len(candidates) if budget is None else min(budget, len(candidates))
    while len(selected) < max_picks:
        step_gains = (coverage & remaining).sum(axis=1)
        step_gains[~available] = 0
        best_gain = int(step_gains.max())
        if best_gain == 0:
            break
        tied = np.nonzero(step_gains == best_gain)[0]
        pick = min(tied, key=lambda i: ids[i])
        selected.append(ids[pick])
        gains.append(best_gain)
        remaining &= ~coverage[pick]
        available[pick] = False
        covered += best_gain
        curve.append(covered / total_weak)
    return SelectionResult(tuple(selected), tuple(gains), covered, total_weak, tuple(curve))
