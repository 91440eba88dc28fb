"""Absolute and relative trajectory error against a ground-truth trajectory.

Estimated and ground-truth poses are paired by timestamp, the estimated
positions are aligned to the ground truth with the closed-form similarity
fit, and errors are reported in meters (the CLI converts to centimeters).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .alignment import umeyama_align
from .geometry import SimilarityTransform, Trajectory

ALIGNMENT_MODES = ("sim3", "se3")


@dataclass(frozen=True, eq=False)
class AteResult:
    rmse: float  # meters
    mean: float
    median: float
    max: float
    per_frame_errors: np.ndarray  # (k,) meters, in associated-pair order
    alignment: SimilarityTransform
    pairs: np.ndarray  # (k, 2) associated (est_index, gt_index)


@dataclass(frozen=True, eq=False)
class RpeResult:
    mean_trans: float  # meters
    mean_rot: float  # radians
    per_pair_trans: np.ndarray  # (k - delta,)
    per_pair_rot: np.ndarray  # (k - delta,)
    delta: int


def default_max_dt(gt: Trajectory) -> float:
    """Half the median frame interval of the ground-truth trajectory."""
    if len(gt) < 2:
        raise ValueError("cannot infer max_dt from a single-pose trajectory; pass it explicitly")
    return 0.5 * float(np.median(np.diff(gt.times)))


def associate(est: Trajectory, gt: Trajectory, max_dt: float) -> np.ndarray:
    """Pair estimated and ground-truth poses by nearest timestamp.

    Candidate pairs are all (est, gt) combinations with |dt| <= max_dt,
    consumed greedily in ascending |dt| (ties: lower gt index, then lower
    est index); each pose is matched at most once. Returns a (k, 2) index
    array sorted by estimated-pose index.
    """
    if max_dt <= 0.0:
        raise ValueError(f"max_dt must be positive, got {max_dt}")
    dt = np.abs(est.times[:, None] - gt.times[None, :])
    cand_e, cand_g = np.nonzero(dt <= max_dt)
    if cand_e.size == 0:
        raise ValueError("no temporal overlap between trajectories")
    order = np.lexsort((cand_e, cand_g, dt[cand_e, cand_g]))
    used_est = np.zeros(len(est), dtype=bool)
    used_gt = np.zeros(len(gt), dtype=bool)
    pairs = []
    for k in order:
        i, j = int(cand_e[k]), int(cand_g[k])
        if used_est[i] or used_gt[j]:
            continue
        used_est[i] = True
        used_gt[j] = True
        pairs.append((i, j))
    pairs.sort()
    return np.array(pairs, dtype=np.int64).reshape(-1, 2)


def ate(
    est: Trajectory, gt: Trajectory, mode: str = "sim3", max_dt: float | None = None
) -> AteResult:
    """Absolute trajectory error after global similarity (or rigid) alignment.

    mode "sim3" absorbs the scale ambiguity of monocular reconstructions;
    "se3" keeps the estimated scale and aligns rigidly.
    """
    if mode not in ALIGNMENT_MODES:
        raise ValueError(f"mode must be one of {ALIGNMENT_MODES}, got '{mode}'")
    pairs = associate(est, gt, default_max_dt(gt) if max_dt is None else max_dt)
    if pairs.shape[0] < 3:
        raise ValueError(f"need at least 3 associated pairs, got {pairs.shape[0]}")
    est_pos = est.positions[pairs[:, 0]]
    gt_pos = gt.positions[pairs[:, 1]]
    transform = umeyama_align(est_pos, gt_pos, with_scale=(mode == "sim3"))
    errors = np.linalg.norm(gt_pos - transform.apply(est_pos), axis=1)
    return AteResult(
        rmse=float(np.sqrt((errors**2).mean())),
        mean=float(errors.mean()),
        median=float(np.median(errors)),
        max=float(errors.max()),
        per_frame_errors=errors,
        alignment=transform,
        pairs=pairs,
    )


def _invert_poses(mats: np.ndarray) -> np.ndarray:
    inv = np.tile(np.eye(4), (mats.shape[0], 1, 1))
    rt = np.transpose(mats[:, :3, :3], (0, 2, 1))
    inv[:, :3, :3] = rt
    inv[:, :3, 3] = -np.einsum("nij,nj->ni", rt, mats[:, :3, 3])
    return inv


def rpe(
    est: Trajectory, gt: Trajectory, delta: int = 1, max_dt: float | None = None
) -> RpeResult:
    """Relative pose error over associated pairs at a fixed frame delta.

    For each associated index i, the error motion is
    (gt_i^-1 gt_{i+delta})^-1 (est_i^-1 est_{i+delta}); the translational
    part is its displacement norm and the rotational part its rotation
    angle. Both are invariant to a global rigid motion of either trajectory.
    """
    if delta < 1:
        raise ValueError(f"delta must be >= 1, got {delta}")
    pairs = associate(est, gt, default_max_dt(gt) if max_dt is None else max_dt)
    n = pairs.shape[0]
    if n < delta + 1:
        raise ValueError(f"need at least delta + 1 = {delta + 1} associated pairs, got {n}")
    est_T = est.pose_matrices()[pairs[:, 0]]
    gt_T = gt.pose_matrices()[pairs[:, 1]]
    rel_est = _invert_poses(est_T[:-delta]) @ est_T[delta:]
    rel_gt = _invert_poses(gt_T[:-delta]) @ gt_T[delta:]
    err = _invert_poses(rel_gt) @ rel_est
    trans = np.linalg.norm(err[:, :3, 3], axis=1)
    traces = np.einsum("nii->n", err[:, :3, :3])
    rot = np.arccos(np.clip((traces - 1.0) / 2.0, -1.0, 1.0))
    return RpeResult(
        mean_trans=float(trans.mean()),
        mean_rot=float(rot.mean()),
        per_pair_trans=trans,
        per_pair_rot=rot,
        delta=delta,
    )
