"""Independent reference implementations used to check the library.

Everything here is deliberately written the slow, obvious way (explicit
loops, homogeneous matrices, exhaustive enumeration) and goes through
scipy's Rotation for quaternion math rather than the library's own
conversion code.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.spatial.transform import Rotation


def similarity_homogeneous(transform) -> np.ndarray:
    """4x4 matrix of a SimilarityTransform built via scipy's quaternion path."""
    w, x, y, z = transform.rotation
    rot = Rotation.from_quat([x, y, z, w]).as_matrix()
    mat = np.eye(4)
    mat[:3, :3] = transform.scale * rot
    mat[:3, 3] = transform.translation
    return mat


def apply_homogeneous(mat: np.ndarray, point) -> np.ndarray:
    hom = np.array([point[0], point[1], point[2], 1.0])
    out = mat @ hom
    return out[:3] / out[3]


def pose_matrix(quat_wxyz, position) -> np.ndarray:
    w, x, y, z = quat_wxyz
    mat = np.eye(4)
    mat[:3, :3] = Rotation.from_quat([x, y, z, w]).as_matrix()
    mat[:3, 3] = position
    return mat


# ---------------------------------------------------------------------------
# nearest neighbors and cloud metrics


def linear_scan_nn(points: np.ndarray, query) -> tuple[int, float]:
    best_idx = 0
    best_dist = math.inf
    for i, p in enumerate(points):
        dx, dy, dz = p[0] - query[0], p[1] - query[1], p[2] - query[2]
        d = math.sqrt(dx * dx + dy * dy + dz * dz)
        if d < best_dist:
            best_idx, best_dist = i, d
    return best_idx, best_dist


def brute_force_chamfer_mm(a: np.ndarray, b: np.ndarray) -> float:
    d_ab = np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(-1)).min(axis=1)
    d_ba = np.sqrt(((b[:, None, :] - a[None, :, :]) ** 2).sum(-1)).min(axis=1)
    total = (d_ab**2).sum() + (d_ba**2).sum()
    return 1000.0 * math.sqrt(total / (len(a) + len(b)))


def brute_force_mean_nn_mm(a: np.ndarray) -> float:
    dists = np.sqrt(((a[:, None, :] - a[None, :, :]) ** 2).sum(-1))
    np.fill_diagonal(dists, np.inf)
    return 1000.0 * float(dists.min(axis=1).mean())


def recompute_roughness(points: np.ndarray, k: int) -> float:
    """Per-point plane-fit roughness via sorted brute-force neighborhoods."""
    total = 0.0
    for i, p in enumerate(points):
        dists = np.linalg.norm(points - p, axis=1)
        order = np.argsort(dists, kind="stable")
        neighbors = points[[j for j in order if j != i][:k]]
        center = neighbors.mean(axis=0)
        centered = neighbors - center
        _, _, vt = np.linalg.svd(centered, full_matrices=True)
        normal = vt[-1]
        total += float(np.dot(p - center, normal)) ** 2
    return total / len(points)


def recount_voxels(points: np.ndarray, voxel_size: float, origin) -> dict:
    counts: dict = {}
    for p in points:
        idx = tuple(int(math.floor((p[d] - origin[d]) / voxel_size)) for d in range(3))
        counts[idx] = counts.get(idx, 0) + 1
    return counts


# ---------------------------------------------------------------------------
# association and trajectory errors


def greedy_associate(est_times, gt_times, max_dt: float) -> list[tuple[int, int]]:
    candidates = []
    for i, te in enumerate(est_times):
        for j, tg in enumerate(gt_times):
            dt = abs(te - tg)
            if dt <= max_dt:
                candidates.append((dt, j, i))
    candidates.sort()
    used_e: set = set()
    used_g: set = set()
    pairs = []
    for _, j, i in candidates:
        if i in used_e or j in used_g:
            continue
        used_e.add(i)
        used_g.add(j)
        pairs.append((i, j))
    return sorted(pairs)


def ate_errors_from_alignment(transform, est_positions, gt_positions) -> np.ndarray:
    """Per-frame errors recomputed through the homogeneous-matrix path."""
    mat = similarity_homogeneous(transform)
    errors = []
    for e, g in zip(est_positions, gt_positions):
        aligned = apply_homogeneous(mat, e)
        errors.append(float(np.linalg.norm(g - aligned)))
    return np.array(errors)


# ---------------------------------------------------------------------------
# projection and coverage


def project_visible(camera, center) -> bool:
    """Scalar re-implementation of the weak-voxel visibility test."""
    cam = camera.rotation @ np.asarray(center, float) + camera.translation
    if cam[2] <= 0.0:
        return False
    u = camera.fx * cam[0] / cam[2] + camera.cx
    v = camera.fy * cam[1] / cam[2] + camera.cy
    return 0.0 <= u < camera.width and 0.0 <= v < camera.height


def coverage_bitmasks(cameras, centers) -> list[int]:
    masks = []
    for cam in cameras:
        mask = 0
        for b, center in enumerate(centers):
            if project_visible(cam, center):
                mask |= 1 << b
        masks.append(mask)
    return masks


def optimal_coverage(masks: list[int], budget: int) -> int:
    """Exhaustive max-coverage over all camera subsets of size <= budget."""
    best = 0
    for size in range(1, budget + 1):
        for subset in itertools.combinations(masks, size):
            union = 0
            for m in subset:
                union |= m
            best = max(best, bin(union).count("1"))
    return best


# ---------------------------------------------------------------------------
# radiometry


def srgb_to_lab_scalar(r: int, g: int, b: int) -> tuple[float, float, float]:
    def linearize(u8):
        u = u8 / 255.0
        return u / 12.92 if u <= 0.04045 else ((u + 0.055) / 1.055) ** 2.4

    rl, gl, bl = linearize(r), linearize(g), linearize(b)
    x = 0.4124564 * rl + 0.3575761 * gl + 0.1804375 * bl
    y = 0.2126729 * rl + 0.7151522 * gl + 0.0721750 * bl
    z = 0.0193339 * rl + 0.1191920 * gl + 0.9503041 * bl
    xn, yn, zn = 0.4124564 + 0.3575761 + 0.1804375, 1.0, 0.0193339 + 0.1191920 + 0.9503041

    def f(t):
        d = 6.0 / 29.0
        return t ** (1.0 / 3.0) if t > d**3 else t / (3 * d * d) + 4.0 / 29.0

    fx, fy, fz = f(x / xn), f(y / yn), f(z / zn)
    return 116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)


def global_hist_eq(channel: np.ndarray) -> np.ndarray:
    """Plain global histogram equalization of a uint8 channel."""
    hist = np.bincount(channel.ravel(), minlength=256)
    cdf = np.cumsum(hist).astype(np.float64)
    lut = np.floor(255.0 * cdf / channel.size + 0.5)
    lut = np.clip(lut, 0, 255).astype(np.uint8)
    return lut[channel]


def sliding_window_ssim(x: np.ndarray, y: np.ndarray) -> float:
    """Direct per-window SSIM with an 11x11 Gaussian, valid positions only."""
    size, sigma = 11, 1.5
    offsets = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(offsets**2) / (2 * sigma**2))
    kernel = np.outer(g, g)
    kernel /= kernel.sum()
    c1 = (0.01 * 255.0) ** 2
    c2 = (0.03 * 255.0) ** 2
    h, w = x.shape
    values = []
    for r in range(h - size + 1):
        for c in range(w - size + 1):
            wx = x[r : r + size, c : c + size]
            wy = y[r : r + size, c : c + size]
            mx = float((kernel * wx).sum())
            my = float((kernel * wy).sum())
            vx = float((kernel * wx * wx).sum()) - mx * mx
            vy = float((kernel * wy * wy).sum()) - my * my
            cxy = float((kernel * wx * wy).sum()) - mx * my
            values.append(
                ((2 * mx * my + c1) * (2 * cxy + c2))
                / ((mx * mx + my * my + c1) * (vx + vy + c2))
            )
    return float(np.mean(values))
