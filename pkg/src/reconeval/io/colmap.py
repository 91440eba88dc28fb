"""COLMAP text sparse-model parser and writer (cameras.txt, images.txt,
points3D.txt).

Only the PINHOLE and SIMPLE_PINHOLE camera models are supported; imagery is
expected to be undistorted to a pinhole model upstream. Image poses are kept
world-to-camera exactly as stored in the files.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from ..errors import ParseError
from ..geometry import CameraPinhole, PointCloud, quat_to_matrix

SUPPORTED_CAMERA_MODELS = {"PINHOLE": 4, "SIMPLE_PINHOLE": 3}


@dataclass(frozen=True)
class ColmapCamera:
    camera_id: int
    model: str
    width: int
    height: int
    params: tuple  # PINHOLE: fx fy cx cy; SIMPLE_PINHOLE: f cx cy

    def intrinsics(self) -> tuple[float, float, float, float]:
        if self.model == "PINHOLE":
            fx, fy, cx, cy = self.params
        else:
            f, cx, cy = self.params
            fx = fy = f
        return float(fx), float(fy), float(cx), float(cy)


@dataclass(frozen=True, eq=False)
class ColmapImage:
    image_id: int
    qvec: np.ndarray  # (w, x, y, z), world-to-camera
    tvec: np.ndarray  # (3,)
    camera_id: int
    name: str
    xys: np.ndarray  # (k, 2) observed 2D points
    point3d_ids: np.ndarray  # (k,), -1 where untracked


@dataclass(frozen=True, eq=False)
class ColmapPoint3D:
    point_id: int
    xyz: np.ndarray
    rgb: np.ndarray  # (3,) uint8
    error: float
    image_ids: np.ndarray
    point2d_idxs: np.ndarray


@dataclass(frozen=True, eq=False)
class ColmapSparseModel:
    cameras: dict  # id -> ColmapCamera
    images: dict  # id -> ColmapImage
    points3d: dict  # id -> ColmapPoint3D

    def point_cloud(self) -> PointCloud:
        """Sparse 3D points as a colored point cloud."""
        pts = [p for _, p in sorted(self.points3d.items())]
        if not pts:
            return PointCloud(np.zeros((0, 3)))
        return PointCloud(
            np.stack([p.xyz for p in pts]),
            np.stack([p.rgb for p in pts]),
        )

    def pinhole_camera(self, image_id: int) -> CameraPinhole:
        """Pinhole camera (intrinsics + world-to-camera pose) for an image."""
        image = self.images[image_id]
        cam = self.cameras[image.camera_id]
        fx, fy, cx, cy = cam.intrinsics()
        return CameraPinhole(
            fx=fx,
            fy=fy,
            cx=cx,
            cy=cy,
            width=cam.width,
            height=cam.height,
            rotation=quat_to_matrix(image.qvec),
            translation=image.tvec,
        )


def _data_lines(path):
    """Yield (lineno, stripped line) for non-comment, non-blank lines."""
    with open(path, "r", encoding="utf-8", errors="replace") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if line and not line.startswith("#"):
                yield lineno, line


def _to_int(token: str, path, lineno: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise ParseError(f"{path}: expected integer, got '{token}' at line {lineno}") from None


def _to_float(token: str, path, lineno: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise ParseError(f"{path}: expected number, got '{token}' at line {lineno}") from None


def _parse_cameras(path) -> dict:
    cameras = {}
    for lineno, line in _data_lines(path):
        fields = line.split()
        if len(fields) < 5:
            raise ParseError(f"{path}: camera record needs >= 5 fields at line {lineno}")
        camera_id = _to_int(fields[0], path, lineno)
        model = fields[1]
        if model not in SUPPORTED_CAMERA_MODELS:
            raise ParseError(f"{path}: unsupported camera model '{model}' at line {lineno}")
        width = _to_int(fields[2], path, lineno)
        height = _to_int(fields[3], path, lineno)
        params = tuple(_to_float(f, path, lineno) for f in fields[4:])
        if len(params) != SUPPORTED_CAMERA_MODELS[model]:
            raise ParseError(
                f"{path}: {model} expects {SUPPORTED_CAMERA_MODELS[model]} parameters, "
                f"got {len(params)} at line {lineno}"
            )
        if camera_id in cameras:
            raise ParseError(f"{path}: duplicate camera id {camera_id} at line {lineno}")
        cameras[camera_id] = ColmapCamera(camera_id, model, width, height, params)
    return cameras


def _parse_images(path) -> dict:
    images = {}
    pending = None  # header fields of an image awaiting its observations line
    for lineno, line in _data_lines(path):
        if pending is None:
            fields = line.split()
            if len(fields) < 10:
                raise ParseError(f"{path}: image record needs >= 10 fields at line {lineno}")
            pending = (lineno, fields)
            continue
        hdr_lineno, fields = pending
        pending = None
        image_id = _to_int(fields[0], path, hdr_lineno)
        qw, qx, qy, qz = (_to_float(f, path, hdr_lineno) for f in fields[1:5])
        tvec = np.array([_to_float(f, path, hdr_lineno) for f in fields[5:8]])
        camera_id = _to_int(fields[8], path, hdr_lineno)
        name = " ".join(fields[9:])
        obs = line.split()
        if len(obs) % 3 != 0:
            raise ParseError(
                f"{path}: observations must come in (x, y, point3d_id) triplets at line {lineno}"
            )
        xys = np.array(
            [[_to_float(obs[i], path, lineno), _to_float(obs[i + 1], path, lineno)]
             for i in range(0, len(obs), 3)]
        ).reshape(-1, 2)
        p3d = np.array(
            [_to_int(obs[i + 2], path, lineno) for i in range(0, len(obs), 3)], dtype=np.int64
        )
        if image_id in images:
            raise ParseError(f"{path}: duplicate image id {image_id} at line {hdr_lineno}")
        images[image_id] = ColmapImage(
            image_id, np.array([qw, qx, qy, qz]), tvec, camera_id, name, xys, p3d
        )
    if pending is not None:
        raise ParseError(f"{path}: image record at line {pending[0]} is missing its "
                         f"observations line")
    return images


def _parse_points3d(path) -> dict:
    points = {}
    for lineno, line in _data_lines(path):
        fields = line.split()
        if len(fields) < 8 or (len(fields) - 8) % 2 != 0:
            raise ParseError(
                f"{path}: point record needs 8 fields plus (image_id, point2d_idx) pairs "
                f"at line {lineno}"
            )
        point_id = _to_int(fields[0], path, lineno)
        xyz = np.array([_to_float(f, path, lineno) for f in fields[1:4]])
        rgb = np.array([_to_int(f, path, lineno) for f in fields[4:7]], dtype=np.int64)
        if rgb.min() < 0 or rgb.max() > 255:
            raise ParseError(f"{path}: color outside [0, 255] at line {lineno}")
        error = _to_float(fields[7], path, lineno)
        image_ids = np.array(
            [_to_int(f, path, lineno) for f in fields[8::2]], dtype=np.int64
        )
        point2d_idxs = np.array(
            [_to_int(f, path, lineno) for f in fields[9::2]], dtype=np.int64
        )
        if point_id in points:
            raise ParseError(f"{path}: duplicate point id {point_id} at line {lineno}")
        points[point_id] = ColmapPoint3D(
            point_id, xyz, rgb.astype(np.uint8), error, image_ids, point2d_idxs
        )
    return points


def parse_colmap_text(model_dir) -> ColmapSparseModel:
    """Parse a COLMAP text model directory and validate cross-references."""
    paths = {name: os.path.join(model_dir, name + ".txt") for name in ("cameras", "images", "points3D")}
    for name, path in paths.items():
        if not os.path.isfile(path):
            raise ParseError(f"{path}: missing {name}.txt in model directory")
    cameras = _parse_cameras(paths["cameras"])
    images = _parse_images(paths["images"])
    points3d = _parse_points3d(paths["points3D"])
    for image in images.values():
        if image.camera_id not in cameras:
            raise ParseError(
                f"{paths['images']}: image {image.image_id} references missing camera "
                f"{image.camera_id}"
            )
    for point in points3d.values():
        for image_id in point.image_ids:
            if int(image_id) not in images:
                raise ParseError(
                    f"{paths['points3D']}: point {point.point_id} references missing image "
                    f"{image_id}"
                )
        if point.point2d_idxs.size and point.point2d_idxs.min() < 0:
            raise ParseError(
                f"{paths['points3D']}: point {point.point_id} has a negative point2d index"
            )
    return ColmapSparseModel(cameras, images, points3d)


def write_colmap_text(model: ColmapSparseModel, model_dir) -> None:
    """Write a model in COLMAP text format; re-parsing restores exact values."""
    os.makedirs(model_dir, exist_ok=True)

    def fmt(v: float) -> str:
        return repr(float(v))

    with open(os.path.join(model_dir, "cameras.txt"), "w", encoding="utf-8") as fh:
        fh.write("# Camera list with one line of data per camera:\n")
        fh.write("#   CAMERA_ID, MODEL, WIDTH, HEIGHT, PARAMS[]\n")
        for cam in sorted(model.cameras.values(), key=lambda c: c.camera_id):
            params = " ".join(fmt(p) for p in cam.params)
            fh.write(f"{cam.camera_id} {cam.model} {cam.width} {cam.height} {params}\n")

    with open(os.path.join(model_dir, "images.txt"), "w", encoding="utf-8") as fh:
        fh.write("# Image list with two lines of data per image:\n")
        fh.write("#   IMAGE_ID, QW, QX, QY, QZ, TX, TY, TZ, CAMERA_ID, NAME\n")
        fh.write("#   POINTS2D[] as (X, Y, POINT3D_ID)\n")
        for img in sorted(model.images.values(), key=lambda i: i.image_id):
            q = " ".join(fmt(v) for v in img.qvec)
            t = " ".join(fmt(v) for v in img.tvec)
            fh.write(f"{img.image_id} {q} {t} {img.camera_id} {img.name}\n")
            obs = " ".join(
                f"{fmt(xy[0])} {fmt(xy[1])} {int(pid)}"
                for xy, pid in zip(img.xys, img.point3d_ids)
            )
            fh.write(obs + "\n")

    with open(os.path.join(model_dir, "points3D.txt"), "w", encoding="utf-8") as fh:
        fh.write("# 3D point list with one line of data per point:\n")
        fh.write("#   POINT3D_ID, X, Y, Z, R, G, B, ERROR, TRACK[] as (IMAGE_ID, POINT2D_IDX)\n")
        for pt in sorted(model.points3d.values(), key=lambda p: p.point_id):
            xyz = " ".join(fmt(v) for v in pt.xyz)
            rgb = " ".join(str(int(v)) for v in pt.rgb)
            track = " ".join(
                f"{int(i)} {int(j)}" for i, j in zip(pt.image_ids, pt.point2d_idxs)
            )
            fh.write(f"{pt.point_id} {xyz} {rgb} {fmt(pt.error)} {track}\n".rstrip() + "\n")
