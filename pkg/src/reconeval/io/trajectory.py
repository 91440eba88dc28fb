"""Readers and writers for timestamped trajectory files.

The on-disk grammar is one pose per line, eight whitespace-separated fields:

    t tx ty tz qx qy qz qw

with '#'-prefixed comment lines and blank lines ignored. The quaternion
field order is configurable because published pose files disagree on it;
the default is scalar-last (qx qy qz qw), the dominant convention for
"xyz q" style files.
"""

from __future__ import annotations

import numpy as np

from ..errors import ParseError
from ..geometry import Trajectory

_QUAT_ORDERS = ("xyzw", "wxyz")


def _parse_pose_file(path, quaternion_order: str) -> Trajectory:
    if quaternion_order not in _QUAT_ORDERS:
        raise ValueError(f"quaternion_order must be one of {_QUAT_ORDERS}")
    times: list[float] = []
    positions: list[list[float]] = []
    quats: list[list[float]] = []
    prev_t = None
    with open(path, "r", encoding="utf-8", errors="replace") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split()
            if len(fields) != 8:
                raise ParseError(f"{path}: expected 8 fields at line {lineno}, got {len(fields)}")
            try:
                values = [float(f) for f in fields]
            except ValueError:
                raise ParseError(f"{path}: non-numeric field at line {lineno}") from None
            if not all(np.isfinite(values)):
                raise ParseError(f"{path}: non-finite value at line {lineno}")
            t = values[0]
            if prev_t is not None and t <= prev_t:
                raise ParseError(f"{path}: non-increasing timestamp at line {lineno}")
            prev_t = t
            if quaternion_order == "xyzw":
                qx, qy, qz, qw = values[4:8]
            else:
                qw, qx, qy, qz = values[4:8]
            norm = float(np.sqrt(qw * qw + qx * qx + qy * qy + qz * qz))
            if not 0.99 <= norm <= 1.01:
                raise ParseError(
                    f"{path}: quaternion norm {norm:.6g} outside [0.99, 1.01] at line {lineno}"
                )
            times.append(t)
            positions.append(values[1:4])
            quats.append([qw / norm, qx / norm, qy / norm, qz / norm])
    if not times:
        raise ParseError(f"{path}: no poses found")
    return Trajectory(np.array(times), np.array(positions), np.array(quats))


def parse_trajectory(path, quaternion_order: str = "xyzw") -> Trajectory:
    """Parse a reconstructed-trajectory file into a :class:`Trajectory`."""
    return _parse_pose_file(path, quaternion_order)


def parse_groundtruth_tf(path, quaternion_order: str = "xyzw") -> Trajectory:
    """Parse a ground-truth tracking file.

    Today the grammar is identical to :func:`parse_trajectory`; this entry
    point exists so tracker-specific fields can be absorbed later without
    breaking callers.
    """
    return _parse_pose_file(path, quaternion_order)


def write_trajectory(trajectory: Trajectory, path, quaternion_order: str = "xyzw") -> None:
    """Write a trajectory in the same 8-field grammar the parsers accept."""
    if quaternion_order not in _QUAT_ORDERS:
        raise ValueError(f"quaternion_order must be one of {_QUAT_ORDERS}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# t tx ty tz " + (" ".join("q" + c for c in quaternion_order)) + "\n")
        for t, p, q in zip(trajectory.times, trajectory.positions, trajectory.quaternions):
            qw, qx, qy, qz = q
            quad = (qx, qy, qz, qw) if quaternion_order == "xyzw" else (qw, qx, qy, qz)
            fields = [t, p[0], p[1], p[2], *quad]
            fh.write(" ".join(f"{v:.17g}" for v in fields) + "\n")
