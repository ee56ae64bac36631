"""Pose and grid geometry for cross-view localization in a flat local frame.

Axes are east-north-up: x east, y north, z up, all in meters. Headings follow
the compass convention (0 = north, clockwise positive) and every public angle
is in degrees. Orientation matrices compose heading, tilt, roll in that order
(z-y-x intrinsic). Tilt is measured from nadir, so a camera with zero tilt
looks straight down and ``ground_intersection`` reduces to the camera's own
(x, y).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "CELL_GRID_HALF_EXTENT",
    "CELL_SIZE",
    "CELLS_PER_SIDE",
    "Pose6D",
    "cell_center",
    "cell_index",
    "compose_increment",
    "euler_to_rotmat",
    "ground_intersection",
    "is_rotation_matrix",
    "rotmat_to_euler",
    "wrap_angle",
    "wrap_angles",
]

# Ground cell grid: 8 x 8 cells of 50 m covering [-200, 200]^2 around the
# local origin, ids row-major from the (-200, -200) corner.
CELL_GRID_HALF_EXTENT = 200.0
CELL_SIZE = 50.0
CELLS_PER_SIDE = 8

# Below this value of hypot(R00, R10) the tilt is within ~1e-9 deg of +/-90
# and heading/roll are no longer separable.
_GIMBAL_EPS = 1e-10


def _require_finite(**values: float) -> None:
    for name, value in values.items():
        if not math.isfinite(value):
            raise ValueError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class Pose6D:
    """Camera pose: position in meters plus heading/tilt/roll in degrees."""

    x: float
    y: float
    z: float
    psi: float
    theta: float
    phi: float = 0.0

    def __post_init__(self) -> None:
        for name in ("x", "y", "z", "psi", "theta", "phi"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"Pose6D.{name} must be finite, got {value!r}")

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    @property
    def angles(self) -> tuple[float, float, float]:
        return (self.psi, self.theta, self.phi)


def wrap_angle(angle: float) -> float:
    """Wrap an angle in degrees to (-180, 180]; -180 maps to +180."""
    _require_finite(angle=angle)
    wrapped = float(angle) % 360.0
    if wrapped > 180.0:
        wrapped -= 360.0
    return wrapped


def wrap_angles(angles: np.ndarray) -> np.ndarray:
    """Vectorized :func:`wrap_angle` for arrays of degrees."""
    arr = np.asarray(angles, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("angles must be finite")
    wrapped = np.mod(arr, 360.0)
    return np.where(wrapped > 180.0, wrapped - 360.0, wrapped)


def euler_to_rotmat(psi: float, theta: float, phi: float) -> np.ndarray:
    """Build the rotation matrix R = Rz(psi) @ Ry(theta) @ Rx(phi).

    Angles are degrees. The result is orthonormal to machine precision.
    """
    _require_finite(psi=psi, theta=theta, phi=phi)
    cz = math.cos(math.radians(psi))
    sz = math.sin(math.radians(psi))
    cy = math.cos(math.radians(theta))
    sy = math.sin(math.radians(theta))
    cx = math.cos(math.radians(phi))
    sx = math.sin(math.radians(phi))
    return np.array(
        [
            [cz * cy, cz * sy * sx - sz * cx, cz * sy * cx + sz * sx],
            [sz * cy, sz * sy * sx + cz * cx, sz * sy * cx - cz * sx],
            [-sy, cy * sx, cy * cx],
        ]
    )


def is_rotation_matrix(R: np.ndarray, tol: float = 1e-6) -> bool:
    """True when R is 3x3, orthonormal within tol, and right-handed."""
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3) or not np.all(np.isfinite(R)):
        return False
    if np.max(np.abs(R.T @ R - np.eye(3))) > tol:
        return False
    return bool(np.linalg.det(R) > 0.0)


def rotmat_to_euler(R: np.ndarray) -> tuple[float, float, float]:
    """Extract (psi, theta, phi) in degrees from a z-y-x rotation matrix.

    psi and phi land in (-180, 180], theta in [-90, 90]. Within ~1e-9 deg of
    theta = +/-90 the heading and roll axes align; the canonical choice here
    is phi = 0 with the whole z-rotation folded into psi.
    """
    R = np.asarray(R, dtype=float)
    if not is_rotation_matrix(R):
        raise ValueError("R is not a rotation matrix (orthonormal within 1e-6)")
    sy = math.hypot(R[0, 0], R[1, 0])
    if sy < _GIMBAL_EPS:
        theta = math.copysign(90.0, -R[2, 0])
        psi = math.degrees(math.atan2(-R[0, 1], R[1, 1]))
        phi = 0.0
    else:
        theta = math.degrees(math.atan2(-R[2, 0], sy))
        psi = math.degrees(math.atan2(R[1, 0], R[0, 0]))
        phi = math.degrees(math.atan2(R[2, 1], R[2, 2]))
    return (wrap_angle(psi), theta, wrap_angle(phi))


def ground_intersection(pose: Pose6D) -> tuple[float, float]:
    """Ground point the camera's optical axis hits, on the z = 0 plane.

    The axis leaves the camera tilted ``theta`` from nadir toward compass
    heading ``psi``, so the hit point is offset z*tan(theta) along
    (sin(psi), cos(psi)). Requires z > 0 and |theta| < 90 (at 90 degrees the
    axis is horizontal and never reaches the ground). Negative tilt mirrors
    the offset backward.
    """
    if pose.z <= 0.0:
        raise ValueError(f"camera must be above the ground plane, got z={pose.z}")
    if abs(pose.theta) >= 90.0:
        raise ValueError(
            f"optical axis does not intersect the ground for tilt {pose.theta} deg"
        )
    reach = pose.z * math.tan(math.radians(pose.theta))
    x = pose.x + reach * math.sin(math.radians(pose.psi))
    y = pose.y + reach * math.cos(math.radians(pose.psi))
    return (x, y)


def cell_index(x_rel: float, y_rel: float) -> int:
    """Map a ground offset (meters, relative to the query center) to a cell id.

    Cells tile [-200, 200]^2 in 50 m squares, id = row * 8 + col counted from
    the (-200, -200) corner; points on the far edges clamp into the last
    row/column. Offsets outside the grid raise ValueError.
    """
    _require_finite(x_rel=x_rel, y_rel=y_rel)
    half = CELL_GRID_HALF_EXTENT
    if not (-half <= x_rel <= half and -half <= y_rel <= half):
        raise ValueError(f"offset ({x_rel}, {y_rel}) outside the {half} m grid")
    col = min(int((x_rel + half) // CELL_SIZE), CELLS_PER_SIDE - 1)
    row = min(int((y_rel + half) // CELL_SIZE), CELLS_PER_SIDE - 1)
    return row * CELLS_PER_SIDE + col


def cell_center(cell: int) -> tuple[float, float]:
    """Center offset (meters) of a grid cell id, inverse of :func:`cell_index`."""
    if not isinstance(cell, (int, np.integer)):
        raise ValueError(f"cell id must be an integer, got {cell!r}")
    if not 0 <= cell < CELLS_PER_SIDE * CELLS_PER_SIDE:
        raise ValueError(f"cell id {cell} outside 0..{CELLS_PER_SIDE**2 - 1}")
    row, col = divmod(int(cell), CELLS_PER_SIDE)
    x = -CELL_GRID_HALF_EXTENT + CELL_SIZE * col + CELL_SIZE / 2.0
    y = -CELL_GRID_HALF_EXTENT + CELL_SIZE * row + CELL_SIZE / 2.0
    return (x, y)


def compose_increment(pose: Pose6D, dp: np.ndarray, dR: np.ndarray) -> Pose6D:
    """Apply a relative motion to a pose: p + dp and R_new = dR @ R.

    dp is a world-frame 3-vector in meters; dR must be a rotation matrix
    (caller's contract, validated within 1e-6). Angles in the result are
    wrapped to (-180, 180].
    """
    dp = np.asarray(dp, dtype=float)
    if dp.shape != (3,):
        raise ValueError(f"dp must be a 3-vector, got shape {dp.shape}")
    if not np.all(np.isfinite(dp)):
        raise ValueError("dp must be finite")
    dR = np.asarray(dR, dtype=float)
    if not is_rotation_matrix(dR):
        raise ValueError("dR is not a rotation matrix (orthonormal within 1e-6)")
    R = euler_to_rotmat(pose.psi, pose.theta, pose.phi)
    psi, theta, phi = rotmat_to_euler(dR @ R)
    return Pose6D(
        pose.x + float(dp[0]),
        pose.y + float(dp[1]),
        pose.z + float(dp[2]),
        psi,
        theta,
        phi,
    )
