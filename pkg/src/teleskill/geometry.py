"""Rigid-body transform algebra: quaternions, poses, axis-angle.

Conventions used throughout the package:

- Quaternions are stored as 4-vectors in (x, y, z, w) order, matching the
  state-vector layout used by the skill pipeline.
- Rotations follow the Hamilton product convention; composing poses a then b
  means "apply b in a's frame": T(a) @ T(b).
- Positions are meters, angles radians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateQuaternionError

QUAT_IDENTITY = np.array([0.0, 0.0, 0.0, 1.0])

# Any axis represents the zero rotation; fixing one keeps outputs deterministic.
DEFAULT_AXIS = np.array([0.0, 0.0, 1.0])

_NORM_EPS = 1e-12


def quat_normalize(q: np.ndarray) -> np.ndarray:
    """Return q scaled to unit norm, preserving direction."""
    q = np.asarray(q, dtype=float)
    norm = math.sqrt(float(q @ q))
    if norm <= _NORM_EPS:
        raise DegenerateQuaternionError(f"quaternion norm {norm:.3e} too small")
    return q / norm


def quat_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hamilton product a ⊗ b for (x, y, z, w) quaternions."""
    ax, ay, az, aw = a
    bx, by, bz, bw = b
    return np.array(
        [
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
            aw * bw - ax * bx - ay * by - az * bz,
        ]
    )


def quat_conjugate(q: np.ndarray) -> np.ndarray:
    x, y, z, w = q
    return np.array([-x, -y, -z, w])


def quat_rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotate vector v by unit quaternion q."""
    u = np.asarray(q[:3], dtype=float)
    w = float(q[3])
    t = 2.0 * np.cross(u, np.asarray(v, dtype=float))
    return v + w * t + np.cross(u, t)


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    """3x3 rotation matrix of a unit quaternion."""
    x, y, z, w = q
    xx, yy, zz = x * x, y * y, z * z
    xy, xz, yz = x * y, x * z, y * z
    wx, wy, wz = w * x, w * y, w * z
    return np.array(
        [
            [1.0 - 2.0 * (yy + zz), 2.0 * (xy - wz), 2.0 * (xz + wy)],
            [2.0 * (xy + wz), 1.0 - 2.0 * (xx + zz), 2.0 * (yz - wx)],
            [2.0 * (xz + wy), 2.0 * (yz + wx), 1.0 - 2.0 * (xx + yy)],
        ]
    )


def quat_from_matrix(rot: np.ndarray) -> np.ndarray:
    """Unit quaternion of a rotation matrix, canonicalized to w >= 0."""
    m = np.asarray(rot, dtype=float)
    trace = m[0, 0] + m[1, 1] + m[2, 2]
    if trace > 0.0:
        s = math.sqrt(trace + 1.0) * 2.0
        w = 0.25 * s
        x = (m[2, 1] - m[1, 2]) / s
        y = (m[0, 2] - m[2, 0]) / s
        z = (m[1, 0] - m[0, 1]) / s
    elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
        s = math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2.0
        w = (m[2, 1] - m[1, 2]) / s
        x = 0.25 * s
        y = (m[0, 1] + m[1, 0]) / s
        z = (m[0, 2] + m[2, 0]) / s
    elif m[1, 1] > m[2, 2]:
        s = math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2.0
        w = (m[0, 2] - m[2, 0]) / s
        x = (m[0, 1] + m[1, 0]) / s
        y = 0.25 * s
        z = (m[1, 2] + m[2, 1]) / s
    else:
        s = math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2.0
        w = (m[1, 0] - m[0, 1]) / s
        x = (m[0, 2] + m[2, 0]) / s
        y = (m[1, 2] + m[2, 1]) / s
        z = 0.25 * s
    q = quat_normalize(np.array([x, y, z, w]))
    return -q if q[3] < 0.0 else q


def quat_from_axis_angle(axis: np.ndarray, angle: float) -> np.ndarray:
    """Unit quaternion rotating by `angle` about (unit) `axis`."""
    axis = np.asarray(axis, dtype=float)
    half = 0.5 * angle
    return np.array([*(math.sin(half) * axis), math.cos(half)])


def quat_align(q: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Pick the sign of q on the same hemisphere as `reference`."""
    return -q if float(np.dot(q, reference)) < 0.0 else np.asarray(q, dtype=float)


@dataclass(frozen=True)
class AxisAngle:
    """Rotation by `angle` in [0, pi] about a unit `axis`."""

    angle: float
    axis: np.ndarray

    def as_vector(self) -> np.ndarray:
        """Rotation vector angle * axis."""
        return self.angle * self.axis


def quat_to_axis_angle(q: np.ndarray) -> AxisAngle:
    """Axis-angle of a unit quaternion, with angle canonicalized to [0, pi].

    q and -q map to the same result. The zero rotation reports the
    package-wide default axis.
    """
    q = np.asarray(q, dtype=float)
    if q[3] < 0.0:
        q = -q
    vec_norm = math.sqrt(float(q[:3] @ q[:3]))
    angle = 2.0 * math.atan2(vec_norm, float(q[3]))
    if vec_norm <= _NORM_EPS:
        return AxisAngle(angle=0.0, axis=DEFAULT_AXIS.copy())
    return AxisAngle(angle=angle, axis=q[:3] / vec_norm)


def quat_derivative(omega: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Quaternion rate 0.5 * omega ⊗ q with omega as a pure quaternion.

    Returns a raw (not normalized) 4-vector in (x, y, z, w) order.
    """
    omega = np.asarray(omega, dtype=float)
    return 0.5 * quat_multiply(np.array([*omega, 0.0]), q)


@dataclass(frozen=True)
class Pose:
    """Rigid transform: translation plus unit quaternion (x, y, z, w)."""

    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    quaternion: np.ndarray = field(default_factory=lambda: QUAT_IDENTITY.copy())

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))
        object.__setattr__(self, "quaternion", np.asarray(self.quaternion, dtype=float))

    @staticmethod
    def identity() -> "Pose":
        return Pose()

    @staticmethod
    def from_axis_angle(axis: np.ndarray, angle: float, position=(0.0, 0.0, 0.0)) -> "Pose":
        return Pose(np.asarray(position, dtype=float), quat_from_axis_angle(axis, angle))

    def compose(self, other: "Pose") -> "Pose":
        """This pose followed by `other` in this pose's frame: T(self) @ T(other)."""
        return Pose(
            self.position + quat_rotate(self.quaternion, other.position),
            quat_normalize(quat_multiply(self.quaternion, other.quaternion)),
        )

    def inverse(self) -> "Pose":
        q_inv = quat_conjugate(self.quaternion)
        return Pose(-quat_rotate(q_inv, self.position), q_inv)

    def transform_point(self, point: np.ndarray) -> np.ndarray:
        return self.position + quat_rotate(self.quaternion, np.asarray(point, dtype=float))

    def matrix(self) -> np.ndarray:
        """4x4 homogeneous matrix."""
        mat = np.eye(4)
        mat[:3, :3] = quat_to_matrix(self.quaternion)
        mat[:3, 3] = self.position
        return mat

    @staticmethod
    def from_matrix(mat: np.ndarray) -> "Pose":
        mat = np.asarray(mat, dtype=float)
        return Pose(mat[:3, 3].copy(), quat_from_matrix(mat[:3, :3]))

    def almost_equal(self, other: "Pose", tol: float = 1e-9) -> bool:
        if not np.allclose(self.position, other.position, atol=tol):
            return False
        # q and -q denote the same rotation
        return bool(
            np.allclose(self.quaternion, other.quaternion, atol=tol)
            or np.allclose(self.quaternion, -other.quaternion, atol=tol)
        )
