"""Serial-chain model of a 6-revolute-joint arm.

Provides forward kinematics, the geometric Jacobian, and a point-mass
composite joint-space inertia used as the virtual model of the IK solver.
The chain walk is shared through ChainFrames so a solver iteration touches
the chain exactly once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Pose, quat_to_matrix

N_JOINTS = 6

# Uniform virtual inertia added to the point-mass composite. Deliberately
# larger than a mere regularizer: it stands in for the dynamics shaping of
# the virtual model, keeping the solver's joint-space modes clustered so all
# of them converge under the same damping. Correctness of the IK result does
# not depend on it.
INERTIA_FLOOR = 0.1

_LOWER_MASK = np.tril(np.ones((N_JOINTS, N_JOINTS)))[:, :, None]


@dataclass(frozen=True)
class Joint:
    """One revolute joint: fixed parent offset, rotation axis, virtual mass.

    The axis is a unit vector in the joint frame. The virtual point mass of
    the link driven by this joint sits at `mass_position` in the rotated
    joint frame.
    """

    offset: Pose
    axis: np.ndarray
    mass: float = 1.0
    mass_position: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=float)
        norm = float(np.linalg.norm(axis))
        if not math.isclose(norm, 1.0, rel_tol=0.0, abs_tol=1e-9):
            raise ValueError(f"joint axis must be unit-norm, got |axis|={norm}")
        if self.mass <= 0.0:
            raise ValueError("virtual joint mass must be positive")
        object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "mass_position", np.asarray(self.mass_position, dtype=float))


@dataclass(frozen=True)
class ChainModel:
    """Six revolute joints plus a fixed tool offset to the end-effector frame."""

    joints: tuple[Joint, ...]
    tool: Pose

    def __post_init__(self):
        if len(self.joints) != N_JOINTS:
            raise ValueError(f"chain must have exactly {N_JOINTS} joints, got {len(self.joints)}")
        object.__setattr__(self, "_compiled", _compile(self))

    def max_reach(self) -> float:
        """Upper bound on end-effector distance from base."""
        reach = sum(float(np.linalg.norm(j.offset.position)) for j in self.joints)
        return reach + float(np.linalg.norm(self.tool.position))


@dataclass
class JointState:
    """Joint positions [rad] and velocities [rad/s]."""

    positions: np.ndarray
    velocities: np.ndarray

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        self.velocities = np.asarray(self.velocities, dtype=float)

    @staticmethod
    def at_rest(positions: np.ndarray) -> "JointState":
        return JointState(np.asarray(positions, dtype=float).copy(), np.zeros(N_JOINTS))

    def copy(self) -> "JointState":
        return JointState(self.positions.copy(), self.velocities.copy())


class _Compiled:
    """Chain constants unpacked into arrays for the per-iteration walk."""

    __slots__ = ("offset_pos", "offset_rot", "offset_is_pure", "axes", "mass_pos", "masses", "tool_pos", "tool_rot")

    def __init__(self):
        self.offset_pos = np.empty((N_JOINTS, 3))
        self.offset_rot = np.empty((N_JOINTS, 3, 3))
        self.offset_is_pure = np.empty(N_JOINTS, dtype=bool)
        self.axes = np.empty((N_JOINTS, 3))
        self.mass_pos = np.empty((N_JOINTS, 3))
        self.masses = np.empty(N_JOINTS)
        self.tool_pos = np.empty(3)
        self.tool_rot = np.empty((3, 3))


def _compile(chain: ChainModel) -> _Compiled:
    comp = _Compiled()
    for i, joint in enumerate(chain.joints):
        comp.offset_pos[i] = joint.offset.position
        comp.offset_rot[i] = quat_to_matrix(joint.offset.quaternion)
        comp.offset_is_pure[i] = bool(np.allclose(comp.offset_rot[i], np.eye(3), atol=1e-15))
        comp.axes[i] = joint.axis
        comp.mass_pos[i] = joint.mass_position
        comp.masses[i] = joint.mass
    comp.tool_pos[:] = chain.tool.position
    comp.tool_rot[:] = quat_to_matrix(chain.tool.quaternion)
    return comp


def _axis_rotation(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rodrigues rotation about a unit axis."""
    c, s = math.cos(angle), math.sin(angle)
    x, y, z = axis
    cc = 1.0 - c
    return np.array(
        [
            [c + x * x * cc, x * y * cc - z * s, x * z * cc + y * s],
            [y * x * cc + z * s, c + y * y * cc, y * z * cc - x * s],
            [z * x * cc - y * s, z * y * cc + x * s, c + z * z * cc],
        ]
    )


class ChainFrames:
    """Base-frame quantities of all joint frames for one configuration."""

    __slots__ = ("origins", "axes", "mass_points", "masses", "ee_rotation", "ee_position")

    def __init__(self, chain: ChainModel, theta: np.ndarray):
        comp: _Compiled = chain._compiled  # type: ignore[attr-defined]
        theta = np.asarray(theta, dtype=float)
        rot = np.eye(3)
        pos = np.zeros(3)
        origins = np.empty((N_JOINTS, 3))
        axes = np.empty((N_JOINTS, 3))
        mass_points = np.empty((N_JOINTS, 3))
        for i in range(N_JOINTS):
            pos = pos + rot @ comp.offset_pos[i]
            if not comp.offset_is_pure[i]:
                rot = rot @ comp.offset_rot[i]
            origins[i] = pos
            axes[i] = rot @ comp.axes[i]
            rot = rot @ _axis_rotation(comp.axes[i], theta[i])
            mass_points[i] = pos + rot @ comp.mass_pos[i]
        self.origins = origins
        self.axes = axes
        self.mass_points = mass_points
        self.masses = comp.masses
        self.ee_position = pos + rot @ comp.tool_pos
        self.ee_rotation = rot @ comp.tool_rot

    def ee_pose(self) -> Pose:
        mat = np.eye(4)
        mat[:3, :3] = self.ee_rotation
        mat[:3, 3] = self.ee_position
        return Pose.from_matrix(mat)

    def jacobian(self) -> np.ndarray:
        """Columns are [axis_i x (p_ee - p_i); axis_i] in the base frame."""
        jac = np.empty((6, N_JOINTS))
        jac[:3, :] = np.cross(self.axes, self.ee_position - self.origins).T
        jac[3:, :] = self.axes.T
        return jac

    def inertia(self, floor: float = INERTIA_FLOOR) -> np.ndarray:
        """Point-mass composite joint-space inertia plus a diagonal floor."""
        lever = self.mass_points[:, None, :] - self.origins[None, :, :]
        columns = np.cross(self.axes[None, :, :], lever) * _LOWER_MASK
        inertia = np.einsum("kia,kja,k->ij", columns, columns, self.masses)
        inertia[np.diag_indices(N_JOINTS)] += floor
        return inertia


def forward_kinematics(chain: ChainModel, theta: np.ndarray) -> Pose:
    """Pose of the end-effector frame in the base frame."""
    return ChainFrames(chain, theta).ee_pose()


def geometric_jacobian(chain: ChainModel, theta: np.ndarray, frames: ChainFrames | None = None) -> np.ndarray:
    """6x6 geometric Jacobian: rows stack [linear; angular] velocity maps."""
    if frames is None:
        frames = ChainFrames(chain, theta)
    return frames.jacobian()


def joint_inertia(
    chain: ChainModel,
    theta: np.ndarray,
    frames: ChainFrames | None = None,
    floor: float = INERTIA_FLOOR,
) -> np.ndarray:
    """Joint-space inertia of the virtual point-mass model, plus a diagonal floor.

    Symmetric positive definite by construction: H = sum_k m_k Jv_k^T Jv_k
    with Jv_k the velocity map of mass point k, plus floor * I.
    """
    if frames is None:
        frames = ChainFrames(chain, theta)
    return frames.inertia(floor)


def default_arm() -> ChainModel:
    """Canonical 6R test arm: alternating z/y axes, 0.3 m links, unit masses.

    Deterministic stand-in for a light-weight assistive manipulator; all
    acceptance runs use this chain.
    """
    link = np.array([0.0, 0.0, 0.3])
    axes = [(0.0, 0.0, 1.0), (0.0, 1.0, 0.0)] * 3
    tool = Pose(position=np.array([0.0, 0.0, 0.1]))
    joints = [
        Joint(offset=Pose(position=link.copy()), axis=np.array(axis), mass=1.0, mass_position=link.copy())
        for axis in axes
    ]
    # Last link's mass sits at the tool tip so the wrist keeps usable inertia.
    joints[-1] = Joint(
        offset=Pose(position=link.copy()),
        axis=np.array(axes[-1]),
        mass=1.0,
        mass_position=tool.position.copy(),
    )
    return ChainModel(joints=tuple(joints), tool=tool)


def chain_to_dict(chain: ChainModel) -> dict:
    """Plain-data description of a chain (config-file schema)."""
    return {
        "joints": [
            {
                "offset": {
                    "position": [float(v) for v in j.offset.position],
                    "quaternion": [float(v) for v in j.offset.quaternion],
                },
                "axis": [float(v) for v in j.axis],
                "mass": float(j.mass),
                "mass_position": [float(v) for v in j.mass_position],
            }
            for j in chain.joints
        ],
        "tool": {
            "position": [float(v) for v in chain.tool.position],
            "quaternion": [float(v) for v in chain.tool.quaternion],
        },
    }


def chain_from_dict(data: dict) -> ChainModel:
    """Inverse of chain_to_dict; validates joint count, axes, and masses."""

    def pose_of(entry: dict) -> Pose:
        return Pose(
            np.asarray(entry.get("position", (0.0, 0.0, 0.0)), dtype=float),
            np.asarray(entry.get("quaternion", (0.0, 0.0, 0.0, 1.0)), dtype=float),
        )

    joints = tuple(
        Joint(
            offset=pose_of(j["offset"]),
            axis=np.asarray(j["axis"], dtype=float),
            mass=float(j.get("mass", 1.0)),
            mass_position=np.asarray(j.get("mass_position", (0.0, 0.0, 0.0)), dtype=float),
        )
        for j in data["joints"]
    )
    return ChainModel(joints=joints, tool=pose_of(data.get("tool", {})))
