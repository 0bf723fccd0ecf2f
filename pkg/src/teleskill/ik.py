"""Forward-dynamics inverse kinematics.

The solver never inverts the kinematics directly. It applies the Cartesian
pose error as a virtual wrench at the end-effector of a virtual arm, maps it
to joint torques through the Jacobian transpose, and integrates the virtual
arm's response until it settles on the target. Singular configurations need
no special handling; the virtual dynamics simply coast through them.

`track` is the streaming interface used by the control loop (a fixed cycle
budget toward a continuously moving target). `solve` handles one-shot far
targets by feeding the same tracker a smoothly ramped interim target first;
a raw far jump would send the Jacobian-transpose flow through poor branches
of the configuration space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from . import _fastpath
from .errors import DivergenceError
from .geometry import (
    Pose,
    quat_align,
    quat_conjugate,
    quat_multiply,
    quat_to_axis_angle,
)
from .kinematics import ChainFrames, ChainModel, JointState


@dataclass
class IkConfig:
    """Gains and integration settings of the virtual arm.

    `damping` is the per-cycle velocity retention factor (0.9 keeps 90%,
    i.e. 10% joint damping each simulation cycle). Rotational gains sit
    well below translational ones: the rotational modes of the virtual arm
    are the stiffest, and they bound the stable gain level for everything.
    """

    gains: np.ndarray = field(default_factory=lambda: np.array([240.0] * 3 + [60.0] * 3))
    dt: float = 0.01
    damping: float = 0.9
    max_iterations: int = 2000
    tol_translation: float = 1e-4
    tol_rotation: float = 1e-3
    ramp_linear_speed: float = 0.4
    ramp_angular_speed: float = 1.6

    def __post_init__(self):
        self.gains = np.asarray(self.gains, dtype=float)
        if np.any(self.gains <= 0.0):
            raise ValueError("IK gains must be positive")
        if not 0.0 < self.damping < 1.0:
            raise ValueError("damping factor must be in (0, 1)")
        if self.dt <= 0.0:
            raise ValueError("simulated step must be positive")


@dataclass(frozen=True)
class IkResult:
    positions: np.ndarray
    iterations: int
    translation_error: float
    rotation_error: float
    converged: bool


def pose_error(target: Pose, current: Pose) -> np.ndarray:
    """6-vector [dx; dr]: translation difference and rotation vector.

    The rotation part is the axis-angle vector of the relative rotation
    target ⊗ current⁻¹, with the angle canonicalized to [0, pi].
    """
    dx = target.position - current.position
    dq = quat_multiply(target.quaternion, quat_conjugate(current.quaternion))
    return np.concatenate([dx, quat_to_axis_angle(dq).as_vector()])


def _minjerk(u: float) -> float:
    return u * u * u * (10.0 + u * (-15.0 + 6.0 * u))


def _slerp(qa: np.ndarray, qb: np.ndarray, u: float) -> np.ndarray:
    qb = quat_align(qb, qa)
    dot = float(np.clip(np.dot(qa, qb), -1.0, 1.0))
    if dot > 1.0 - 1e-12:
        q = qa + u * (qb - qa)
        return q / np.linalg.norm(q)
    angle = math.acos(dot)
    return (math.sin((1.0 - u) * angle) * qa + math.sin(u * angle) * qb) / math.sin(angle)


class FdIkSolver:
    """Closed-loop virtual-arm IK for one robot.

    Holds no joint state itself; `track` carries velocity state through the
    JointState it is given, so one solver instance serves one robot but the
    calls stay explicit about state.
    """

    def __init__(self, chain: ChainModel, config: IkConfig | None = None):
        self.chain = chain
        self.config = config or IkConfig()
        comp = chain._compiled  # type: ignore[attr-defined]
        self._arrays = (
            comp.offset_pos,
            comp.offset_rot,
            comp.axes,
            comp.mass_pos,
            comp.masses,
            comp.tool_pos,
            comp.tool_rot,
        )

    # -- end-effector pose and one dynamics cycle, fast or reference path --

    def _ee(self, theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        if _fastpath.HAVE_NUMBA:
            a = self._arrays
            return _fastpath.ee_pose_arrays(a[0], a[1], a[2], a[3], a[5], a[6], theta)
        pose = ChainFrames(self.chain, theta).ee_pose()
        return pose.position, pose.quaternion

    def _cycle(
        self,
        theta: np.ndarray,
        velocity: np.ndarray,
        goal_pos: np.ndarray,
        goal_quat: np.ndarray,
        iteration: int,
    ) -> tuple[np.ndarray, np.ndarray]:
        cfg = self.config
        if _fastpath.HAVE_NUMBA:
            theta, velocity = _fastpath.fd_step(
                *self._arrays, theta, velocity, goal_pos, goal_quat,
                cfg.gains, _inertia_floor(), cfg.dt, cfg.damping,
            )
        else:
            frames = ChainFrames(self.chain, theta)
            err = pose_error(Pose(goal_pos, goal_quat), frames.ee_pose())
            torque = frames.jacobian().T @ (cfg.gains * err)
            accel = cho_solve(cho_factor(frames.inertia(), lower=True), torque)
            theta = theta + velocity * cfg.dt
            velocity = (velocity + accel * cfg.dt) * cfg.damping
        if not np.all(np.isfinite(theta)):
            raise DivergenceError("IK integration produced non-finite joint values", iteration)
        return theta, velocity

    def solve(self, target: Pose, seed: np.ndarray) -> IkResult:
        """Iterate from rest at `seed` until the tolerances or the budget hit.

        The interim goal ramps from the seed's pose to the target along a
        straight line / geodesic with min-jerk timing, then holds the target
        while the virtual arm settles.
        """
        cfg = self.config
        theta = np.asarray(seed, dtype=float).copy()
        velocity = np.zeros_like(theta)
        target_pos = target.position
        target_quat = target.quaternion
        start_pos, start_quat = self._ee(theta)
        err0 = _error(target_pos, target_quat, start_pos, start_quat)
        n_ramp = int(
            math.ceil(
                max(
                    float(np.linalg.norm(err0[:3])) / (cfg.ramp_linear_speed * cfg.dt),
                    float(np.linalg.norm(err0[3:])) / (cfg.ramp_angular_speed * cfg.dt),
                )
            )
        )
        t_err = r_err = math.inf
        for iteration in range(cfg.max_iterations + 1):
            pos, quat = self._ee(theta)
            err = _error(target_pos, target_quat, pos, quat)
            t_err = float(np.linalg.norm(err[:3]))
            r_err = float(np.linalg.norm(err[3:]))
            if t_err < cfg.tol_translation and r_err < cfg.tol_rotation:
                return IkResult(theta, iteration, t_err, r_err, True)
            if iteration == cfg.max_iterations:
                break
            if iteration < n_ramp:
                u = _minjerk((iteration + 1) / n_ramp)
                goal_pos = start_pos + u * (target_pos - start_pos)
                goal_quat = _slerp(start_quat, target_quat, u)
            else:
                goal_pos, goal_quat = target_pos, target_quat
            theta, velocity = self._cycle(theta, velocity, goal_pos, goal_quat, iteration)
        return IkResult(theta, cfg.max_iterations, t_err, r_err, False)

    def track(self, target: Pose, state: JointState, budget: int) -> JointState:
        """Run exactly `budget` cycles toward `target`, carrying velocity state.

        Streaming variant for fixed-rate control loops; the caller owns the
        returned JointState and feeds it back on the next cycle.
        """
        theta = state.positions.copy()
        velocity = state.velocities.copy()
        for iteration in range(budget):
            theta, velocity = self._cycle(theta, velocity, target.position, target.quaternion, iteration)
        return JointState(theta, velocity)

    def current_error(self, target: Pose, theta: np.ndarray) -> tuple[float, float]:
        """(translation, rotation) error magnitudes of FK(theta) vs target."""
        pos, quat = self._ee(theta)
        err = _error(target.position, target.quaternion, pos, quat)
        return float(np.linalg.norm(err[:3])), float(np.linalg.norm(err[3:]))


def _error(goal_pos, goal_quat, pos, quat) -> np.ndarray:
    if _fastpath.HAVE_NUMBA:
        return _fastpath._pose_error(goal_pos, goal_quat, pos, quat)
    return pose_error(Pose(goal_pos, goal_quat), Pose(pos, quat))


def _inertia_floor() -> float:
    from .kinematics import INERTIA_FLOOR

    return INERTIA_FLOOR
