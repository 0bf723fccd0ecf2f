"""Recording, representation, and goal-adapted regeneration of motion skills.

A skill is a recorded state trajectory expressed relative to the end-effector
frame at recording start (the skill frame), together with the per-sample
forcing terms that reproduce it under a fixed spring-damper transformation
system. Playback integrates the same system toward a goal that depends on
the skill type:

- local:  replay relative to wherever the arm currently is
- global: terminate at the absolute pose where the recording ended
- hybrid: local-orientation motion rescaled and rotated to end at the
  global end position

Duration changes never alter the integrated states; they only change the
timestamps assigned at playback.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import (
    DegenerateSkillError,
    DivergenceError,
    SkillFormatError,
    TooFewSamplesError,
)
from .geometry import (
    Pose,
    quat_align,
    quat_conjugate,
    quat_multiply,
    quat_rotate,
    quat_to_matrix,
)

STATE_DIM = 8
SKILL_FILE_VERSION = 1

# Minimum samples for the +/-3-neighbor smoothing differentiator.
MIN_RECORDING_SAMPLES = 7

_TRANSLATION_EPS = 1e-6


class SkillType(str, Enum):
    LOCAL = "local"
    GLOBAL = "global"
    HYBRID = "hybrid"


def state_from_pose(pose: Pose, gripper: float) -> np.ndarray:
    """Pack [x y z q_x q_y q_z q_w g]."""
    return np.concatenate([pose.position, pose.quaternion, [gripper]])


def pose_from_state(state: np.ndarray) -> Pose:
    return Pose(np.array(state[:3], dtype=float), np.array(state[3:7], dtype=float))


def state_matrix(state: np.ndarray) -> np.ndarray:
    """Homogeneous matrix of the pose part of a state vector."""
    mat = np.eye(4)
    mat[:3, :3] = quat_to_matrix(state[3:7])
    mat[:3, 3] = state[:3]
    return mat


def identity_state(gripper: float) -> np.ndarray:
    return np.array([0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, float(gripper)])


def record_sample(theta: np.ndarray, gripper: float, chain) -> np.ndarray:
    """One recorded state: end-effector pose from forward kinematics plus gripper."""
    from .kinematics import forward_kinematics

    return state_from_pose(forward_kinematics(chain, theta), gripper)


def to_skill_frame(states: np.ndarray) -> np.ndarray:
    """Re-express every state relative to the first state's pose.

    The gripper channel is copied through untouched. The first output state
    is exactly [0 0 0 0 0 0 1 g0].
    """
    states = np.asarray(states, dtype=float)
    if states.ndim != 2 or states.shape[1] != STATE_DIM or states.shape[0] == 0:
        raise ValueError("expected a non-empty (N+1, 8) state array")
    p0 = states[0, :3]
    q0_conj = quat_conjugate(states[0, 3:7])
    out = states.copy()
    for n in range(states.shape[0]):
        out[n, :3] = quat_rotate(q0_conj, states[n, :3] - p0)
        out[n, 3:7] = quat_multiply(q0_conj, states[n, 3:7])
    return out


def to_base_frame(
    states: np.ndarray,
    current_state: np.ndarray,
    pre_rotation: np.ndarray | None = None,
) -> np.ndarray:
    """Map skill-frame states into the base frame through the current pose.

    For hybrid skills a pure rotation is applied first. It rotates only the
    translation channel: hybrid playback keeps the momentary end-effector
    orientation at its start, so state orientations must not be rotated.
    """
    states = np.asarray(states, dtype=float)
    out = states.copy()
    if pre_rotation is not None:
        out[:, :3] = out[:, :3] @ np.asarray(pre_rotation, dtype=float).T
    p_star = np.asarray(current_state[:3], dtype=float)
    q_star = np.asarray(current_state[3:7], dtype=float)
    for n in range(out.shape[0]):
        out[n, :3] = p_star + quat_rotate(q_star, out[n, :3])
        out[n, 3:7] = quat_multiply(q_star, out[n, 3:7])
    return out


def differentiate(states: np.ndarray, dt: float) -> np.ndarray:
    """Smoothing five-step differentiator over +/-1, +/-2, +/-3 neighbors.

    Weights (5, 4, 1)/(32 dt); indices outside [0, N] clamp to the boundary
    samples. Exact on linear ramps in the interior.
    """
    if dt <= 0.0:
        raise ValueError("sample step must be positive")
    states = np.asarray(states, dtype=float)
    n = states.shape[0]
    idx = lambda k: states[np.clip(np.arange(n) + k, 0, n - 1)]
    return (
        5.0 * (idx(1) - idx(-1)) + 4.0 * (idx(2) - idx(-2)) + (idx(3) - idx(-3))
    ) / (32.0 * dt)


def extract_forcing(
    states: np.ndarray,
    velocities: np.ndarray,
    accelerations: np.ndarray,
    goal: np.ndarray,
    stiffness: np.ndarray,
    damping: np.ndarray,
) -> np.ndarray:
    """Per-sample forcing solving the transformation system for f:

    f_n = acc_n - D * (K * (goal - s_n) - vel_n)
    """
    states = np.asarray(states, dtype=float)
    velocities = np.asarray(velocities, dtype=float)
    accelerations = np.asarray(accelerations, dtype=float)
    if not (states.shape == velocities.shape == accelerations.shape):
        raise ValueError("states, velocities, accelerations must have equal shapes")
    stiffness = np.asarray(stiffness, dtype=float)
    damping = np.asarray(damping, dtype=float)
    if np.any(stiffness <= 0.0) or np.any(damping <= 0.0):
        raise ValueError("stiffness and damping diagonals must be positive")
    return accelerations - damping * (stiffness * (goal - states) - velocities)


@dataclass(frozen=True)
class SkillRecording:
    """The persisted essence of a recorded motion.

    States are in the skill frame; `final_base_state` keeps the recording's
    last state in the base frame so global goals can be reconstructed later.
    Stiffness and damping are stored per skill so default changes never
    corrupt old recordings.
    """

    name: str
    created_at: str
    dt: float
    stiffness: np.ndarray
    damping: np.ndarray
    final_base_state: np.ndarray
    states: np.ndarray
    forcing: np.ndarray
    version: int = SKILL_FILE_VERSION

    def __post_init__(self):
        for attr in ("stiffness", "damping", "final_base_state", "states", "forcing"):
            object.__setattr__(self, attr, np.asarray(getattr(self, attr), dtype=float))
        if self.dt <= 0.0:
            raise SkillFormatError("sample step must be positive")
        if self.states.shape != self.forcing.shape:
            raise SkillFormatError("state and forcing sequences must have equal length")
        if self.states.ndim != 2 or self.states.shape[1] != STATE_DIM:
            raise SkillFormatError("states must be (N+1, 8)")

    @property
    def n_intervals(self) -> int:
        return self.states.shape[0] - 1

    @property
    def goal_local(self) -> np.ndarray:
        """g_L: the recording's final state in the skill frame."""
        return self.states[-1].copy()

    @property
    def path_length(self) -> float:
        return float(np.sum(np.linalg.norm(np.diff(self.states[:, :3], axis=0), axis=1)))


def build_recording(
    base_states: np.ndarray,
    dt: float,
    stiffness: np.ndarray,
    damping: np.ndarray,
    name: str,
    created_at: str,
) -> SkillRecording:
    """Turn a recorded base-frame state sequence into a skill.

    Normalizes into the skill frame, differentiates twice with the smoothing
    differentiator, and extracts forcing terms against the recording's own
    end state (the local goal).
    """
    base_states = np.asarray(base_states, dtype=float)
    if base_states.shape[0] < MIN_RECORDING_SAMPLES:
        raise TooFewSamplesError(
            f"need at least {MIN_RECORDING_SAMPLES} samples, got {base_states.shape[0]}"
        )
    states = to_skill_frame(base_states)
    velocities = differentiate(states, dt)
    accelerations = differentiate(velocities, dt)
    stiffness = np.asarray(stiffness, dtype=float)
    damping = np.asarray(damping, dtype=float)
    forcing = extract_forcing(states, velocities, accelerations, states[-1], stiffness, damping)
    return SkillRecording(
        name=name,
        created_at=created_at,
        dt=dt,
        stiffness=stiffness,
        damping=damping,
        final_base_state=base_states[-1].copy(),
        states=states,
        forcing=forcing,
    )


def compute_goal(skill: SkillRecording, skill_type: SkillType, current_state: np.ndarray) -> np.ndarray:
    """Goal state (skill-relative) for one generalization type.

    local:  the recording's own end state, independent of the current pose.
    global: the recording's absolute end pose re-expressed in the current
            end-effector frame.
    hybrid: translation along the local goal direction, rescaled to the
            global goal distance; orientation and gripper from the local goal.
    """
    g_local = skill.goal_local
    if skill_type == SkillType.LOCAL:
        return g_local
    if skill_type == SkillType.GLOBAL:
        g_global = _global_goal(skill, current_state)
        g_global[3:7] = quat_align(g_global[3:7], g_local[3:7])
        return g_global
    if skill_type == SkillType.HYBRID:
        x_local = g_local[:3]
        norm_local = float(np.linalg.norm(x_local))
        if norm_local < _TRANSLATION_EPS:
            raise DegenerateSkillError(
                f"hybrid goal undefined: recorded displacement {norm_local:.2e} m"
            )
        g_global = _global_goal(skill, current_state)
        norm_global = float(np.linalg.norm(g_global[:3]))
        goal = g_local.copy()
        goal[:3] = (norm_global / norm_local) * x_local
        return goal
    raise ValueError(f"unknown skill type {skill_type!r}")


def _global_goal(skill: SkillRecording, current_state: np.ndarray) -> np.ndarray:
    """T(current)^-1 T(final recorded base state), gripper copied through."""
    p_star = np.asarray(current_state[:3], dtype=float)
    q_star_conj = quat_conjugate(current_state[3:7])
    final = skill.final_base_state
    goal = final.copy()
    goal[:3] = quat_rotate(q_star_conj, final[:3] - p_star)
    goal[3:7] = quat_multiply(q_star_conj, final[3:7])
    return goal


def translation_ratio(skill: SkillRecording, goal: np.ndarray) -> float:
    """Forcing rescale factor |x_goal| / |x_local|; 1 when degenerate."""
    norm_local = float(np.linalg.norm(skill.goal_local[:3]))
    if norm_local < 1e-9:
        return 1.0
    return float(np.linalg.norm(goal[:3])) / norm_local


def hybrid_rotation(g_local: np.ndarray, g_global: np.ndarray) -> np.ndarray:
    """Rotation aligning the local goal direction with the global one.

    Built from the translations x1, x2 of the inverted goal transforms: the
    swing from x1 to x2 about their common normal, conjugated back through
    the goal orientations. The returned 3x3 matrix R satisfies
    R @ unit(x_local) = unit(x_global).
    """
    x_local = np.asarray(g_local[:3], dtype=float)
    x_global = np.asarray(g_global[:3], dtype=float)
    rot_local = quat_to_matrix(g_local[3:7])
    rot_global = quat_to_matrix(g_global[3:7])
    x1 = -rot_local.T @ x_local
    x2 = -rot_global.T @ x_global
    n1, n2 = float(np.linalg.norm(x1)), float(np.linalg.norm(x2))
    if n1 < _TRANSLATION_EPS or n2 < _TRANSLATION_EPS:
        raise DegenerateSkillError("hybrid rotation undefined for near-zero goal translation")
    u1, u2 = x1 / n1, x2 / n2
    swing = _vector_swing(u1, u2)
    return rot_global @ swing @ rot_local.T


def _vector_swing(u1: np.ndarray, u2: np.ndarray) -> np.ndarray:
    """Rotation matrix taking unit vector u1 to u2 about their common normal."""
    axis = np.cross(u1, u2)
    axis_norm = float(np.linalg.norm(axis))
    cos_angle = float(np.clip(np.dot(u1, u2), -1.0, 1.0))
    if axis_norm < 1e-12:
        if cos_angle > 0.0:
            return np.eye(3)
        # Antiparallel: axis undefined, pick any direction orthogonal to u1.
        warnings.warn(
            "hybrid goal direction is antiparallel to the recorded one; "
            "rotation axis chosen arbitrarily",
            stacklevel=3,
        )
        helper = np.array([1.0, 0.0, 0.0]) if abs(u1[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        axis = np.cross(u1, helper)
        axis /= np.linalg.norm(axis)
        angle = np.pi
    else:
        axis /= axis_norm
        angle = float(np.arctan2(axis_norm, cos_angle))
    k = np.array(
        [
            [0.0, -axis[2], axis[1]],
            [axis[2], 0.0, -axis[0]],
            [-axis[1], axis[0], 0.0],
        ]
    )
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


def generate(
    skill: SkillRecording,
    goal: np.ndarray,
    ratio: float,
    start: np.ndarray | None = None,
) -> np.ndarray:
    """Integrate the transformation system with the skill's forcing terms.

    Forward-Euler at the recording step, starting at rest. The translational
    forcing component along the goal direction is rescaled by `ratio` so a
    farther (or nearer) goal attractor does not drown out the recorded
    motion; the orthogonal component is preserved. Quaternion components are
    normalized after the loop.
    """
    if ratio <= 0.0:
        raise ValueError("forcing rescale ratio must be positive")
    goal = np.asarray(goal, dtype=float)
    if start is None:
        start = identity_state(skill.states[0, 7])
    forcing = skill.forcing
    direction = goal[:3]
    dir_sq = float(direction @ direction)
    if ratio != 1.0 and dir_sq >= 1e-18:
        parallel = (forcing[:, :3] @ direction)[:, None] * direction[None, :] / dir_sq
        forcing = forcing.copy()
        forcing[:, :3] += (ratio - 1.0) * parallel
    n = skill.n_intervals
    dt = skill.dt
    stiffness, damping = skill.stiffness, skill.damping
    out = np.empty_like(skill.states)
    out[0] = start
    state = np.array(start, dtype=float)
    velocity = np.zeros(STATE_DIM)
    for step in range(1, n + 1):
        accel = damping * (stiffness * (goal - state) - velocity) + forcing[step]
        velocity = velocity + accel * dt
        state = state + velocity * dt
        if not np.all(np.isfinite(state)):
            raise DivergenceError("trajectory generation produced non-finite state", step)
        out[step] = state
    norms = np.linalg.norm(out[:, 3:7], axis=1)
    if np.any(norms < 1e-12):
        raise DivergenceError("quaternion collapsed to zero during generation", int(np.argmin(norms)))
    out[:, 3:7] /= norms[:, None]
    return out


@dataclass(frozen=True)
class GeneratedTrajectory:
    """Base-frame state sequence plus the playback duration.

    The state geometry is fixed by the skill; the duration only sets the
    playback step T/N used when sampling by timestamp.
    """

    states: np.ndarray
    duration: float

    def __post_init__(self):
        object.__setattr__(self, "states", np.asarray(self.states, dtype=float))
        if self.duration <= 0.0:
            raise ValueError("duration must be positive")

    @property
    def dt_play(self) -> float:
        return self.duration / (self.states.shape[0] - 1)


def sample_at(trajectory: GeneratedTrajectory, t: float) -> np.ndarray:
    """State active at time t: index floor(t / dt_play), final state for t >= T.

    The gripper channel is clamped to [0, 1] here, at the playback boundary.
    """
    if t < 0.0:
        raise ValueError("sample time must be non-negative")
    states = trajectory.states
    if t >= trajectory.duration:
        state = states[-1].copy()
    else:
        state = states[int(t / trajectory.dt_play)].copy()
    state[7] = np.clip(state[7], 0.0, 1.0)
    return state


def plan(
    skill: SkillRecording,
    skill_type: SkillType,
    current_state: np.ndarray,
    duration: float,
) -> GeneratedTrajectory:
    """Full playback pipeline: goal, generation, frame transform, timestamps."""
    if duration <= 0.0:
        raise ValueError("duration must be positive")
    goal = compute_goal(skill, skill_type, current_state)
    ratio = 1.0 if skill_type == SkillType.LOCAL else translation_ratio(skill, goal)
    states = generate(skill, goal, ratio, start=identity_state(current_state[7]))
    rotation = None
    if skill_type == SkillType.HYBRID:
        rotation = hybrid_rotation(skill.goal_local, _global_goal(skill, current_state))
    base_states = to_base_frame(states, current_state, rotation)
    return GeneratedTrajectory(states=base_states, duration=duration)


# --- persistence ---------------------------------------------------------

def skill_to_json(skill: SkillRecording) -> str:
    payload = {
        "version": skill.version,
        "name": skill.name,
        "created_at": skill.created_at,
        "dt_rec": skill.dt,
        "K": [float(v) for v in skill.stiffness],
        "D": [float(v) for v in skill.damping],
        "final_base_state": [float(v) for v in skill.final_base_state],
        "states": [[float(v) for v in row] for row in skill.states],
        "forcing": [[float(v) for v in row] for row in skill.forcing],
    }
    return json.dumps(payload, indent=2) + "\n"


def skill_from_json(text: str) -> SkillRecording:
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SkillFormatError(f"not valid JSON: {exc}") from None
    required = ("version", "name", "created_at", "dt_rec", "K", "D", "final_base_state", "states", "forcing")
    missing = [key for key in required if key not in payload]
    if missing:
        raise SkillFormatError(f"missing fields: {', '.join(missing)}")
    if payload["version"] != SKILL_FILE_VERSION:
        raise SkillFormatError(f"unsupported skill file version {payload['version']}")
    return SkillRecording(
        name=payload["name"],
        created_at=payload["created_at"],
        dt=float(payload["dt_rec"]),
        stiffness=payload["K"],
        damping=payload["D"],
        final_base_state=payload["final_base_state"],
        states=payload["states"],
        forcing=payload["forcing"],
        version=payload["version"],
    )


def save_skill(skill: SkillRecording, path: str | Path) -> None:
    Path(path).write_text(skill_to_json(skill))


def load_skill(path: str | Path) -> SkillRecording:
    return skill_from_json(Path(path).read_text())


TRAJECTORY_CSV_HEADER = "t,x,y,z,q_x,q_y,q_z,q_w,g"


def write_trajectory_csv(trajectory: GeneratedTrajectory, path: str | Path) -> None:
    """Export timestamps 0..T plus states; gripper clamped as at playback."""
    states = trajectory.states
    dt_play = trajectory.dt_play
    lines = [TRAJECTORY_CSV_HEADER]
    for n, row in enumerate(states):
        gripper = float(np.clip(row[7], 0.0, 1.0))
        values = [n * dt_play, *row[:7], gripper]
        lines.append(",".join(repr(float(v)) for v in values))
    Path(path).write_text("\n".join(lines) + "\n")


def read_trajectory_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Return (timestamps, states) from a trajectory export."""
    lines = Path(path).read_text().strip().splitlines()
    if not lines or lines[0] != TRAJECTORY_CSV_HEADER:
        raise SkillFormatError("missing trajectory CSV header")
    data = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
    return data[:, 0], data[:, 1:]
