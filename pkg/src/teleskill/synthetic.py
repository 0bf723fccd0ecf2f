"""Deterministic synthetic recordings and figure-suite generation.

The shipped demo motion is a rising helix with a slow yaw and a gripper
ramp, eased with a minimum-jerk profile so the recording starts and ends
at rest. Seeded start-pose families come from one RNG so every run of the
figure suites and the acceptance tests sees identical data.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .geometry import Pose, quat_from_axis_angle, quat_multiply, quat_rotate
from .skills import (
    GeneratedTrajectory,
    SkillRecording,
    SkillType,
    build_recording,
    plan,
    state_from_pose,
    write_trajectory_csv,
)

DEFAULT_START = Pose(
    position=np.array([0.45, 0.0, 0.55]),
    quaternion=quat_from_axis_angle(np.array([0.0, 1.0, 0.0]), 0.5),
)


def minjerk(u):
    """Minimum-jerk profile: 0 -> 1 with zero velocity and acceleration at both ends."""
    u = np.asarray(u, dtype=float)
    return u**3 * (10.0 + u * (-15.0 + 6.0 * u))


def helix_states(
    duration: float = 10.0,
    rate: float = 100.0,
    radius: float = 0.1,
    turns: float = 2.0,
    rise: float = 0.2,
    yaw: float = np.deg2rad(40.0),
    gripper_start: float = 0.1,
    gripper_end: float = 0.8,
    start: Pose = DEFAULT_START,
) -> np.ndarray:
    """Base-frame state sequence of the demo helix, (N+1, 8).

    With integer `turns` the lateral excursion closes, so the recording's
    net displacement is `rise` along the start frame's z axis.
    """
    n = int(round(duration * rate))
    tau = minjerk(np.linspace(0.0, 1.0, n + 1))
    angle = 2.0 * np.pi * turns * tau
    local = np.stack(
        [radius * (np.cos(angle) - 1.0), radius * np.sin(angle), rise * tau], axis=1
    )
    states = np.empty((n + 1, 8))
    for i in range(n + 1):
        states[i, :3] = start.position + quat_rotate(start.quaternion, local[i])
        states[i, 3:7] = quat_multiply(
            start.quaternion, quat_from_axis_angle(np.array([0.0, 0.0, 1.0]), yaw * tau[i])
        )
    states[:, 7] = gripper_start + (gripper_end - gripper_start) * tau
    return states


def helix_skill(
    name: str = "helix",
    stiffness: float = 0.55,
    damping: float = 3.5,
    **kwargs,
) -> SkillRecording:
    """The demo helix packed into a skill with the standard constants."""
    states = helix_states(**kwargs)
    rate = kwargs.get("rate", 100.0)
    return build_recording(
        states,
        dt=1.0 / rate,
        stiffness=np.full(8, stiffness),
        damping=np.full(8, damping),
        name=name,
        created_at="2026-01-01T00:00:00+00:00",
    )


def minimum_jerk_1d(duration: float, rate: float, amplitude: float):
    """1-D minimum-jerk reach with analytic derivatives: (t, x, dx, ddx)."""
    n = int(round(duration * rate))
    t = np.linspace(0.0, duration, n + 1)
    u = t / duration
    x = amplitude * minjerk(u)
    dx = amplitude * (30.0 * u**2 - 60.0 * u**3 + 30.0 * u**4) / duration
    ddx = amplitude * (60.0 * u - 180.0 * u**2 + 120.0 * u**3) / duration**2
    return t, x, dx, ddx


def seeded_starts(
    base_state: np.ndarray,
    count: int,
    max_offset: float = 0.5,
    max_angle: float = np.deg2rad(45.0),
    seed: int = 7,
    min_goal_distance: float = 0.1,
    goal_position: np.ndarray | None = None,
) -> list[np.ndarray]:
    """Start states displaced from `base_state` by bounded offsets/rotations.

    When `goal_position` is given, starts closer to it than
    `min_goal_distance` are resampled so hybrid direction vectors stay
    well-defined.
    """
    rng = np.random.default_rng(seed)
    starts: list[np.ndarray] = []
    while len(starts) < count:
        direction = rng.normal(size=3)
        direction /= np.linalg.norm(direction)
        offset = direction * rng.uniform(0.05, max_offset)
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        angle = rng.uniform(-max_angle, max_angle)
        state = base_state.copy()
        state[:3] = base_state[:3] + offset
        state[3:7] = quat_multiply(quat_from_axis_angle(axis, angle), base_state[3:7])
        if goal_position is not None and np.linalg.norm(state[:3] - goal_position) < min_goal_distance:
            continue
        starts.append(state)
    return starts


FIGURE_SUITES = ("local", "global", "hybrid")


def figure_suite(
    suite: str,
    out_dir: str | Path,
    count: int = 6,
    duration: float = 10.0,
    helix_kwargs: dict | None = None,
) -> list[Path]:
    """Write one trajectory CSV per start pose, mirroring the path-family plots.

    Returns the written paths; recording.csv holds the source motion.
    """
    if suite not in FIGURE_SUITES:
        raise ValueError(f"unknown suite {suite!r}; expected one of {FIGURE_SUITES}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    kwargs = dict(helix_kwargs or {})
    kwargs.setdefault("duration", duration)
    states = helix_states(**kwargs)
    rate = kwargs.get("rate", 100.0)
    skill = build_recording(
        states,
        dt=1.0 / rate,
        stiffness=np.full(8, 0.55),
        damping=np.full(8, 3.5),
        name=f"{suite}-demo",
        created_at="2026-01-01T00:00:00+00:00",
    )
    paths = []
    recording_csv = out / "recording.csv"
    write_trajectory_csv(GeneratedTrajectory(states, duration=kwargs["duration"]), recording_csv)
    paths.append(recording_csv)
    starts = seeded_starts(
        states[0],
        count,
        goal_position=skill.final_base_state[:3],
    )
    for i, start in enumerate(starts):
        trajectory = plan(skill, SkillType(suite), start, duration)
        csv_path = out / f"path_{suite}_{i:02d}.csv"
        write_trajectory_csv(trajectory, csv_path)
        paths.append(csv_path)
    return paths
