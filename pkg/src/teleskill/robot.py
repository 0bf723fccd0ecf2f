"""Virtual-robot runtime: fixed-rate control loop, recording, playback,
and the skill store.

The simulated clock advances only through step(); the service drives it
from a timer in live mode and tight-loops it headlessly. Identical command
streams therefore produce identical state streams.
"""

from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path

import numpy as np

from .config import ServiceConfig
from .errors import (
    DivergenceError,
    ModeError,
    TooFewSamplesError,
    UnknownSkillError,
)
from .geometry import Pose, quat_align
from .ik import FdIkSolver
from .kinematics import ChainModel, JointState, forward_kinematics
from .skills import (
    GeneratedTrajectory,
    SkillRecording,
    SkillType,
    build_recording,
    load_skill,
    plan,
    record_sample,
    sample_at,
    save_skill,
    state_from_pose,
)
from .teleop import TeleopState, TwistCommand, integrate_twist

# Playback finishes when the tracker is this close to the final state, or
# after this much grace time past the nominal duration.
COMPLETION_TOL_TRANSLATION = 1e-3
COMPLETION_TOL_ROTATION = 1e-2
COMPLETION_GRACE = 5.0


class Mode(str, Enum):
    IDLE = "idle"
    TELEOP = "teleop"
    RECORDING = "recording"
    PLAYBACK = "playback"


@dataclass(frozen=True)
class Snapshot:
    """Outbound state of the simulated robot at one control tick."""

    t: float
    joints: np.ndarray
    ee_position: np.ndarray
    ee_quaternion: np.ndarray
    gripper: float
    mode: Mode


@dataclass(frozen=True)
class Event:
    level: str
    message: str


class SkillStore:
    """Directory of skill files; the files are the single source of truth."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def names(self) -> list[str]:
        return sorted(p.stem for p in self.directory.glob("*.json"))

    def path(self, name: str) -> Path:
        return self.directory / f"{name}.json"

    def load(self, name: str) -> SkillRecording:
        path = self.path(name)
        if not path.exists():
            raise UnknownSkillError(f"no skill named {name!r}")
        return load_skill(path)

    def save(self, skill: SkillRecording) -> SkillRecording:
        """Persist under the skill's name, suffixing -2, -3, ... on collision."""
        name = _sanitize(skill.name)
        final = name
        counter = 2
        while self.path(final).exists():
            final = f"{name}-{counter}"
            counter += 1
        if final != skill.name:
            skill = dataclasses.replace(skill, name=final)
        save_skill(skill, self.path(final))
        return skill


def _sanitize(name: str) -> str:
    cleaned = re.sub(r"[^A-Za-z0-9._-]+", "_", name.strip())
    return cleaned or "skill"


class SimRobot:
    """One simulated arm plus its control loop state machine.

    Mode transitions: idle <-> teleop <-> recording, idle -> playback -> idle.
    """

    def __init__(self, config: ServiceConfig, store: SkillStore, chain: ChainModel | None = None):
        self.config = config
        self.store = store
        self.chain = chain or config.build_chain()
        self.solver = FdIkSolver(self.chain, config.ik.build())
        self.limits = config.twist_limits.build()
        self.joint_state = JointState.at_rest(np.asarray(config.home_positions, dtype=float))
        self.gripper = 0.0
        self.mode = Mode.IDLE
        self.t = 0.0
        self._twist = TwistCommand.zero()
        self._teleop: TeleopState | None = None
        self._samples: list[np.ndarray] | None = None
        self._record_t0 = 0.0
        self._playback: GeneratedTrajectory | None = None
        self._playback_name = ""
        self._playback_t0 = 0.0

    # -- queries -----------------------------------------------------------

    def ee_pose(self) -> Pose:
        return forward_kinematics(self.chain, self.joint_state.positions)

    def current_state(self) -> np.ndarray:
        """Current 8-dim state [position, quaternion, gripper]."""
        return state_from_pose(self.ee_pose(), self.gripper)

    def snapshot(self) -> Snapshot:
        pose = self.ee_pose()
        return Snapshot(
            t=self.t,
            joints=self.joint_state.positions.copy(),
            ee_position=pose.position,
            ee_quaternion=pose.quaternion,
            gripper=self.gripper,
            mode=self.mode,
        )

    # -- commands ----------------------------------------------------------

    def set_twist(self, cmd: TwistCommand) -> None:
        """Latest-wins twist command; enters teleop mode from idle."""
        if self.mode == Mode.PLAYBACK:
            raise ModeError("twist commands are not accepted during playback")
        if self.mode == Mode.IDLE:
            self._enter_teleop()
        self._twist = TwistCommand(cmd.linear, cmd.angular, self._twist.gripper_rate)

    def set_gripper_rate(self, rate: float) -> None:
        if self.mode == Mode.PLAYBACK:
            raise ModeError("gripper commands are not accepted during playback")
        if self.mode == Mode.IDLE:
            self._enter_teleop()
        self._twist = TwistCommand(self._twist.linear, self._twist.angular, float(rate))

    def _enter_teleop(self) -> None:
        self._teleop = TeleopState.from_pose(self.ee_pose(), self.gripper)
        self._twist = TwistCommand.zero()
        self.mode = Mode.TELEOP

    def stop(self) -> None:
        """teleop -> idle, recording -> teleop (samples discarded),
        playback -> idle (canceled)."""
        if self.mode == Mode.RECORDING:
            self._samples = None
            self.mode = Mode.TELEOP
        elif self.mode == Mode.TELEOP:
            self._teleop = None
            self._twist = TwistCommand.zero()
            self.mode = Mode.IDLE
        elif self.mode == Mode.PLAYBACK:
            self._playback = None
            self.mode = Mode.IDLE

    def start_recording(self) -> None:
        if self.mode != Mode.TELEOP:
            raise ModeError(f"recording starts from teleop mode, not {self.mode.value}")
        self._samples = []
        self._record_t0 = self.t
        self.mode = Mode.RECORDING
        self._append_sample()

    def stop_recording(self, name: str, created_at: str | None = None) -> SkillRecording:
        """Build, persist, and return the skill; robot drops back to teleop."""
        if self.mode != Mode.RECORDING:
            raise ModeError("no recording in progress")
        samples = self._samples or []
        if len(samples) < 7:
            raise TooFewSamplesError(
                f"recording has {len(samples)} samples; the differentiator needs 7"
            )
        skill = build_recording(
            np.array(samples),
            dt=1.0 / self.config.record_rate,
            stiffness=self.config.stiffness_diag(),
            damping=self.config.damping_diag(),
            name=name,
            created_at=created_at or datetime.now(timezone.utc).isoformat(),
        )
        skill = self.store.save(skill)
        self._samples = None
        self.mode = Mode.TELEOP
        return skill

    def play(self, name: str, skill_type: SkillType, duration: float) -> None:
        if self.mode != Mode.IDLE:
            raise ModeError(f"playback starts from idle mode, not {self.mode.value}")
        if duration <= 0.0:
            raise ValueError("playback duration must be positive")
        skill = self.store.load(name)
        self._playback = plan(skill, skill_type, self.current_state(), duration)
        self._playback_name = name
        self._playback_t0 = self.t
        self.mode = Mode.PLAYBACK

    # -- control loop ------------------------------------------------------

    def step(self, dt: float) -> tuple[Snapshot, list[Event]]:
        """Advance simulated time by one control cycle."""
        events: list[Event] = []
        self.t += dt
        if self.mode in (Mode.TELEOP, Mode.RECORDING):
            self._step_teleop(dt, events)
        elif self.mode == Mode.PLAYBACK:
            self._step_playback(events)
        return self.snapshot(), events

    def _track(self, target: Pose, events: list[Event]) -> bool:
        try:
            self.joint_state = self.solver.track(target, self.joint_state, self.config.ik_budget_per_cycle)
            return True
        except DivergenceError as exc:
            self.mode = Mode.IDLE
            self._playback = None
            self._samples = None
            self.joint_state.velocities = np.zeros_like(self.joint_state.velocities)
            events.append(Event("error", f"IK diverged: {exc}; robot idled"))
            return False

    def _step_teleop(self, dt: float, events: list[Event]) -> None:
        assert self._teleop is not None
        self._teleop = integrate_twist(self._teleop, self.limits.clamp(self._twist), dt)
        if not self._track(self._teleop.pose, events):
            return
        self.gripper = self._teleop.gripper
        if self.mode == Mode.RECORDING:
            elapsed = self.t - self._record_t0
            dt_rec = 1.0 / self.config.record_rate
            while len(self._samples) * dt_rec <= elapsed + 1e-9:
                self._append_sample()

    def _append_sample(self) -> None:
        sample = record_sample(self.joint_state.positions, self.gripper, self.chain)
        if self._samples:
            sample[3:7] = quat_align(sample[3:7], self._samples[-1][3:7])
        self._samples.append(sample)

    def _step_playback(self, events: list[Event]) -> None:
        assert self._playback is not None
        elapsed = self.t - self._playback_t0
        target_state = sample_at(self._playback, elapsed)
        target = Pose(target_state[:3], target_state[3:7])
        if not self._track(target, events):
            return
        self.gripper = float(target_state[7])
        if elapsed >= self._playback.duration:
            t_err, r_err = self.solver.current_error(target, self.joint_state.positions)
            overtime = elapsed - self._playback.duration
            if (t_err < COMPLETION_TOL_TRANSLATION and r_err < COMPLETION_TOL_ROTATION) or overtime > COMPLETION_GRACE:
                if overtime > COMPLETION_GRACE:
                    events.append(
                        Event("warning", f"playback of {self._playback_name!r} finished with residual pose error")
                    )
                self._playback = None
                self.mode = Mode.IDLE
                events.append(Event("info", f"playback complete: {self._playback_name}"))
