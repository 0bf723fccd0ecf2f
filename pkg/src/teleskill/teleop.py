"""Twist-command teleoperation: integrates joystick-style velocity commands
into a continuously updated target pose and gripper opening.

All quantities live in the robot base frame. The desired quaternion is
renormalized after every integration step, so the target stays drift-free
over arbitrarily long command streams.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import TwistScriptError
from .geometry import Pose, quat_derivative, quat_normalize


@dataclass(frozen=True)
class TwistCommand:
    """Commanded end-effector velocity: linear [m/s], angular [rad/s],
    gripper opening rate [1/s]."""

    linear: np.ndarray = field(default_factory=lambda: np.zeros(3))
    angular: np.ndarray = field(default_factory=lambda: np.zeros(3))
    gripper_rate: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "linear", np.asarray(self.linear, dtype=float))
        object.__setattr__(self, "angular", np.asarray(self.angular, dtype=float))

    @staticmethod
    def zero() -> "TwistCommand":
        return TwistCommand()

    def is_zero(self) -> bool:
        return (
            not self.linear.any()
            and not self.angular.any()
            and self.gripper_rate == 0.0
        )


@dataclass(frozen=True)
class TwistLimits:
    """Device-independent command ceilings applied on ingest."""

    max_linear: float = 0.25
    max_angular: float = 1.0
    max_gripper_rate: float = 1.0

    def clamp(self, cmd: TwistCommand) -> TwistCommand:
        """Scale vector magnitudes down to the configured maxima."""
        linear, angular = cmd.linear, cmd.angular
        lin_norm = float(np.linalg.norm(linear))
        if lin_norm > self.max_linear:
            linear = linear * (self.max_linear / lin_norm)
        ang_norm = float(np.linalg.norm(angular))
        if ang_norm > self.max_angular:
            angular = angular * (self.max_angular / ang_norm)
        rate = float(np.clip(cmd.gripper_rate, -self.max_gripper_rate, self.max_gripper_rate))
        return TwistCommand(linear, angular, rate)


@dataclass(frozen=True)
class TeleopState:
    """Desired target pose and gripper opening driven by twist commands."""

    pose: Pose
    gripper: float

    @staticmethod
    def from_pose(pose: Pose, gripper: float) -> "TeleopState":
        return TeleopState(pose, float(np.clip(gripper, 0.0, 1.0)))


def integrate_gripper(gripper: float, rate: float, dt: float) -> float:
    """Advance the gripper opening by rate * dt, clamped to [0, 1]."""
    return float(np.clip(gripper + rate * dt, 0.0, 1.0))


def integrate_twist(state: TeleopState, cmd: TwistCommand, dt: float) -> TeleopState:
    """Advance the desired pose by one twist step.

    Position integrates linearly; the quaternion integrates its kinematic
    rate 0.5 * omega ⊗ q and is renormalized.
    """
    if dt <= 0.0:
        raise ValueError("time step must be positive")
    pose = state.pose
    position = pose.position + cmd.linear * dt
    quat = quat_normalize(pose.quaternion + quat_derivative(cmd.angular, pose.quaternion) * dt)
    return TeleopState(
        Pose(position, quat),
        integrate_gripper(state.gripper, cmd.gripper_rate, dt),
    )


SCRIPT_COLUMNS = ("t", "v_x", "v_y", "v_z", "w_x", "w_y", "w_z", "g_rate")


@dataclass(frozen=True)
class ScriptRow:
    time: float
    command: TwistCommand


class TwistSchedule:
    """Twist commands from a script file, held constant between timestamps."""

    def __init__(self, rows: list[ScriptRow]):
        if not rows:
            raise TwistScriptError("script contains no command rows", 0)
        self.rows = rows

    def at(self, t: float) -> TwistCommand:
        """Command active at time t; zero before the first row, last row held."""
        current = TwistCommand.zero()
        for row in self.rows:
            if row.time > t:
                break
            current = row.command
        return current

    @property
    def end_time(self) -> float:
        return self.rows[-1].time


def load_twist_script(path: str | Path) -> TwistSchedule:
    """Parse a CSV twist script: columns t, v_x, v_y, v_z, w_x, w_y, w_z, g_rate.

    A header row is allowed. Timestamps must be non-decreasing. Raises
    TwistScriptError carrying the offending line number.
    """
    rows: list[ScriptRow] = []
    last_t = None
    with open(path, newline="") as handle:
        for line_no, record in enumerate(csv.reader(handle), start=1):
            if not record or all(not cell.strip() for cell in record):
                continue
            if line_no == 1 and not _is_number(record[0]):
                continue  # header
            if len(record) != len(SCRIPT_COLUMNS):
                raise TwistScriptError(
                    f"expected {len(SCRIPT_COLUMNS)} columns ({', '.join(SCRIPT_COLUMNS)}), got {len(record)}",
                    line_no,
                )
            try:
                values = [float(cell) for cell in record]
            except ValueError as exc:
                raise TwistScriptError(str(exc), line_no) from None
            if not np.all(np.isfinite(values)):
                raise TwistScriptError("non-finite value", line_no)
            t = values[0]
            if last_t is not None and t < last_t:
                raise TwistScriptError(f"timestamp {t} decreases (previous {last_t})", line_no)
            last_t = t
            rows.append(
                ScriptRow(t, TwistCommand(np.array(values[1:4]), np.array(values[4:7]), values[7]))
            )
    return TwistSchedule(rows)


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True
