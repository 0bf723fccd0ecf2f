"""Service and simulation configuration.

One YAML file configures the whole runtime: chain description, loop rates,
IK settings, transformation-system constants, skill directory, and port.
Every field has a working default, so an empty config runs the shipped
test arm.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import yaml
from pydantic import BaseModel, Field

from .ik import IkConfig
from .kinematics import ChainModel, chain_from_dict, default_arm
from .teleop import TwistLimits

DEFAULT_PORT = 8700

# Arms-at-ready configuration used as the boot pose; keeps the arm away
# from the stretched-out singularity.
READY_POSITIONS = (0.0, 0.5, 0.0, 0.8, 0.0, 0.5)


class IkSettings(BaseModel):
    translation_gain: float = 240.0
    rotation_gain: float = 60.0
    dt: float = 0.01
    damping: float = 0.9
    max_iterations: int = 2000
    tol_translation: float = 1e-4
    tol_rotation: float = 1e-3
    ramp_linear_speed: float = 0.4
    ramp_angular_speed: float = 1.6

    def build(self) -> IkConfig:
        return IkConfig(
            gains=np.array([self.translation_gain] * 3 + [self.rotation_gain] * 3),
            dt=self.dt,
            damping=self.damping,
            max_iterations=self.max_iterations,
            tol_translation=self.tol_translation,
            tol_rotation=self.tol_rotation,
            ramp_linear_speed=self.ramp_linear_speed,
            ramp_angular_speed=self.ramp_angular_speed,
        )


class TwistLimitSettings(BaseModel):
    max_linear: float = 0.25
    max_angular: float = 1.0
    max_gripper_rate: float = 1.0

    def build(self) -> TwistLimits:
        return TwistLimits(self.max_linear, self.max_angular, self.max_gripper_rate)


class ServiceConfig(BaseModel):
    """Everything the simulated-robot service needs to run."""

    chain: dict | None = None
    control_rate: float = 100.0
    record_rate: float = 100.0
    stiffness: float = 0.55
    damping: float = 3.5
    ik: IkSettings = Field(default_factory=IkSettings)
    ik_budget_per_cycle: int = 30
    twist_limits: TwistLimitSettings = Field(default_factory=TwistLimitSettings)
    home_positions: list[float] = Field(default_factory=lambda: list(READY_POSITIONS))
    skill_dir: str = "skills"
    port: int = DEFAULT_PORT
    snapshot_decimation: int = 1

    def build_chain(self) -> ChainModel:
        return chain_from_dict(self.chain) if self.chain else default_arm()

    def stiffness_diag(self) -> np.ndarray:
        return np.full(8, self.stiffness)

    def damping_diag(self) -> np.ndarray:
        return np.full(8, self.damping)


def load_config(path: str | Path | None) -> ServiceConfig:
    """Load a YAML config file; None or a missing file yields pure defaults."""
    if path is None:
        return ServiceConfig()
    text = Path(path).read_text()
    data = yaml.safe_load(text) or {}
    return ServiceConfig.model_validate(data)
