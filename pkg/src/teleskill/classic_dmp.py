"""One-dimensional classic DMP with canonical system and RBF forcing.

Reference implementation of the textbook formulation:

    tau^2 x'' = K (g - x) - tau D x' + (g - x0) f(s)
    tau s'    = -alpha s                    (phase, s(0) = 1)
    f(s)      = sum_i w_i psi_i(s) s / sum_i psi_i(s)

Used as an independent oracle: the simplified per-sample forcing pipeline
must reproduce what this one computes on scalar channels.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import TeleskillError


class BasisUnderflowError(TeleskillError):
    """Phase left the support of every basis function."""


class DegenerateScalingError(TeleskillError):
    """Goal equals start; the forcing scale (g - x0) vanishes."""


def phase(t: float | np.ndarray, tau: float, alpha: float) -> float | np.ndarray:
    """Closed-form canonical system: s(t) = exp(-alpha t / tau), s(0) = 1."""
    return np.exp(-alpha * np.asarray(t, dtype=float) / tau)


@dataclass(frozen=True)
class ClassicDmp:
    """Fitted 1-D movement primitive."""

    stiffness: float
    damping: float
    alpha: float
    tau: float
    centers: np.ndarray
    widths: np.ndarray
    weights: np.ndarray
    x0: float
    goal: float

    def __post_init__(self):
        for attr in ("centers", "widths", "weights"):
            object.__setattr__(self, attr, np.asarray(getattr(self, attr), dtype=float))


def _basis(s: np.ndarray, centers: np.ndarray, widths: np.ndarray) -> np.ndarray:
    """psi_i(s) for every (sample, basis) pair; shape (len(s), len(centers))."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    return np.exp(-widths[None, :] * (s[:, None] - centers[None, :]) ** 2)


def forcing(s: float, dmp: ClassicDmp) -> float:
    """Normalized RBF superposition sum w psi s / sum psi at one phase value."""
    psi = _basis(np.array([s]), dmp.centers, dmp.widths)[0]
    total = float(psi.sum())
    if total < 1e-300:
        raise BasisUnderflowError(f"basis support vanished at phase {s!r}")
    return float((dmp.weights * psi).sum() * s / total)


def spaced_basis(s_end: float, n_basis: int) -> tuple[np.ndarray, np.ndarray]:
    """Centers uniform in phase over [s_end, 1]; widths 1/(2 dc^2)."""
    centers = np.linspace(1.0, s_end, n_basis)
    if n_basis == 1:
        widths = np.array([1.0])
    else:
        dc = np.abs(np.diff(centers))
        widths = 1.0 / (2.0 * dc**2)
        widths = np.append(widths, widths[-1])
    return centers, widths


def fit(
    times: np.ndarray,
    positions: np.ndarray,
    velocities: np.ndarray,
    accelerations: np.ndarray,
    stiffness: float,
    damping: float,
    tau: float,
    n_basis: int,
    alpha: float = 4.6,
) -> ClassicDmp:
    """Fit RBF weights to one demonstrated trajectory.

    Target samples come from solving the transformation system for f; the
    weights then minimize the squared residual over the demonstration's
    phase values (plain least squares on the basis design matrix).
    """
    times = np.asarray(times, dtype=float)
    positions = np.asarray(positions, dtype=float)
    x0, goal = float(positions[0]), float(positions[-1])
    scale = goal - x0
    if abs(scale) < 1e-12:
        raise DegenerateScalingError("goal equals start; cannot scale forcing targets")
    s = phase(times, tau, alpha)
    targets = (
        -stiffness * (goal - positions)
        + tau * damping * np.asarray(velocities, dtype=float)
        + tau**2 * np.asarray(accelerations, dtype=float)
    ) / scale
    centers, widths = spaced_basis(float(s[-1]), n_basis)
    psi = _basis(s, centers, widths)
    design = psi * s[:, None] / psi.sum(axis=1)[:, None]
    weights, _, rank, _ = np.linalg.lstsq(design, targets, rcond=None)
    if rank < n_basis:
        warnings.warn(
            f"basis design matrix is rank-deficient ({rank}/{n_basis}); "
            "least-squares solution is the minimum-norm one",
            stacklevel=2,
        )
    return ClassicDmp(
        stiffness=stiffness,
        damping=damping,
        alpha=alpha,
        tau=tau,
        centers=centers,
        widths=widths,
        weights=weights,
        x0=x0,
        goal=goal,
    )


def rollout(
    dmp: ClassicDmp,
    x0: float,
    goal: float,
    tau: float,
    dt: float,
    steps: int,
) -> np.ndarray:
    """Forward-Euler integration of the transformation system.

    Returns steps+1 positions sampled at multiples of dt. New start and goal
    rescale the forcing contribution through the (goal - x0) factor.
    """
    if dt <= 0.0:
        raise ValueError("integration step must be positive")
    out = np.empty(steps + 1)
    x, v = float(x0), 0.0
    out[0] = x
    scale = goal - x0
    for n in range(1, steps + 1):
        s = float(phase((n - 1) * dt, tau, dmp.alpha))
        accel = (dmp.stiffness * (goal - x) - tau * dmp.damping * v + scale * forcing(s, dmp)) / tau**2
        v += accel * dt
        x += v * dt
        if not math.isfinite(x):
            raise TeleskillError(f"classic DMP rollout diverged at step {n}")
        out[n] = x
    return out
