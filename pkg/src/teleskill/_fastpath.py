"""Optional numba-compiled inner loop for the IK solver.

The solver runs thousands of virtual-dynamics cycles per request; the JIT
path takes one cycle from ~200 us to a few microseconds. Everything here
mirrors the reference implementations in kinematics/ik exactly (tested for
equivalence); when numba is unavailable the solver falls back to those.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        return wrap if not (args and callable(args[0])) else args[0]


@njit(cache=True)
def _axis_rotation(axis, angle):
    c = np.cos(angle)
    s = np.sin(angle)
    cc = 1.0 - c
    x, y, z = axis[0], axis[1], axis[2]
    rot = np.empty((3, 3))
    rot[0, 0] = c + x * x * cc
    rot[0, 1] = x * y * cc - z * s
    rot[0, 2] = x * z * cc + y * s
    rot[1, 0] = y * x * cc + z * s
    rot[1, 1] = c + y * y * cc
    rot[1, 2] = y * z * cc - x * s
    rot[2, 0] = z * x * cc - y * s
    rot[2, 1] = z * y * cc + x * s
    rot[2, 2] = c + z * z * cc
    return rot


@njit(cache=True)
def _walk(offset_pos, offset_rot, axes_local, mass_pos, tool_pos, tool_rot, theta):
    n = theta.shape[0]
    rot = np.eye(3)
    pos = np.zeros(3)
    origins = np.empty((n, 3))
    axes = np.empty((n, 3))
    mass_points = np.empty((n, 3))
    for i in range(n):
        pos = pos + rot @ offset_pos[i]
        rot = rot @ offset_rot[i]
        origins[i] = pos
        axes[i] = rot @ axes_local[i]
        rot = rot @ _axis_rotation(axes_local[i], theta[i])
        mass_points[i] = pos + rot @ mass_pos[i]
    ee_pos = pos + rot @ tool_pos
    ee_rot = rot @ tool_rot
    return origins, axes, mass_points, ee_pos, ee_rot


@njit(cache=True)
def _quat_from_rot(rot):
    """Unit quaternion (x, y, z, w) of a rotation matrix, w >= 0."""
    q = np.empty(4)
    trace = rot[0, 0] + rot[1, 1] + rot[2, 2]
    if trace > 0.0:
        s = np.sqrt(trace + 1.0) * 2.0
        q[3] = 0.25 * s
        q[0] = (rot[2, 1] - rot[1, 2]) / s
        q[1] = (rot[0, 2] - rot[2, 0]) / s
        q[2] = (rot[1, 0] - rot[0, 1]) / s
    elif rot[0, 0] > rot[1, 1] and rot[0, 0] > rot[2, 2]:
        s = np.sqrt(1.0 + rot[0, 0] - rot[1, 1] - rot[2, 2]) * 2.0
        q[3] = (rot[2, 1] - rot[1, 2]) / s
        q[0] = 0.25 * s
        q[1] = (rot[0, 1] + rot[1, 0]) / s
        q[2] = (rot[0, 2] + rot[2, 0]) / s
    elif rot[1, 1] > rot[2, 2]:
        s = np.sqrt(1.0 + rot[1, 1] - rot[0, 0] - rot[2, 2]) * 2.0
        q[3] = (rot[0, 2] - rot[2, 0]) / s
        q[0] = (rot[0, 1] + rot[1, 0]) / s
        q[1] = 0.25 * s
        q[2] = (rot[1, 2] + rot[2, 1]) / s
    else:
        s = np.sqrt(1.0 + rot[2, 2] - rot[0, 0] - rot[1, 1]) * 2.0
        q[3] = (rot[1, 0] - rot[0, 1]) / s
        q[0] = (rot[0, 2] + rot[2, 0]) / s
        q[1] = (rot[1, 2] + rot[2, 1]) / s
        q[2] = 0.25 * s
    q /= np.sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3])
    if q[3] < 0.0:
        q = -q
    return q


@njit(cache=True)
def _pose_error(goal_pos, goal_quat, ee_pos, ee_quat):
    """[dx; dr] with dr the axis-angle vector of goal ⊗ ee^-1, angle in [0, pi]."""
    err = np.empty(6)
    err[0] = goal_pos[0] - ee_pos[0]
    err[1] = goal_pos[1] - ee_pos[1]
    err[2] = goal_pos[2] - ee_pos[2]
    ax, ay, az, aw = goal_quat[0], goal_quat[1], goal_quat[2], goal_quat[3]
    bx, by, bz, bw = -ee_quat[0], -ee_quat[1], -ee_quat[2], ee_quat[3]
    dx = aw * bx + ax * bw + ay * bz - az * by
    dy = aw * by - ax * bz + ay * bw + az * bx
    dz = aw * bz + ax * by - ay * bx + az * bw
    dw = aw * bw - ax * bx - ay * by - az * bz
    if dw < 0.0:
        dx, dy, dz, dw = -dx, -dy, -dz, -dw
    vec_norm = np.sqrt(dx * dx + dy * dy + dz * dz)
    angle = 2.0 * np.arctan2(vec_norm, dw)
    if vec_norm < 1e-12:
        err[3:] = 0.0
    else:
        scale = angle / vec_norm
        err[3] = dx * scale
        err[4] = dy * scale
        err[5] = dz * scale
    return err


@njit(cache=True)
def ee_pose_arrays(offset_pos, offset_rot, axes_local, mass_pos, tool_pos, tool_rot, theta):
    """(position, quaternion) of the end-effector for one configuration."""
    _, _, _, ee_pos, ee_rot = _walk(offset_pos, offset_rot, axes_local, mass_pos, tool_pos, tool_rot, theta)
    return ee_pos, _quat_from_rot(ee_rot)


@njit(cache=True)
def fd_step(
    offset_pos,
    offset_rot,
    axes_local,
    mass_pos,
    masses,
    tool_pos,
    tool_rot,
    theta,
    velocity,
    goal_pos,
    goal_quat,
    gains,
    floor,
    dt,
    damping,
):
    """One virtual-dynamics cycle: wrench -> torques -> accel -> Euler update.

    Returns (theta_next, velocity_next). Mirrors FdIkSolver's reference step.
    """
    n = theta.shape[0]
    origins, axes, mass_points, ee_pos, ee_rot = _walk(
        offset_pos, offset_rot, axes_local, mass_pos, tool_pos, tool_rot, theta
    )
    err = _pose_error(goal_pos, goal_quat, ee_pos, _quat_from_rot(ee_rot))
    # torque = J^T (gains * err) without materializing J
    torque = np.empty(n)
    for i in range(n):
        lx = ee_pos[0] - origins[i, 0]
        ly = ee_pos[1] - origins[i, 1]
        lz = ee_pos[2] - origins[i, 2]
        jx = axes[i, 1] * lz - axes[i, 2] * ly
        jy = axes[i, 2] * lx - axes[i, 0] * lz
        jz = axes[i, 0] * ly - axes[i, 1] * lx
        torque[i] = (
            jx * gains[0] * err[0]
            + jy * gains[1] * err[1]
            + jz * gains[2] * err[2]
            + axes[i, 0] * gains[3] * err[3]
            + axes[i, 1] * gains[4] * err[4]
            + axes[i, 2] * gains[5] * err[5]
        )
    inertia = np.zeros((n, n))
    for k in range(n):
        for i in range(k + 1):
            cix = axes[i, 1] * (mass_points[k, 2] - origins[i, 2]) - axes[i, 2] * (mass_points[k, 1] - origins[i, 1])
            ciy = axes[i, 2] * (mass_points[k, 0] - origins[i, 0]) - axes[i, 0] * (mass_points[k, 2] - origins[i, 2])
            ciz = axes[i, 0] * (mass_points[k, 1] - origins[i, 1]) - axes[i, 1] * (mass_points[k, 0] - origins[i, 0])
            for j in range(i + 1):
                cjx = axes[j, 1] * (mass_points[k, 2] - origins[j, 2]) - axes[j, 2] * (mass_points[k, 1] - origins[j, 1])
                cjy = axes[j, 2] * (mass_points[k, 0] - origins[j, 0]) - axes[j, 0] * (mass_points[k, 2] - origins[j, 2])
                cjz = axes[j, 0] * (mass_points[k, 1] - origins[j, 1]) - axes[j, 1] * (mass_points[k, 0] - origins[j, 0])
                val = masses[k] * (cix * cjx + ciy * cjy + ciz * cjz)
                inertia[i, j] += val
                if i != j:
                    inertia[j, i] += val
    for i in range(n):
        inertia[i, i] += floor
    accel = np.linalg.solve(inertia, torque)
    theta_next = theta + velocity * dt
    velocity_next = (velocity + accel * dt) * damping
    return theta_next, velocity_next
