"""Motion-skill engine for teleoperated 6-axis arms.

Records end-effector trajectories, compresses them into forcing-term skills,
and regenerates goal-adapted trajectories (local, global, hybrid) executed
through a forward-dynamics IK solver on a simulated arm.
"""

__version__ = "0.1.0"
