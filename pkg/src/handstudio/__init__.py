"""Design and grasp-synthesis toolkit for tendon-driven soft hands.

Models soft hands as quasi-rigid kinematic chains described in URDF,
synthesizes whole-hand grasps under linear underactuation coupling
constraints with a cascading constrained-optimization strategy, and supports
iterative design variation (e.g. thumb placement studies).
"""

from .coupling import (CouplingModel, JointTrajectoryDataset, constraint_residual,
                       expand_angles, fit_coupling)
from .hand_model import (ContactPatch, HandModel, Joint, Link, apply_joint_edit,
                         attach_patch, load_urdf, parse_urdf, serialize_urdf)
from .kinematics import (JointAngles, PoseMap, forward_kinematics,
                         patch_world_points, point_jacobian)
from .objective import (EnergyBreakdown, GraspTask, GraspVariables,
                        alignment_energy, energy_gradient,
                        update_correspondences)
from .solver import (CascadeSchedule, NlpProblem, SolveOptions, SolveStatus,
                     sqp_solve, unconstrained_stage_solve)
from .synthesis import (GraspProblem, GraspSolution, cascade_solve,
                        cold_start_solve, default_schedule)
from .transforms import RigidTransform

__version__ = "0.1.0"

__all__ = [
    "CascadeSchedule", "ContactPatch", "CouplingModel", "EnergyBreakdown",
    "GraspProblem", "GraspSolution", "GraspTask", "GraspVariables",
    "HandModel", "Joint", "JointAngles", "JointTrajectoryDataset", "Link",
    "NlpProblem", "PoseMap", "RigidTransform", "SolveOptions", "SolveStatus",
    "alignment_energy", "apply_joint_edit", "attach_patch", "cascade_solve",
    "cold_start_solve", "constraint_residual", "default_schedule",
    "energy_gradient", "expand_angles", "fit_coupling", "forward_kinematics",
    "load_urdf", "parse_urdf", "patch_world_points", "point_jacobian",
    "serialize_urdf", "sqp_solve", "unconstrained_stage_solve",
    "update_correspondences",
]
