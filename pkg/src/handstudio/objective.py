"""Contact-alignment energy: the objective minimized during grasp synthesis.

The energy is the sum over patch pairs of the mean squared distance between
corresponded hand and object points. Correspondences (nearest object point per
hand point) are frozen while a solver stage runs and refreshed at stage
boundaries, keeping the objective smooth.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .coupling import CouplingModel, expand_angles
from .errors import DimensionMismatch, UnknownPatch
from .hand_model import ContactPatch, HandModel, patch_from_json, patch_to_json
from .kinematics import JointAngles, forward_kinematics, patch_world_points
from .transforms import (RigidTransform, quat_from_rotvec, quat_multiply,
                         rotvec_right_jacobian, skew)

RECENTER_THRESHOLD = np.pi / 2


@dataclass(frozen=True)
class GraspTask:
    """Object geometry plus hand-patch / object-patch pairing."""

    name: str
    object_pose: RigidTransform
    pairs: tuple              # ((hand_patch_id, object_patch_id), ...)
    patches: dict = field(default_factory=dict)  # object-side patches by id
    object_mesh_path: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple(tuple(p) for p in self.pairs))
        seen = [h for h, _ in self.pairs]
        if len(seen) != len(set(seen)):
            raise ValueError("a hand patch is paired with more than one object patch")

    def object_patch(self, patch_id: str) -> ContactPatch:
        if patch_id not in self.patches:
            raise UnknownPatch(patch_id)
        return self.patches[patch_id]


@dataclass(frozen=True)
class GraspVariables:
    """Decision variables: wrist tangent increment + independent joint angles.

    The wrist pose is wrist_ref perturbed by a 6-vector (translation, rotation
    vector); the rotation part is re-centered onto wrist_ref before it grows
    past pi/2 so the parameterization stays far from its singularity.
    """

    wrist: np.ndarray         # (6,) tx ty tz rx ry rz
    theta_I: np.ndarray
    wrist_ref: RigidTransform = field(default_factory=RigidTransform.identity)

    def __post_init__(self):
        w = np.asarray(self.wrist, dtype=float).reshape(6)
        t = np.asarray(self.theta_I, dtype=float).reshape(-1)
        if np.linalg.norm(w[3:]) >= np.pi:
            raise ValueError("wrist rotation-vector magnitude must stay below pi")
        object.__setattr__(self, "wrist", w)
        object.__setattr__(self, "theta_I", t)

    def base_pose(self) -> RigidTransform:
        """World wrist pose: rotation increment applied on the world side."""
        q = quat_multiply(quat_from_rotvec(self.wrist[3:]), self.wrist_ref.rotation)
        q = q / np.linalg.norm(q)
        return RigidTransform(translation=self.wrist_ref.translation + self.wrist[:3],
                              rotation=q)

    def recentered(self, force: bool = False) -> "GraspVariables":
        """Fold the tangent increment into wrist_ref when it has grown large."""
        if not force and np.linalg.norm(self.wrist[3:]) <= RECENTER_THRESHOLD:
            return self
        return replace(self, wrist=np.zeros(6), wrist_ref=self.base_pose())


@dataclass(frozen=True)
class EnergyBreakdown:
    total: float              # m^2
    per_pair: dict            # (hand_id, object_id) -> m^2
    correspondence_version: int


@dataclass(frozen=True)
class CorrespondenceTable:
    """Per pair, the object-point index assigned to each hand-patch point."""

    assignments: tuple        # one int array per task pair, hand-point order
    version: int = 0


def _hand_patch(model: HandModel, patch_id: str) -> ContactPatch:
    if patch_id not in model.patches:
        raise UnknownPatch(patch_id)
    return model.patches[patch_id]


def update_correspondences(model: HandModel, task: GraspTask,
                           vars: GraspVariables, coupling: CouplingModel,
                           previous: CorrespondenceTable | None = None
                           ) -> CorrespondenceTable:
    """Assign each hand-patch point its nearest object-patch point.

    Ties break toward the lowest object point index.
    """
    angles = expand_angles(coupling, vars.theta_I)
    poses = forward_kinematics(model, angles, vars.base_pose())
    assignments = []
    for hand_id, obj_id in task.pairs:
        hand_pts = patch_world_points(model, poses, _hand_patch(model, hand_id))
        obj_pts = task.object_pose.apply(task.object_patch(obj_id).points)
        d2 = np.sum((hand_pts[:, None, :] - obj_pts[None, :, :]) ** 2, axis=2)
        # argmin returns the first (lowest) index on ties
        assignments.append(np.argmin(d2, axis=1))
    version = 0 if previous is None else previous.version + 1
    return CorrespondenceTable(assignments=tuple(assignments), version=version)


def _pair_world_points(model, task, poses, hand_id, obj_id, assignment):
    hand_pts = patch_world_points(model, poses, _hand_patch(model, hand_id))
    obj_pts = task.object_pose.apply(task.object_patch(obj_id).points)
    return hand_pts, obj_pts[assignment]


def alignment_energy(model: HandModel, coupling: CouplingModel, task: GraspTask,
                     vars: GraspVariables,
                     correspondences: CorrespondenceTable) -> EnergyBreakdown:
    """Mean squared corresponded-point distance per pair, summed over pairs."""
    if len(vars.theta_I) != len(coupling.independent):
        raise DimensionMismatch("theta_I length does not match coupling")
    if len(correspondences.assignments) != len(task.pairs):
        raise DimensionMismatch("correspondence table does not match task pairs")
    angles = expand_angles(coupling, vars.theta_I)
    poses = forward_kinematics(model, angles, vars.base_pose())
    per_pair = {}
    for (hand_id, obj_id), assignment in zip(task.pairs,
                                             correspondences.assignments):
        x, y = _pair_world_points(model, task, poses, hand_id, obj_id, assignment)
        per_pair[(hand_id, obj_id)] = float(np.mean(np.sum((x - y) ** 2, axis=1)))
    return EnergyBreakdown(total=float(sum(per_pair.values())), per_pair=per_pair,
                           correspondence_version=correspondences.version)


def full_angle_energy(model: HandModel, task: GraspTask, angles: JointAngles,
                      base: RigidTransform,
                      correspondences: CorrespondenceTable) -> float:
    """Energy evaluated at an explicit full joint vector (solver decision path)."""
    poses = forward_kinematics(model, angles, base)
    total = 0.0
    for (hand_id, obj_id), assignment in zip(task.pairs,
                                             correspondences.assignments):
        x, y = _pair_world_points(model, task, poses, hand_id, obj_id, assignment)
        total += float(np.mean(np.sum((x - y) ** 2, axis=1)))
    return total


def full_angle_energy_gradient(model: HandModel, task: GraspTask,
                               angles: JointAngles, wrist: np.ndarray,
                               wrist_ref: RigidTransform, joint_order: tuple,
                               correspondences: CorrespondenceTable) -> np.ndarray:
    """Analytic gradient w.r.t. (wrist 6-vector, angles in joint_order)."""
    base = _base_pose(wrist, wrist_ref)
    poses = forward_kinematics(model, angles, base)
    # world origin/axis per revolute joint, computed once
    joint_info = {}
    for j in model.joints.values():
        if j.kind == "revolute":
            child_pose = poses[j.child]
            joint_info[j.name] = (child_pose.translation, child_pose.rotate(j.axis))
    ancestors = {}

    g_wrist = np.zeros(6)
    g_theta = {name: 0.0 for name in joint_order}
    R_inc = RigidTransform(rotation=quat_from_rotvec(wrist[3:])).rotation_matrix()
    Jr = rotvec_right_jacobian(wrist[3:])
    base_anchor = wrist_ref.translation + wrist[:3]

    for (hand_id, obj_id), assignment in zip(task.pairs,
                                             correspondences.assignments):
        patch = _hand_patch(model, hand_id)
        x, y = _pair_world_points(model, task, poses, hand_id, obj_id, assignment)
        r = (2.0 / len(patch.points)) * (x - y)       # (n, 3) residual weights
        g_wrist[:3] += r.sum(axis=0)
        # x = R(w_r) u + anchor with u the point in the pre-increment frame
        u = x - base_anchor
        u_pre = u @ R_inc                              # R_inc.T applied row-wise
        for ri, ui in zip(r, u_pre):
            g_wrist[3:] += -(ri @ R_inc) @ skew(ui) @ Jr
        link = patch.owner
        if link not in ancestors:
            ancestors[link] = [j.name for j in model.chain_to_root(link)
                               if j.kind == "revolute"]
        for name in ancestors[link]:
            o_w, a_w = joint_info[name]
            g_theta[name] += float(np.sum(r * np.cross(a_w, x - o_w)))
    return np.concatenate([g_wrist, [g_theta[name] for name in joint_order]])


def _base_pose(wrist: np.ndarray, wrist_ref: RigidTransform) -> RigidTransform:
    q = quat_multiply(quat_from_rotvec(wrist[3:]), wrist_ref.rotation)
    return RigidTransform(translation=wrist_ref.translation + wrist[:3],
                          rotation=q / np.linalg.norm(q))


def energy_gradient(model: HandModel, coupling: CouplingModel, task: GraspTask,
                    vars: GraspVariables,
                    correspondences: CorrespondenceTable) -> np.ndarray:
    """Gradient w.r.t. (wrist 6-vector, theta_I).

    Dependent joints follow theta_D = M·theta_I, so their partials fold back
    through M (chain rule).
    """
    if len(vars.theta_I) != len(coupling.independent):
        raise DimensionMismatch("theta_I length does not match coupling")
    angles = expand_angles(coupling, vars.theta_I)
    order = coupling.independent + coupling.dependent
    g = full_angle_energy_gradient(model, task, angles, vars.wrist,
                                   vars.wrist_ref, order, correspondences)
    nI = len(coupling.independent)
    g_I = g[6:6 + nI] + coupling.matrix.T @ g[6 + nI:]
    return np.concatenate([g[:6], g_I])


# ---------------------------------------------------------------------------
# persistence


def _pose_to_json(pose: RigidTransform) -> dict:
    return {"translation": pose.translation.tolist(),
            "rotation_wxyz": pose.rotation.tolist()}


def _pose_from_json(obj: dict) -> RigidTransform:
    return RigidTransform(translation=obj["translation"],
                          rotation=obj["rotation_wxyz"])


def task_to_json(task: GraspTask) -> dict:
    return {"name": task.name,
            "object_mesh": task.object_mesh_path,
            "object_pose": _pose_to_json(task.object_pose),
            "patches": [patch_to_json(p) for p in task.patches.values()],
            "pairs": [list(p) for p in task.pairs]}


def task_from_json(obj: dict) -> GraspTask:
    patches = {p["id"]: patch_from_json(p) for p in obj.get("patches", [])}
    return GraspTask(name=obj.get("name", ""),
                     object_pose=_pose_from_json(obj["object_pose"]),
                     pairs=tuple(tuple(p) for p in obj["pairs"]),
                     patches=patches,
                     object_mesh_path=obj.get("object_mesh"))


def load_task(path: str | Path) -> GraspTask:
    return task_from_json(json.loads(Path(path).read_text()))


def save_task(task: GraspTask, path: str | Path) -> None:
    Path(path).write_text(json.dumps(task_to_json(task), indent=2, sort_keys=True))
