"""Forward kinematics over the quasi-rigid chain and analytic point Jacobians."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import MissingAngle, UnknownLink, UnknownOwner
from .hand_model import ContactPatch, HandModel
from .transforms import RigidTransform


@dataclass(frozen=True)
class JointAngles:
    """One angle per revolute joint, radians."""

    values: dict  # joint name -> float
    clamped: bool = False

    def __post_init__(self):
        vals = {k: float(v) for k, v in self.values.items()}
        for k, v in vals.items():
            if not np.isfinite(v):
                raise ValueError(f"non-finite angle for joint '{k}'")
        object.__setattr__(self, "values", vals)

    @staticmethod
    def zeros(model: HandModel) -> "JointAngles":
        return JointAngles({name: 0.0 for name in model.revolute_joints})

    def vector(self, order) -> np.ndarray:
        return np.array([self.values[name] for name in order])


@dataclass(frozen=True)
class PoseMap:
    """World pose per link; root pose equals the supplied base pose exactly."""

    poses: dict = field(default_factory=dict)  # link name -> RigidTransform

    def __getitem__(self, link: str) -> RigidTransform:
        return self.poses[link]

    def __contains__(self, link: str) -> bool:
        return link in self.poses


def forward_kinematics(model: HandModel, angles: JointAngles,
                       base: RigidTransform | None = None) -> PoseMap:
    """Compute world poses of all links.

    child pose = parent pose ∘ joint.origin ∘ Rot(axis, angle); fixed joints
    contribute their origin only.
    """
    if base is None:
        base = RigidTransform.identity()
    for name in model.revolute_joints:
        if name not in angles.values:
            raise MissingAngle(name)
    poses = {model.root: base}
    # children-of mapping lets us walk the tree top-down in one pass
    pending = [model.root]
    while pending:
        parent = pending.pop()
        for joint in model.joints.values():
            if joint.parent != parent:
                continue
            local = joint.origin
            if joint.kind == "revolute":
                local = local @ RigidTransform.from_axis_angle(
                    joint.axis, angles.values[joint.name])
            poses[joint.child] = poses[parent] @ local
            pending.append(joint.child)
    return PoseMap(poses=poses)


def patch_world_points(model: HandModel, poses: PoseMap, patch: ContactPatch,
                       object_pose: RigidTransform | None = None) -> np.ndarray:
    """Transform a patch's local points to world frame, order preserved.

    Object-owned patches pass through ``object_pose`` (identity by default).
    """
    if patch.owner == "object":
        pose = object_pose if object_pose is not None else RigidTransform.identity()
    else:
        if patch.owner not in poses:
            raise UnknownOwner(patch.owner)
        pose = poses[patch.owner]
    return pose.apply(patch.points)


def point_jacobian(model: HandModel, angles: JointAngles, base: RigidTransform,
                   link: str, local_point) -> tuple:
    """Analytic Jacobian of a link-local point w.r.t. joints on its root path.

    Returns (joint_names, J) where J is 3 × len(joint_names) and column j is
    axis_world × (p_world − origin_world) for the j-th revolute ancestor.
    Joints off the path contribute zero columns and are omitted.
    """
    if link not in model.links:
        raise UnknownLink(link)
    poses = forward_kinematics(model, angles, base)
    p_world = poses[link].apply(np.asarray(local_point, dtype=float))
    names, cols = [], []
    for joint in model.chain_to_root(link):
        if joint.kind != "revolute":
            continue
        # joint frame = child link frame; its origin and axis in world
        child_pose = poses[joint.child]
        o_world = child_pose.translation
        axis_world = child_pose.rotate(joint.axis)
        names.append(joint.name)
        cols.append(np.cross(axis_world, p_world - o_world))
    J = np.column_stack(cols) if cols else np.zeros((3, 0))
    return names, J


def finite_difference_point_jacobian(model: HandModel, angles: JointAngles,
                                     base: RigidTransform, link: str,
                                     local_point, step: float = 1e-6) -> tuple:
    """Central-difference fallback for objective terms lacking analytic form."""
    if link not in model.links:
        raise UnknownLink(link)
    names = [j.name for j in model.chain_to_root(link) if j.kind == "revolute"]
    local_point = np.asarray(local_point, dtype=float)
    cols = []
    for name in names:
        hi = dict(angles.values)
        lo = dict(angles.values)
        hi[name] += step
        lo[name] -= step
        p_hi = forward_kinematics(model, JointAngles(hi), base)[link].apply(local_point)
        p_lo = forward_kinematics(model, JointAngles(lo), base)[link].apply(local_point)
        cols.append((p_hi - p_lo) / (2 * step))
    J = np.column_stack(cols) if cols else np.zeros((3, 0))
    return names, J
