"""Procedurally generated study objects with annotated contact patches.

The design-study object set (bowl, box, lemon, wine glass) ships as primitive
meshes so studies run without any external assets: a lathed bowl, a cuboid,
an ellipsoid, and a lathed glass profile. Object patches are sampled from
mesh vertices around per-finger anchor directions, so they lie exactly on the
object surface.
"""

from __future__ import annotations

import numpy as np

from ..hand_model import ContactPatch, HandModel
from ..mesh import TriangleMesh, box_mesh, ellipsoid_mesh, lathe_mesh
from ..objective import GraspTask
from ..transforms import RigidTransform

OBJECT_NAMES = ("bowl", "box", "lemon", "wine_glass")


def make_object_mesh(name: str) -> TriangleMesh:
    if name == "bowl":
        profile = [(0.0, 0.0), (0.025, 0.0), (0.042, 0.008), (0.048, 0.03),
                   (0.05, 0.042), (0.046, 0.042), (0.043, 0.03),
                   (0.036, 0.012), (0.0, 0.01)]
        return lathe_mesh(profile, segments=28)
    if name == "box":
        return box_mesh((0.05, 0.07, 0.045))
    if name == "lemon":
        return ellipsoid_mesh((0.032, 0.024, 0.024), subdivisions=10)
    if name == "wine_glass":
        profile = [(0.0, 0.0), (0.028, 0.0), (0.03, 0.004), (0.006, 0.008),
                   (0.004, 0.01), (0.004, 0.055), (0.012, 0.065),
                   (0.028, 0.08), (0.031, 0.105), (0.03, 0.115)]
        return lathe_mesh(profile, segments=28)
    raise ValueError(f"unknown study object '{name}' (choose from {OBJECT_NAMES})")


def _surface_patch(mesh: TriangleMesh, direction, patch_id: str, label: str,
                   n_points: int = 3) -> ContactPatch:
    """Patch of mesh vertices nearest the support point along ``direction``."""
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    anchor = mesh.vertices[np.argmax(mesh.vertices @ d)]
    dist = np.linalg.norm(mesh.vertices - anchor, axis=1)
    idx = np.argsort(dist, kind="stable")[:n_points]
    return ContactPatch(id=patch_id, owner="object",
                        points=mesh.vertices[idx], label=label)


# per-object anchor directions: fingers wrap one side, the thumb opposes them
_FINGER_SPREADS = {
    "bowl": {"z": 0.9},        # grip near the rim
    "box": {"z": 0.15},
    "lemon": {"z": 0.2},
    "wine_glass": {"z": 0.75},  # grip the cup, not the stem
}


def object_patches(name: str, fingers, n_points: int = 3) -> dict:
    """One surface patch per finger; the thumb anchor opposes the rest."""
    mesh = make_object_mesh(name)
    z_bias = _FINGER_SPREADS[name]["z"]
    non_thumb = [f for f in fingers if f != "thumb"]
    patches = {}
    spread = np.linspace(-0.5, 0.5, max(len(non_thumb), 1))
    for f, s in zip(non_thumb, spread):
        d = np.array([-1.0, s, z_bias])
        patches[f"{name}_{f}"] = _surface_patch(mesh, d, f"{name}_{f}", f, n_points)
    if "thumb" in fingers:
        d = np.array([1.0, 0.0, z_bias])
        patches[f"{name}_thumb"] = _surface_patch(mesh, d, f"{name}_thumb",
                                                  "thumb", n_points)
    return patches


def make_study_task(model: HandModel, name: str,
                    object_pose: RigidTransform | None = None,
                    n_points: int = 3) -> GraspTask:
    """Pair every hand fingertip patch with an object surface patch."""
    if object_pose is None:
        object_pose = RigidTransform.from_translation((0.08, 0.0, 0.09))
    fingers = sorted(p.label for p in model.patches.values() if p.owner != "object")
    patches = object_patches(name, fingers, n_points)
    pairs = tuple((f"{f}_tip", f"{name}_{f}") for f in fingers)
    for hand_id, _ in pairs:
        if hand_id not in model.patches:
            raise ValueError(f"model has no fingertip patch '{hand_id}'")
    return GraspTask(name=name, object_pose=object_pose, pairs=pairs,
                     patches=patches, object_mesh_path=f"builtin:{name}")


def resolve_object_mesh(ref: str | None) -> TriangleMesh | None:
    """Resolve a task's object_mesh reference; 'builtin:<name>' is procedural."""
    if ref is None:
        return None
    if ref.startswith("builtin:"):
        return make_object_mesh(ref.split(":", 1)[1])
    from ..mesh import load_mesh
    return load_mesh(ref)
