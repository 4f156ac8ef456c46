"""Scene export: a self-contained JSON document the viewer renders directly.

Mesh payloads are inlined (vertex/face lists), so the UI needs no filesystem
access. Link transforms are the forward-kinematics poses of the solved
configuration.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..hand_model import (BoxGeom, CylinderGeom, HandModel, MeshRef, SphereGeom)
from ..kinematics import forward_kinematics, patch_world_points
from ..mesh import TriangleMesh, box_mesh, cylinder_mesh, load_mesh, sphere_mesh
from ..objective import GraspTask
from ..synthesis import GraspSolution, solution_to_json
from ..transforms import RigidTransform
from .objects import resolve_object_mesh

SCENE_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": ["links", "object", "patches", "solution"],
    "properties": {
        "links": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "transform"],
                "properties": {
                    "name": {"type": "string"},
                    "transform": {"$ref": "#/definitions/transform"},
                    "geometry": {"oneOf": [{"$ref": "#/definitions/geometry"},
                                           {"type": "null"}]},
                },
            },
        },
        "object": {
            "type": "object",
            "required": ["transform"],
            "properties": {
                "transform": {"$ref": "#/definitions/transform"},
                "geometry": {"oneOf": [{"$ref": "#/definitions/geometry"},
                                       {"type": "null"}]},
            },
        },
        "patches": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "owner", "world_points", "label"],
                "properties": {
                    "id": {"type": "string"},
                    "owner": {"type": "string"},
                    "world_points": {"type": "array",
                                     "items": {"type": "array",
                                               "items": {"type": "number"},
                                               "minItems": 3, "maxItems": 3}},
                    "label": {"type": "string"},
                },
            },
        },
        "solution": {"type": "object"},
    },
    "definitions": {
        "transform": {
            "type": "object",
            "required": ["translation", "rotation_wxyz"],
            "properties": {
                "translation": {"type": "array", "items": {"type": "number"},
                                "minItems": 3, "maxItems": 3},
                "rotation_wxyz": {"type": "array", "items": {"type": "number"},
                                  "minItems": 4, "maxItems": 4},
            },
        },
        "geometry": {
            "type": "object",
            "required": ["vertices", "faces"],
            "properties": {
                "vertices": {"type": "array",
                             "items": {"type": "array", "items": {"type": "number"},
                                       "minItems": 3, "maxItems": 3}},
                "faces": {"type": "array",
                          "items": {"type": "array", "items": {"type": "integer"},
                                    "minItems": 3, "maxItems": 3}},
            },
        },
    },
}


def _transform_json(pose: RigidTransform) -> dict:
    return {"translation": pose.translation.tolist(),
            "rotation_wxyz": pose.rotation.tolist()}


def _mesh_json(mesh: TriangleMesh) -> dict:
    return {"vertices": mesh.vertices.tolist(),
            "faces": mesh.faces.astype(int).tolist()}


def _link_geometry(model: HandModel, link) -> dict | None:
    g = link.geometry
    if g is None:
        return None
    if isinstance(g, BoxGeom):
        return _mesh_json(box_mesh(g.size))
    if isinstance(g, CylinderGeom):
        return _mesh_json(cylinder_mesh(g.radius, g.length))
    if isinstance(g, SphereGeom):
        return _mesh_json(sphere_mesh(g.radius))
    if isinstance(g, MeshRef):
        base = Path(model.mesh_dir) if model.mesh_dir else Path(".")
        return _mesh_json(load_mesh(base / g.filename))
    return None


def build_scene(model: HandModel, task: GraspTask,
                solution: GraspSolution) -> dict:
    """Assemble the renderable scene for one solved grasp."""
    poses = forward_kinematics(model, solution.full_angles,
                               solution.vars.base_pose())
    links = [{"name": link.name,
              "transform": _transform_json(poses[link.name]),
              "geometry": _link_geometry(model, link)}
             for link in model.links.values()]
    obj_mesh = resolve_object_mesh(task.object_mesh_path)
    obj = {"transform": _transform_json(task.object_pose),
           "geometry": _mesh_json(obj_mesh) if obj_mesh is not None else None}
    patches = []
    for patch in model.patches.values():
        if patch.owner == "object":
            continue
        pts = patch_world_points(model, poses, patch)
        patches.append({"id": patch.id, "owner": patch.owner,
                        "world_points": pts.tolist(), "label": patch.label})
    for patch in task.patches.values():
        pts = task.object_pose.apply(patch.points)
        patches.append({"id": patch.id, "owner": "object",
                        "world_points": np.asarray(pts).tolist(),
                        "label": patch.label})
    return {"links": links, "object": obj, "patches": patches,
            "solution": solution_to_json(solution), "task": task.name}


def save_scene(scene: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scene, indent=2, sort_keys=True))


def validate_scene(scene: dict) -> None:
    """Raise jsonschema.ValidationError when the document is malformed."""
    import jsonschema
    jsonschema.validate(scene, SCENE_SCHEMA)
