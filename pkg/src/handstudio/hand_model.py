"""URDF-backed hand data model: parsing, validation, serialization, edits.

Only revolute and fixed joints are supported; tendon-driven soft fingers are
modeled as chains of revolute creases. Contact patches live in a JSON sidecar,
not in the URDF itself, so hand files stay compatible with standard tooling.
"""

from __future__ import annotations

import json
import warnings
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field, replace
from pathlib import Path
from xml.dom import minidom

import numpy as np

from .errors import (DuplicateName, KinematicCycle, MalformedXml, MeshError,
                     MissingLink, NonUnitAxis, UnknownJoint, UnknownOwner,
                     UnsupportedJointKind)
from .transforms import RigidTransform, matrix_to_quat

DEFAULT_REVOLUTE_LIMITS = (0.0, np.pi / 2)


class AxisNormalizedWarning(UserWarning):
    """Emitted when a joint axis had to be renormalized during parsing."""


# ---------------------------------------------------------------------------
# geometry references


@dataclass(frozen=True)
class MeshRef:
    filename: str


@dataclass(frozen=True)
class BoxGeom:
    size: tuple  # (x, y, z) meters


@dataclass(frozen=True)
class CylinderGeom:
    radius: float
    length: float


@dataclass(frozen=True)
class SphereGeom:
    radius: float


Geometry = MeshRef | BoxGeom | CylinderGeom | SphereGeom


# ---------------------------------------------------------------------------
# model types


@dataclass(frozen=True)
class Joint:
    name: str
    kind: str                 # "revolute" | "fixed"
    parent: str
    child: str
    origin: RigidTransform = field(default_factory=RigidTransform.identity)
    axis: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0]))
    limits: tuple = DEFAULT_REVOLUTE_LIMITS

    def __post_init__(self):
        object.__setattr__(self, "axis", np.asarray(self.axis, dtype=float).reshape(3))
        if self.kind not in ("revolute", "fixed"):
            raise UnsupportedJointKind(self.name, self.kind)
        if self.kind == "revolute":
            n = np.linalg.norm(self.axis)
            if n < 1e-12:
                raise NonUnitAxis(self.name)
            if abs(n - 1.0) > 1e-9:
                warnings.warn(f"normalized axis of joint '{self.name}'",
                              AxisNormalizedWarning)
                object.__setattr__(self, "axis", self.axis / n)
            lo, hi = self.limits
            if lo > hi:
                raise MalformedXml(
                    f"joint '{self.name}' has lower limit {lo} > upper limit {hi}")


@dataclass(frozen=True)
class ContactPatch:
    id: str
    owner: str                # link name or "object"
    points: np.ndarray        # (n, 3) owner-local, meters
    normals: np.ndarray | None = None
    label: str = ""

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 3)
        if len(pts) < 1:
            raise ValueError(f"patch '{self.id}' has no points")
        if not np.all(np.isfinite(pts)):
            raise ValueError(f"patch '{self.id}' has non-finite points")
        object.__setattr__(self, "points", pts)
        if self.normals is not None:
            nrm = np.asarray(self.normals, dtype=float).reshape(-1, 3)
            if len(nrm) != len(pts):
                raise ValueError(f"patch '{self.id}': normals/points length mismatch")
            norms = np.linalg.norm(nrm, axis=1)
            if np.any(np.abs(norms - 1.0) > 1e-6):
                raise ValueError(f"patch '{self.id}' has non-unit normals")
            object.__setattr__(self, "normals", nrm)


@dataclass(frozen=True)
class Link:
    name: str
    geometry: Geometry | None = None
    patches: tuple = ()       # patch ids attached to this link


@dataclass(frozen=True)
class HandModel:
    root: str
    links: dict               # name -> Link
    joints: dict              # name -> Joint
    patches: dict = field(default_factory=dict)  # id -> ContactPatch
    mesh_dir: str | None = None

    def __post_init__(self):
        _validate_tree(self.root, self.links, self.joints)

    @property
    def revolute_joints(self) -> list:
        """Revolute joint names in a stable parse order."""
        return [j.name for j in self.joints.values() if j.kind == "revolute"]

    def parent_joint_of(self, link: str) -> Joint | None:
        for j in self.joints.values():
            if j.child == link:
                return j
        return None

    def chain_to_root(self, link: str) -> list:
        """Joints from root down to ``link``, in root-first order."""
        chain = []
        current = link
        while current != self.root:
            j = self.parent_joint_of(current)
            chain.append(j)
            current = j.parent
        return list(reversed(chain))

    def subtree_links(self, link: str) -> list:
        out = [link]
        for j in self.joints.values():
            if j.parent == link:
                out.extend(self.subtree_links(j.child))
        return out


def _validate_tree(root: str, links: dict, joints: dict) -> None:
    for j in joints.values():
        if j.parent not in links:
            raise MissingLink(j.parent)
        if j.child not in links:
            raise MissingLink(j.child)
    parents: dict = {}
    for j in joints.values():
        if j.child in parents:
            # A second parent joint for the same link: if following the
            # first parent chain from here leads back, it is a cycle;
            # otherwise the link genuinely has two parents.
            current = j.parent
            seen = set()
            while current not in seen:
                if current == j.child:
                    parents[j.child] = j.parent
                    _raise_cycle(j.child, parents)
                seen.add(current)
                if current not in parents:
                    break
                current = parents[current]
            raise MalformedXml(f"link '{j.child}' has two parent joints")
        parents[j.child] = j.parent
    if root in parents:
        _raise_cycle(root, parents)
    for name in links:
        if name != root and name not in parents:
            raise MalformedXml(f"orphan link '{name}' (no parent joint)")
    # walk each link to the root; revisiting a link means a cycle
    for name in links:
        seen = [name]
        current = name
        while current != root:
            current = parents[current]
            if current in seen:
                _raise_cycle(current, parents)
            seen.append(current)


def _raise_cycle(start: str, parents: dict) -> None:
    path = [start]
    current = parents.get(start)
    while current is not None and current != start:
        path.append(current)
        current = parents.get(current)
    path.append(start)
    raise KinematicCycle(list(reversed(path)))


# ---------------------------------------------------------------------------
# URDF parsing


def _parse_origin(elem) -> RigidTransform:
    if elem is None:
        return RigidTransform.identity()
    try:
        xyz = [float(x) for x in elem.get("xyz", "0 0 0").split()]
        rpy = [float(x) for x in elem.get("rpy", "0 0 0").split()]
    except ValueError as exc:
        raise MalformedXml(f"bad number in <origin>: {exc}") from exc
    if len(xyz) != 3 or len(rpy) != 3:
        raise MalformedXml("<origin> xyz/rpy must have three components")
    return RigidTransform(translation=xyz, rotation=_rpy_to_quat(*rpy))


def _rpy_to_quat(roll: float, pitch: float, yaw: float) -> np.ndarray:
    cr, sr = np.cos(roll / 2), np.sin(roll / 2)
    cp, sp = np.cos(pitch / 2), np.sin(pitch / 2)
    cy, sy = np.cos(yaw / 2), np.sin(yaw / 2)
    # URDF fixed-axis convention: R = Rz(yaw) Ry(pitch) Rx(roll)
    return np.array([
        cy * cp * cr + sy * sp * sr,
        cy * cp * sr - sy * sp * cr,
        cy * sp * cr + sy * cp * sr,
        sy * cp * cr - cy * sp * sr,
    ])


def _quat_to_rpy(q: np.ndarray) -> tuple:
    w, x, y, z = q
    roll = np.arctan2(2 * (w * x + y * z), 1 - 2 * (x * x + y * y))
    pitch = np.arcsin(np.clip(2 * (w * y - z * x), -1.0, 1.0))
    yaw = np.arctan2(2 * (w * z + x * y), 1 - 2 * (y * y + z * z))
    return roll, pitch, yaw


def _parse_geometry(link_elem, link_name: str) -> Geometry | None:
    # visual preferred, collision as fallback
    for tag in ("visual", "collision"):
        node = link_elem.find(tag)
        if node is None:
            continue
        geom = node.find("geometry")
        if geom is None:
            continue
        mesh = geom.find("mesh")
        if mesh is not None:
            scale = mesh.get("scale")
            if scale is not None and any(float(s) != 1.0 for s in scale.split()):
                raise MeshError(
                    f"link '{link_name}': mesh scale must be 1 (meters only)")
            return MeshRef(filename=mesh.get("filename", ""))
        box = geom.find("box")
        if box is not None:
            return BoxGeom(size=tuple(float(x) for x in box.get("size").split()))
        cyl = geom.find("cylinder")
        if cyl is not None:
            return CylinderGeom(radius=float(cyl.get("radius")),
                                length=float(cyl.get("length")))
        sph = geom.find("sphere")
        if sph is not None:
            return SphereGeom(radius=float(sph.get("radius")))
    return None


def parse_urdf(text: str, mesh_dir: str | None = None) -> HandModel:
    """Parse a URDF document into a validated :class:`HandModel`.

    Unsupported joint kinds (prismatic, continuous, planar, floating) are
    rejected. Non-unit revolute axes are normalized with a warning; zero axes
    are an error.
    """
    try:
        root_elem = ET.fromstring(text)
    except ET.ParseError as exc:
        raise MalformedXml(str(exc)) from exc
    if root_elem.tag != "robot":
        raise MalformedXml(f"expected <robot> root element, got <{root_elem.tag}>")

    links: dict = {}
    for link_elem in root_elem.findall("link"):
        name = link_elem.get("name")
        if name is None:
            raise MalformedXml("link without a name")
        if name in links:
            raise DuplicateName(name)
        links[name] = Link(name=name, geometry=_parse_geometry(link_elem, name))

    joints: dict = {}
    for joint_elem in root_elem.findall("joint"):
        name = joint_elem.get("name")
        kind = joint_elem.get("type")
        if name is None or kind is None:
            raise MalformedXml("joint missing name or type")
        if name in joints or name in links:
            raise DuplicateName(name)
        if kind not in ("revolute", "fixed"):
            raise UnsupportedJointKind(name, kind)
        parent = joint_elem.find("parent")
        child = joint_elem.find("child")
        if parent is None or child is None:
            raise MalformedXml(f"joint '{name}' missing parent or child")
        axis_elem = joint_elem.find("axis")
        limit_elem = joint_elem.find("limit")
        try:
            axis = ([float(x) for x in axis_elem.get("xyz").split()]
                    if axis_elem is not None else [1.0, 0.0, 0.0])
            if limit_elem is not None:
                limits = (float(limit_elem.get("lower", 0.0)),
                          float(limit_elem.get("upper", 0.0)))
            else:
                limits = DEFAULT_REVOLUTE_LIMITS
        except ValueError as exc:
            raise MalformedXml(
                f"bad number in joint '{name}': {exc}") from exc
        joints[name] = Joint(
            name=name, kind=kind,
            parent=parent.get("link"), child=child.get("link"),
            origin=_parse_origin(joint_elem.find("origin")),
            axis=axis, limits=limits)

    for j in joints.values():
        if j.parent not in links:
            raise MissingLink(j.parent)
        if j.child not in links:
            raise MissingLink(j.child)
    children = {j.child for j in joints.values()}
    roots = [name for name in links if name not in children]
    if len(links) > 0 and len(roots) != 1:
        if not roots:
            # every link is someone's child: there must be a cycle
            parents = {j.child: j.parent for j in joints.values()}
            _raise_cycle(next(iter(links)), parents)
        raise MalformedXml(f"multiple root links: {sorted(roots)}")
    if not links:
        raise MalformedXml("URDF defines no links")

    return HandModel(root=roots[0], links=links, joints=joints, mesh_dir=mesh_dir)


def load_urdf(path: str | Path) -> HandModel:
    path = Path(path)
    return parse_urdf(path.read_text(), mesh_dir=str(path.parent))


# ---------------------------------------------------------------------------
# serialization


def _fmt(values) -> str:
    return " ".join(repr(float(v)) for v in np.atleast_1d(values))


def serialize_urdf(model: HandModel, name: str = "hand") -> str:
    """Serialize to URDF XML. Contact patches are not emitted (sidecar file)."""
    robot = ET.Element("robot", name=name)
    for link in model.links.values():
        link_elem = ET.SubElement(robot, "link", name=link.name)
        if link.geometry is not None:
            geom = ET.SubElement(ET.SubElement(link_elem, "visual"), "geometry")
            g = link.geometry
            if isinstance(g, MeshRef):
                ET.SubElement(geom, "mesh", filename=g.filename)
            elif isinstance(g, BoxGeom):
                ET.SubElement(geom, "box", size=_fmt(g.size))
            elif isinstance(g, CylinderGeom):
                ET.SubElement(geom, "cylinder", radius=repr(g.radius),
                              length=repr(g.length))
            elif isinstance(g, SphereGeom):
                ET.SubElement(geom, "sphere", radius=repr(g.radius))
    for joint in model.joints.values():
        j = ET.SubElement(robot, "joint", name=joint.name, type=joint.kind)
        rpy = _quat_to_rpy(joint.origin.rotation)
        ET.SubElement(j, "origin", xyz=_fmt(joint.origin.translation), rpy=_fmt(rpy))
        ET.SubElement(j, "parent", link=joint.parent)
        ET.SubElement(j, "child", link=joint.child)
        if joint.kind == "revolute":
            ET.SubElement(j, "axis", xyz=_fmt(joint.axis))
            ET.SubElement(j, "limit", lower=repr(joint.limits[0]),
                          upper=repr(joint.limits[1]))
    rough = ET.tostring(robot, encoding="unicode")
    return minidom.parseString(rough).toprettyxml(indent="  ")


def semantic_equal(a: HandModel, b: HandModel, tol: float = 1e-9) -> bool:
    """Structural equality with numeric tolerance; ignores patch sidecar data."""
    if a.root != b.root or set(a.links) != set(b.links) or set(a.joints) != set(b.joints):
        return False
    for name, la in a.links.items():
        if la.geometry != b.links[name].geometry:
            return False
    for name, ja in a.joints.items():
        jb = b.joints[name]
        if (ja.kind != jb.kind or ja.parent != jb.parent or ja.child != jb.child):
            return False
        if not ja.origin.almost_equal(jb.origin, tol):
            return False
        if ja.kind == "revolute":
            if np.max(np.abs(ja.axis - jb.axis)) > tol:
                return False
            if np.max(np.abs(np.array(ja.limits) - np.array(jb.limits))) > tol:
                return False
    return True


# ---------------------------------------------------------------------------
# edits


def apply_joint_edit(model: HandModel, joint: str, delta: RigidTransform) -> HandModel:
    """New model with the named joint's origin pre-composed with ``delta``.

    The delta acts in the parent-link frame (new_origin = delta ∘ origin), so a
    pure translation slides the whole child subtree along the parent frame.
    """
    if joint not in model.joints:
        raise UnknownJoint(joint)
    old = model.joints[joint]
    new_joint = replace(old, origin=delta @ old.origin)
    joints = dict(model.joints)
    joints[joint] = new_joint
    return HandModel(root=model.root, links=model.links, joints=joints,
                     patches=model.patches, mesh_dir=model.mesh_dir)


def attach_patch(model: HandModel, patch: ContactPatch) -> HandModel:
    """Register a contact patch; an existing patch with the same id is replaced."""
    if patch.owner != "object" and patch.owner not in model.links:
        raise UnknownOwner(patch.owner)
    patches = dict(model.patches)
    links = dict(model.links)
    prior = patches.get(patch.id)
    if prior is not None and prior.owner != "object" and prior.owner != patch.owner:
        old_link = links[prior.owner]
        links[prior.owner] = replace(
            old_link, patches=tuple(p for p in old_link.patches if p != patch.id))
    patches[patch.id] = patch
    if patch.owner != "object":
        link = links[patch.owner]
        if patch.id not in link.patches:
            links[patch.owner] = replace(link, patches=link.patches + (patch.id,))
    return HandModel(root=model.root, links=links, joints=model.joints,
                     patches=patches, mesh_dir=model.mesh_dir)


# ---------------------------------------------------------------------------
# patch sidecar (JSON)


def patch_to_json(patch: ContactPatch) -> dict:
    out = {"id": patch.id, "owner": patch.owner,
           "points": patch.points.tolist(), "label": patch.label}
    if patch.normals is not None:
        out["normals"] = patch.normals.tolist()
    return out


def patch_from_json(obj: dict) -> ContactPatch:
    return ContactPatch(id=obj["id"], owner=obj["owner"],
                        points=np.array(obj["points"], dtype=float),
                        normals=(np.array(obj["normals"], dtype=float)
                                 if obj.get("normals") else None),
                        label=obj.get("label", ""))


def load_patch_sidecar(model: HandModel, path: str | Path) -> HandModel:
    data = json.loads(Path(path).read_text())
    for obj in data["patches"]:
        model = attach_patch(model, patch_from_json(obj))
    return model


def save_patch_sidecar(model: HandModel, path: str | Path) -> None:
    data = {"patches": [patch_to_json(p) for p in model.patches.values()]}
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True))
