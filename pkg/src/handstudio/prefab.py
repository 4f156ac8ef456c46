"""Procedural hand models for tests, demos, and the benchmark bank.

Builds anthropomorphic-style hands as box-link chains: a palm, N three-segment
fingers (proximal/intermediate/distal creases as revolute joints about the
local y axis), and optionally a thumb with an extra abduction joint. Joint
names follow the "<finger>_<segment>" convention the coupling fitter uses.
"""

from __future__ import annotations

import numpy as np

from .coupling import CouplingModel
from .hand_model import (BoxGeom, ContactPatch, HandModel, Joint, Link,
                         attach_patch)
from .transforms import RigidTransform

FINGER_NAMES = ("index", "middle", "ring", "pinky")
SEGMENT_LENGTH = 0.03       # m
PALM_SIZE = (0.02, 0.08, 0.08)
FLEX_LIMITS = (0.0, np.pi / 2)


def _segment_link(name: str) -> Link:
    return Link(name=name, geometry=BoxGeom(size=(0.012, 0.014, SEGMENT_LENGTH)))


def make_hand(n_fingers: int = 4, with_thumb: bool = True,
              tip_points: int = 3) -> HandModel:
    """Hand with fingers along +z from the palm top, flexing about local y.

    The thumb mounts on the palm's -y side through a fixed joint named
    "thumb_mount" (the design-study edit target), then an abduction joint
    about z, then the usual three flexion segments.
    """
    if not 1 <= n_fingers <= len(FINGER_NAMES):
        raise ValueError(f"n_fingers must be 1..{len(FINGER_NAMES)}")
    links = {"palm": Link(name="palm", geometry=BoxGeom(size=PALM_SIZE))}
    joints = {}

    def add_finger(finger: str, mount: str, mount_origin: RigidTransform):
        parent = mount
        for si, segment in enumerate(("proximal", "intermediate", "distal")):
            link_name = f"{finger}_{segment}_link"
            joint_name = f"{finger}_{segment}"
            links[link_name] = _segment_link(link_name)
            origin = mount_origin if si == 0 else RigidTransform.from_translation(
                (0, 0, SEGMENT_LENGTH))
            joints[joint_name] = Joint(name=joint_name, kind="revolute",
                                       parent=parent, child=link_name,
                                       origin=origin, axis=(0, 1, 0),
                                       limits=FLEX_LIMITS)
            parent = link_name

    ys = np.linspace(-PALM_SIZE[1] / 2 + 0.012, PALM_SIZE[1] / 2 - 0.012, n_fingers)
    for finger, y in zip(FINGER_NAMES[:n_fingers], ys):
        add_finger(finger, "palm",
                   RigidTransform.from_translation((0, y, PALM_SIZE[2] / 2)))

    if with_thumb:
        links["thumb_base"] = Link(name="thumb_base",
                                   geometry=BoxGeom(size=(0.016, 0.016, 0.016)))
        # mount on the -y palm edge, canted toward the fingers
        mount_origin = RigidTransform.from_axis_angle(
            (1, 0, 0), -np.pi / 3, t=(0, -PALM_SIZE[1] / 2, 0))
        joints["thumb_mount"] = Joint(name="thumb_mount", kind="fixed",
                                      parent="palm", child="thumb_base",
                                      origin=mount_origin)
        links["thumb_abduction_link"] = Link(
            name="thumb_abduction_link", geometry=BoxGeom(size=(0.014, 0.014, 0.014)))
        joints["thumb_abduction"] = Joint(
            name="thumb_abduction", kind="revolute", parent="thumb_base",
            child="thumb_abduction_link",
            origin=RigidTransform.from_translation((0, 0, 0.012)),
            axis=(0, 0, 1), limits=(-np.pi / 3, np.pi / 3))
        add_finger("thumb", "thumb_abduction_link",
                   RigidTransform.from_translation((0, 0, 0.012)))

    model = HandModel(root="palm", links=links, joints=joints)
    fingers = list(FINGER_NAMES[:n_fingers]) + (["thumb"] if with_thumb else [])
    for finger in fingers:
        model = attach_patch(model, fingertip_patch(finger, tip_points))
    return model


def fingertip_patch(finger: str, n_points: int = 3) -> ContactPatch:
    """Small pad patch on the distal link's flexion side (+x face near the tip)."""
    z = np.linspace(SEGMENT_LENGTH * 0.6, SEGMENT_LENGTH * 0.95, n_points)
    pts = np.column_stack([np.full(n_points, 0.006), np.zeros(n_points), z])
    normals = np.tile([1.0, 0.0, 0.0], (n_points, 1))
    return ContactPatch(id=f"{finger}_tip", owner=f"{finger}_distal_link",
                        points=pts, normals=normals, label=finger)


def default_coupling(model: HandModel, m2: float = 0.8, m3: float = 0.6
                     ) -> CouplingModel:
    """Proportional flexion coupling per finger; proximal joints independent.

    Thumb abduction (separately actuated) stays an uncoupled independent DoF.
    """
    fingers = sorted({name.rsplit("_", 1)[0] for name in model.revolute_joints
                      if name.endswith("_proximal")})
    independent, dependent, triplets = [], [], []
    for finger in fingers:
        col = len(independent)
        independent.append(f"{finger}_proximal")
        for coeff, segment in ((m2, "intermediate"), (m3, "distal")):
            row = len(dependent)
            dependent.append(f"{finger}_{segment}")
            triplets.append((row, col, coeff))
    coupling = CouplingModel(independent=tuple(independent),
                             dependent=tuple(dependent),
                             triplets=tuple(triplets))
    return coupling.extended_for_model(model)
