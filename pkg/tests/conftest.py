import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import handstudio as hs
from handstudio import prefab
from handstudio.hand_model import ContactPatch


TWO_LINK_URDF = """\
<robot name="two_link">
  <link name="base"/>
  <link name="tip"/>
  <joint name="hinge" type="revolute">
    <origin xyz="0.04 0 0" rpy="0 0 0"/>
    <parent link="base"/>
    <child link="tip"/>
    <axis xyz="0 0 1"/>
    <limit lower="0" upper="1.5707963267948966"/>
  </joint>
</robot>
"""


@pytest.fixture
def two_link_model():
    return hs.parse_urdf(TWO_LINK_URDF)


@pytest.fixture
def small_hand():
    return prefab.make_hand(n_fingers=2, with_thumb=True)


@pytest.fixture
def full_hand():
    return prefab.make_hand(n_fingers=4, with_thumb=True)


def random_chain_model(rng, n_joints=5, tree=False):
    """Random revolute/fixed chain (or tree) built directly from model types."""
    from handstudio.hand_model import HandModel, Joint, Link

    links = {"link0": Link(name="link0")}
    joints = {}
    link_names = ["link0"]
    for i in range(n_joints):
        parent = link_names[int(rng.integers(len(link_names)))] if tree \
            else link_names[-1]
        child = f"link{i + 1}"
        links[child] = Link(name=child)
        kind = "revolute" if rng.random() > 0.15 else "fixed"
        axis = rng.normal(size=3)
        axis = axis / np.linalg.norm(axis)
        origin = hs.RigidTransform.from_rotvec(
            rng.uniform(-1.5, 1.5, 3), t=rng.uniform(-0.1, 0.1, 3))
        joints[f"joint{i}"] = Joint(
            name=f"joint{i}", kind=kind, parent=parent, child=child,
            origin=origin, axis=axis, limits=(-np.pi, np.pi))
        link_names.append(child)
    return HandModel(root="link0", links=links, joints=joints)


def random_angles(model, rng):
    return hs.JointAngles({n: float(rng.uniform(-np.pi, np.pi))
                           for n in model.revolute_joints})


def feasible_task(model, coupling, theta_star, base_star, name="feasible",
                  noise=0.0, rng=None):
    """Task whose object patches are FK images of a known reachable pose."""
    angles = hs.expand_angles(coupling, theta_star)
    poses = hs.forward_kinematics(model, angles, base_star)
    patches, pairs = {}, []
    for pid, patch in sorted(model.patches.items()):
        if patch.owner == "object":
            continue
        w = hs.patch_world_points(model, poses, patch)
        if noise and rng is not None:
            w = w + rng.normal(0.0, noise, w.shape)
        obj = ContactPatch(id=f"obj_{pid}", owner="object", points=w,
                           label=patch.label)
        patches[obj.id] = obj
        pairs.append((pid, obj.id))
    return hs.GraspTask(name=name, object_pose=hs.RigidTransform.identity(),
                        pairs=tuple(pairs), patches=patches)
