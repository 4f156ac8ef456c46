import numpy as np
import pytest

from handstudio.errors import MissingAngle, UnknownLink
from handstudio.kinematics import (JointAngles, finite_difference_point_jacobian,
                                   forward_kinematics, patch_world_points,
                                   point_jacobian)
from handstudio.prefab import make_hand
from handstudio.transforms import RigidTransform

from conftest import random_angles, random_chain_model, two_link_model  # noqa: F401
from oracles import fk_matrix_oracle, homogeneous, transform_matrix


def test_two_link_closed_form(two_link_model):
    for theta in (0.0, 0.3, np.pi / 2):
        poses = forward_kinematics(two_link_model,
                                   JointAngles({"hinge": theta}))
        tip = poses["tip"]
        assert np.allclose(tip.translation, [0.04, 0, 0], atol=1e-12)
        R = tip.rotation_matrix()
        c, s = np.cos(theta), np.sin(theta)
        assert np.allclose(R, [[c, -s, 0], [s, c, 0], [0, 0, 1]], atol=1e-12)


def test_fk_matches_matrix_oracle_random_trees():
    rng = np.random.default_rng(11)
    for trial in range(50):
        model = random_chain_model(rng, n_joints=rng.integers(1, 9),
                                   tree=bool(trial % 2))
        angles = random_angles(model, rng)
        base = RigidTransform.from_rotvec(rng.uniform(-1, 1, 3),
                                          t=rng.uniform(-0.2, 0.2, 3))
        poses = forward_kinematics(model, angles, base)
        oracle = fk_matrix_oracle(model, angles.values,
                                  transform_matrix(base))
        for link, M in oracle.items():
            assert np.allclose(transform_matrix(poses[link]), M, atol=1e-9), link


def test_fk_base_equivariance():
    rng = np.random.default_rng(12)
    model = random_chain_model(rng, n_joints=6, tree=True)
    angles = random_angles(model, rng)
    base = RigidTransform.from_rotvec([0.4, -0.2, 0.9], t=[0.1, 0, -0.05])
    ident = forward_kinematics(model, angles)
    moved = forward_kinematics(model, angles, base)
    for link in model.links:
        assert moved[link].almost_equal(base @ ident[link], 1e-10)


def test_fk_unbent_subtree_unchanged():
    model = make_hand(n_fingers=2, with_thumb=False)
    zeros = JointAngles.zeros(model)
    bent = dict(zeros.values)
    bent["index_proximal"] = 0.7
    p0 = forward_kinematics(model, zeros)
    p1 = forward_kinematics(model, JointAngles(bent))
    # middle finger is untouched by an index joint
    for link in model.subtree_links("middle_proximal_link"):
        assert p1[link].almost_equal(p0[link], 1e-12)
    assert not p1["index_distal_link"].almost_equal(p0["index_distal_link"], 1e-6)


def test_missing_angle_raises(two_link_model):
    with pytest.raises(MissingAngle):
        forward_kinematics(two_link_model, JointAngles({}))


def test_unknown_link_raises(two_link_model):
    with pytest.raises(UnknownLink):
        point_jacobian(two_link_model, JointAngles({"hinge": 0.1}),
                       RigidTransform.identity(), "ghost", [0, 0, 0])


def test_patch_world_points_object_pose(two_link_model):
    from handstudio.hand_model import ContactPatch
    patch = ContactPatch(id="obj_p", owner="object",
                         points=[[0.01, 0.0, 0.0]], normals=[[1.0, 0, 0]])
    poses = forward_kinematics(two_link_model, JointAngles({"hinge": 0.0}))
    pose = RigidTransform(translation=(0.1, 0.2, 0.3))
    pts = patch_world_points(two_link_model, poses, patch, object_pose=pose)
    assert np.allclose(pts, [[0.11, 0.2, 0.3]], atol=1e-12)


def test_point_jacobian_matches_finite_differences():
    rng = np.random.default_rng(13)
    for trial in range(30):
        model = random_chain_model(rng, n_joints=rng.integers(2, 8),
                                   tree=bool(trial % 2))
        angles = random_angles(model, rng)
        base = RigidTransform.from_rotvec(rng.uniform(-1, 1, 3),
                                          t=rng.uniform(-0.1, 0.1, 3))
        link = rng.choice(list(model.links))
        point = rng.uniform(-0.03, 0.03, 3)
        names_a, J_a = point_jacobian(model, angles, base, link, point)
        names_f, J_f = finite_difference_point_jacobian(
            model, angles, base, link, point)
        assert names_a == names_f
        assert np.allclose(J_a, J_f, atol=1e-6)


def test_point_jacobian_off_path_joints_omitted():
    model = make_hand(n_fingers=2, with_thumb=False)
    angles = JointAngles.zeros(model)
    names, J = point_jacobian(model, angles, RigidTransform.identity(),
                              "index_distal_link", [0.0, 0.0, 0.01])
    assert all(n.startswith("index_") for n in names)
    assert J.shape == (3, 3)
