import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from handstudio.transforms import (RigidTransform, quat_from_rotvec,
                                   quat_to_rotvec, rotvec_right_jacobian)

from oracles import rodrigues_matrix, transform_matrix


def rand_transform(rng):
    return RigidTransform.from_rotvec(rng.uniform(-2, 2, 3),
                                      t=rng.uniform(-1, 1, 3))


def test_identity_and_inverse():
    rng = np.random.default_rng(0)
    for _ in range(20):
        T = rand_transform(rng)
        assert (T @ T.inverse()).almost_equal(RigidTransform.identity(), 1e-12)
        assert (T.inverse() @ T).almost_equal(RigidTransform.identity(), 1e-12)


def test_quaternion_stays_unit_after_composition():
    rng = np.random.default_rng(1)
    T = RigidTransform.identity()
    for _ in range(1000):
        T = T @ rand_transform(rng)
        assert abs(np.linalg.norm(T.rotation) - 1.0) < 1e-9


def test_composition_associative():
    rng = np.random.default_rng(2)
    for _ in range(50):
        A, B, C = (rand_transform(rng) for _ in range(3))
        assert ((A @ B) @ C).almost_equal(A @ (B @ C), 1e-12)


def test_matches_matrix_composition():
    rng = np.random.default_rng(3)
    for _ in range(50):
        A, B = rand_transform(rng), rand_transform(rng)
        M = transform_matrix(A) @ transform_matrix(B)
        assert np.allclose(transform_matrix(A @ B), M, atol=1e-10)


def test_apply_matches_rodrigues():
    rng = np.random.default_rng(4)
    for _ in range(50):
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        angle = rng.uniform(-np.pi, np.pi)
        t = rng.uniform(-1, 1, 3)
        T = RigidTransform.from_axis_angle(axis, angle, t=t)
        p = rng.uniform(-1, 1, 3)
        expected = rodrigues_matrix(axis, angle) @ p + t
        assert np.allclose(T.apply(p), expected, atol=1e-12)


def test_rotvec_roundtrip():
    rng = np.random.default_rng(5)
    for _ in range(100):
        r = rng.uniform(-1, 1, 3) * rng.uniform(0, 3)
        if np.linalg.norm(r) >= np.pi:
            continue
        back = quat_to_rotvec(quat_from_rotvec(r))
        assert np.allclose(back, r, atol=1e-10)


def test_right_jacobian_matches_finite_differences():
    rng = np.random.default_rng(6)
    for _ in range(30):
        r = rng.uniform(-1.2, 1.2, 3)
        u = rng.uniform(-1, 1, 3)
        Jr = rotvec_right_jacobian(r)

        def f(rv):
            return RigidTransform.from_rotvec(rv).apply(u)

        h = 1e-7
        for j in range(3):
            dr = np.zeros(3)
            dr[j] = h
            fd = (f(r + dr) - f(r - dr)) / (2 * h)
            R = RigidTransform.from_rotvec(r).rotation_matrix()
            K = np.array([[0, -u[2], u[1]], [u[2], 0, -u[0]], [-u[1], u[0], 0]])
            analytic = -R @ K @ Jr[:, j]
            assert np.allclose(fd, analytic, atol=1e-6)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-1.5, 1.5), min_size=3, max_size=3),
       st.lists(st.floats(-1.0, 1.0), min_size=3, max_size=3))
def test_construction_normalizes(rotvec, point):
    T = RigidTransform.from_rotvec(rotvec)
    assert abs(np.linalg.norm(T.rotation) - 1.0) < 1e-9
    p = T.apply(point)
    assert np.allclose(np.linalg.norm(p), np.linalg.norm(point), atol=1e-9)


def test_bad_quaternion_rejected():
    with pytest.raises(ValueError):
        RigidTransform(rotation=[1.0, 1.0, 0.0, 0.0])
