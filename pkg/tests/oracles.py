"""Independent oracles used by the test suite.

These deliberately avoid the library's quaternion code paths: rotations are
built with the Rodrigues matrix formula and poses composed as homogeneous
4x4 matrix products, so FK/Jacobian checks cross two independent
implementations.
"""

from __future__ import annotations

import numpy as np


def rodrigues_matrix(axis, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    K = np.array([[0, -axis[2], axis[1]],
                  [axis[2], 0, -axis[0]],
                  [-axis[1], axis[0], 0]])
    return np.eye(3) + np.sin(angle) * K + (1 - np.cos(angle)) * (K @ K)


def homogeneous(R: np.ndarray, t) -> np.ndarray:
    T = np.eye(4)
    T[:3, :3] = R
    T[:3, 3] = t
    return T


def rpy_matrix(roll, pitch, yaw) -> np.ndarray:
    return (rodrigues_matrix([0, 0, 1], yaw)
            @ rodrigues_matrix([0, 1, 0], pitch)
            @ rodrigues_matrix([1, 0, 0], roll))


def transform_matrix(pose) -> np.ndarray:
    """Homogeneous matrix of a RigidTransform, via its quaternion-free fields."""
    w, x, y, z = pose.rotation
    # independent quaternion-to-matrix path (different formula arrangement)
    angle = 2 * np.arccos(np.clip(w, -1, 1))
    s = np.linalg.norm([x, y, z])
    R = np.eye(3) if s < 1e-15 else rodrigues_matrix([x, y, z], angle)
    return homogeneous(R, pose.translation)


def fk_matrix_oracle(model, angle_values: dict, base_matrix: np.ndarray) -> dict:
    """Naive homogeneous-matrix-product forward kinematics over the tree."""
    world = {model.root: base_matrix}
    remaining = list(model.joints.values())
    while remaining:
        progressed = False
        for joint in list(remaining):
            if joint.parent in world:
                local = transform_matrix(joint.origin)
                if joint.kind == "revolute":
                    local = local @ homogeneous(
                        rodrigues_matrix(joint.axis, angle_values[joint.name]),
                        [0, 0, 0])
                world[joint.child] = world[joint.parent] @ local
                remaining.remove(joint)
                progressed = True
        assert progressed, "disconnected model"
    return world


def zero_intercept_slope(t1: np.ndarray, tk: np.ndarray) -> float:
    """Closed-form normal equation for theta_k = m * theta_1."""
    t1 = np.asarray(t1, dtype=float)
    tk = np.asarray(tk, dtype=float)
    return float(np.sum(t1 * tk) / np.sum(t1 * t1))


def brute_force_nearest(hand_pts: np.ndarray, obj_pts: np.ndarray) -> np.ndarray:
    """Exhaustive O(nm) nearest assignment with lowest-index tie-break."""
    out = np.zeros(len(hand_pts), dtype=int)
    for i, h in enumerate(hand_pts):
        best, best_d = 0, np.inf
        for j, o in enumerate(obj_pts):
            d = float(np.sum((h - o) ** 2))
            if d < best_d:
                best, best_d = j, d
        out[i] = best
    return out


def pairwise_energy(hand_pts: np.ndarray, obj_pts: np.ndarray) -> float:
    """Naive double-loop mean squared corresponded distance."""
    total = 0.0
    for h, o in zip(hand_pts, obj_pts):
        total += sum((hi - oi) ** 2 for hi, oi in zip(h, o))
    return total / len(hand_pts)


def line_grid_search(f, x_from: float, x_to: float, refinements: int = 8,
                     samples: int = 201) -> float:
    """1-D grid search with interval refinement; returns the best x."""
    lo, hi = x_from, x_to
    best_x = lo
    for _ in range(refinements):
        xs = np.linspace(lo, hi, samples)
        vals = [f(x) for x in xs]
        i = int(np.argmin(vals))
        best_x = xs[i]
        span = (hi - lo) / (samples - 1)
        lo, hi = best_x - 2 * span, best_x + 2 * span
    return best_x
