"""Rigid transforms backed by unit quaternions (w-x-y-z order)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_QUAT_NORM_TOL = 1e-9


def _as_vec3(v) -> np.ndarray:
    a = np.asarray(v, dtype=float).reshape(3)
    if not np.all(np.isfinite(a)):
        raise ValueError("non-finite 3-vector")
    return a


def quat_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hamilton product, both in wxyz order."""
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def quat_conjugate(q: np.ndarray) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotate vector(s) v by unit quaternion q. v can be (3,) or (n, 3)."""
    R = quat_to_matrix(q)
    return np.asarray(v, dtype=float) @ R.T


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def quat_from_axis_angle(axis: np.ndarray, angle: float) -> np.ndarray:
    axis = _as_vec3(axis)
    n = np.linalg.norm(axis)
    if n == 0:
        raise ValueError("zero rotation axis")
    axis = axis / n
    half = 0.5 * angle
    return np.concatenate([[np.cos(half)], np.sin(half) * axis])


def quat_from_rotvec(r: np.ndarray) -> np.ndarray:
    r = _as_vec3(r)
    theta = np.linalg.norm(r)
    if theta < 1e-12:
        # first-order expansion keeps unit norm after renormalization
        q = np.concatenate([[1.0], 0.5 * r])
        return q / np.linalg.norm(q)
    return quat_from_axis_angle(r, theta)


def quat_to_rotvec(q: np.ndarray) -> np.ndarray:
    w = np.clip(q[0], -1.0, 1.0)
    v = q[1:]
    s = np.linalg.norm(v)
    if s < 1e-12:
        return 2.0 * v * np.sign(w if w != 0 else 1.0)
    angle = 2.0 * np.arctan2(s, w)
    if angle > np.pi:
        angle -= 2.0 * np.pi
    return angle * v / s


def matrix_to_quat(R: np.ndarray) -> np.ndarray:
    # Shepperd's method, stable for all rotation matrices
    R = np.asarray(R, dtype=float)
    t = np.trace(R)
    if t > 0:
        s = np.sqrt(t + 1.0) * 2
        q = np.array([0.25 * s,
                      (R[2, 1] - R[1, 2]) / s,
                      (R[0, 2] - R[2, 0]) / s,
                      (R[1, 0] - R[0, 1]) / s])
    else:
        i = int(np.argmax(np.diag(R)))
        if i == 0:
            s = np.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2]) * 2
            q = np.array([(R[2, 1] - R[1, 2]) / s, 0.25 * s,
                          (R[0, 1] + R[1, 0]) / s, (R[0, 2] + R[2, 0]) / s])
        elif i == 1:
            s = np.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2]) * 2
            q = np.array([(R[0, 2] - R[2, 0]) / s, (R[0, 1] + R[1, 0]) / s,
                          0.25 * s, (R[1, 2] + R[2, 1]) / s])
        else:
            s = np.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1]) * 2
            q = np.array([(R[1, 0] - R[0, 1]) / s, (R[0, 2] + R[2, 0]) / s,
                          (R[1, 2] + R[2, 1]) / s, 0.25 * s])
    return q / np.linalg.norm(q)


def rotvec_right_jacobian(r: np.ndarray) -> np.ndarray:
    """Right Jacobian of the exponential map on SO(3).

    Satisfies d/dr [exp(r) u] = -exp(r) [u]x Jr(r) for a fixed vector u.
    """
    r = _as_vec3(r)
    theta = np.linalg.norm(r)
    K = skew(r)
    if theta < 1e-6:
        return np.eye(3) - 0.5 * K + (K @ K) / 6.0
    t2 = theta * theta
    return (np.eye(3)
            - (1 - np.cos(theta)) / t2 * K
            + (theta - np.sin(theta)) / (t2 * theta) * (K @ K))


def skew(v: np.ndarray) -> np.ndarray:
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


@dataclass(frozen=True)
class RigidTransform:
    """Proper rigid motion: rotation (unit quaternion, wxyz) then translation."""

    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))
    rotation: np.ndarray = field(default_factory=lambda: np.array([1.0, 0, 0, 0]))

    def __post_init__(self):
        t = _as_vec3(self.translation)
        q = np.asarray(self.rotation, dtype=float).reshape(4)
        n = np.linalg.norm(q)
        if abs(n - 1.0) > 1e-6:
            raise ValueError(f"quaternion norm {n} too far from 1")
        q = q / n
        object.__setattr__(self, "translation", t)
        object.__setattr__(self, "rotation", q)

    @staticmethod
    def identity() -> "RigidTransform":
        return RigidTransform()

    @staticmethod
    def from_translation(t) -> "RigidTransform":
        return RigidTransform(translation=_as_vec3(t))

    @staticmethod
    def from_rotvec(r, t=(0.0, 0.0, 0.0)) -> "RigidTransform":
        return RigidTransform(translation=_as_vec3(t), rotation=quat_from_rotvec(r))

    @staticmethod
    def from_axis_angle(axis, angle, t=(0.0, 0.0, 0.0)) -> "RigidTransform":
        return RigidTransform(translation=_as_vec3(t),
                              rotation=quat_from_axis_angle(axis, angle))

    @staticmethod
    def from_matrix(T: np.ndarray) -> "RigidTransform":
        T = np.asarray(T, dtype=float)
        return RigidTransform(translation=T[:3, 3], rotation=matrix_to_quat(T[:3, :3]))

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """self ∘ other: apply other first, then self."""
        q = quat_multiply(self.rotation, other.rotation)
        q = q / np.linalg.norm(q)
        t = self.translation + quat_rotate(self.rotation, other.translation)
        return RigidTransform(translation=t, rotation=q)

    def __matmul__(self, other: "RigidTransform") -> "RigidTransform":
        return self.compose(other)

    def inverse(self) -> "RigidTransform":
        qinv = quat_conjugate(self.rotation)
        return RigidTransform(translation=-quat_rotate(qinv, self.translation),
                              rotation=qinv)

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Transform point(s), shape (3,) or (n, 3)."""
        p = np.asarray(points, dtype=float)
        return quat_rotate(self.rotation, p) + self.translation

    def rotate(self, vectors: np.ndarray) -> np.ndarray:
        """Rotate direction vector(s) (no translation)."""
        return quat_rotate(self.rotation, np.asarray(vectors, dtype=float))

    def to_matrix(self) -> np.ndarray:
        T = np.eye(4)
        T[:3, :3] = quat_to_matrix(self.rotation)
        T[:3, 3] = self.translation
        return T

    def rotation_matrix(self) -> np.ndarray:
        return quat_to_matrix(self.rotation)

    def rotvec(self) -> np.ndarray:
        return quat_to_rotvec(self.rotation)

    def almost_equal(self, other: "RigidTransform", tol: float = 1e-9) -> bool:
        dt = np.max(np.abs(self.translation - other.translation))
        # q and -q are the same rotation
        dq = min(np.max(np.abs(self.rotation - other.rotation)),
                 np.max(np.abs(self.rotation + other.rotation)))
        return dt <= tol and dq <= tol

    def __repr__(self):
        t = np.array2string(self.translation, precision=6)
        q = np.array2string(self.rotation, precision=6)
        return f"RigidTransform(t={t}, q={q})"
