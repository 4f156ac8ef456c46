"""Tendon-coupling model: dependent joints track independent ones linearly.

Dependent angles satisfy M·theta_I - theta_D = 0, with M a sparse weighting
matrix fit per finger from recorded flexion trajectories (zero-intercept least
squares; the proximal joint of each finger is the independent DoF).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (DegenerateData, DimensionMismatch, InsufficientData,
                     MissingAngle)
from .hand_model import HandModel
from .kinematics import JointAngles

SEGMENT_NAMES = ("proximal", "intermediate", "distal")


@dataclass(frozen=True)
class CouplingModel:
    independent: tuple        # ordered joint names (theta_I)
    dependent: tuple          # ordered joint names (theta_D)
    triplets: tuple           # (row, col, value) entries of sparse M

    def __post_init__(self):
        object.__setattr__(self, "independent", tuple(self.independent))
        object.__setattr__(self, "dependent", tuple(self.dependent))
        trips = tuple((int(r), int(c), float(v)) for r, c, v in self.triplets)
        if set(self.independent) & set(self.dependent):
            raise ValueError("independent and dependent joint sets overlap")
        rows_seen = set()
        for r, c, v in trips:
            if not (0 <= r < len(self.dependent)) or not (0 <= c < len(self.independent)):
                raise ValueError(f"triplet ({r},{c}) out of range")
            if not np.isfinite(v):
                raise ValueError("non-finite coupling coefficient")
            if v != 0.0:
                rows_seen.add(r)
        if len(self.dependent) and rows_seen != set(range(len(self.dependent))):
            missing = sorted(set(range(len(self.dependent))) - rows_seen)
            raise ValueError(f"dependent rows without coefficients: {missing}")
        object.__setattr__(self, "triplets", trips)

    @property
    def matrix(self) -> np.ndarray:
        """Dense |dependent| × |independent| weighting matrix."""
        M = np.zeros((len(self.dependent), len(self.independent)))
        for r, c, v in self.triplets:
            M[r, c] += v
        return M

    def covers(self, model: HandModel) -> bool:
        return set(self.independent) | set(self.dependent) == set(model.revolute_joints)

    def extended_for_model(self, model: HandModel) -> "CouplingModel":
        """Add any revolute joints absent from the coupling as independent DoFs.

        Separately actuated joints (e.g. thumb adduction/abduction tendons) are
        not coupled to anything; they become extra columns with zero entries.
        """
        covered = set(self.independent) | set(self.dependent)
        extra = [j for j in model.revolute_joints if j not in covered]
        if not extra:
            return self
        return CouplingModel(independent=self.independent + tuple(extra),
                             dependent=self.dependent, triplets=self.triplets)


def expand_angles(coupling: CouplingModel, theta_I) -> JointAngles:
    """Expand independent controls to the full joint vector via theta_D = M·theta_I.

    ``theta_I`` is a vector ordered as ``coupling.independent`` or a mapping
    from joint name to angle.
    """
    if isinstance(theta_I, dict):
        missing = [n for n in coupling.independent if n not in theta_I]
        if missing:
            raise MissingAngle(missing[0])
        theta_I = [theta_I[n] for n in coupling.independent]
    theta_I = np.asarray(theta_I, dtype=float).reshape(-1)
    if len(theta_I) != len(coupling.independent):
        raise DimensionMismatch(
            f"expected {len(coupling.independent)} independent angles, "
            f"got {len(theta_I)}")
    theta_D = coupling.matrix @ theta_I
    values = dict(zip(coupling.independent, theta_I))
    values.update(zip(coupling.dependent, theta_D))
    return JointAngles(values, clamped=False)


def constraint_residual(coupling: CouplingModel, angles: JointAngles) -> np.ndarray:
    """M·theta_I − theta_D, ordered as coupling.dependent."""
    for name in coupling.independent + coupling.dependent:
        if name not in angles.values:
            raise MissingAngle(name)
    theta_I = angles.vector(coupling.independent)
    theta_D = angles.vector(coupling.dependent)
    return coupling.matrix @ theta_I - theta_D


# ---------------------------------------------------------------------------
# trajectory data and fitting


@dataclass(frozen=True)
class TrajectorySample:
    motion_id: str
    finger: str
    theta1: float
    theta2: float
    theta3: float


@dataclass(frozen=True)
class JointTrajectoryDataset:
    records: tuple
    source_note: str = ""

    def __post_init__(self):
        recs = tuple(self.records)
        for r in recs:
            if not all(np.isfinite([r.theta1, r.theta2, r.theta3])):
                raise ValueError(f"non-finite sample for finger '{r.finger}'")
        object.__setattr__(self, "records", recs)

    def fingers(self) -> list:
        return sorted({r.finger for r in self.records})

    def by_finger(self, finger: str) -> list:
        return [r for r in self.records if r.finger == finger]


TRAJECTORY_HEADER = ["motion_id", "finger", "theta1_rad", "theta2_rad", "theta3_rad"]


def load_trajectory_csv(path: str | Path) -> JointTrajectoryDataset:
    path = Path(path)
    records = []
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != TRAJECTORY_HEADER:
            raise ValueError(
                f"row 1: expected header {','.join(TRAJECTORY_HEADER)}")
        for i, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise ValueError(f"row {i}: expected 5 columns, got {len(row)}")
            try:
                records.append(TrajectorySample(
                    motion_id=row[0], finger=row[1],
                    theta1=float(row[2]), theta2=float(row[3]), theta3=float(row[4])))
            except ValueError as exc:
                raise ValueError(f"row {i}: {exc}") from None
    return JointTrajectoryDataset(records=tuple(records), source_note=str(path))


def save_trajectory_csv(dataset: JointTrajectoryDataset, path: str | Path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(TRAJECTORY_HEADER)
        for r in dataset.records:
            writer.writerow([r.motion_id, r.finger,
                             repr(r.theta1), repr(r.theta2), repr(r.theta3)])


def default_joint_namer(finger: str, segment_index: int) -> str:
    """Map (finger, segment 0..2) to the joint naming convention of test hands."""
    return f"{finger}_{SEGMENT_NAMES[segment_index]}"


def fit_coupling(dataset: JointTrajectoryDataset, joint_namer=default_joint_namer,
                 independent_choice: str = "proximal") -> "CouplingModel":
    """Fit per-finger weighting coefficients by zero-intercept least squares.

    For each finger, m2 and m3 minimize sum((theta_k - m_k * theta1)^2); the
    proximal joint is the independent DoF. Fingers are merged in ascending
    name order so the result is deterministic.
    """
    if independent_choice != "proximal":
        raise ValueError(f"unsupported independent_choice '{independent_choice}'")
    independent, dependent, triplets = [], [], []
    for finger in dataset.fingers():
        samples = dataset.by_finger(finger)
        if len(samples) < 2:
            raise InsufficientData(finger)
        t1 = np.array([s.theta1 for s in samples])
        denom = float(t1 @ t1)
        if denom == 0.0:
            raise DegenerateData(finger)
        col = len(independent)
        independent.append(joint_namer(finger, 0))
        for k, attr in ((1, "theta2"), (2, "theta3")):
            tk = np.array([getattr(s, attr) for s in samples])
            # zero-intercept LS solved via lstsq on the single-column design
            m, *_ = np.linalg.lstsq(t1[:, None], tk, rcond=None)
            row = len(dependent)
            dependent.append(joint_namer(finger, k))
            triplets.append((row, col, float(m[0])))
    return CouplingModel(independent=tuple(independent), dependent=tuple(dependent),
                         triplets=tuple(triplets))


def fit_residual_rms(dataset: JointTrajectoryDataset,
                     coupling: CouplingModel,
                     joint_namer=default_joint_namer) -> dict:
    """Per-finger RMS of the fit residuals, for reporting."""
    M = coupling.matrix
    col_of = {name: i for i, name in enumerate(coupling.independent)}
    row_of = {name: i for i, name in enumerate(coupling.dependent)}
    out = {}
    for finger in dataset.fingers():
        samples = dataset.by_finger(finger)
        c = col_of[joint_namer(finger, 0)]
        res = []
        for k, attr in ((1, "theta2"), (2, "theta3")):
            r = row_of[joint_namer(finger, k)]
            for s in samples:
                res.append(M[r, c] * s.theta1 - getattr(s, attr))
        out[finger] = float(np.sqrt(np.mean(np.square(res))))
    return out


# ---------------------------------------------------------------------------
# persistence


def coupling_to_json(coupling: CouplingModel) -> dict:
    return {"independent": list(coupling.independent),
            "dependent": list(coupling.dependent),
            "triplets": [[r, c, v] for r, c, v in coupling.triplets]}


def coupling_from_json(obj: dict) -> CouplingModel:
    return CouplingModel(independent=tuple(obj["independent"]),
                         dependent=tuple(obj["dependent"]),
                         triplets=tuple((r, c, v) for r, c, v in obj["triplets"]))


def load_coupling(path: str | Path) -> CouplingModel:
    return coupling_from_json(json.loads(Path(path).read_text()))


def save_coupling(coupling: CouplingModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(coupling_to_json(coupling),
                                     indent=2, sort_keys=True))
