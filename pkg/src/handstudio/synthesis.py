"""Grasp synthesis: ties the objective, coupling and solver into the cascade.

The decision vector is x = (wrist 6-vector, theta_I, theta_D) and the coupling
rows M·theta_I − theta_D = 0 are explicit equality constraints [0 | M | −I],
so constraint subsets can be activated stage by stage. Stage 0 runs with every
row relaxed (fully independent joints); each later stage re-introduces rows
and warm-starts from the previous stage's solution, with nearest-point
correspondences refreshed at stage boundaries.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .coupling import CouplingModel
from .hand_model import HandModel
from .kinematics import JointAngles, forward_kinematics, patch_world_points
from .objective import (CorrespondenceTable, GraspTask, GraspVariables,
                        _base_pose, _pose_from_json, _pose_to_json,
                        full_angle_energy, full_angle_energy_gradient,
                        update_correspondences)
from .solver import (CascadeSchedule, NlpProblem, SolveOptions, SolveStatus,
                     sqp_solve, unconstrained_stage_solve)
from .transforms import RigidTransform, matrix_to_quat, quat_to_rotvec

WRIST_TRANSLATION_HALFWIDTH = 0.5   # m
WRIST_ROTATION_HALFWIDTH = 2.0      # rad, keeps |rotvec| < pi with margin
RESTART_THETA_PERTURBATION = 0.1    # rad
RESTART_TRANSLATION_PERTURBATION = 0.005  # m
MAX_REFINE_STAGES = 12


@dataclass(frozen=True)
class GraspSolution:
    vars: GraspVariables
    full_angles: JointAngles
    energy: float
    constraint_violation: float
    status: SolveStatus
    stage_trace: tuple        # per stage: dict(stage, active_rows, energy, violation, iterations)
    seed: int = 0


@dataclass(frozen=True)
class GraspProblem:
    """Bundles one (model, coupling, task) into solver-ready closures."""

    model: HandModel
    coupling: CouplingModel
    task: GraspTask
    wrist_ref: RigidTransform = field(default_factory=RigidTransform.identity)
    freeze_wrist: bool = False

    def __post_init__(self):
        if not self.coupling.covers(self.model):
            raise ValueError("coupling does not cover the model's revolute joints; "
                             "use CouplingModel.extended_for_model first")

    @property
    def joint_order(self) -> tuple:
        return self.coupling.independent + self.coupling.dependent

    @property
    def dimension(self) -> int:
        return 6 + len(self.joint_order)

    @property
    def n_rows(self) -> int:
        return len(self.coupling.dependent)

    def bounds(self) -> np.ndarray:
        b = np.zeros((self.dimension, 2))
        if self.freeze_wrist:
            b[:6] = 0.0
        else:
            b[:3, 0] = -WRIST_TRANSLATION_HALFWIDTH
            b[:3, 1] = WRIST_TRANSLATION_HALFWIDTH
            b[3:6, 0] = -WRIST_ROTATION_HALFWIDTH
            b[3:6, 1] = WRIST_ROTATION_HALFWIDTH
        for i, name in enumerate(self.joint_order):
            b[6 + i] = self.model.joints[name].limits
        return b

    def equality_rows(self) -> tuple:
        nI, nD = len(self.coupling.independent), len(self.coupling.dependent)
        A = np.zeros((nD, self.dimension))
        A[:, 6:6 + nI] = self.coupling.matrix
        A[:, 6 + nI:] = -np.eye(nD)
        return A, np.zeros(nD)

    def angles_from(self, x: np.ndarray) -> JointAngles:
        return JointAngles(dict(zip(self.joint_order, x[6:])))

    def vars_from(self, x: np.ndarray, wrist_ref: RigidTransform) -> GraspVariables:
        nI = len(self.coupling.independent)
        return GraspVariables(wrist=x[:6], theta_I=x[6:6 + nI], wrist_ref=wrist_ref)

    def build_nlp(self, correspondences: CorrespondenceTable,
                  wrist_ref: RigidTransform) -> NlpProblem:
        A, b = self.equality_rows()
        order = self.joint_order

        def objective(x: np.ndarray) -> float:
            angles = JointAngles(dict(zip(order, x[6:])))
            return full_angle_energy(self.model, self.task, angles,
                                     _base_pose(x[:6], wrist_ref),
                                     correspondences)

        def gradient(x: np.ndarray) -> np.ndarray:
            angles = JointAngles(dict(zip(order, x[6:])))
            return full_angle_energy_gradient(self.model, self.task, angles,
                                              x[:6], wrist_ref, order,
                                              correspondences)

        return NlpProblem(dimension=self.dimension, objective=objective,
                          gradient=gradient, bounds=self.bounds(),
                          eq_matrix=A, eq_rhs=b)

    def default_x0(self) -> np.ndarray:
        """Lightly flexed joints, wrist and flexion posed near the task.

        A quarter-range flexion start sits in the basin of typical grasps;
        fully extended fingers tend to lock the nearest-point assignments
        into collapsed configurations. The wrist start aligns per-pair patch
        centroids: translation always, rotation by Kabsch only when three or
        more non-collinear centroids determine it. Each independent flexion
        angle then takes the value of a coarse grid scan of its own pairs'
        unassigned energy, which keeps the first correspondence refresh close
        to the intended assignment. The Kabsch rotation can mislead when the
        centroids span a thin triangle, so a translation-only start competes
        against it and the lower-energy candidate wins.
        """
        b = self.bounds()
        x = np.zeros(self.dimension)
        x[6:] = b[6:, 0] + 0.25 * (b[6:, 1] - b[6:, 0])
        x = np.clip(x, b[:, 0], b[:, 1])
        if self.freeze_wrist or not self.task.pairs:
            return self._grid_refine_theta(x)

        angles = self.angles_from(x)
        base0 = _base_pose(x[:6], self.wrist_ref)
        poses = forward_kinematics(self.model, angles, base0)
        hand_pts, obj_pts = [], []
        for hand_id, obj_id in self.task.pairs:
            hand_pts.append(patch_world_points(
                self.model, poses, self.model.patches[hand_id]).mean(axis=0))
            obj_pts.append(self.task.object_pose.apply(
                self.task.object_patch(obj_id).points).mean(axis=0))
        h_bar = np.mean(hand_pts, axis=0)
        o_bar = np.mean(obj_pts, axis=0)
        H = np.asarray(hand_pts) - h_bar
        O = np.asarray(obj_pts) - o_bar
        U, sv, Vt = np.linalg.svd(H.T @ O)
        rotation_determined = (len(self.task.pairs) >= 3
                               and sv[1] > 1e-6 * max(sv[0], 1e-12))
        rotations = [(np.zeros(3), np.eye(3))]
        if rotation_determined:
            D = np.diag([1.0, 1.0, np.sign(np.linalg.det(Vt.T @ U.T))])
            R = Vt.T @ D @ U.T
            w_r = quat_to_rotvec(matrix_to_quat(R))
            if np.all(np.abs(w_r) < b[3:6, 1]):
                rotations.append((w_r, R))
        best, best_e = None, np.inf
        for w_r, R in rotations:
            xc = x.copy()
            xc[3:6] = w_r
            shift = R @ (base0.translation - h_bar) + o_bar \
                - self.wrist_ref.translation
            xc[:3] = np.clip(shift, b[:3, 0], b[:3, 1])
            xc = self._scan_and_refit(xc)
            e = self._unassigned_energy(xc)
            if e < best_e:
                best, best_e = xc, e
        return best

    def _scan_and_refit(self, x: np.ndarray, rounds: int = 2) -> np.ndarray:
        """Alternate flexion grid scans with centroid translation re-fits.

        A translation estimated at the wrong flexion can be centimeters off,
        and a flexion scanned at the wrong translation picks the wrong arc
        position; a couple of alternations settle both.
        """
        b = self.bounds()
        x = self._grid_refine_theta(x)
        if self.freeze_wrist:
            return x
        for _ in range(rounds):
            x[:3] = np.clip(x[:3] + self._centroid_shift(x),
                            b[:3, 0], b[:3, 1])
            x = self._grid_refine_theta(x)
        return x

    def _centroid_shift(self, x: np.ndarray) -> np.ndarray:
        """Mean offset from hand patch centroids to their object centroids."""
        poses = forward_kinematics(self.model, self.angles_from(x),
                                   _base_pose(x[:6], self.wrist_ref))
        deltas = []
        for hand_id, obj_id in self.task.pairs:
            h = patch_world_points(self.model, poses,
                                   self.model.patches[hand_id]).mean(axis=0)
            o = self.task.object_pose.apply(
                self.task.object_patch(obj_id).points).mean(axis=0)
            deltas.append(o - h)
        return np.mean(deltas, axis=0)

    def _unassigned_energy(self, x: np.ndarray) -> float:
        """Sum over pairs of mean nearest-object-point squared distance."""
        poses = forward_kinematics(self.model, self.angles_from(x),
                                   _base_pose(x[:6], self.wrist_ref))
        e = 0.0
        for hand_id, obj_id in self.task.pairs:
            hp = patch_world_points(self.model, poses,
                                    self.model.patches[hand_id])
            op = self.task.object_pose.apply(
                self.task.object_patch(obj_id).points)
            d2 = np.sum((hp[:, None, :] - op[None, :, :]) ** 2, axis=2)
            e += float(np.mean(np.min(d2, axis=1)))
        return e

    def _grid_refine_theta(self, x: np.ndarray, n_grid: int = 41) -> np.ndarray:
        """Scan each independent flexion over its range against its own pairs.

        Dependent joints track the coupling during the scan, so the picked
        value is consistent with the fully constrained problem.
        """
        nI = len(self.coupling.independent)
        M = self.coupling.matrix
        b = self.bounds()
        driver_pairs: dict = {i: [] for i in range(nI)}
        for hand_id, obj_id in self.task.pairs:
            owner = self.model.patches[hand_id].owner
            chain = {j.name for j in self.model.chain_to_root(owner)
                     if j.kind == "revolute"}
            for i, ind in enumerate(self.coupling.independent):
                driven = {self.coupling.dependent[r]
                          for r, c, v in self.coupling.triplets
                          if c == i and v != 0.0}
                if ({ind} | driven) & chain:
                    driver_pairs[i].append((hand_id, obj_id))
        x = x.copy()
        for i in range(nI):
            pairs = driver_pairs[i]
            if not pairs:
                continue
            lo, hi = b[6 + i]
            if hi - lo <= 0:
                continue

            def scan_energy(t):
                xt = x.copy()
                xt[6 + i] = t
                xt[6 + nI:] = M @ xt[6:6 + nI]
                poses = forward_kinematics(self.model, self.angles_from(xt),
                                           _base_pose(xt[:6], self.wrist_ref))
                e = 0.0
                for hand_id, obj_id in pairs:
                    hp = patch_world_points(self.model, poses,
                                            self.model.patches[hand_id])
                    op = self.task.object_pose.apply(
                        self.task.object_patch(obj_id).points)
                    d2 = np.sum((hp[:, None, :] - op[None, :, :]) ** 2, axis=2)
                    e += float(np.mean(np.min(d2, axis=1)))
                return e

            # coarse scan over the full range, then a fine scan one coarse
            # step to either side of the winner
            grid = np.linspace(lo, hi, n_grid)
            energies = [scan_energy(t) for t in grid]
            k = int(np.argmin(energies))
            step = grid[1] - grid[0]
            fine = np.linspace(max(lo, grid[k] - step),
                               min(hi, grid[k] + step), n_grid)
            fine_e = [scan_energy(t) for t in fine]
            x[6 + i] = float(fine[int(np.argmin(fine_e))])
            x[6 + nI:] = M @ x[6:6 + nI]
        return np.clip(x, b[:, 0], b[:, 1])


def default_schedule(coupling: CouplingModel) -> CascadeSchedule:
    """Empty stage, then coupling rows accreted one finger at a time.

    A row's finger is read off the independent joint its nonzero entry points
    at (fingers couple block-wise); fingers are ordered by name with the thumb
    last, matching its role as the final opposition constraint.
    """
    row_finger = {}
    for r, c, v in coupling.triplets:
        if v != 0.0 and r not in row_finger:
            row_finger[r] = coupling.independent[c].rsplit("_", 1)[0]
    groups: dict = {}
    for r in range(len(coupling.dependent)):
        groups.setdefault(row_finger.get(r, ""), []).append(r)
    ordered = sorted(groups, key=lambda f: ("thumb" in f.lower(), f))
    stages = [()]
    active: list = []
    for finger in ordered:
        active = active + groups[finger]
        stages.append(tuple(sorted(active)))
    if len(coupling.dependent) == 0:
        stages = [()]
    return CascadeSchedule(stages=tuple(stages))


def _patch_lattice(task: GraspTask) -> tuple | None:
    """Mean principal direction and nearest-neighbour spacing of the object
    patches, used to propose lattice-step escapes from stalled assignments."""
    directions, spacings = [], []
    reference = None
    for _, obj_id in task.pairs:
        pts = task.object_pose.apply(task.object_patch(obj_id).points)
        if len(pts) < 2:
            continue
        centered = pts - pts.mean(axis=0)
        _, _, Vt = np.linalg.svd(centered)
        d = Vt[0]
        if reference is None:
            reference = d
        elif float(d @ reference) < 0:
            d = -d
        directions.append(d)
        d2 = np.sum((pts[:, None, :] - pts[None, :, :]) ** 2, axis=2)
        np.fill_diagonal(d2, np.inf)
        spacings.append(float(np.sqrt(d2.min(axis=1)).mean()))
    if not directions:
        return None
    direction = np.mean(directions, axis=0)
    norm = np.linalg.norm(direction)
    if norm < 1e-12:
        return None
    return direction / norm, float(np.mean(spacings))


def _with_ref(problem: GraspProblem, wrist_ref: RigidTransform) -> GraspProblem:
    if wrist_ref is problem.wrist_ref:
        return problem
    return dataclasses.replace(problem, wrist_ref=wrist_ref)


def _perturb(x0: np.ndarray, problem: GraspProblem, rng) -> np.ndarray:
    x = x0.copy()
    nI = len(problem.coupling.independent)
    x[:3] += rng.uniform(-RESTART_TRANSLATION_PERTURBATION,
                         RESTART_TRANSLATION_PERTURBATION, 3)
    x[6:6 + nI] += rng.uniform(-RESTART_THETA_PERTURBATION,
                               RESTART_THETA_PERTURBATION, nI)
    b = problem.bounds()
    return np.clip(x, b[:, 0], b[:, 1])


def _maybe_recenter(x: np.ndarray, wrist_ref: RigidTransform,
                    problem: GraspProblem) -> tuple:
    if np.linalg.norm(x[3:6]) <= np.pi / 2:
        return x, wrist_ref
    new_ref = problem.vars_from(x, wrist_ref).base_pose()
    x = x.copy()
    x[:6] = 0.0
    return x, new_ref


def _run_one(problem: GraspProblem, schedule: CascadeSchedule, x0: np.ndarray,
             options: SolveOptions) -> GraspSolution:
    x = x0.copy()
    wrist_ref = problem.wrist_ref
    corr: CorrespondenceTable | None = None
    trace = []
    status = SolveStatus.NumericalFailure
    for si, rows in enumerate(schedule.stages):
        corr = update_correspondences(problem.model, problem.task,
                                      problem.vars_from(x, wrist_ref),
                                      problem.coupling, previous=corr)
        nlp = problem.build_nlp(corr, wrist_ref)
        if len(rows) == 0:
            x, status, iters = unconstrained_stage_solve(nlp, x, options)
        else:
            x, status, iters = sqp_solve(nlp.restricted(rows), x, options)
        trace.append({"stage": si, "active_rows": len(rows),
                      "energy": float(nlp.objective(x)),
                      "violation": float(nlp.violation(x)),
                      "iterations": int(iters)})
        x, wrist_ref = _maybe_recenter(x, wrist_ref, problem)
    # repeat the fully constrained stage until the nearest-point assignments
    # stop changing (each repeat is one more stage boundary with a refresh)
    final_rows = schedule.stages[-1]
    extra = 0
    for escape in range(3):
        while extra < MAX_REFINE_STAGES:
            extra += 1
            new_corr = update_correspondences(problem.model, problem.task,
                                              problem.vars_from(x, wrist_ref),
                                              problem.coupling, previous=corr)
            unchanged = all(np.array_equal(a, b) for a, b in
                            zip(new_corr.assignments, corr.assignments))
            corr = new_corr
            if unchanged:
                break
            nlp = problem.build_nlp(corr, wrist_ref)
            if len(final_rows) == 0:
                x, status, iters = unconstrained_stage_solve(nlp, x, options)
            else:
                x, status, iters = sqp_solve(nlp.restricted(final_rows), x,
                                             options)
            trace.append({"stage": len(schedule.stages) + extra - 1,
                          "active_rows": len(final_rows),
                          "energy": float(nlp.objective(x)),
                          "violation": float(nlp.violation(x)),
                          "iterations": int(iters)})
            x, wrist_ref = _maybe_recenter(x, wrist_ref, problem)
        # Stalled assignments tend to sit one patch-lattice step off: the
        # whole hand (or a single finger) matches its points against
        # neighbouring object points and nearest-point refreshes keep that
        # fixed point. Escape candidates: a fine per-finger theta rescan,
        # and wrist shifts of one mean patch spacing along the patch
        # principal direction followed by a rescan. Accept only a strict
        # energy improvement after a refresh.
        if extra >= MAX_REFINE_STAGES:
            break
        nlp = problem.build_nlp(corr, wrist_ref)
        e_now = float(nlp.objective(x))
        staged = _with_ref(problem, wrist_ref)
        candidates = [staged._grid_refine_theta(x), staged._scan_and_refit(x)]
        lattice = _patch_lattice(problem.task)
        if lattice is not None and not problem.freeze_wrist:
            direction, spacing = lattice
            for sign in (1.0, -1.0):
                x_shift = x.copy()
                x_shift[:3] += sign * spacing * direction
                candidates.append(staged._grid_refine_theta(x_shift))
        improved = None
        for x_try in candidates:
            corr_try = update_correspondences(
                problem.model, problem.task,
                problem.vars_from(x_try, wrist_ref),
                problem.coupling, previous=corr)
            # judge the candidate by where a solve takes it, not by its raw
            # energy: a correct assignment one lattice step away may start
            # slightly above the stalled fixed point
            nlp_try = problem.build_nlp(corr_try, wrist_ref)
            if len(final_rows) == 0:
                x_try, _, _ = unconstrained_stage_solve(nlp_try, x_try, options)
            else:
                x_try, _, _ = sqp_solve(nlp_try.restricted(final_rows), x_try,
                                        options)
            e_try = float(nlp_try.objective(x_try))
            if e_try < e_now - 1e-15:
                e_now = e_try
                improved = x_try
        if improved is None:
            break
        # keep the pre-escape table so the next refresh registers the changed
        # assignments and re-solves from the escaped point
        x = improved
    vars = problem.vars_from(x, wrist_ref)
    nlp = problem.build_nlp(corr, wrist_ref)
    return GraspSolution(vars=vars, full_angles=problem.angles_from(x),
                         energy=float(nlp.objective(x)),
                         constraint_violation=float(nlp.violation(x)),
                         status=status, stage_trace=tuple(trace),
                         seed=options.seed)


def _better(a: GraspSolution, b: GraspSolution) -> bool:
    """True when a beats b: feasible-converged first, then lower energy."""
    ka = (a.status != SolveStatus.Converged, a.energy)
    kb = (b.status != SolveStatus.Converged, b.energy)
    return ka < kb


def cascade_solve(problem: GraspProblem, schedule: CascadeSchedule | None = None,
                  x0: np.ndarray | None = None,
                  options: SolveOptions | None = None) -> GraspSolution:
    """Multi-start cascade over the schedule; best feasible restart wins.

    Restart 0 uses x0 unperturbed; later restarts jitter the independent
    angles (±0.1 rad) and wrist translation (±5 mm). The reduction is
    deterministic: earlier restarts win ties.
    """
    if options is None:
        options = SolveOptions()
    if schedule is None:
        schedule = default_schedule(problem.coupling)
    schedule.validate_for(problem.n_rows)
    if x0 is None:
        x0 = problem.default_x0()
    x0 = np.asarray(x0, dtype=float).reshape(problem.dimension)
    rng = np.random.default_rng(options.seed)
    best: GraspSolution | None = None
    for restart in range(options.restarts):
        xr = x0 if restart == 0 else _perturb(x0, problem, rng)
        sol = _run_one(problem, schedule, xr, options)
        if best is None or _better(sol, best):
            best = sol
    return best


def cold_start_solve(problem: GraspProblem, x0: np.ndarray | None = None,
                     options: SolveOptions | None = None) -> GraspSolution:
    """Fully constrained single-stage solve (no cascade), same multi-start."""
    if problem.n_rows == 0:
        schedule = CascadeSchedule(stages=((),))
    else:
        schedule = CascadeSchedule.single_stage(problem.n_rows)
    return cascade_solve(problem, schedule=schedule, x0=x0, options=options)


# ---------------------------------------------------------------------------
# persistence


def solution_to_json(sol: GraspSolution) -> dict:
    return {
        "vars": {"wrist": sol.vars.wrist.tolist(),
                 "theta_I": sol.vars.theta_I.tolist(),
                 "wrist_ref": _pose_to_json(sol.vars.wrist_ref)},
        "full_angles": dict(sorted(sol.full_angles.values.items())),
        "energy": sol.energy,
        "constraint_violation": sol.constraint_violation,
        "status": sol.status.value,
        "stage_trace": list(sol.stage_trace),
        "seed": sol.seed,
    }


def solution_from_json(obj: dict) -> GraspSolution:
    return GraspSolution(
        vars=GraspVariables(wrist=np.array(obj["vars"]["wrist"]),
                            theta_I=np.array(obj["vars"]["theta_I"]),
                            wrist_ref=_pose_from_json(obj["vars"]["wrist_ref"])),
        full_angles=JointAngles(obj["full_angles"]),
        energy=float(obj["energy"]),
        constraint_violation=float(obj["constraint_violation"]),
        status=SolveStatus(obj["status"]),
        stage_trace=tuple(obj["stage_trace"]),
        seed=int(obj.get("seed", 0)))


def save_solution(sol: GraspSolution, path: str | Path) -> None:
    Path(path).write_text(json.dumps(solution_to_json(sol), indent=2,
                                     sort_keys=True))


def load_solution(path: str | Path) -> GraspSolution:
    return solution_from_json(json.loads(Path(path).read_text()))
