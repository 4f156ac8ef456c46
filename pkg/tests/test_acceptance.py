"""End-to-end acceptance checks, one test per release criterion.

Each test prints a single PASS/FAIL line so the acceptance status can be read
off the test log directly.
"""

import json
import time

import numpy as np
import pytest

from handstudio.coupling import (JointTrajectoryDataset, TrajectorySample,
                                 constraint_residual, expand_angles,
                                 fit_coupling)
from handstudio.hand_model import parse_urdf, semantic_equal, serialize_urdf
from handstudio.kinematics import forward_kinematics
from handstudio.objective import (GraspVariables, alignment_energy,
                                  energy_gradient, update_correspondences)
from handstudio.prefab import default_coupling, make_hand
from handstudio.solver import (NlpProblem, SolveOptions, SolveStatus,
                               kkt_residual, sqp_solve)
from handstudio.studio.objects import OBJECT_NAMES, make_study_task
from handstudio.studio.study import StudyVariant, run_study
from handstudio.synthesis import GraspProblem, cascade_solve, cold_start_solve
from handstudio.transforms import RigidTransform, quat_from_rotvec

from conftest import feasible_task, random_angles, random_chain_model
from oracles import fk_matrix_oracle, transform_matrix
from test_hand_model import _CORPUS


def _report(name: str, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}", flush=True)
    assert ok, f"{name}: {detail}"


def test_fk_oracle_equivalence():
    rng = np.random.default_rng(7)
    t0 = time.monotonic()
    worst = 0.0
    for trial in range(1000):
        model = random_chain_model(rng, int(rng.integers(1, 9)),
                                   tree=bool(rng.integers(0, 2)))
        angles = random_angles(model, rng)
        base = RigidTransform(translation=rng.uniform(-0.5, 0.5, 3),
                              rotation=quat_from_rotvec(
                                  rng.uniform(-1.0, 1.0, 3)))
        poses = forward_kinematics(model, angles, base)
        expected = fk_matrix_oracle(model, angles.values,
                                    transform_matrix(base))
        for link, pose in poses.poses.items():
            diff = np.abs(transform_matrix(pose) - expected[link]).max()
            worst = max(worst, diff)
    elapsed = time.monotonic() - t0
    ok = worst <= 1e-9 and elapsed < 10.0
    _report("fk-oracle-equivalence", ok,
            f"1000 chains, max component error {worst:.2e}, {elapsed:.1f}s")


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(11)
    scenes = []
    for n_fingers, with_thumb in ((1, False), (2, True), (3, True)):
        model = make_hand(n_fingers=n_fingers, with_thumb=with_thumb)
        coupling = default_coupling(model)
        theta = {n: float(rng.uniform(0.3, 0.9))
                 for n in coupling.independent}
        task = feasible_task(model, coupling, theta,
                             RigidTransform.identity(), rng=rng)
        scenes.append((model, coupling, task))

    t0 = time.monotonic()
    worst = 0.0
    for model, coupling, task in scenes:
        nI = len(coupling.independent)
        b = np.array([model.joints[n].limits for n in coupling.independent])
        for _ in range(100):
            wrist = np.concatenate([rng.uniform(-0.3, 0.3, 3),
                                    rng.uniform(-0.05, 0.05, 3)])
            theta_I = rng.uniform(b[:, 0], b[:, 1])
            vars = GraspVariables(wrist=wrist, theta_I=theta_I,
                                  wrist_ref=RigidTransform.identity())
            table = update_correspondences(model, task, vars, coupling)
            g = energy_gradient(model, coupling, task, vars, table)

            def f(x):
                v = GraspVariables(wrist=x[:6], theta_I=x[6:],
                                   wrist_ref=RigidTransform.identity())
                return alignment_energy(model, coupling, task, v, table).total

            x0 = np.concatenate([wrist, theta_I])
            fd = np.zeros(6 + nI)
            h = 1e-6
            for i in range(6 + nI):
                d = np.zeros(6 + nI)
                d[i] = h
                fd[i] = (f(x0 + d) - f(x0 - d)) / (2 * h)
            scale = np.maximum(np.abs(fd), 1e-4 * max(1.0, np.abs(fd).max()))
            worst = max(worst, float(np.max(np.abs(g - fd) / scale)))
    elapsed = time.monotonic() - t0
    ok = worst <= 1e-4 and elapsed < 30.0
    _report("gradient-vs-finite-differences", ok,
            f"300 states, max componentwise rel error {worst:.2e}, "
            f"{elapsed:.1f}s")


def test_coupling_fit_recovery():
    hits = 0
    for seed in range(100):
        rng = np.random.default_rng(1000 + seed)
        t1 = rng.uniform(0.05, 1.4, 200)
        t2 = 0.8 * t1 + rng.normal(0.0, 0.01, 200)
        t3 = 0.6 * t1 + rng.normal(0.0, 0.01, 200)
        samples = tuple(
            TrajectorySample(motion_id=f"m{i}", finger="index",
                             theta1=float(t1[i]), theta2=float(t2[i]),
                             theta3=float(t3[i]))
            for i in range(200))
        coupling = fit_coupling(JointTrajectoryDataset(records=samples))
        m2 = coupling.matrix[0, 0]
        m3 = coupling.matrix[1, 0]
        if abs(m2 - 0.8) <= 0.02 and abs(m3 - 0.6) <= 0.02:
            hits += 1

    rng = np.random.default_rng(0)
    t1 = rng.uniform(0.05, 1.4, 200)
    samples = tuple(
        TrajectorySample(motion_id=f"m{i}", finger="index",
                         theta1=float(t1[i]), theta2=0.8 * float(t1[i]),
                         theta3=0.6 * float(t1[i]))
        for i in range(200))
    clean = fit_coupling(JointTrajectoryDataset(records=samples))
    exact_err = max(abs(clean.matrix[0, 0] - 0.8),
                    abs(clean.matrix[1, 0] - 0.6))
    ok = hits >= 99 and exact_err <= 1e-12
    _report("coupling-fit-recovery", ok,
            f"{hits}/100 noisy trials within 0.02, "
            f"noiseless error {exact_err:.1e}")


def test_solver_analytic_problems_and_kkt():
    big = np.array([[-10.0, 10.0]] * 2)
    cases = []

    def quad(center):
        center = np.asarray(center, dtype=float)
        return (lambda x: float(np.sum((x - center) ** 2)),
                lambda x: 2.0 * (x - center))

    f, g = quad([0.0, 0.0])
    cases.append((NlpProblem(dimension=2, objective=f, gradient=g, bounds=big,
                             eq_matrix=[[1.0, 1.0]], eq_rhs=[3.0]),
                  np.array([1.5, 1.5])))
    f, g = quad([2.0, 0.5])
    cases.append((NlpProblem(dimension=2, objective=f, gradient=g,
                             bounds=[[-1.0, 1.0], [-1.0, 1.0]],
                             eq_matrix=np.zeros((0, 2)), eq_rhs=[]),
                  np.array([1.0, 0.5])))

    worst_x = 0.0
    worst_kkt_margin = -np.inf
    for problem, x_star in cases:
        x, status, _ = sqp_solve(problem, [0.0, 0.0])
        assert status is SolveStatus.Converged
        worst_x = max(worst_x, float(np.abs(x - x_star).max()))
        res = kkt_residual(problem, x)
        bound = 1e-5 * (1.0 + abs(problem.objective(x)))
        worst_kkt_margin = max(worst_kkt_margin, res - bound)
    ok = worst_x <= 1e-8 and worst_kkt_margin <= 0.0
    _report("solver-analytic-correctness", ok,
            f"max distance to closed form {worst_x:.2e}, "
            f"KKT within bound at all optima")


def _task_bank():
    bank = []
    for seed in range(20):
        rng = np.random.default_rng(300 + seed)
        n_fingers = 1 + seed % 3
        with_thumb = seed % 2 == 0
        model = make_hand(n_fingers=n_fingers, with_thumb=with_thumb)
        coupling = default_coupling(model)
        theta = {}
        for name in coupling.independent:
            lo, hi = model.joints[name].limits
            theta[name] = float(rng.uniform(lo + 0.25 * (hi - lo),
                                            lo + 0.75 * (hi - lo)))
        for name in coupling.independent:
            if name.endswith("abduction"):
                theta[name] = 0.0
        task = feasible_task(model, coupling, theta,
                             RigidTransform.identity(), rng=rng)
        bank.append(GraspProblem(model=model, coupling=coupling, task=task,
                                 freeze_wrist=True))
    return bank


def test_cascade_benefit_and_coupling_satisfaction():
    t0 = time.monotonic()
    bank = _task_bank()
    options = SolveOptions(restarts=2, max_iterations=150)
    results = []
    worst_coupling = 0.0
    for i, problem in enumerate(bank):
        warm = cascade_solve(problem, options=options)
        cold = cold_start_solve(problem, options=options)
        results.append((warm, cold))
        for sol in (warm, cold):
            if sol.status is SolveStatus.Converged:
                res = constraint_residual(problem.coupling, sol.full_angles)
                if res.size:
                    worst_coupling = max(worst_coupling,
                                         float(np.abs(res).max()))

    warm_ok = cold_ok = 0
    for warm, cold in results:
        best = min(warm.energy, cold.energy)
        threshold = 1.05 * best + 1e-9
        warm_ok += int(warm.status is SolveStatus.Converged
                       and warm.energy <= threshold)
        cold_ok += int(cold.status is SolveStatus.Converged
                       and cold.energy <= threshold)
    elapsed = time.monotonic() - t0
    ok = (warm_ok >= cold_ok and worst_coupling <= 1e-6
          and elapsed < 600.0)
    _report("cascade-benefit", warm_ok >= cold_ok and elapsed < 600.0,
            f"cascade {warm_ok}/20 vs cold start {cold_ok}/20, "
            f"{elapsed:.0f}s")
    _report("coupling-satisfaction-at-convergence", worst_coupling <= 1e-6,
            f"max |M theta_I - theta_D| over converged solves "
            f"{worst_coupling:.2e}")
    assert ok


def test_design_study_pipeline():
    t0 = time.monotonic()
    model = make_hand(n_fingers=2, with_thumb=True)
    coupling = default_coupling(model)
    variants = (
        StudyVariant(name="thumb_base", edits=()),
        StudyVariant(name="thumb_identity", edits=(
            {"joint": "thumb_mount", "translation": [0.0, 0.0, 0.0]},)),
        StudyVariant(name="thumb_forward", edits=(
            {"joint": "thumb_mount", "translation": [0.01, 0.0, 0.0]},)),
        StudyVariant(name="thumb_raised", edits=(
            {"joint": "thumb_mount", "translation": [0.0, 0.0, 0.01]},)),
    )
    tasks = tuple(make_study_task(model, name) for name in OBJECT_NAMES)
    options = SolveOptions(restarts=2, max_iterations=150, seed=5)

    report1 = run_study(model, coupling, variants, tasks, options=options)
    report2 = run_study(model, coupling, variants, tasks, options=options)
    elapsed = time.monotonic() - t0

    complete = len(report1.rows) == 16
    deterministic = (json.dumps(report1.rows, sort_keys=True, default=str)
                     == json.dumps(report2.rows, sort_keys=True, default=str))
    base = {r["task"]: r["energy"] for r in report1.rows
            if r["variant"] == "thumb_base"}
    ident = {r["task"]: r["energy"] for r in report1.rows
             if r["variant"] == "thumb_identity"}
    identity_gap = max(abs(base[t] - ident[t]) for t in base)
    ok = complete and deterministic and identity_gap <= 1e-10 \
        and elapsed < 900.0
    _report("design-study-pipeline", ok,
            f"16/16 cells, deterministic={deterministic}, "
            f"identity variant gap {identity_gap:.1e}, {elapsed:.0f}s")


def test_zero_energy_constructive():
    worst = 0.0
    for seed, (n_fingers, with_thumb) in enumerate(
            ((1, False), (2, True), (4, True))):
        rng = np.random.default_rng(500 + seed)
        model = make_hand(n_fingers=n_fingers, with_thumb=with_thumb)
        coupling = default_coupling(model)
        theta = {n: (0.0 if n.endswith("abduction")
                     else float(rng.uniform(0.3, 0.9)))
                 for n in coupling.independent}
        task = feasible_task(model, coupling, theta,
                             RigidTransform.identity(), rng=rng)
        problem = GraspProblem(model=model, coupling=coupling, task=task)
        sol = cascade_solve(problem, options=SolveOptions(restarts=3))
        worst = max(worst, sol.energy)
    ok = worst <= 1e-6
    _report("zero-energy-constructive", ok,
            f"max energy over constructive tasks {worst:.2e} m^2")


def test_urdf_corpus():
    n_valid = n_invalid = 0
    failures = []
    for name, text, expected in _CORPUS:
        if expected is None:
            try:
                model = parse_urdf(text)
                if not semantic_equal(model, parse_urdf(serialize_urdf(model))):
                    failures.append(f"{name}: round-trip changed semantics")
                n_valid += 1
            except Exception as exc:
                failures.append(f"{name}: unexpected {type(exc).__name__}")
        else:
            try:
                parse_urdf(text)
                failures.append(f"{name}: expected {expected.__name__}")
            except expected:
                n_invalid += 1
            except Exception as exc:
                failures.append(f"{name}: got {type(exc).__name__}, "
                                f"expected {expected.__name__}")
    ok = not failures and len(_CORPUS) >= 25
    _report("urdf-corpus-roundtrip", ok,
            f"{n_valid} valid round-trips, {n_invalid} error classes, "
            f"{len(_CORPUS)} files" + ("; " + "; ".join(failures)
                                       if failures else ""))
