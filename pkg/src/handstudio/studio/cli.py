"""Command-line entry points: validate, fit-coupling, solve, study, serve.

Errors are emitted as machine-readable JSON diagnostics on stderr. All
commands are deterministic under a fixed seed (--seed or STUDIO_SEED).
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click
import numpy as np

from ..coupling import (coupling_to_json, fit_coupling, fit_residual_rms,
                        load_coupling, load_trajectory_csv, save_coupling)
from ..errors import HandStudioError, KinematicCycle
from ..hand_model import MeshRef, load_patch_sidecar, load_urdf
from ..objective import load_task
from ..solver import CascadeSchedule, SolveOptions, SolveStatus
from ..synthesis import GraspProblem, cascade_solve, save_solution
from .scene import build_scene, save_scene
from .study import (DesignReport, StudyVariant, load_study_config, resolve_task,
                    run_study)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CYCLE = 2
EXIT_MISSING_MESH = 3
EXIT_NOT_CONVERGED = 4


def _fail(diagnostic: dict, code: int):
    click.echo(json.dumps(diagnostic, sort_keys=True), err=True)
    sys.exit(code)


def _seed_option(seed: int | None) -> int:
    if seed is not None:
        return seed
    return int(os.environ.get("STUDIO_SEED", 0))


def _load_model(urdf: str, patches: str | None):
    model = load_urdf(urdf)
    sidecar = Path(patches) if patches else Path(urdf).with_suffix(".patches.json")
    if sidecar.exists():
        model = load_patch_sidecar(model, sidecar)
    return model


@click.group()
def main():
    """Design and grasp-synthesis studio for tendon-driven soft hands."""


@main.command()
@click.argument("urdf", type=click.Path())
def validate(urdf):
    """Validate a URDF hand description; nonzero exit with diagnostics on error."""
    if not Path(urdf).exists():
        _fail({"kind": "FileNotFound", "message": urdf}, EXIT_ERROR)
    try:
        model = load_urdf(urdf)
    except KinematicCycle as exc:
        _fail(exc.to_diagnostic(), EXIT_CYCLE)
    except HandStudioError as exc:
        _fail(exc.to_diagnostic(), EXIT_ERROR)
    missing = []
    for link in model.links.values():
        if isinstance(link.geometry, MeshRef):
            path = Path(model.mesh_dir or ".") / link.geometry.filename
            if not path.exists():
                missing.append(str(path))
    if missing:
        _fail({"kind": "MissingMesh", "message": "unresolved mesh files",
               "paths": missing}, EXIT_MISSING_MESH)
    click.echo(f"OK: {len(model.links)} links, {len(model.joints)} joints, "
               f"root '{model.root}'")


@main.command("fit-coupling")
@click.option("--input", "input_csv", required=True, type=click.Path())
@click.option("--output", required=True, type=click.Path())
def fit_coupling_cmd(input_csv, output):
    """Fit per-finger weighting coefficients from a flexion trajectory CSV."""
    try:
        dataset = load_trajectory_csv(input_csv)
        coupling = fit_coupling(dataset)
    except HandStudioError as exc:
        _fail(exc.to_diagnostic(), EXIT_ERROR)
    except (ValueError, OSError) as exc:
        _fail({"kind": "SchemaViolation", "message": str(exc)}, EXIT_ERROR)
    save_coupling(coupling, output)
    rms = fit_residual_rms(dataset, coupling)
    M = coupling.matrix
    col_of = {name: i for i, name in enumerate(coupling.independent)}
    for finger in dataset.fingers():
        c = col_of[f"{finger}_proximal"]
        coeffs = [M[r, c] for r in range(len(coupling.dependent)) if M[r, c] != 0]
        click.echo(f"{finger}: m2={coeffs[0]:.6f} m3={coeffs[1]:.6f} "
                   f"rms={rms[finger]:.6f} rad")
    click.echo(f"wrote {output}")


@main.command()
@click.option("--urdf", required=True, type=click.Path())
@click.option("--coupling", "coupling_path", required=True, type=click.Path())
@click.option("--task", "task_path", required=True, type=click.Path())
@click.option("--patches", type=click.Path(), default=None,
              help="Patch sidecar (default: <urdf>.patches.json)")
@click.option("--schedule", "schedule_path", type=click.Path(), default=None)
@click.option("--seed", type=int, default=None)
@click.option("--allow-partial", is_flag=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
def solve(urdf, coupling_path, task_path, patches, schedule_path, seed,
          allow_partial, out_dir):
    """Run a cascade grasp solve; writes solution.json and scene.json."""
    try:
        model = _load_model(urdf, patches)
        coupling = load_coupling(coupling_path).extended_for_model(model)
        task = load_task(task_path)
        schedule = None
        if schedule_path:
            obj = json.loads(Path(schedule_path).read_text())
            schedule = CascadeSchedule(stages=tuple(tuple(s) for s in obj["stages"]))
        options = SolveOptions(seed=_seed_option(seed))
        problem = GraspProblem(model=model, coupling=coupling, task=task)
        solution = cascade_solve(problem, schedule=schedule, options=options)
    except HandStudioError as exc:
        _fail(exc.to_diagnostic(), EXIT_ERROR)
    except (ValueError, OSError, KeyError) as exc:
        _fail({"kind": type(exc).__name__, "message": str(exc)}, EXIT_ERROR)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_solution(solution, out / "solution.json")
    save_scene(build_scene(model, task, solution), out / "scene.json")
    click.echo(f"status={solution.status.value} energy={solution.energy:.6e} "
               f"violation={solution.constraint_violation:.2e}")
    if solution.status != SolveStatus.Converged and not allow_partial:
        _fail({"kind": "NotConverged", "message": solution.status.value},
              EXIT_NOT_CONVERGED)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--seed", type=int, default=None)
def study(config_path, out_dir, seed):
    """Run a variant × task design study; writes report.json and report.txt."""
    try:
        cfg = load_study_config(config_path)
        base_dir = Path(config_path).parent
        model = _load_model(str(base_dir / cfg.urdf)
                            if not Path(cfg.urdf).is_absolute() else cfg.urdf,
                            cfg.patches)
        if cfg.coupling:
            cpath = Path(cfg.coupling)
            coupling = load_coupling(cpath if cpath.is_absolute()
                                     else base_dir / cpath)
            coupling = coupling.extended_for_model(model)
        else:
            from ..coupling import CouplingModel
            coupling = CouplingModel(independent=tuple(model.revolute_joints),
                                     dependent=(), triplets=())
        tasks = [resolve_task(t, model, base_dir) for t in cfg.tasks]
        options = SolveOptions(seed=_seed_option(seed if seed is not None
                                                 else cfg.seed))
        report = run_study(model, coupling, cfg.variants, tasks, options)
    except HandStudioError as exc:
        _fail(exc.to_diagnostic(), EXIT_ERROR)
    except (ValueError, OSError, KeyError) as exc:
        _fail({"kind": type(exc).__name__, "message": str(exc)}, EXIT_ERROR)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(report.to_json(), indent=2,
                                                sort_keys=True))
    (out / "report.txt").write_text(report.table() + "\n")
    click.echo(report.table())


@main.command()
@click.option("--port", type=int, default=8070)
@click.option("--data", "data_dir", type=click.Path(), default=None)
@click.option("--workers", type=int, default=None)
def serve(port, data_dir, workers):
    """Start the HTTP studio service."""
    import uvicorn

    from .service import create_app
    app = create_app(data_dir=data_dir, workers=workers)
    uvicorn.run(app, host="127.0.0.1", port=port)


if __name__ == "__main__":
    main()
