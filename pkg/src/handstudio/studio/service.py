"""HTTP studio service: upload designs, add variants/tasks, solve, compare.

Sessions persist as flat JSON under the data directory. One solve may run per
session at a time (409 otherwise); distinct sessions solve concurrently up to
the worker limit.
"""

from __future__ import annotations

import os
import threading
from dataclasses import replace

from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse

from ..coupling import CouplingModel, coupling_from_json
from ..errors import HandStudioError
from ..objective import task_from_json
from ..solver import SolveOptions, SolveStatus
from ..synthesis import GraspProblem, cascade_solve, solution_to_json
from .scene import build_scene
from .session import (DesignSession, SessionStore, SolveRecord, Variant,
                      make_session, new_id)


def _coupling_for(session: DesignSession, model) -> CouplingModel:
    obj = getattr(session, "_coupling_json", None)
    if obj is None:
        # no coupling uploaded: every revolute joint is an independent DoF
        return CouplingModel(independent=tuple(model.revolute_joints),
                             dependent=(), triplets=())
    return coupling_from_json(obj).extended_for_model(model)


class StudioState:
    def __init__(self, data_dir: str, workers: int | None = None):
        self.store = SessionStore(data_dir)
        self.session_locks: dict = {}
        self.locks_guard = threading.Lock()
        self.worker_slots = threading.BoundedSemaphore(
            workers or os.cpu_count() or 1)
        self.couplings: dict = {}  # session id -> coupling JSON (persisted)
        import json as _json
        for p in self.store.data_dir.glob("design-*.coupling.json"):
            sid = p.name.split(".coupling.json")[0]
            self.couplings[sid] = _json.loads(p.read_text())

    def lock_for(self, session_id: str) -> threading.Lock:
        with self.locks_guard:
            return self.session_locks.setdefault(session_id, threading.Lock())


def create_app(data_dir: str | None = None, workers: int | None = None) -> FastAPI:
    data_dir = data_dir or os.environ.get("STUDIO_DATA", "studio-data")
    state = StudioState(data_dir, workers)
    app = FastAPI(title="handstudio", version="0.1.0")
    app.state.studio = state

    def load_session(session_id: str) -> DesignSession:
        try:
            session = state.store.load(session_id)
        except KeyError:
            raise HTTPException(status_code=404,
                                detail=f"unknown session '{session_id}'")
        object.__setattr__(session, "_coupling_json",
                           state.couplings.get(session_id))
        return session

    @app.exception_handler(HandStudioError)
    def _domain_error(request, exc: HandStudioError):
        return JSONResponse(status_code=400, content=exc.to_diagnostic())

    @app.post("/api/designs", status_code=201)
    def create_design(body: dict):
        if "urdf" not in body:
            raise HTTPException(status_code=400, detail="missing 'urdf'")
        session = make_session(body["urdf"], body.get("patches", ()))
        if body.get("coupling") is not None:
            state.couplings[session.id] = body["coupling"]
            coupling_path = state.store.data_dir / f"{session.id}.coupling.json"
            import json as _json
            coupling_path.write_text(_json.dumps(body["coupling"], sort_keys=True))
        state.store.save(session)
        return {"id": session.id, "created": session.created,
                "variants": session.variant_ids()}

    @app.get("/api/designs")
    def list_designs():
        out = []
        for sid in state.store.list_ids():
            s = state.store.load(sid)
            out.append({"id": s.id, "created": s.created, "modified": s.modified,
                        "variants": s.variant_ids(),
                        "tasks": sorted(s.tasks), "solves": sorted(s.results)})
        return out

    @app.get("/api/designs/{session_id}")
    def get_design(session_id: str):
        s = load_session(session_id)
        return {"id": s.id, "created": s.created, "modified": s.modified,
                "variants": [{"id": v.id, "edits": list(v.edits),
                              "label": v.label} for v in s.variants],
                "tasks": sorted(s.tasks), "solves": sorted(s.results)}

    @app.post("/api/designs/{session_id}/variants", status_code=201)
    def add_variant(session_id: str, body: dict):
        s = load_session(session_id)
        edits = body.get("edits")
        if edits is None:
            raise HTTPException(status_code=400, detail="missing 'edits'")
        variant = Variant(id=new_id("variant"), edits=tuple(edits),
                          label=body.get("label", ""))
        try:
            s.variant_model("base")  # base must stay valid
            from .study import apply_edits
            apply_edits(s.base_model(), variant.edits)  # validate edits now
        except HandStudioError as exc:
            return JSONResponse(status_code=400, content=exc.to_diagnostic())
        except (KeyError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        s = replace(s, variants=s.variants + (variant,)).touched()
        state.store.save(s)
        return {"id": variant.id}

    @app.post("/api/designs/{session_id}/tasks", status_code=201)
    def add_task(session_id: str, body: dict):
        s = load_session(session_id)
        try:
            task_from_json(body)  # validate
        except (KeyError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=f"invalid task: {exc}")
        task_id = body.get("name") or new_id("task")
        tasks = dict(s.tasks)
        tasks[task_id] = body
        s = replace(s, tasks=tasks).touched()
        state.store.save(s)
        return {"id": task_id}

    @app.post("/api/designs/{session_id}/solve")
    def solve(session_id: str, body: dict):
        s = load_session(session_id)
        variant_id = body.get("variant", "base")
        task_id = body.get("task")
        seed = int(body.get("seed", os.environ.get("STUDIO_SEED", 0)))
        if variant_id not in s.variant_ids():
            raise HTTPException(status_code=404,
                                detail=f"unknown variant '{variant_id}'")
        if task_id not in s.tasks:
            raise HTTPException(status_code=404,
                                detail=f"unknown task '{task_id}'")
        lock = state.lock_for(session_id)
        if not lock.acquire(blocking=False):
            raise HTTPException(status_code=409,
                                detail="a solve is already running for this session")
        try:
            with state.worker_slots:
                model = s.variant_model(variant_id)
                coupling = _coupling_for(s, model)
                task = s.task(task_id)
                problem = GraspProblem(model=model, coupling=coupling, task=task)
                sol = cascade_solve(problem, options=SolveOptions(seed=seed))
                if sol.status == SolveStatus.NumericalFailure:
                    return JSONResponse(status_code=422,
                                        content={"kind": "NumericalFailure",
                                                 "solution": solution_to_json(sol)})
                scene = build_scene(model, task, sol)
                record = SolveRecord(id=new_id("solve"), variant_id=variant_id,
                                     task_id=task_id, seed=seed,
                                     solution_json=solution_to_json(sol),
                                     scene=scene)
                s = load_session(session_id)  # re-read: other fields may have moved
                results = dict(s.results)
                results[record.id] = record
                s = replace(s, results=results).touched()
                state.store.save(s)
                return {"id": record.id, "solution": record.solution_json,
                        "scene": record.scene}
        finally:
            lock.release()

    @app.get("/api/designs/{session_id}/report")
    def report(session_id: str):
        s = load_session(session_id)
        rows = []
        for variant_id in s.variant_ids():
            for task_id in sorted(s.tasks):
                cells = [r for r in s.results.values()
                         if r.variant_id == variant_id and r.task_id == task_id]
                if not cells:
                    rows.append({"variant": variant_id, "task": task_id,
                                 "status": "Failed", "energy": None,
                                 "constraint_violation": None,
                                 "error": "not solved"})
                    continue
                latest = max(cells, key=lambda r: r.id)
                sol = latest.solution_json
                rows.append({"variant": variant_id, "task": task_id,
                             "status": sol["status"], "energy": sol["energy"],
                             "constraint_violation": sol["constraint_violation"],
                             "solve_id": latest.id, "error": None})
        solved = {}
        for r in rows:
            if r["energy"] is not None:
                solved.setdefault(r["variant"], []).append(r["energy"])
        ranking = sorted(s.variant_ids(),
                         key=lambda v: (sum(solved[v]) / len(solved[v])
                                        if v in solved else float("inf"), v))
        return {"rows": rows, "ranking": ranking}

    @app.get("/api/designs/{session_id}/scenes/{solve_id}")
    def get_scene(session_id: str, solve_id: str):
        s = load_session(session_id)
        if solve_id not in s.results:
            raise HTTPException(status_code=404,
                                detail=f"unknown solve '{solve_id}'")
        return s.results[solve_id].scene

    return app
