"""Design sessions: base hand, variants, tasks and solve results on disk.

Each session is one flat JSON file under the data directory, so sessions are
diffable and survive service restarts verbatim.
"""

from __future__ import annotations

import json
import uuid
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path

from ..hand_model import HandModel, parse_urdf, patch_to_json, patch_from_json, serialize_urdf
from ..objective import GraspTask, task_from_json, task_to_json
from ..synthesis import GraspSolution, solution_from_json, solution_to_json
from .study import apply_edits


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def new_id(prefix: str) -> str:
    return f"{prefix}-{uuid.uuid4().hex[:12]}"


@dataclass(frozen=True)
class Variant:
    id: str
    edits: tuple              # edit JSON dicts, in application order
    label: str = ""


@dataclass(frozen=True)
class SolveRecord:
    id: str
    variant_id: str
    task_id: str
    seed: int
    solution_json: dict
    scene: dict


@dataclass(frozen=True)
class DesignSession:
    id: str
    urdf_text: str
    patches_json: tuple       # hand patch sidecar entries
    variants: tuple = ()      # Variant, base variant "base" always present
    tasks: dict = field(default_factory=dict)    # task id -> task JSON dict
    results: dict = field(default_factory=dict)  # solve id -> SolveRecord
    created: str = field(default_factory=_now)
    modified: str = field(default_factory=_now)

    def base_model(self) -> HandModel:
        model = parse_urdf(self.urdf_text)
        for obj in self.patches_json:
            from ..hand_model import attach_patch
            model = attach_patch(model, patch_from_json(obj))
        return model

    def variant_model(self, variant_id: str) -> HandModel:
        model = self.base_model()
        for v in self.variants:
            if v.id == variant_id:
                return apply_edits(model, v.edits)
        raise KeyError(variant_id)

    def variant_ids(self) -> list:
        return [v.id for v in self.variants]

    def task(self, task_id: str) -> GraspTask:
        return task_from_json(self.tasks[task_id])

    def touched(self) -> "DesignSession":
        return replace(self, modified=_now())


def make_session(urdf_text: str, patches_json=()) -> DesignSession:
    # parse up-front so invalid uploads are rejected at creation time
    parse_urdf(urdf_text)
    return DesignSession(id=new_id("design"), urdf_text=urdf_text,
                         patches_json=tuple(patches_json),
                         variants=(Variant(id="base", edits=(), label="base"),))


def session_to_json(s: DesignSession) -> dict:
    return {
        "id": s.id,
        "urdf": s.urdf_text,
        "patches": list(s.patches_json),
        "variants": [{"id": v.id, "edits": list(v.edits), "label": v.label}
                     for v in s.variants],
        "tasks": s.tasks,
        "results": {rid: {"id": r.id, "variant_id": r.variant_id,
                          "task_id": r.task_id, "seed": r.seed,
                          "solution": r.solution_json, "scene": r.scene}
                    for rid, r in s.results.items()},
        "created": s.created,
        "modified": s.modified,
    }


def session_from_json(obj: dict) -> DesignSession:
    variants = tuple(Variant(id=v["id"], edits=tuple(v["edits"]),
                             label=v.get("label", ""))
                     for v in obj["variants"])
    results = {rid: SolveRecord(id=r["id"], variant_id=r["variant_id"],
                                task_id=r["task_id"], seed=r["seed"],
                                solution_json=r["solution"], scene=r["scene"])
               for rid, r in obj.get("results", {}).items()}
    return DesignSession(id=obj["id"], urdf_text=obj["urdf"],
                         patches_json=tuple(obj.get("patches", ())),
                         variants=variants, tasks=dict(obj.get("tasks", {})),
                         results=results, created=obj["created"],
                         modified=obj["modified"])


class SessionStore:
    """Flat-file persistence: one <session id>.json per session."""

    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)

    def path(self, session_id: str) -> Path:
        return self.data_dir / f"{session_id}.json"

    def save(self, session: DesignSession) -> None:
        self.path(session.id).write_text(
            json.dumps(session_to_json(session), indent=2, sort_keys=True))

    def load(self, session_id: str) -> DesignSession:
        p = self.path(session_id)
        if not p.exists():
            raise KeyError(session_id)
        return session_from_json(json.loads(p.read_text()))

    def list_ids(self) -> list:
        return sorted(p.stem for p in self.data_dir.glob("design-*.json")
                      if not p.stem.endswith(".coupling"))
