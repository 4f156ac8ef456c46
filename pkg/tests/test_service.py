import dataclasses

import numpy as np
import pytest
from fastapi.testclient import TestClient

from handstudio.coupling import coupling_to_json
from handstudio.hand_model import patch_to_json, serialize_urdf
from handstudio.objective import task_to_json
from handstudio.prefab import default_coupling, make_hand
from handstudio.solver import SolveStatus
from handstudio.studio.scene import validate_scene
from handstudio.studio.service import create_app
from handstudio.transforms import RigidTransform

from conftest import feasible_task


@pytest.fixture()
def setup(tmp_path):
    model = make_hand(n_fingers=1, with_thumb=False)
    coupling = default_coupling(model)
    rng = np.random.default_rng(61)
    theta = {n: float(rng.uniform(0.3, 0.8)) for n in coupling.independent}
    task = feasible_task(model, coupling, theta, RigidTransform.identity(),
                         rng=rng)
    app = create_app(data_dir=str(tmp_path / "data"))
    client = TestClient(app)
    body = {"urdf": serialize_urdf(model),
            "patches": [patch_to_json(p) for p in model.patches.values()],
            "coupling": coupling_to_json(coupling)}
    return client, app, body, task, tmp_path


def _create(client, body):
    resp = client.post("/api/designs", json=body)
    assert resp.status_code == 201, resp.text
    return resp.json()["id"]


def test_create_list_get_design(setup):
    client, _, body, _, _ = setup
    design_id = _create(client, body)
    listing = client.get("/api/designs").json()
    assert [d["id"] for d in listing] == [design_id]
    detail = client.get(f"/api/designs/{design_id}").json()
    assert [v["id"] for v in detail["variants"]] == ["base"]
    assert detail["tasks"] == []
    assert client.get("/api/designs/nope").status_code == 404


def test_invalid_urdf_rejected(setup):
    client, _, _, _, _ = setup
    resp = client.post("/api/designs", json={"urdf": "<robot name='x'>"})
    assert resp.status_code == 400
    assert resp.json()["kind"] == "MalformedXml"


def test_variant_validation(setup):
    client, _, body, _, _ = setup
    design_id = _create(client, body)
    good = client.post(f"/api/designs/{design_id}/variants",
                       json={"edits": [{"joint": "index_proximal",
                                        "translation": [0, 0, 0.01]}],
                             "label": "longer"})
    assert good.status_code == 201
    bad = client.post(f"/api/designs/{design_id}/variants",
                      json={"edits": [{"joint": "no_such_joint",
                                       "translation": [0, 0, 0.01]}]})
    assert bad.status_code == 400


def test_solve_report_scene_flow(setup):
    client, _, body, task, _ = setup
    design_id = _create(client, body)
    task_json = task_to_json(task)
    task_json["name"] = "grasp0"
    assert client.post(f"/api/designs/{design_id}/tasks",
                       json=task_json).status_code == 201
    resp = client.post(f"/api/designs/{design_id}/solve",
                       json={"variant": "base", "task": "grasp0", "seed": 0})
    assert resp.status_code == 200, resp.text
    out = resp.json()
    assert out["solution"]["status"] == "Converged"
    assert out["solution"]["energy"] <= 1e-6
    validate_scene(out["scene"])

    report = client.get(f"/api/designs/{design_id}/report").json()
    assert report["ranking"] == ["base"]
    row = report["rows"][0]
    assert row["status"] == "Converged" and row["solve_id"] == out["id"]

    scene = client.get(
        f"/api/designs/{design_id}/scenes/{out['id']}").json()
    assert scene == out["scene"]
    assert client.get(
        f"/api/designs/{design_id}/scenes/solve-missing").status_code == 404


def test_solve_unknown_refs_404(setup):
    client, _, body, task, _ = setup
    design_id = _create(client, body)
    resp = client.post(f"/api/designs/{design_id}/solve",
                       json={"task": "nope"})
    assert resp.status_code == 404
    resp = client.post(f"/api/designs/{design_id}/solve",
                       json={"variant": "nope", "task": "nope"})
    assert resp.status_code == 404


def test_concurrent_solve_conflict(setup):
    client, app, body, task, _ = setup
    design_id = _create(client, body)
    task_json = task_to_json(task)
    task_json["name"] = "grasp0"
    client.post(f"/api/designs/{design_id}/tasks", json=task_json)
    lock = app.state.studio.lock_for(design_id)
    lock.acquire()  # simulate a solve in flight for this session
    try:
        resp = client.post(f"/api/designs/{design_id}/solve",
                           json={"task": "grasp0"})
        assert resp.status_code == 409
    finally:
        lock.release()
    resp = client.post(f"/api/designs/{design_id}/solve",
                       json={"task": "grasp0"})
    assert resp.status_code == 200


def test_numerical_failure_maps_to_422(setup, monkeypatch):
    client, _, body, task, _ = setup
    design_id = _create(client, body)
    task_json = task_to_json(task)
    task_json["name"] = "grasp0"
    client.post(f"/api/designs/{design_id}/tasks", json=task_json)

    import handstudio.studio.service as service_mod
    real = service_mod.cascade_solve

    def failing(problem, options=None, **kw):
        sol = real(problem, options=options, **kw)
        return dataclasses.replace(sol, status=SolveStatus.NumericalFailure)

    monkeypatch.setattr(service_mod, "cascade_solve", failing)
    resp = client.post(f"/api/designs/{design_id}/solve",
                       json={"task": "grasp0"})
    assert resp.status_code == 422
    assert resp.json()["kind"] == "NumericalFailure"


def test_identity_edit_resolve_matches_prior_scene(setup):
    client, _, body, task, _ = setup
    design_id = _create(client, body)
    task_json = task_to_json(task)
    task_json["name"] = "grasp0"
    client.post(f"/api/designs/{design_id}/tasks", json=task_json)
    base = client.post(f"/api/designs/{design_id}/solve",
                       json={"variant": "base", "task": "grasp0",
                             "seed": 0}).json()
    variant = client.post(
        f"/api/designs/{design_id}/variants",
        json={"edits": [{"joint": "index_proximal",
                         "translation": [0.0, 0.0, 0.0]}]}).json()
    redo = client.post(f"/api/designs/{design_id}/solve",
                       json={"variant": variant["id"], "task": "grasp0",
                             "seed": 0}).json()
    for a, b in zip(base["scene"]["links"], redo["scene"]["links"]):
        assert a["name"] == b["name"]
        assert np.allclose(a["transform"]["translation"],
                           b["transform"]["translation"], atol=1e-10)
        assert np.allclose(a["transform"]["rotation_wxyz"],
                           b["transform"]["rotation_wxyz"], atol=1e-10)
    assert redo["solution"]["energy"] == pytest.approx(
        base["solution"]["energy"], abs=1e-12)


def test_sessions_survive_restart(setup):
    client, _, body, task, tmp_path = setup
    design_id = _create(client, body)
    task_json = task_to_json(task)
    task_json["name"] = "grasp0"
    client.post(f"/api/designs/{design_id}/tasks", json=task_json)
    solve = client.post(f"/api/designs/{design_id}/solve",
                        json={"task": "grasp0"}).json()

    reborn = TestClient(create_app(data_dir=str(tmp_path / "data")))
    detail = reborn.get(f"/api/designs/{design_id}")
    assert detail.status_code == 200
    assert detail.json()["solves"] == [solve["id"]]
    scene = reborn.get(
        f"/api/designs/{design_id}/scenes/{solve['id']}").json()
    assert scene == solve["scene"]
    # coupling survives too: a re-solve on the restarted service still works
    resolve = reborn.post(f"/api/designs/{design_id}/solve",
                          json={"task": "grasp0", "seed": 0})
    assert resolve.status_code == 200
    assert resolve.json()["solution"]["energy"] <= 1e-6
