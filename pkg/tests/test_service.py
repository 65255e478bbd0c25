"""HTTP API: endpoints, job lifecycle, error envelopes, isolation."""

import json
import time

import pytest
from fastapi.testclient import TestClient

from ttmpp import apply_scenario, build_model, solve
from ttmpp.report import diff_schedules, render_report, swap_report_from_json, JSON_FORMAT
from ttmpp.instance import Scenario, SectionDelta
from ttmpp.service import create_app
from ttmpp.storage import ScenarioStore, document_to_dict, InstanceDocument

from conftest import CANCEL_A_S3, make_t1


@pytest.fixture
def client(tmp_path):
    store = ScenarioStore(tmp_path / "store")
    app = create_app(store)
    with TestClient(app) as c:
        yield c


def upload_t1(client) -> str:
    doc = document_to_dict(InstanceDocument(instance=make_t1(), name="t1"))
    response = client.post("/api/instances", json=doc)
    assert response.status_code == 200, response.text
    return response.json()["id"]


def post_scenario(client, instance_id: str, deltas) -> str:
    payload = {"name": "edit", "section_deltas": deltas}
    response = client.post(f"/api/instances/{instance_id}/scenarios",
                           json=payload)
    assert response.status_code == 200, response.text
    return response.json()["id"]


def wait_for_job(client, job_id: str, timeout: float = 30.0) -> dict:
    deadline = time.time() + timeout
    while time.time() < deadline:
        job = client.get(f"/api/jobs/{job_id}").json()
        if job["state"] in ("done", "failed"):
            return job
        time.sleep(0.02)
    raise TimeoutError(f"job {job_id} did not finish")


class TestBasics:
    def test_healthz(self, client):
        assert client.get("/healthz").json() == {"status": "ok"}

    def test_instance_round_trip(self, client, t1):
        iid = upload_t1(client)
        doc = client.get(f"/api/instances/{iid}").json()
        assert doc["metadata"]["name"] == "t1"
        assert len(doc["courses"]) == 2

    def test_schedule_triples(self, client):
        iid = upload_t1(client)
        schedule = client.get(f"/api/instances/{iid}/schedule").json()
        assert schedule["X_triples"] == [["A", "f1", "s1"], ["A", "f2", "s3"],
                                         ["B", "f1", "s2"]]

    def test_scenario_crud(self, client):
        iid = upload_t1(client)
        sid = post_scenario(client, iid,
                            [{"course": "A", "slot": "s3", "delta": -1}])
        doc = client.get(f"/api/scenarios/{sid}").json()
        assert doc["base_instance"] == iid
        assert doc["section_deltas"] == [{"course": "A", "slot": "s3", "delta": -1}]
        assert client.delete(f"/api/scenarios/{sid}").json()["deleted"]
        assert client.get(f"/api/scenarios/{sid}").status_code == 404


class TestErrorEnvelope:
    def test_unknown_job(self, client):
        response = client.get("/api/jobs/j-zzz")
        assert response.status_code == 404
        body = response.json()
        assert set(body) == {"code", "message", "details"}
        assert body["code"] == "not_found"

    def test_unknown_instance(self, client):
        assert client.get("/api/instances/i-nope").status_code == 404

    def test_malformed_instance_body(self, client):
        response = client.post("/api/instances", json={"schema_version": 1})
        assert response.status_code == 400
        assert response.json()["code"] == "validation"

    def test_bad_solve_options(self, client):
        iid = upload_t1(client)
        sid = post_scenario(client, iid,
                            [{"course": "A", "slot": "s3", "delta": -1}])
        response = client.post(f"/api/scenarios/{sid}/solve",
                               json={"warp_drive": True})
        assert response.status_code == 400

    def test_solve_on_unknown_scenario(self, client):
        assert client.post("/api/scenarios/s-404/solve", json={}).status_code == 404


class TestSolveJobs:
    def test_full_stack_cancellation(self, client, t1):
        iid = upload_t1(client)
        sid = post_scenario(client, iid,
                            [{"course": "A", "slot": "s3", "delta": -1}])
        job_id = client.post(f"/api/scenarios/{sid}/solve", json={}).json()["job_id"]
        job = wait_for_job(client, job_id)
        assert job["state"] == "done", job
        solution = job["result"]["solution"]
        assert solution["status"] == "optimal"
        assert solution["objective"] == -2.0
        assert solution["change_count"] == 1

        swap = job["result"]["swap_report"]
        assert len(swap["removed"]) == 1 and not swap["added"]
        # equality with a direct in-process solve of the same scenario
        edited = apply_scenario(t1, CANCEL_A_S3)
        direct = diff_schedules(edited, solve(build_model(edited)))
        assert swap_report_from_json(json.dumps(swap)) == direct

    def test_infeasible_is_a_result_not_an_error(self, client):
        iid = upload_t1(client)
        sid = post_scenario(client, iid,
                            [{"course": "B", "slot": "s3", "delta": 1}])
        job_id = client.post(f"/api/scenarios/{sid}/solve", json={}).json()["job_id"]
        job = wait_for_job(client, job_id)
        assert job["state"] == "done"
        assert job["result"]["solution"]["status"] == "infeasible"
        assert job["result"]["swap_report"] is None

    def test_options_override(self, client):
        iid = upload_t1(client)
        sid = post_scenario(client, iid,
                            [{"course": "A", "slot": "s3", "delta": -1}])
        job_id = client.post(f"/api/scenarios/{sid}/solve",
                             json={"min_change_phase": False,
                                   "time_limit": 30.0}).json()["job_id"]
        job = wait_for_job(client, job_id)
        assert job["state"] == "done"
        assert job["result"]["solution"]["objective"] == -2.0

    def test_parallel_jobs_isolated(self, client, t1):
        iid = upload_t1(client)
        cases = [
            [{"course": "A", "slot": "s3", "delta": -1}],
            [{"course": "B", "slot": "s2", "delta": -1}],
            [{"course": "A", "slot": "s1", "delta": -1}],
            [{"course": "B", "slot": "s3", "delta": 1}],
        ]
        sids = [post_scenario(client, iid, deltas) for deltas in cases]
        job_ids = [client.post(f"/api/scenarios/{sid}/solve", json={}).json()["job_id"]
                   for sid in sids]
        jobs = [wait_for_job(client, jid) for jid in job_ids]

        for deltas, job in zip(cases, jobs):
            scenario = Scenario(name="x", section_deltas=tuple(
                SectionDelta(d["course"], d["slot"], d["delta"]) for d in deltas))
            edited = apply_scenario(t1, scenario)
            direct = solve(build_model(edited))
            assert job["state"] == "done"
            got = job["result"]["solution"]
            assert got["status"] == direct.status
            if direct.status == "optimal":
                assert got["objective"] == direct.objective
                assert got["change_count"] == direct.change_count
                swap = job["result"]["swap_report"]
                expected = diff_schedules(edited, direct)
                assert swap_report_from_json(json.dumps(swap)) == expected
