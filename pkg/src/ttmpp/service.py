"""HTTP JSON API: instance upload, scenario management, asynchronous solve
jobs, and swap reports.

Solves run as jobs on a small in-process worker pool so clients poll
rather than block; an infeasible outcome is a completed job whose result
status says so, not a transport error.  All errors use a uniform
``{"code", "message", "details"}`` envelope.  No authentication: deploy
behind the department network.
"""

from __future__ import annotations

import json
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .errors import InstanceFormatError, NotFoundError, ScenarioError, StoreError
from .instance import apply_scenario
from .model import build_model
from .report import diff_schedules, render_report, JSON_FORMAT
from .solver import SolveOptions, solve
from .storage import (
    ScenarioStore,
    document_from_dict,
    document_to_dict,
    scenario_from_dict,
    scenario_to_dict,
    solution_to_dict,
)

JOB_QUEUED = "queued"
JOB_RUNNING = "running"
JOB_DONE = "done"
JOB_FAILED = "failed"

_OPTION_KEYS = ("integrality_tolerance", "lp_pivot_tolerance", "node_limit",
                "time_limit", "min_change_phase", "branching_rule")


@dataclass
class SolveJob:
    id: str
    scenario_id: str
    state: str
    result: dict | None = None
    error: str | None = None

    def to_dict(self) -> dict:
        return {"id": self.id, "scenario": self.scenario_id,
                "state": self.state, "result": self.result,
                "error": self.error}


class JobManager:
    """In-memory job table with a bounded worker pool.

    State transitions are queued -> running -> done | failed, guarded by a
    lock; results are immutable once done.
    """

    def __init__(self, store: ScenarioStore, max_workers: int | None = None):
        self._store = store
        self._jobs: dict[str, SolveJob] = {}
        self._lock = threading.Lock()
        self._counter = 0
        workers = max_workers or min(4, os.cpu_count() or 1)
        self._pool = ThreadPoolExecutor(max_workers=workers,
                                        thread_name_prefix="solve")

    def submit(self, scenario_id: str, options: SolveOptions) -> str:
        scenario = self._store.get_scenario(scenario_id)   # 404 before queueing
        with self._lock:
            self._counter += 1
            job_id = f"j-{self._counter:06d}"
            self._jobs[job_id] = SolveJob(job_id, scenario_id, JOB_QUEUED)
        self._pool.submit(self._run, job_id, scenario, options)
        return job_id

    def get(self, job_id: str) -> SolveJob:
        with self._lock:
            job = self._jobs.get(job_id)
            if job is None:
                raise NotFoundError(f"unknown job id {job_id!r}")
            return replace(job)

    def _set_state(self, job_id: str, state: str, *, result=None, error=None):
        with self._lock:
            job = self._jobs[job_id]
            job.state = state
            job.result = result
            job.error = error

    def _run(self, job_id: str, scenario, options: SolveOptions) -> None:
        self._set_state(job_id, JOB_RUNNING)
        try:
            document = self._store.get_instance(scenario.base_instance)
            instance = apply_scenario(document.instance, scenario)
            solution = solve(build_model(instance), options)
            result = {"solution": solution_to_dict(solution, instance),
                      "swap_report": None}
            if solution.has_schedule:
                report = diff_schedules(instance, solution)
                result["swap_report"] = json.loads(render_report(report, JSON_FORMAT))
            self._set_state(job_id, JOB_DONE, result=result)
        except Exception as exc:   # failures surface through the job state
            self._set_state(job_id, JOB_FAILED, error=str(exc))


def _envelope(status: int, code: str, message: str, details=None) -> JSONResponse:
    return JSONResponse(status_code=status,
                        content={"code": code, "message": message,
                                 "details": details})


def _solve_options(payload: dict) -> SolveOptions:
    unknown = set(payload) - set(_OPTION_KEYS)
    if unknown:
        raise ValueError(f"unknown solve options: {sorted(unknown)}")
    return SolveOptions(**payload)


def create_app(store: ScenarioStore, *, max_workers: int | None = None) -> FastAPI:
    app = FastAPI(title="ttmpp", version="0.1.0")
    jobs = JobManager(store, max_workers=max_workers)

    @app.exception_handler(NotFoundError)
    async def _not_found(request: Request, exc: NotFoundError):
        return _envelope(404, "not_found", str(exc))

    @app.exception_handler(InstanceFormatError)
    async def _bad_instance(request: Request, exc: InstanceFormatError):
        return _envelope(400, "validation", str(exc))

    @app.exception_handler(ScenarioError)
    async def _bad_scenario(request: Request, exc: ScenarioError):
        return _envelope(400, "validation", str(exc))

    @app.exception_handler(ValueError)
    async def _bad_value(request: Request, exc: ValueError):
        return _envelope(400, "validation", str(exc))

    @app.exception_handler(StoreError)
    async def _store_error(request: Request, exc: StoreError):
        return _envelope(500, "store", str(exc))

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok"}

    @app.post("/api/instances")
    async def upload_instance(request: Request):
        payload = await request.json()
        document = document_from_dict(payload)
        return {"id": store.put_instance(document)}

    @app.get("/api/instances/{instance_id}")
    async def get_instance(instance_id: str):
        return document_to_dict(store.get_instance(instance_id))

    @app.get("/api/instances/{instance_id}/schedule")
    async def get_schedule(instance_id: str):
        document = store.get_instance(instance_id)
        doc = document_to_dict(document)
        return {"instance": instance_id, "X_triples": doc["X_triples"]}

    @app.post("/api/instances/{instance_id}/scenarios")
    async def create_scenario(instance_id: str, request: Request):
        payload = await request.json()
        payload.setdefault("schema_version", 1)
        payload["base_instance"] = instance_id
        scenario = scenario_from_dict(payload)
        return {"id": store.store_scenario(scenario)}

    @app.get("/api/scenarios/{scenario_id}")
    async def get_scenario(scenario_id: str):
        return scenario_to_dict(store.get_scenario(scenario_id))

    @app.delete("/api/scenarios/{scenario_id}")
    async def delete_scenario(scenario_id: str):
        store.delete_scenario(scenario_id)
        return {"id": scenario_id, "deleted": True}

    @app.post("/api/scenarios/{scenario_id}/solve")
    async def submit_solve(scenario_id: str, request: Request):
        body = await request.body()
        payload = json.loads(body) if body else {}
        options = _solve_options(payload or {})
        return {"job_id": jobs.submit(scenario_id, options)}

    @app.get("/api/jobs/{job_id}")
    async def get_job(job_id: str):
        return jobs.get(job_id).to_dict()

    return app
