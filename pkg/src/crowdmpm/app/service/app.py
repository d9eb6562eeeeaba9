"""HTTP studio service.

JSON endpoints:
  POST   /api/scenarios               validate + store -> {id}
  POST   /api/jobs                    {scenario_id, overrides} -> {job_id}
  GET    /api/jobs/{id}               status/progress/report
  GET    /api/jobs/{id}/frames/{n}    ?layers=velocity,stress,curl,divergence,particles
  DELETE /api/jobs/{id}               cancel + remove
  GET    /                            studio static bundle

Grid layers come back as flat row-major (ix-major) lists with nx*ny entries;
the particles layer is a list of [x, y, vx, vy, r_a, r_b] records. Errors:
400 invalid schema or semantics, 404 unknown id, 409 frame beyond a running
job's progress, 422 scenario that cannot step stably.
"""

from __future__ import annotations

import os
from contextlib import asynccontextmanager
from typing import Optional

from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import FileResponse, HTMLResponse, JSONResponse
from fastapi.staticfiles import StaticFiles

from ...analyze import curl_map, divergence_map, stress_map
from ...core.grids import read_field_binary
from ...errors import InvalidScenario, StabilityViolation
from ...material import MaterialParams
from ...mpm import read_snapshot
from ..scenario import Scenario, load_scenario
from .jobs import JobStore
from .schemas import (
    API_SCHEMA_VERSION,
    Deleted,
    FrameResponse,
    JobCreated,
    JobRequest,
    JobStatus,
    ScenarioCreated,
)

KNOWN_LAYERS = ("velocity", "stress", "curl", "divergence", "particles")


def _studio_dir() -> Optional[str]:
    configured = os.environ.get("CROWDMPM_STUDIO_DIR")
    if configured and os.path.isdir(configured):
        return configured
    here = os.path.dirname(os.path.abspath(__file__))
    for up in range(3, 7):
        candidate = os.path.join(here, *[".."] * up, "frontend", "dist")
        if os.path.isdir(candidate):
            return os.path.abspath(candidate)
    return None


def create_app(data_dir: Optional[str] = None, max_workers: Optional[int] = None) -> FastAPI:
    store = JobStore(data_dir=data_dir, max_workers=max_workers)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        store.shutdown()

    app = FastAPI(title="crowdmpm studio", version="1.0", lifespan=lifespan)
    app.state.store = store

    @app.exception_handler(RequestValidationError)
    async def bad_request(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={
                "schema_version": API_SCHEMA_VERSION,
                "detail": [
                    {"loc": list(e["loc"]), "msg": e["msg"]} for e in exc.errors()
                ],
            },
        )

    @app.exception_handler(InvalidScenario)
    async def invalid_scenario(request: Request, exc: InvalidScenario):
        return JSONResponse(
            status_code=400,
            content={"schema_version": API_SCHEMA_VERSION, "detail": str(exc)},
        )

    @app.exception_handler(StabilityViolation)
    async def unstable(request: Request, exc: StabilityViolation):
        return JSONResponse(
            status_code=422,
            content={"schema_version": API_SCHEMA_VERSION, "detail": str(exc)},
        )

    @app.post("/api/scenarios", response_model=ScenarioCreated)
    def create_scenario(scenario: Scenario):
        return ScenarioCreated(id=store.add_scenario(scenario))

    @app.get("/api/scenarios/{sid}")
    def get_scenario(sid: str):
        scenario = store.get_scenario(sid)
        if scenario is None:
            raise HTTPException(404, f"unknown scenario {sid}")
        doc = scenario.model_dump()
        return {"schema_version": API_SCHEMA_VERSION, "id": sid, "scenario": doc}

    @app.post("/api/jobs", response_model=JobCreated)
    def create_job(req: JobRequest):
        try:
            job = store.submit(req.scenario_id, req.overrides)
        except KeyError:
            raise HTTPException(404, f"unknown scenario {req.scenario_id}")
        return JobCreated(job_id=job.id)

    @app.get("/api/jobs/{jid}", response_model=JobStatus)
    def job_status(jid: str):
        job = store.get(jid)
        if job is None:
            raise HTTPException(404, f"unknown job {jid}")
        return JobStatus(
            id=job.id,
            scenario_id=job.scenario_id,
            status=job.status,
            progress=job.progress,
            error=job.error,
            report=job.report,
        )

    @app.get("/api/jobs/{jid}/frames/{n}", response_model=FrameResponse)
    def job_frame(jid: str, n: int, layers: str = "velocity"):
        job = store.get(jid)
        if job is None:
            raise HTTPException(404, f"unknown job {jid}")
        requested = [name for name in layers.split(",") if name]
        unknown = [name for name in requested if name not in KNOWN_LAYERS]
        if unknown:
            raise HTTPException(400, f"unknown layers {unknown}; pick from {KNOWN_LAYERS}")

        frame_file = store.frame_path(job, n)
        field_file = store.field_path(job, n)
        if not (os.path.exists(frame_file) and os.path.exists(field_file)):
            if job.status in ("queued", "running"):
                raise HTTPException(409, f"frame {n} not simulated yet")
            raise HTTPException(404, f"job {jid} has no frame {n}")

        state = read_snapshot(frame_file)
        field = read_field_binary(field_file)
        spec = field.spec
        scenario = load_scenario(os.path.join(job.out_dir, "scenario.json"))
        material = MaterialParams(
            epsilon=scenario.material.epsilon, k=scenario.material.k
        )

        out = {}
        for name in requested:
            if name == "velocity":
                out[name] = field.to_numpy().reshape(-1, 2).tolist()
            elif name == "stress":
                out[name] = stress_map(state, material, spec).to_numpy().reshape(-1).tolist()
            elif name == "curl":
                out[name] = curl_map(field).to_numpy().reshape(-1).tolist()
            elif name == "divergence":
                out[name] = divergence_map(field).to_numpy().reshape(-1).tolist()
            elif name == "particles":
                out[name] = [
                    [float(state.x[i, 0]), float(state.x[i, 1]),
                     float(state.v[i, 0]), float(state.v[i, 1]),
                     float(state.r_a[i]), float(state.r_b[i])]
                    for i in range(state.n)
                ]
        return FrameResponse(
            job_id=jid,
            frame=n,
            grid={"nx": spec.nx, "ny": spec.ny, "dx": spec.dx, "origin": list(spec.origin)},
            layers=out,
        )

    @app.delete("/api/jobs/{jid}", response_model=Deleted)
    def delete_job(jid: str):
        if not store.delete(jid):
            raise HTTPException(404, f"unknown job {jid}")
        return Deleted(id=jid)

    studio = _studio_dir()
    if studio is not None:
        app.mount("/static", StaticFiles(directory=studio), name="static")

    @app.get("/", include_in_schema=False)
    def index():
        if studio is not None:
            index_path = os.path.join(studio, "index.html")
            if os.path.exists(index_path):
                return FileResponse(index_path)
        return HTMLResponse(
            "<html><body><h1>crowdmpm</h1>"
            "<p>No studio bundle found. Build the frontend package and set "
            "CROWDMPM_STUDIO_DIR, or use the JSON API under /api.</p>"
            "</body></html>"
        )

    return app
