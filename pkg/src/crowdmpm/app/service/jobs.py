"""Disk-backed scenario and job store.

Everything lives under a data directory (CROWDMPM_DATA_DIR or ./crowdmpm-data):
  scenarios/{id}.json
  jobs/{id}/job.json + the runner's output (scenario.json, frames/, fields/,
  report.json)

Jobs run on a bounded thread pool. Status transitions are monotone
(queued -> running -> done|failed|cancelled) and guarded by one lock; the
job record is flushed to job.json on every transition so completed jobs
survive a service restart. Scenarios are immutable once stored — a job
binds overrides into its own scenario.json copy, so nothing a running job
reads can be mutated through the API.
"""

from __future__ import annotations

import json
import os
import shutil
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

from ...errors import StabilityViolation
from ..runner import run
from ..scenario import Scenario, cfl_limit, load_scenario

_ORDER = {"queued": 0, "running": 1, "done": 2, "failed": 2, "cancelled": 2}


def _merge(base: dict, overrides: dict) -> dict:
    out = dict(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


@dataclass
class Job:
    id: str
    scenario_id: str
    status: str = "queued"
    progress: float = 0.0
    error: Optional[str] = None
    out_dir: str = ""
    report: Optional[dict] = field(default=None, repr=False)


class JobStore:
    def __init__(self, data_dir: Optional[str] = None, max_workers: Optional[int] = None):
        self.data_dir = data_dir or os.environ.get(
            "CROWDMPM_DATA_DIR", os.path.join(os.getcwd(), "crowdmpm-data")
        )
        self.scenario_dir = os.path.join(self.data_dir, "scenarios")
        self.jobs_dir = os.path.join(self.data_dir, "jobs")
        os.makedirs(self.scenario_dir, exist_ok=True)
        os.makedirs(self.jobs_dir, exist_ok=True)

        self._lock = threading.Lock()
        self._jobs: dict[str, Job] = {}
        self._cancel: dict[str, threading.Event] = {}
        self._futures: dict[str, object] = {}
        self._pool = ThreadPoolExecutor(max_workers=max_workers or os.cpu_count() or 2)
        self._rehydrate()

    # -- scenarios ----------------------------------------------------------

    def add_scenario(self, scenario: Scenario) -> str:
        sid = uuid.uuid4().hex[:12]
        with open(os.path.join(self.scenario_dir, f"{sid}.json"), "w") as fh:
            fh.write(scenario.model_dump_json(indent=2))
        return sid

    def get_scenario(self, sid: str) -> Optional[Scenario]:
        path = os.path.join(self.scenario_dir, f"{sid}.json")
        if not os.path.exists(path):
            return None
        return load_scenario(path)

    # -- jobs ---------------------------------------------------------------

    def submit(self, scenario_id: str, overrides: Optional[dict] = None) -> Job:
        """Validate, CFL-precheck, persist, and queue a job.

        Raises KeyError for an unknown scenario, InvalidScenario for bad
        overrides, StabilityViolation when dt already breaks the CFL bound.
        """
        scenario = self.get_scenario(scenario_id)
        if scenario is None:
            raise KeyError(scenario_id)
        doc = scenario.model_dump()
        if overrides:
            doc = _merge(doc, overrides)
        effective = load_scenario(doc)
        limit = cfl_limit(effective)
        if effective.dt > limit:
            raise StabilityViolation(
                f"dt={effective.dt:g} exceeds the stable limit {limit:g} "
                "for the configured spawn velocities"
            )

        jid = uuid.uuid4().hex[:12]
        out_dir = os.path.join(self.jobs_dir, jid)
        os.makedirs(out_dir)
        job = Job(id=jid, scenario_id=scenario_id, out_dir=out_dir)
        cancel = threading.Event()
        with self._lock:
            self._jobs[jid] = job
            self._cancel[jid] = cancel
            self._flush(job)
        future = self._pool.submit(self._execute, job, effective, cancel)
        with self._lock:
            self._futures[jid] = future
        return job

    def _execute(self, job: Job, scenario: Scenario, cancel: threading.Event):
        self._transition(job, "running")

        def progress(done, total):
            job.progress = done / total

        try:
            result = run(
                scenario, job.out_dir, progress=progress, cancelled=cancel.is_set
            )
            job.report = result.report
            if result.report["status"] == "cancelled":
                self._transition(job, "cancelled")
            else:
                job.progress = 1.0
                self._transition(job, "done")
        except Exception as exc:  # recorded, surfaced through the API
            job.error = f"{type(exc).__name__}: {exc}"
            self._transition(job, "failed")

    def _transition(self, job: Job, status: str):
        with self._lock:
            if _ORDER[status] < _ORDER[job.status]:
                return  # never move backwards
            job.status = status
            self._flush(job)

    def _flush(self, job: Job):
        doc = asdict(job)
        doc.pop("report", None)
        with open(os.path.join(job.out_dir, "job.json"), "w") as fh:
            json.dump(doc, fh, indent=2)

    def get(self, jid: str) -> Optional[Job]:
        with self._lock:
            job = self._jobs.get(jid)
        if job is not None and job.status == "done" and job.report is None:
            job.report = self._load_report(job)
        return job

    def delete(self, jid: str) -> bool:
        with self._lock:
            job = self._jobs.pop(jid, None)
            cancel = self._cancel.pop(jid, None)
            future = self._futures.pop(jid, None)
        if job is None:
            return False
        if cancel is not None:
            cancel.set()
        if future is not None:
            try:
                future.result(timeout=30)
            except Exception:
                pass
        shutil.rmtree(job.out_dir, ignore_errors=True)
        return True

    def wait(self, jid: str, timeout: Optional[float] = None):
        """Block until a job's worker finishes (used by tests and shutdown)."""
        with self._lock:
            future = self._futures.get(jid)
        if future is not None:
            future.result(timeout=timeout)

    def frame_path(self, job: Job, n: int) -> str:
        return os.path.join(job.out_dir, "frames", f"frame_{n:04d}.cmp1")

    def field_path(self, job: Job, n: int) -> str:
        return os.path.join(job.out_dir, "fields", f"velocity_{n:04d}.cmf1")

    def _load_report(self, job: Job) -> Optional[dict]:
        path = os.path.join(job.out_dir, "report.json")
        if not os.path.exists(path):
            return None
        with open(path) as fh:
            return json.load(fh)

    def _rehydrate(self):
        """Recover job records from disk after a restart. Jobs that were
        mid-flight come back as failed (their worker is gone)."""
        for jid in sorted(os.listdir(self.jobs_dir)):
            meta = os.path.join(self.jobs_dir, jid, "job.json")
            if not os.path.exists(meta):
                continue
            with open(meta) as fh:
                doc = json.load(fh)
            job = Job(**doc)
            if job.status in ("queued", "running"):
                job.status = "failed"
                job.error = "interrupted by service restart"
                self._flush(job)
            self._jobs[job.id] = job

    def shutdown(self):
        for cancel in self._cancel.values():
            cancel.set()
        self._pool.shutdown(wait=True)
