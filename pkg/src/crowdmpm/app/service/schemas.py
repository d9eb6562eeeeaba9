"""Request/response bodies for the studio API. Every response carries
schema_version so clients can detect contract drift."""

from typing import Optional

from pydantic import BaseModel

API_SCHEMA_VERSION = 1


class ScenarioCreated(BaseModel):
    schema_version: int = API_SCHEMA_VERSION
    id: str


class JobRequest(BaseModel):
    scenario_id: str
    overrides: dict = {}


class JobCreated(BaseModel):
    schema_version: int = API_SCHEMA_VERSION
    job_id: str


class JobStatus(BaseModel):
    schema_version: int = API_SCHEMA_VERSION
    id: str
    scenario_id: str
    status: str  # queued | running | done | failed | cancelled
    progress: float
    error: Optional[str] = None
    report: Optional[dict] = None


class FrameResponse(BaseModel):
    schema_version: int = API_SCHEMA_VERSION
    job_id: str
    frame: int
    grid: dict
    layers: dict


class Deleted(BaseModel):
    schema_version: int = API_SCHEMA_VERSION
    id: str
    deleted: bool = True
