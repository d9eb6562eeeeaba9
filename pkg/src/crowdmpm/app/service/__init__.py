from .app import create_app
from .jobs import Job, JobStore

__all__ = ["Job", "JobStore", "create_app"]
