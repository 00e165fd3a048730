from webspam.adjudicator.app import create_app, sanitize_page
from webspam.adjudicator.store import (
    AdjudicationStore,
    JudgmentRecord,
    LeaseConflictError,
    Task,
    UnknownSessionError,
)

__all__ = [
    "AdjudicationStore",
    "JudgmentRecord",
    "LeaseConflictError",
    "Task",
    "UnknownSessionError",
    "create_app",
    "sanitize_page",
]
