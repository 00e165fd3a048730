"""Persistence and lease bookkeeping for the adjudication service.

Two append-only line files live under the data directory: ``sessions.jsonl``
(one session definition per line) and ``judgments.log`` (one tab-separated
record per judgment, timestamp first).  Restarting on an existing directory
reconstructs identical progress.  Leases are in-memory only.
"""

from __future__ import annotations

import json
import random
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

DEFAULT_LEASE_SECONDS = 300.0

LABELS = ("spam", "nonspam", "unknown")


class UnknownSessionError(KeyError):
    pass


class LeaseConflictError(RuntimeError):
    pass


@dataclass(frozen=True)
class Task:
    task_id: str
    doc_id: str
    topic: Optional[str] = None


@dataclass
class JudgmentRecord:
    task_id: str
    doc_id: str
    assessor: str
    label: str
    elapsed_ms: int
    timestamp: float = 0.0

    def to_line(self) -> str:
        return (
            f"{self.timestamp:.3f}\t{self.task_id}\t{self.doc_id}"
            f"\t{self.assessor}\t{self.label}\t{self.elapsed_ms}\n"
        )

    @classmethod
    def from_line(cls, line: str) -> "JudgmentRecord":
        ts, task_id, doc_id, assessor, label, elapsed = line.rstrip("\n").split("\t")
        return cls(task_id, doc_id, assessor, label, int(elapsed), float(ts))


@dataclass
class Session:
    session_id: str
    tasks: List[Task]
    seed: int
    with_replacement: bool
    judged: Dict[str, JudgmentRecord] = field(default_factory=dict)  # by task_id
    leases: Dict[str, Tuple[str, float]] = field(default_factory=dict)  # task -> (assessor, expiry)


class AdjudicationStore:
    """Single-writer store; all mutation is serialized behind one lock."""

    def __init__(
        self,
        data_dir,
        pages: Dict[str, bytes],
        lease_seconds: float = DEFAULT_LEASE_SECONDS,
    ):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.pages = pages
        self.lease_seconds = lease_seconds
        self.sessions: Dict[str, Session] = {}
        self._lock = threading.Lock()
        self._sessions_path = self.data_dir / "sessions.jsonl"
        self._log_path = self.data_dir / "judgments.log"
        self._replay()

    def _replay(self):
        if self._sessions_path.exists():
            with open(self._sessions_path, encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    spec = json.loads(line)
                    session = Session(
                        session_id=spec["session_id"],
                        tasks=[Task(**t) for t in spec["tasks"]],
                        seed=spec["seed"],
                        with_replacement=spec["with_replacement"],
                    )
                    self.sessions[session.session_id] = session
        if self._log_path.exists():
            task_index = {
                task.task_id: session
                for session in self.sessions.values()
                for task in session.tasks
            }
            with open(self._log_path, encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    record = JudgmentRecord.from_line(line)
                    session = task_index.get(record.task_id)
                    if session is not None:
                        session.judged[record.task_id] = record

    def create_session(
        self, size: int, seed: int = 0, with_replacement: bool = True
    ) -> str:
        if not self.pages:
            raise ValueError("no pages available to sample from")
        doc_ids = sorted(self.pages)
        rng = random.Random(seed)
        if with_replacement:
            sampled = [rng.choice(doc_ids) for _ in range(size)]
        else:
            if size > len(doc_ids):
                raise ValueError(
                    f"cannot sample {size} of {len(doc_ids)} without replacement"
                )
            sampled = rng.sample(doc_ids, size)
        session_id = uuid.uuid4().hex[:12]
        tasks = [
            Task(task_id=f"{session_id}-{i:05d}", doc_id=doc_id)
            for i, doc_id in enumerate(sampled)
        ]
        session = Session(session_id, tasks, seed, with_replacement)
        with self._lock:
            self.sessions[session_id] = session
            with open(self._sessions_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps({
                    "session_id": session_id,
                    "seed": seed,
                    "with_replacement": with_replacement,
                    "tasks": [
                        {"task_id": t.task_id, "doc_id": t.doc_id, "topic": t.topic}
                        for t in tasks
                    ],
                }) + "\n")
                fh.flush()
        return session_id

    def _session(self, session_id: str) -> Session:
        try:
            return self.sessions[session_id]
        except KeyError:
            raise UnknownSessionError(session_id) from None

    def next_task(self, session_id: str, assessor: str) -> Optional[Task]:
        """Earliest unjudged, unleased task; leased to the assessor, or None."""
        now = time.monotonic()
        with self._lock:
            session = self._session(session_id)
            for task in session.tasks:
                if task.task_id in session.judged:
                    continue
                lease = session.leases.get(task.task_id)
                if lease is not None and lease[1] > now and lease[0] != assessor:
                    continue
                session.leases[task.task_id] = (assessor, now + self.lease_seconds)
                return task
            return None

    def find_task(self, task_id: str) -> Optional[Task]:
        for session in self.sessions.values():
            for task in session.tasks:
                if task.task_id == task_id:
                    return task
        return None

    def submit(self, record: JudgmentRecord, override: bool = False) -> None:
        if record.label not in LABELS:
            raise ValueError(f"invalid label {record.label!r}")
        if record.elapsed_ms < 0:
            raise ValueError("elapsed_ms must be >= 0")
        now = time.monotonic()
        with self._lock:
            session = next(
                (
                    s for s in self.sessions.values()
                    if any(t.task_id == record.task_id for t in s.tasks)
                ),
                None,
            )
            if session is None:
                raise UnknownSessionError(record.task_id)
            if not override:
                lease = session.leases.get(record.task_id)
                already = session.judged.get(record.task_id)
                held = lease is not None and lease[0] == record.assessor and lease[1] > now
                resubmit = already is not None and already.assessor == record.assessor
                if not held and not resubmit:
                    raise LeaseConflictError(
                        f"no active lease on {record.task_id} for {record.assessor}"
                    )
            record.timestamp = time.time()
            with open(self._log_path, "a", encoding="utf-8") as fh:
                fh.write(record.to_line())
                fh.flush()
            session.judged[record.task_id] = record  # last wins
            session.leases.pop(record.task_id, None)

    def progress(self, session_id: str) -> Dict:
        with self._lock:
            session = self._session(session_id)
            tallies = {label: 0 for label in LABELS}
            elapsed = []
            for record in session.judged.values():
                tallies[record.label] += 1
                elapsed.append(record.elapsed_ms)
            judged = len(session.judged)
            return {
                "judged": judged,
                "remaining": len(session.tasks) - judged,
                "tallies": tallies,
                "mean_elapsed_ms": (sum(elapsed) / len(elapsed)) if elapsed else 0.0,
            }

    def log_lines(self) -> List[str]:
        if not self._log_path.exists():
            return []
        with open(self._log_path, encoding="utf-8") as fh:
            return [line for line in fh if line.strip()]
