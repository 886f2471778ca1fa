"""Execution traces and derived per-job metrics.

A RunReport is an append-only, time-ordered event list plus enough wiring
metadata (join topology, sink set, releases) to recompute readiness and
deadline figures from the trace alone. Reports serialize to JSON and to a
per-sample CSV.
"""

from __future__ import annotations

import csv
import json
import threading
from dataclasses import dataclass, field
from typing import Any, TextIO

from .model import EventKind, EventRecord, IncompleteJobError


@dataclass
class RunReport:
    """Trace of one run (either runtime) and its derived metrics."""

    mode: str = "dag"  # "dag" | "pubsub"
    events: list[EventRecord] = field(default_factory=list)
    # consumer id -> ordered input topics, for every gated/synchronized consumer
    joins: dict[str, tuple[str, ...]] = field(default_factory=dict)
    sink_ids: tuple[str, ...] = ()
    releases: dict[int, int] = field(default_factory=dict)  # job k -> r_k
    period_ns: int | None = None
    relative_deadline_ns: int | None = None
    jobs_released: int = 0
    jobs_completed: int = 0
    overruns: int = 0
    drops: int = 0  # synchronizer overflow evictions (pub/sub only)
    triggers: int = 0  # synchronizer emissions (pub/sub only)
    meta: dict[str, Any] = field(default_factory=dict)

    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)
    _finish_index: dict[tuple[str, int], int] = field(default_factory=dict, repr=False)

    def add_event(self, kind: EventKind, subtask: str, job: int, time_ns: int,
                  topic: str | None = None) -> None:
        rec = EventRecord(kind, subtask, job, time_ns, topic)
        with self._lock:
            self.events.append(rec)
            if kind is EventKind.FINISH:
                self._finish_index[(subtask, job)] = time_ns

    def finish_time(self, subtask: str, job: int) -> int | None:
        return self._finish_index.get((subtask, job))

    @property
    def deadline_ns(self) -> int | None:
        """Relative deadline: explicit if set, else implicit (= source period)."""
        if self.relative_deadline_ns is not None:
            return self.relative_deadline_ns
        return self.period_ns

    def match_rate(self) -> float:
        if self.mode == "pubsub":
            if self.jobs_released == 0:
                return 0.0
            return self.triggers / self.jobs_released
        if self.jobs_released == 0:
            return 0.0
        return self.jobs_completed / self.jobs_released

    # -- serialization ------------------------------------------------------

    def metrics(self) -> dict[str, Any]:
        deadline = self.deadline_ns
        met = {}
        if deadline is not None and self.mode == "dag":
            for k in sorted(self.releases):
                try:
                    met[k] = deadline_met(self, k, deadline)
                except IncompleteJobError:
                    continue
        return {
            "mode": self.mode,
            "jobs_released": self.jobs_released,
            "jobs_completed": self.jobs_completed,
            "overruns": self.overruns,
            "drops": self.drops,
            "triggers": self.triggers,
            "match_rate": self.match_rate(),
            "deadline_ns": deadline,
            "deadline_met": {str(k): v for k, v in met.items()},
        }

    def to_json(self, indent: int | None = None) -> str:
        doc = {
            "events": [e.as_dict() for e in self.events],
            "metrics": self.metrics(),
            "joins": {k: list(v) for k, v in self.joins.items()},
            "meta": self.meta,
        }
        return json.dumps(doc, indent=indent)

    def write_samples_csv(self, out: TextIO, condition: str, n: int,
                          samples: list[tuple[int, int]]) -> None:
        """Minimal sample CSV: one row per join-latency sample (job k, latency)."""
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["condition", "n", "job", "latency_ns"])
        for job, latency in samples:
            w.writerow([condition, n, job, latency])


def job_completion(report: RunReport, k: int) -> int:
    """Completion time of job k: the max finish time over the sink set."""
    missing = [s for s in report.sink_ids if report.finish_time(s, k) is None]
    if missing or not report.sink_ids:
        raise IncompleteJobError(k, missing or ["<no sinks>"])
    return max(report.finish_time(s, k) for s in report.sink_ids)  # type: ignore[arg-type]


def deadline_met(report: RunReport, k: int, deadline_ns: int | None = None) -> bool:
    """True iff job k completed no later than its release plus the relative
    deadline (boundary inclusive)."""
    if deadline_ns is None:
        deadline_ns = report.deadline_ns
    if deadline_ns is None:
        raise ValueError("no relative deadline configured for this run")
    if k not in report.releases:
        raise IncompleteJobError(k, ["<no release>"])
    return job_completion(report, k) <= report.releases[k] + deadline_ns
