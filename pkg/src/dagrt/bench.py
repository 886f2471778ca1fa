"""Fork-join workload generation, join-latency measurement, and the condition
runner behind the CLI.

The workload is a single-level fork-join graph (one periodic source -> N
parallel subtasks -> one sink), period 25 ms, with each parallel subtask's
execution time drawn uniformly from [1, 50] ms. Durations are pre-drawn per
(subtask, job) from a seeded generator, so every condition for a given
(N, seed) replays the identical duration table.

Join latency for index k is the readiness of k's join minus the latest
publish of an index-k input. In the task runtime, readiness is keyed by job
index natively; in the pub/sub baseline the i-th emitted set is measured
against the index-i publications, so accumulated matcher wait shows up as
latency even when the set mixes indices.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .builder import CommittedDag, DagBuilder, create_dag, finish_create_dags
from .executor import RuntimeConfig, run_dags
from .model import DagError, EventKind, ms
from .pubsub import (
    MatchKind,
    PubSubGraph,
    SubscriptionCallback,
    SynchronizedCallback,
    SyncPolicy,
    TimerCallback,
    run_pubsub,
)
from .report import RunReport

CONDITIONS = ("fass", "exact", "approx")
CSV_HEADER = ("condition", "n", "max_interval_ms", "job", "latency_ns", "matched")


class MissingEventsError(DagError):
    pass


@dataclass(frozen=True)
class JoinLatencySample:
    condition: str
    n: int
    job: int
    latency_ns: int

    def __post_init__(self):
        if self.latency_ns < 0:
            raise ValueError(f"negative join latency for job {self.job}")


@dataclass
class Workload:
    """Fork-join benchmark parameters; ``draw()`` yields the shared duration
    table (jobs x n, integer nanoseconds)."""

    n: int
    jobs: int
    period_ns: int = ms(25)
    exec_low_ns: int = ms(1)
    exec_high_ns: int = ms(50)
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.jobs < 0:
            raise ValueError("jobs must be >= 0")
        if not (0 < self.exec_low_ns <= self.exec_high_ns):
            raise ValueError("need 0 < exec_low_ns <= exec_high_ns")

    def draw(self) -> np.ndarray:
        rng = np.random.default_rng(self.seed)
        return rng.integers(self.exec_low_ns, self.exec_high_ns,
                            size=(self.jobs, self.n), endpoint=True)


@dataclass
class ForkJoin:
    """Both representations of one workload plus the shared duration table."""

    workload: Workload
    durations: np.ndarray
    source_id: str = "src"
    sink_id: str = "sink"
    worker_ids: tuple[str, ...] = ()
    fan_topics: tuple[str, ...] = ()
    out_topics: tuple[str, ...] = ()

    def duration_provider(self):
        index = {w: i for i, w in enumerate(self.worker_ids)}

        def lookup(sid: str, k: int) -> int:
            i = index.get(sid)
            if i is None or k >= len(self.durations):
                return 0
            return int(self.durations[k][i])

        return lookup

    def make_builder(self) -> DagBuilder:
        n = self.workload.n
        b = create_dag(f"forkjoin_n{n}")

        def src_fn():
            return tuple(0 for _ in range(n))

        b.register_periodic_subtask(src_fn, self.fan_topics, self.workload.period_ns,
                                    out_types=(int,) * n, priority=0, name=self.source_id)
        for i, wid in enumerate(self.worker_ids):
            def work(x, _i=i):
                return (x,)
            b.register_subtask(work, [self.fan_topics[i]], [self.out_topics[i]],
                               in_types=(int,), out_types=(int,),
                               priority=1, name=wid)
        b.register_sink_subtask(lambda *xs: None, self.out_topics,
                                in_types=(int,) * n, priority=2, name=self.sink_id)
        return b

    def make_dag(self) -> CommittedDag:
        return finish_create_dags([self.make_builder()])[0]

    def make_pubsub(self, policy: SyncPolicy) -> PubSubGraph:
        """The same graph wired through the baseline.

        Stamping follows the benchmark protocol: the source stamps its
        messages; a worker propagates the incoming stamp under exact matching
        and restamps to its own publish time under approximate matching. All
        publishes sit at the tail of the callback body.
        """
        n = self.workload.n
        table = self.durations
        restamp = policy.kind is MatchKind.APPROXIMATE
        graph = PubSubGraph()

        def src_fn(ctx, _topics=self.fan_topics):
            stamp = ctx.now()  # one stamp per job, shared by every fan-out message
            for t in _topics:
                ctx.publish(t, ctx.job, stamp=stamp)

        graph.timers.append(TimerCallback(self.source_id, self.workload.period_ns,
                                          src_fn, priority=0))
        for i, wid in enumerate(self.worker_ids):
            def work(msg, ctx, _i=i, _out=self.out_topics[i]):
                ctx.advance(int(table[msg.job][_i]) if msg.job < len(table) else 0)
                ctx.publish(_out, msg.payload,
                            stamp=None if restamp else msg.stamp)
            graph.subscriptions.append(
                SubscriptionCallback(wid, self.fan_topics[i], work, priority=1))
        graph.synchronized.append(
            SynchronizedCallback(self.sink_id, self.out_topics, policy,
                                 lambda msgs, ctx: None, priority=2))
        return graph


def build_forkjoin(workload: Workload) -> ForkJoin:
    n = workload.n
    return ForkJoin(
        workload=workload,
        durations=workload.draw(),
        worker_ids=tuple(f"w{i}" for i in range(n)),
        fan_topics=tuple(f"fan{i}" for i in range(n)),
        out_topics=tuple(f"out{i}" for i in range(n)),
    )


# -- measurement ----------------------------------------------------------------


def measure_join_latency(report: RunReport,
                         consumers: Sequence[str] | None = None,
                         min_arity: int = 2) -> list[JoinLatencySample]:
    """Join-latency samples recomputed from the trace.

    For every readiness event of a joining consumer (join-ready in the task
    runtime, trigger ordinal i in the baseline), latency is the event time
    minus the newest publish among that index's input messages.
    """
    condition = report.meta.get("condition", report.mode)
    n = int(report.meta.get("n", 0))
    if consumers is None:
        consumers = [c for c, topics in report.joins.items()
                     if len(topics) >= min_arity]
    wanted = set(consumers)

    publish_at: dict[tuple[str, int], int] = {}
    for e in report.events:
        if e.kind is EventKind.PUBLISH and e.topic is not None:
            publish_at.setdefault((e.topic, e.job), e.time_ns)

    ready_kind = EventKind.JOIN_READY if report.mode == "dag" else EventKind.TRIGGER
    samples: list[JoinLatencySample] = []
    for e in report.events:
        if e.kind is not ready_kind or e.subtask not in wanted:
            continue
        topics = report.joins[e.subtask]
        inputs = []
        for t in topics:
            key = (t, e.job)
            if key not in publish_at:
                raise MissingEventsError(
                    f"no publish recorded for topic {t!r} job {e.job}")
            inputs.append(publish_at[key])
        samples.append(JoinLatencySample(condition, n, e.job,
                                         e.time_ns - max(inputs)))
    return samples


def summarize(latencies: Sequence[int], released: int | None = None) -> dict:
    """Order statistics over triggered samples: mean, mean-of-middle median,
    nearest-rank p95, max, count, and the match rate against ``released``."""
    count = len(latencies)
    if released is None:
        match_rate = 1.0 if count else 0.0
    else:
        match_rate = count / released if released else 0.0
    if count == 0:
        return {"count": 0, "mean_ns": None, "median_ns": None, "p95_ns": None,
                "max_ns": None, "match_rate": match_rate}
    arr = np.sort(np.asarray(latencies, dtype=np.int64))
    p95 = arr[min(count - 1, max(0, -(-95 * count // 100) - 1))]  # nearest rank
    return {
        "count": count,
        "mean_ns": float(arr.mean()),
        "median_ns": float(np.median(arr)),
        "p95_ns": int(p95),
        "max_ns": int(arr[-1]),
        "match_rate": match_rate,
    }


# -- condition runner -------------------------------------------------------------


@dataclass
class ConditionResult:
    condition: str
    workload: Workload
    max_interval_ms: int | None
    report: RunReport
    samples: list[JoinLatencySample]

    def rows(self) -> list[tuple]:
        """One CSV row per job index: matched rows carry the i-th sample's
        latency; unmatched indices carry an empty latency and matched=0."""
        interval = "" if self.max_interval_ms is None else self.max_interval_ms
        by_row: list[tuple] = []
        if self.report.mode == "dag":
            latency_by_job = {s.job: s.latency_ns for s in self.samples}
            lookup = latency_by_job.get
        else:
            ordered = [s.latency_ns for s in sorted(self.samples, key=lambda s: s.job)]
            lookup = lambda k: ordered[k] if k < len(ordered) else None
        for k in range(self.workload.jobs):
            lat = lookup(k)
            if lat is None:
                by_row.append((self.condition, self.workload.n, interval, k, "", 0))
            else:
                by_row.append((self.condition, self.workload.n, interval, k, lat, 1))
        return by_row

    def summary(self) -> dict:
        stats = summarize([s.latency_ns for s in self.samples], self.workload.jobs)
        return {
            "condition": self.condition,
            "n": self.workload.n,
            "max_interval_ms": self.max_interval_ms,
            "jobs": self.workload.jobs,
            "seed": self.workload.seed,
            "drops": self.report.drops,
            "overruns": self.report.overruns,
            **stats,
        }


def run_condition(condition: str, workload: Workload, *,
                  max_interval_ms: int | None = None, clock: str = "virtual",
                  queue_size: int | None = None) -> ConditionResult:
    """Run one benchmark cell and measure its join latencies.

    Unless overridden, the approx condition keeps the shallow middleware
    default of 10 buffered messages per topic (it is the stress case), while
    the exact condition gets buffers deep enough that no pending match is ever
    evicted: with execution drawn from [1, 50] ms against a 25 ms period the
    per-worker backlog drifts over long runs, and a convention-compliant
    deployment sizes its buffers for that backlog.
    """
    if condition not in CONDITIONS:
        raise ValueError(f"unknown condition {condition!r}")
    if condition == "approx" and max_interval_ms is None:
        raise ValueError("approx needs max_interval_ms")
    if condition != "approx" and max_interval_ms is not None:
        raise ValueError(f"{condition} does not take max_interval_ms")
    if queue_size is None:
        queue_size = 10 if condition == "approx" else max(10, workload.jobs)

    fj = build_forkjoin(workload)
    # one worker per parallel subtask plus source and sink, so parallel
    # subtasks never queue behind each other artificially
    cfg = RuntimeConfig(worker_count=workload.n + 2, clock=clock,
                        jobs=workload.jobs, seed=workload.seed)
    if condition == "fass":
        report = run_dags([fj.make_dag()], cfg, fj.duration_provider())
    else:
        if condition == "exact":
            policy = SyncPolicy(MatchKind.EXACT, queue_size=queue_size)
        else:
            policy = SyncPolicy(MatchKind.APPROXIMATE,
                                max_interval_ns=ms(max_interval_ms),
                                queue_size=queue_size)
        report = run_pubsub(fj.make_pubsub(policy), cfg)
    report.meta.update({"condition": condition, "n": workload.n,
                        "max_interval_ms": max_interval_ms})
    samples = measure_join_latency(report, consumers=[fj.sink_id])
    return ConditionResult(condition, workload, max_interval_ms, report, samples)


def write_csv(result: ConditionResult, out) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for row in result.rows():
        w.writerow(row)


def csv_bytes(result: ConditionResult) -> bytes:
    buf = io.StringIO()
    write_csv(result, buf)
    return buf.getvalue().encode()


def json_doc(result: ConditionResult) -> dict:
    return {
        "summary": result.summary(),
        "samples": [
            {"job": row[3], "latency_ns": row[4] if row[4] != "" else None,
             "matched": bool(row[5])}
            for row in result.rows()
        ],
    }
