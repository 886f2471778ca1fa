"""Shared test utilities: trace checkers, a random valid-DAG generator, and
independent brute-force oracles for the matching policies."""

from __future__ import annotations

import itertools
import random
from collections import Counter

from dagrt.builder import DagBuilder, create_dag
from dagrt.model import EventKind, ms
from dagrt.report import RunReport


def starts(report: RunReport) -> dict[tuple[str, int], int]:
    out: dict[tuple[str, int], int] = {}
    for e in report.events:
        if e.kind is EventKind.START:
            out.setdefault((e.subtask, e.job), e.time_ns)
    return out


def finishes(report: RunReport) -> dict[tuple[str, int], int]:
    out: dict[tuple[str, int], int] = {}
    for e in report.events:
        if e.kind is EventKind.FINISH:
            out.setdefault((e.subtask, e.job), e.time_ns)
    return out


def boundary_violations(report: RunReport,
                        edges: list[tuple[str, str, str]]) -> list[tuple]:
    """Precedence violations: successor started before its predecessor
    finished, for the same job index."""
    st = starts(report)
    fi = finishes(report)
    bad = []
    for (u, v, _t) in edges:
        for (sv, k), t_start in st.items():
            if sv != v:
                continue
            t_fin = fi.get((u, k))
            if t_fin is not None and t_start < t_fin:
                bad.append((u, v, k, t_start, t_fin))
    return bad


def random_valid_dag(rng: random.Random, max_subtasks: int = 12,
                     period_ns: int = ms(25)) -> tuple[DagBuilder, dict]:
    """A random one-source-one-sink layered DAG plus a per-(subtask, job)
    duration table. Every non-source node gets >= 1 predecessor among earlier
    nodes and every non-sink node >= 1 successor, so the graph always commits."""
    n = rng.randint(3, max_subtasks)
    names = [f"n{i}" for i in range(n)]
    preds: dict[int, list[int]] = {}
    for i in range(1, n):
        k = rng.randint(1, min(3, i))
        preds[i] = sorted(rng.sample(range(i), k))
    has_succ = set()
    for i, ps in preds.items():
        has_succ.update(ps)
    for i in range(n - 1):
        if i not in has_succ:
            preds[n - 1].append(i)
    edges = sorted({(u, v) for v, ps in preds.items() for u in ps})
    topic = {e: f"t{e[0]}_{e[1]}" for e in edges}

    outs = {i: [topic[(u, v)] for (u, v) in edges if u == i] for i in range(n)}
    ins = {i: [topic[(u, v)] for (u, v) in edges if v == i] for i in range(n)}

    b = create_dag()

    def make_fn(n_in: int, n_out: int):
        def fn(*xs):
            return tuple(range(n_out))
        return fn

    b.register_periodic_subtask(make_fn(0, len(outs[0])), outs[0], period_ns,
                                priority=rng.randint(0, 5), name=names[0])
    for i in range(1, n - 1):
        b.register_subtask(make_fn(len(ins[i]), len(outs[i])), ins[i], outs[i],
                           priority=rng.randint(0, 5), name=names[i])
    b.register_sink_subtask(make_fn(len(ins[n - 1]), 0), ins[n - 1],
                            priority=rng.randint(0, 5), name=names[n - 1])

    durations = {}
    for i in range(n):
        for k in range(50):
            durations[(names[i], k)] = rng.randint(0, ms(8))
    return b, durations


def priority_violations(report: RunReport, priorities: dict[str, int],
                        sources: set[str]) -> list[tuple]:
    """Replay the trace maintaining the set of dispatchable activations; every
    start must pick a minimal-priority member of that set.

    An activation (v, k) is dispatchable once its readiness event was logged
    (release for sources, join-ready otherwise) and (v, k-1) has finished.
    Assumes no send ever blocked (ample queue capacity).
    """
    join_ready: set[tuple[str, int]] = set()
    finished: set[tuple[str, int]] = set()
    available: dict[tuple[str, int], int] = {}
    violations: list[tuple] = []

    for e in report.events:
        key = (e.subtask, e.job)
        if e.kind is EventKind.RELEASE and e.subtask in sources:
            available[key] = priorities[e.subtask]
        elif e.kind is EventKind.JOIN_READY and e.subtask in priorities:
            join_ready.add(key)
            if e.job == 0 or (e.subtask, e.job - 1) in finished:
                available[key] = priorities[e.subtask]
        elif e.kind is EventKind.FINISH:
            finished.add(key)
            nxt = (e.subtask, e.job + 1)
            if nxt in join_ready:
                available[nxt] = priorities[e.subtask]
        elif e.kind is EventKind.START:
            if key not in available:
                violations.append(("started while not dispatchable", key))
                continue
            best = min(available.values())
            if priorities[e.subtask] > best:
                violations.append(("priority order broken", key,
                                   priorities[e.subtask], best))
            del available[key]
    return violations


# -- matcher oracles ------------------------------------------------------------


def stamp_multiset_intersection(streams: dict[str, list[int]]) -> Counter:
    """Reference result for exact matching on per-topic stamp streams: the
    multiset intersection of the per-topic stamp multisets."""
    counters = [Counter(v) for v in streams.values()]
    out = counters[0]
    for c in counters[1:]:
        out = out & c
    return out


class ExactOracle:
    """Independent step-by-step reimplementation of exact matching: scan
    buffers on every arrival, no incremental state."""

    def __init__(self, topics, queue_size=10):
        self.topics = tuple(topics)
        self.queue_size = queue_size
        self.buf = {t: [] for t in self.topics}  # (seq, stamp, tag)
        self.seq = itertools.count()
        self.emitted: list[tuple] = []

    def offer(self, topic: str, stamp: int, tag=None):
        self.buf[topic].append((next(self.seq), stamp, tag))
        if len(self.buf[topic]) > self.queue_size:
            self.buf[topic].pop(0)
        chosen = []
        for t in self.topics:
            hits = [e for e in self.buf[t] if e[1] == stamp]
            if not hits:
                return None
            chosen.append(min(hits))
        for t, e in zip(self.topics, chosen):
            self.buf[t].remove(e)
        for t in self.topics:
            self.buf[t] = [e for e in self.buf[t] if e[1] >= stamp]
        out = tuple((t, e[1], e[2]) for t, e in zip(self.topics, chosen))
        self.emitted.append(out)
        return out


class ApproxOracle:
    """Exhaustive-enumeration reimplementation of approximate matching: try
    every one-per-topic combination, pick minimal (spread, newest stamp), then
    the earliest-arrived message per topic inside that stamp window."""

    def __init__(self, topics, max_interval, queue_size=10):
        self.topics = tuple(topics)
        self.max_interval = max_interval
        self.queue_size = queue_size
        self.buf = {t: [] for t in self.topics}
        self.seq = itertools.count()
        self.emitted: list[tuple] = []

    def offer(self, topic: str, stamp: int, tag=None):
        self.buf[topic].append((next(self.seq), stamp, tag))
        if len(self.buf[topic]) > self.queue_size:
            self.buf[topic].pop(0)
        if any(not self.buf[t] for t in self.topics):
            return None
        best = None
        for combo in itertools.product(*(self.buf[t] for t in self.topics)):
            stamps = [e[1] for e in combo]
            key = (max(stamps) - min(stamps), max(stamps))
            if best is None or key < best:
                best = key
        span, hi = best
        if span > self.max_interval:
            return None
        lo = hi - span
        chosen = []
        for t in self.topics:
            chosen.append(min(e for e in self.buf[t] if lo <= e[1] <= hi))
        for t, e in zip(self.topics, chosen):
            self.buf[t].remove(e)
        for t in self.topics:
            self.buf[t] = [e for e in self.buf[t] if e[1] >= lo]
        out = tuple((t, e[1], e[2]) for t, e in zip(self.topics, chosen))
        self.emitted.append(out)
        return out
