"""Graph registration API and the commit step that freezes and validates it.

Construction is deliberately separated from execution: subtasks are registered
as plain functions wired to named topics, and ``finish_create_dags`` validates
the whole batch (acyclicity, single publisher per topic, source/sink policy,
type consistency) before any scheduling state exists. Registered functions
receive payload tuples and return payload tuples; there is no emit/publish
primitive anywhere on this API, so an output can only appear when the function
returns, i.e. at completion.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Any, Callable, Sequence

from .model import (
    ANY,
    ArityMismatchError,
    DagError,
    DagSpec,
    Edge,
    SubtaskKind,
    SubtaskSpec,
    TopicId,
    dangling_topics,
    type_tags_compatible,
)

_dag_counter = itertools.count()


class TypeMismatchError(DagError):
    def __init__(self, topic: str, have: object, want: object):
        super().__init__(f"topic {topic!r} carries {have!r}, subtask expects {want!r}")
        self.topic = topic


class BadPeriodError(DagError):
    pass


class AlreadyCommittedError(DagError):
    pass


class DuplicateSubtaskError(DagError):
    pass


class ErrorKind(enum.Enum):
    CYCLE = "cycle"
    MULTI_PUBLISHER = "multi_publisher"
    NO_SOURCE = "no_source"
    MULTIPLE_SOURCES = "multiple_sources"
    NO_SINK = "no_sink"
    MULTIPLE_SINKS = "multiple_sinks"
    UNKNOWN_TOPIC = "unknown_topic"
    TYPE_MISMATCH = "type_mismatch"
    DANGLING_TOPIC = "dangling_topic"
    BAD_PERIOD = "bad_period"


@dataclass(frozen=True)
class ValidationError:
    """One structural violation found at commit time; always names at least
    one subtask or topic."""

    kind: ErrorKind
    subtasks: tuple[str, ...] = ()
    topics: tuple[str, ...] = ()
    detail: str = ""

    def __str__(self) -> str:
        parts = [self.kind.value]
        if self.subtasks:
            parts.append("subtasks=" + ",".join(self.subtasks))
        if self.topics:
            parts.append("topics=" + ",".join(self.topics))
        if self.detail:
            parts.append(self.detail)
        return " ".join(parts)


class CommitError(DagError):
    """Raised by finish_create_dags with the full violation list; commit is
    all-or-nothing, so no graph was frozen."""

    def __init__(self, errors: list[ValidationError]):
        super().__init__("; ".join(str(e) for e in errors))
        self.errors = errors


@dataclass
class CommittedDag:
    """Frozen, validated graph: adjacency, topological order, source and sinks.
    Safe to share across threads; never mutated after commit."""

    dag_id: str
    subtasks: dict[str, SubtaskSpec]
    topics: dict[str, TopicId]
    edges: tuple[Edge, ...]
    topo_order: tuple[str, ...]
    source_id: str
    sink_ids: tuple[str, ...]
    warnings: tuple[ValidationError, ...] = ()

    @property
    def period_ns(self) -> int:
        period = self.subtasks[self.source_id].period_ns
        assert period is not None
        return period

    @property
    def relative_deadline_ns(self) -> int | None:
        return self.subtasks[self.source_id].relative_deadline_ns

    def predecessors(self, subtask_id: str) -> list[str]:
        return [u for (u, v, _t) in self.edges if v == subtask_id]

    def successors(self, subtask_id: str) -> list[str]:
        return [v for (u, v, _t) in self.edges if u == subtask_id]

    def subscribers(self, topic: str) -> list[str]:
        seen: list[str] = []
        for (_u, v, t) in self.edges:
            if t == topic and v not in seen:
                seen.append(v)
        return seen

    def to_dot(self) -> str:
        """DOT-format dump of the graph for documentation and debugging."""
        lines = [f'digraph "{self.dag_id}" {{']
        for sid in self.topo_order:
            spec = self.subtasks[sid]
            shape = {"source": "invhouse", "sink": "house"}.get(spec.kind.value, "box")
            lines.append(f'  "{sid}" [shape={shape}, label="{sid}\\nprio={spec.priority}"];')
        for (u, v, t) in self.edges:
            lines.append(f'  "{u}" -> "{v}" [label="{t}"];')
        lines.append("}")
        return "\n".join(lines)


class DagBuilder:
    """Accumulates subtask registrations for one graph until commit.

    Builders are single-threaded; once committed they reject further
    registration and cannot be committed twice.
    """

    def __init__(self, dag_id: str | None = None):
        self.spec = DagSpec(dag_id or f"dag{next(_dag_counter)}")
        self.committed = False

    @property
    def dag_id(self) -> str:
        return self.spec.dag_id

    def clone_spec(self) -> DagSpec:
        return DagSpec(self.spec.dag_id, list(self.spec.subtasks), dict(self.spec.topics))

    # -- registration -------------------------------------------------------

    def register_periodic_subtask(self, fn: Callable[..., Any],
                                  out_topics: Sequence[str], period_ns: int, *,
                                  out_types: Sequence[object] | None = None,
                                  priority: int = 0, name: str | None = None,
                                  relative_deadline_ns: int | None = None,
                                  attrs: dict[str, Any] | None = None) -> str:
        """Register the periodic source: no inputs, outputs on ``out_topics``,
        released every ``period_ns``."""
        if period_ns <= 0:
            raise BadPeriodError(f"period must be > 0, got {period_ns}")
        if relative_deadline_ns is not None and relative_deadline_ns <= 0:
            raise BadPeriodError(f"relative deadline must be > 0, got {relative_deadline_ns}")
        return self._register(fn, SubtaskKind.SOURCE, (), out_topics, None,
                              out_types, priority, name, period_ns,
                              relative_deadline_ns, attrs)

    def register_subtask(self, fn: Callable[..., Any], in_topics: Sequence[str],
                         out_topics: Sequence[str], *,
                         in_types: Sequence[object] | None = None,
                         out_types: Sequence[object] | None = None,
                         priority: int = 0, name: str | None = None,
                         attrs: dict[str, Any] | None = None) -> str:
        """Register an intermediate subtask: consumes ``in_topics`` as the
        argument tuple, returns one value per topic in ``out_topics``."""
        return self._register(fn, SubtaskKind.INTERMEDIATE, in_topics, out_topics,
                              in_types, out_types, priority, name, None, None, attrs)

    def register_sink_subtask(self, fn: Callable[..., Any],
                              in_topics: Sequence[str], *,
                              in_types: Sequence[object] | None = None,
                              priority: int = 0, name: str | None = None,
                              attrs: dict[str, Any] | None = None) -> str:
        """Register the sink: consumes ``in_topics``, returns nothing."""
        return self._register(fn, SubtaskKind.SINK, in_topics, (), in_types,
                              None, priority, name, None, None, attrs)

    def _register(self, fn, kind, in_topics, out_topics, in_types, out_types,
                  priority, name, period_ns, relative_deadline_ns, attrs) -> str:
        if self.committed:
            raise AlreadyCommittedError(f"{self.dag_id} already committed")
        in_topics = tuple(in_topics)
        out_topics = tuple(out_topics)

        if kind is not SubtaskKind.SOURCE and not in_topics:
            raise ArityMismatchError(f"{kind.value} needs inputs", 1, 0)
        if kind is not SubtaskKind.SINK and not out_topics:
            raise ArityMismatchError(f"{kind.value} needs outputs", 1, 0)

        in_tags = tuple(in_types) if in_types is not None else (ANY,) * len(in_topics)
        out_tags = tuple(out_types) if out_types is not None else (ANY,) * len(out_topics)
        if len(in_tags) != len(in_topics):
            raise ArityMismatchError("input topics vs declared input types",
                                     len(in_tags), len(in_topics))
        if len(out_tags) != len(out_topics):
            raise ArityMismatchError("output topics vs declared output types",
                                     len(out_tags), len(out_topics))

        # Input types must agree with topics already created by a publisher;
        # subscriber-before-publisher cases are re-checked at commit.
        for topic, tag in zip(in_topics, in_tags):
            existing = self.spec.topics.get(topic)
            if existing is not None and not type_tags_compatible(existing.payload_type, tag):
                raise TypeMismatchError(topic, existing.payload_type, tag)

        sid = self._pick_id(name, fn)
        spec = SubtaskSpec(
            id=sid, kind=kind, fn=fn, in_topics=in_topics, out_topics=out_topics,
            in_types=in_tags, out_types=out_tags, priority=priority,
            period_ns=period_ns, relative_deadline_ns=relative_deadline_ns,
            order=len(self.spec.subtasks), attrs=dict(attrs or {}))
        self.spec.subtasks.append(spec)
        for topic, tag in zip(out_topics, out_tags):
            # first publisher fixes the payload type; extra publishers are
            # reported as MultiPublisher at commit
            self.spec.topics.setdefault(topic, TopicId(topic, tag))
        return sid

    def _pick_id(self, name: str | None, fn: Callable[..., Any]) -> str:
        taken = {s.id for s in self.spec.subtasks}
        if name is not None:
            if name in taken:
                raise DuplicateSubtaskError(f"subtask id {name!r} already registered")
            return name
        base = getattr(fn, "__name__", "subtask")
        if base == "<lambda>":
            base = "subtask"
        sid = base
        n = 1
        while sid in taken:
            n += 1
            sid = f"{base}_{n}"
        return sid


def create_dag(dag_id: str | None = None) -> DagBuilder:
    """Fresh builder with a unique graph id."""
    return DagBuilder(dag_id)


def finish_create_dags(builders: Sequence[DagBuilder], *,
                       policy: str = "strict") -> list[CommittedDag]:
    """Validate and freeze a batch of builders.

    ``policy`` is ``"strict"`` (exactly one source and one sink per graph) or
    ``"multi-sink"`` (any number of sinks). All violations across all builders
    are collected and raised together as CommitError; on any error nothing is
    committed and every builder stays reusable.
    """
    if policy not in ("strict", "multi-sink"):
        raise ValueError(f"unknown commit policy {policy!r}")
    errors: list[ValidationError] = []
    results: list[CommittedDag] = []
    for b in builders:
        if b.committed:
            raise AlreadyCommittedError(f"{b.dag_id} already committed")
    for b in builders:
        committed, errs = _validate(b.spec, policy)
        errors.extend(errs)
        if committed is not None:
            results.append(committed)
    if errors:
        raise CommitError(errors)
    for b in builders:
        b.committed = True
    return results


def _validate(spec: DagSpec, policy: str) -> tuple[CommittedDag | None, list[ValidationError]]:
    errors: list[ValidationError] = []
    warnings: list[ValidationError] = []

    publishers: dict[str, list[str]] = {}
    for s in spec.subtasks:
        for t in s.out_topics:
            publishers.setdefault(t, []).append(s.id)
    for t, pubs in publishers.items():
        if len(pubs) > 1:
            errors.append(ValidationError(ErrorKind.MULTI_PUBLISHER,
                                          subtasks=tuple(pubs), topics=(t,)))

    for s in spec.subtasks:
        for topic, tag in zip(s.in_topics, s.in_types):
            if topic not in publishers:
                errors.append(ValidationError(ErrorKind.UNKNOWN_TOPIC,
                                              subtasks=(s.id,), topics=(topic,),
                                              detail="no publisher"))
            else:
                declared = spec.topics[topic].payload_type
                if not type_tags_compatible(declared, tag):
                    errors.append(ValidationError(ErrorKind.TYPE_MISMATCH,
                                                  subtasks=(s.id,), topics=(topic,)))
        if s.kind is SubtaskKind.SOURCE and (s.period_ns is None or s.period_ns <= 0):
            errors.append(ValidationError(ErrorKind.BAD_PERIOD, subtasks=(s.id,)))

    sources = [s.id for s in spec.subtasks if s.kind is SubtaskKind.SOURCE]
    sinks = [s.id for s in spec.subtasks if s.kind is SubtaskKind.SINK]
    if not sources:
        errors.append(ValidationError(ErrorKind.NO_SOURCE, subtasks=(spec.dag_id,),
                                      detail="dag needs a periodic source"))
    elif len(sources) > 1:
        errors.append(ValidationError(ErrorKind.MULTIPLE_SOURCES, subtasks=tuple(sources)))
    if not sinks:
        errors.append(ValidationError(ErrorKind.NO_SINK, subtasks=(spec.dag_id,),
                                      detail="dag needs a sink"))
    elif len(sinks) > 1 and policy == "strict":
        errors.append(ValidationError(ErrorKind.MULTIPLE_SINKS, subtasks=tuple(sinks)))

    for t in dangling_topics(spec):
        warnings.append(ValidationError(ErrorKind.DANGLING_TOPIC, topics=(t,),
                                        subtasks=tuple(publishers.get(t, ())),
                                        detail="published but never consumed"))

    # Edges over resolvable topics only; unknown topics were reported above.
    edges: list[Edge] = []
    for s in spec.subtasks:
        for topic in s.in_topics:
            for pub in publishers.get(topic, ()):
                edges.append((pub, s.id, topic))

    topo, cycle = _kahn(spec, edges)
    if cycle:
        errors.append(ValidationError(ErrorKind.CYCLE, subtasks=tuple(cycle),
                                      detail="residual nodes after peeling"))

    if errors:
        return None, errors

    committed = CommittedDag(
        dag_id=spec.dag_id,
        subtasks={s.id: s for s in spec.subtasks},
        topics=dict(spec.topics),
        edges=tuple(edges),
        topo_order=tuple(topo),
        source_id=sources[0],
        sink_ids=tuple(sinks),
        warnings=tuple(warnings),
    )
    return committed, []


def _kahn(spec: DagSpec, edges: list[Edge]) -> tuple[list[str], list[str]]:
    """Topological sort; ties broken by registration order. Returns the order
    and, if peeling stalls, the residual nodes as the cycle witness."""
    indeg = {s.id: 0 for s in spec.subtasks}
    succs: dict[str, list[str]] = {s.id: [] for s in spec.subtasks}
    for (u, v, _t) in edges:
        indeg[v] += 1
        succs[u].append(v)
    order_of = {s.id: s.order for s in spec.subtasks}
    frontier = sorted([sid for sid, d in indeg.items() if d == 0], key=order_of.get)
    topo: list[str] = []
    while frontier:
        sid = frontier.pop(0)
        topo.append(sid)
        for v in succs[sid]:
            indeg[v] -= 1
            if indeg[v] == 0:
                frontier.append(v)
        frontier.sort(key=order_of.get)
    residue = [sid for sid in indeg if sid not in set(topo)]
    return topo, residue
