"""dagrt: a DAG-native task runtime with topic-wired subtask functions, a
timestamp-matching pub/sub baseline, and a join-latency benchmark harness."""

from .builder import (
    CommitError,
    CommittedDag,
    DagBuilder,
    ErrorKind,
    ValidationError,
    create_dag,
    finish_create_dags,
)
from .channels import Fanout, IndexGapError, JoinGate, TopicQueue
from .engine import DeadlockError
from .executor import (
    AlreadyRunningError,
    DagRuntime,
    RuntimeConfig,
    run_dags,
    run_to_completion,
)
from .model import (
    ANY,
    ArityMismatchError,
    DagError,
    DagSpec,
    EventKind,
    EventRecord,
    IncompleteJobError,
    Message,
    SubtaskKind,
    SubtaskSpec,
    TopicId,
    UnknownTopicError,
    dangling_topics,
    derive_edges,
    ms,
)
from .pubsub import (
    MatchKind,
    PubSubGraph,
    StampedMessage,
    SubscriptionCallback,
    SynchronizedCallback,
    Synchronizer,
    SyncPolicy,
    TimerCallback,
    approx_time_match,
    exact_time_match,
    run_pubsub,
)
from .report import RunReport, deadline_met, job_completion

__version__ = "0.1.0"

__all__ = [
    "ANY",
    "AlreadyRunningError",
    "ArityMismatchError",
    "CommitError",
    "CommittedDag",
    "DagBuilder",
    "DagError",
    "DagRuntime",
    "DagSpec",
    "DeadlockError",
    "ErrorKind",
    "EventKind",
    "EventRecord",
    "Fanout",
    "IncompleteJobError",
    "IndexGapError",
    "JoinGate",
    "MatchKind",
    "Message",
    "PubSubGraph",
    "RunReport",
    "RuntimeConfig",
    "StampedMessage",
    "SubscriptionCallback",
    "SubtaskKind",
    "SubtaskSpec",
    "SynchronizedCallback",
    "Synchronizer",
    "SyncPolicy",
    "TimerCallback",
    "TopicId",
    "TopicQueue",
    "UnknownTopicError",
    "ValidationError",
    "approx_time_match",
    "create_dag",
    "dangling_topics",
    "deadline_met",
    "derive_edges",
    "exact_time_match",
    "finish_create_dags",
    "job_completion",
    "ms",
    "run_dags",
    "run_pubsub",
    "run_to_completion",
]
