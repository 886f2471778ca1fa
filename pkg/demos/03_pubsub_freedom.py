"""What free publish placement costs: a mid-callback publish releases the
successor while the publisher is still executing.

The pub/sub baseline permits this by construction; the task runtime cannot
even express it, because registered functions receive payloads and return
payloads with no publish primitive in reach.
"""

from dagrt import (
    PubSubGraph,
    RuntimeConfig,
    SubscriptionCallback,
    TimerCallback,
    ms,
    run_pubsub,
)
from dagrt.model import EventKind


def main():
    graph = PubSubGraph()
    graph.timers.append(TimerCallback("tick", ms(25),
                                      lambda ctx: ctx.publish("raw", ctx.job)))

    def leaky_worker(msg, ctx):
        ctx.advance(ms(2))
        ctx.publish("refined", msg.payload)  # published mid-execution
        ctx.advance(ms(8))                   # 8 more ms of "work"

    graph.subscriptions.append(SubscriptionCallback("worker", "raw", leaky_worker))
    graph.subscriptions.append(SubscriptionCallback(
        "consumer", "refined", lambda m, ctx: ctx.advance(ms(1))))

    report = run_pubsub(graph, RuntimeConfig(worker_count=4, jobs=3))

    starts = {(e.subtask, e.job): e.time_ns for e in report.events
              if e.kind is EventKind.START}
    finishes = {(e.subtask, e.job): e.time_ns for e in report.events
                if e.kind is EventKind.FINISH}
    for k in range(3):
        s = starts[("consumer", k)] / 1e6
        f = finishes[("worker", k)] / 1e6
        print(f"job {k}: consumer started {s:6.1f}ms, "
              f"worker finished {f:6.1f}ms -> violation: {s < f}")

    print("\nThe task-runtime registration surface, for contrast:")
    print("  register_subtask(fn, in_topics, out_topics, ...)")
    print("  fn sees payload arguments only; outputs exist when fn returns.")


if __name__ == "__main__":
    main()
