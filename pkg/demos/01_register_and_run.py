"""Register a three-stage graph, commit it, and run ten jobs on virtual time.

The graph is the minimal interesting shape: a periodic source feeding one
intermediate that fans out two topics, joined by a single sink. Functions are
plain callables; their arguments and return values are the topic wiring.
"""

from dagrt import RuntimeConfig, create_dag, finish_create_dags, ms, run_dags
from dagrt.report import deadline_met, job_completion


def main():
    dag_builder = create_dag("demo")

    def source():
        return (1,)

    def double(x):
        return (x * 2, x * 3)

    def sink(a, b):
        pass

    dag_builder.register_periodic_subtask(source, ["numbers"], ms(25),
                                          out_types=(int,), name="source")
    dag_builder.register_subtask(double, ["numbers"], ["doubled", "tripled"],
                                 in_types=(int,), out_types=(int, int),
                                 name="double")
    dag_builder.register_sink_subtask(sink, ["doubled", "tripled"],
                                      in_types=(int, int), name="sink")

    dag = finish_create_dags([dag_builder])[0]
    print("committed topological order:", dag.topo_order)
    print(dag.to_dot())

    durations = {"source": ms(1), "double": ms(4), "sink": ms(2)}
    report = run_dags([dag], RuntimeConfig(worker_count=4, jobs=10), durations)

    print(f"\njobs completed: {report.jobs_completed}")
    for k in range(3):
        print(f"job {k}: released {report.releases[k] / 1e6:.0f}ms, "
              f"completed {job_completion(report, k) / 1e6:.0f}ms, "
              f"deadline met: {deadline_met(report, k)}")
    print("\nfirst ten events:")
    for e in report.events[:10]:
        print(f"  {e.time_ns / 1e6:7.2f}ms {e.kind.value:<10} {e.subtask}"
              + (f" -> {e.topic}" if e.topic else ""))


if __name__ == "__main__":
    main()
