"""Deadline accounting and source overrun handling.

The relative deadline defaults to the source period. Deadline misses are
observed, never enforced: late jobs still run to completion. If a source is
still busy when its next release is due, the release is deferred to its
finish and counted as an overrun.
"""

from dagrt import RuntimeConfig, create_dag, finish_create_dags, ms, run_dags
from dagrt.report import deadline_met, job_completion


def build(name):
    b = create_dag(name)
    b.register_periodic_subtask(lambda: (0,), ["a"], ms(25), name="src")
    b.register_subtask(lambda x: (x,), ["a"], ["b"], name="mid")
    b.register_sink_subtask(lambda x: None, ["b"], name="snk")
    return b


def main():
    print("fast pipeline: every job meets the implicit 25ms deadline")
    report = run_dags([finish_create_dags([build("fast")])[0]],
                      RuntimeConfig(worker_count=4, jobs=5),
                      {"src": ms(1), "mid": ms(5), "snk": ms(2)})
    for k in range(5):
        print(f"  job {k}: completion {job_completion(report, k) / 1e6:5.1f}ms, "
              f"met={deadline_met(report, k)}")

    print("\nslow middle stage (30ms): every job misses, none is aborted")
    report = run_dags([finish_create_dags([build("slow")])[0]],
                      RuntimeConfig(worker_count=4, jobs=5),
                      {"src": ms(1), "mid": ms(30), "snk": ms(2)})
    for k in range(5):
        rel = report.releases[k] / 1e6
        done = job_completion(report, k) / 1e6
        print(f"  job {k}: released {rel:5.1f}ms, completed {done:5.1f}ms, "
              f"met={deadline_met(report, k)}")

    print("\nslow source (40ms > 25ms period): releases defer, overruns count")
    report = run_dags([finish_create_dags([build("overrun")])[0]],
                      RuntimeConfig(worker_count=4, jobs=5),
                      {"src": ms(40)})
    for k in range(5):
        print(f"  job {k} released at {report.releases[k] / 1e6:5.1f}ms "
              f"(nominal {k * 25:3d}ms)")
    print(f"  overruns: {report.overruns}")


if __name__ == "__main__":
    main()
