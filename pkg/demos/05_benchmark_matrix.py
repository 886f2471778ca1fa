"""Run the full benchmark matrix and write one CSV per cell.

Conditions: the task runtime (fass), the baseline under exact matching, and
the baseline under approximate matching with 10/30/50 ms tolerances, each at
fork-join widths 2/4/6. All conditions for a given (N, seed) replay the same
pre-drawn duration table. Output lands in ./results/ and feeds the plotting
frontend.
"""

import json
import sys
from pathlib import Path

from dagrt.bench import Workload, run_condition, write_csv

CELLS = [("fass", None), ("exact", None),
         ("approx", 10), ("approx", 30), ("approx", 50)]


def main():
    jobs = int(sys.argv[1]) if len(sys.argv) > 1 else 500
    seed = 0
    out_dir = Path(__file__).resolve().parent.parent / "results"
    out_dir.mkdir(exist_ok=True)

    summaries = []
    for n in (2, 4, 6):
        for condition, interval in CELLS:
            workload = Workload(n=n, jobs=jobs, seed=seed)
            result = run_condition(condition, workload, max_interval_ms=interval)
            label = condition if interval is None else f"{condition}{interval}"
            path = out_dir / f"{label}_n{n}.csv"
            with open(path, "w", newline="") as f:
                write_csv(result, f)
            s = result.summary()
            summaries.append(s)
            mean = "-" if s["mean_ns"] is None else f"{s['mean_ns'] / 1e6:9.2f}"
            print(f"n={n} {label:<9} rate={s['match_rate']:5.3f} "
                  f"mean={mean}ms -> {path.name}")

    with open(out_dir / "summary.json", "w") as f:
        json.dump(summaries, f, indent=2)
        f.write("\n")
    print(f"\nwrote {len(summaries)} cells to {out_dir}/")


if __name__ == "__main__":
    main()
