# A small slice of the experiment grid, summarised in the published table
# layout. The full grid is GridSpec() with seeds 1..50 (2000 runs).

import tempfile
from pathlib import Path

from _data import demo_data

from ffoneclass.experiments import GridSpec, emit_tables, grand_mean, run_grid, summarize
from ffoneclass.losses import LossSpec

ds, data = demo_data()
grid = GridSpec(
    losses=(LossSpec("goodness"), LossSpec("svdd")),
    architectures=((4, 10, 10), (4, 25, 25)),
    seeds=(1, 2, 3),
)
out = Path(tempfile.mkdtemp()) / "results.csv"
records = run_grid(grid, data, out)
print(f"{len(records)} runs -> {out}")

print(emit_tables(summarize(records), "markdown"))
for regime in ("ff", "bp"):
    print(regime, "grand mean accuracy", round(100 * grand_mean(records, "accuracy", regime), 2))

# rerunning against the same file finds nothing left to do
again = run_grid(grid, data, out)
print("resumed:", len(again), "records, file unchanged")
