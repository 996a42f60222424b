"""Set size and systematicity: sweep the number of scenes per game.

Each (size, repetition) cell is an independent concept-game run; the
summary statistic is the Spearman correlation between set size and the
topographic rho of the resulting language. This micro sweep (two sizes,
two repetitions, short training) just demonstrates the machinery; the
desk-scale sweep over n in {1, 3, 5, 10} x 3 repetitions lives in the
acceptance suite and shows the positive trend clearly.
"""

import warnings

warnings.filterwarnings("ignore", category=UserWarning)

from setlang.desk import desk_config
from setlang.harness import sweep_set_size

config = desk_config(
    "concept", seed=0, n_base=120, n_val=30, n_test=30, epochs=8,
    out_dir="runs/demos/micro_sweep",
)
rows, rho = sweep_set_size(config, sizes=[1, 5], repetitions=2)
print(f"{'set size':>8s} {'repetition':>10s} {'topo rho':>9s}")
for size, rep, r in rows:
    print(f"{size:8d} {rep:10d} {r:9.3f}")
print(f"\nSpearman(size, rho) = {rho:.3f}")
