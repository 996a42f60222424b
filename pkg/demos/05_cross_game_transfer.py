"""Zero-shot transfer: evaluate a trained pair on a game it never played.

Languages that name concepts transfer; languages that name scenes do not.
This script trains micro setref and ref pairs (reused across invocations),
then evaluates each on fresh concept-game test sets. At desk or full scale
the gap is stark (setref -> concept stays near its home accuracy, ref ->
concept collapses toward chance); at this micro scale expect a noisy
version of the same pattern.
"""

import warnings

warnings.filterwarnings("ignore", category=UserWarning)

from setlang.desk import desk_config
from setlang.harness import run_experiment
from setlang.metrics import cross_evaluate
from setlang.shapeworld import build_shapeworld_dataset

MICRO = dict(n_base=150, n_val=40, n_test=40, epochs=12)

pairs = {}
for game_type in ("ref", "setref"):
    config = desk_config(
        game_type, seed=0, out_dir=f"runs/demos/micro_{game_type}", **MICRO
    )
    artifact = run_experiment(config, reuse=True)
    pairs[game_type] = artifact.load_pair()
    print(f"{game_type}: own-game test accuracy {artifact.report.acc_seen:.3f}")

concept_eval = build_shapeworld_dataset(
    seed=7, game_type="concept", n_base=1, n_val=1, n_test=60,
    n_targets=5, n_distractors=5, image_size=24, pool_size=12,
)
print("\nzero-shot on concept games:")
for game_type, pair in pairs.items():
    acc, ami, rho = cross_evaluate(pair, "concept", concept_eval)
    print(f"  {game_type}-trained pair: acc {acc:.3f}, AMI {ami:.3f}, "
          f"topo rho {rho:.3f}")
