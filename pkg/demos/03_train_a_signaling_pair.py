"""Train a teacher-student pair end to end on a micro configuration.

The teacher sees labeled scenes and emits a discrete message through a
straight-through Gumbel-Softmax channel; the student labels its own scenes
from the message alone. This micro run (tiny encoder, 60 base games, a few
epochs) finishes in a couple of minutes on one CPU core and writes a complete,
replayable run directory under runs/demos/micro_concept: config, dataset
manifest, checkpoints, message corpus, systematicity report, and plots.

For faithful desk-scale numbers, see setlang.desk and
scripts/warm_acceptance_cache.py (40-epoch runs, minutes each).
"""

from setlang.desk import desk_config
from setlang.harness import run_experiment

config = desk_config(
    "concept", seed=0, n_base=150, n_val=40, n_test=40, epochs=12,
    out_dir="runs/demos/micro_concept",
)
artifact = run_experiment(config, reuse=True)

r = artifact.report
print(f"run directory: {artifact.directory}")
print(f"test accuracy: seen {r.acc_seen:.3f}, held-out concepts {r.acc_unseen:.3f}")
print(f"naming entropy H(M|C): {r.cond_entropy_bits:.2f} bits")
print(f"concept-message AMI:   {r.ami:.3f}")
print(f"topographic rho (edit distance): {r.topo_rho_edit:.3f}")

print("\nmessages for a few test games (token ids, EOS-trimmed):")
from setlang import format_concept

for rec in artifact.corpus.records[:6]:
    print(f"  [{rec.split:6s}] {format_concept(rec.concept):28s} -> {rec.tokens}")
