"""Scenes and games: from a concept to sets of rendered images.

A game presents the teacher with target scenes (objects satisfying the
concept) and distractor scenes (objects violating it). Distractors are
sampled "hard": for a conjunction they fail exactly one side where
possible, and for a disjunction the targets cover left-only / right-only /
both regions. A grid of rendered scenes is written to
runs/demos/scenes.png.
"""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from setlang import parse_concept, render_scene, sample_hard_pools

concept = parse_concept("red OR triangle")
targets, distractors = sample_hard_pools(
    concept, n_pos=6, n_neg=6, rng=np.random.default_rng(0)
)
print(f"concept: red OR triangle")
print("targets:    ", ", ".join(str(z) for z in targets))
print("distractors:", ", ".join(str(z) for z in distractors))

fig, axes = plt.subplots(2, 6, figsize=(9, 3.2))
for row, (title, pool) in enumerate([("target", targets), ("distractor", distractors)]):
    for col, z in enumerate(pool):
        scene = render_scene(z, np.random.default_rng(row * 6 + col), image_size=64)
        axes[row, col].imshow(scene.pixels)
        axes[row, col].set_title(f"{title}\n{z}", fontsize=6)
        axes[row, col].axis("off")
os.makedirs(os.path.join("runs", "demos"), exist_ok=True)
out = os.path.join("runs", "demos", "scenes.png")
fig.savefig(out, dpi=100)
print(f"wrote {out}")
