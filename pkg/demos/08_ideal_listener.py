"""Upper bound: a listener trained on the ground-truth language.

If the teacher spoke the concept formulas directly (tokens for the 11
primitives plus NOT/AND/OR — exactly the default 14-symbol channel), how
well could a student do? Training the student alone against this scripted
speaker bounds what any emergent language can convey. At desk scale the
bound is >= 99% on both seen and held-out concepts; this micro version
(tiny data, few epochs) just shows the mechanics and an upward trajectory.
"""

from setlang.desk import desk_config
from setlang.harness import build_dataset, ideal_language_listener

config = desk_config("concept", seed=0, n_base=120, n_val=30, n_test=30, epochs=6)
dataset = build_dataset(config)
seen, unseen = ideal_language_listener(
    dataset, config.train, model=config.model, channel=config.channel
)
print(f"ideal-language listener accuracy: seen {seen:.3f}, unseen {unseen:.3f}")
