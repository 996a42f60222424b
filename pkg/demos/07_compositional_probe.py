"""ACRe: rebuild a speaker's language from parts.

The probe fits one small language model per primitive ("how do you say
red?") and one per operator ("how do you combine the messages for red and
triangle under AND?"), then composes them to produce messages for held-out
AND/OR concepts it never saw whole. Here the speaker is the scripted,
perfectly compositional one (messages are the concept's formula tokens),
so reconstruction should be near-exact — the BLEU table is the readout.

The interesting case — probing a trained teacher's emergent language and
comparing against Closest/Random baselines and the student's comprehension
— is exercised at desk scale by the acceptance suite (teacher_acre_rows
in setlang.desk) and from the CLI via `setlang acre --run-dir ...`.
"""

import numpy as np

from setlang.acre import (
    AcreConfig,
    CompositionalSpeaker,
    collect_corpus,
    evaluate_acre,
    train_acre,
)
from setlang.desk import desk_config
from setlang.harness import build_dataset

dataset = build_dataset(desk_config("concept", 0, n_base=30, n_val=10, n_test=10))
speaker = CompositionalSpeaker()
corpus = collect_corpus(speaker, dataset, n=936, rng=np.random.default_rng(0))
print(f"corpus: {len(corpus.records)} messages over {len(corpus.concepts)} concepts")

models = train_acre(corpus, AcreConfig(epochs=4, seed=0))
print("training order:", " ".join(models.training_order))

rows = evaluate_acre(models, speaker, None, corpus, dataset, seed=0)
print(f"\n{'language':10s} {'split':6s} {'BLEU-1':>7s} {'BLEU-4':>7s}")
for r in rows:
    print(f"{r.language:10s} {r.split:6s} {r.bleu1:7.2f} {r.bleu4:7.2f}")
