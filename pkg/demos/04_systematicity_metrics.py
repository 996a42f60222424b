"""What the systematicity metrics measure, on three constructed languages.

- a compositional language: the message is the concept's formula, token by
  token (low naming entropy, high AMI, topographic rho = 1);
- a holistic language: one arbitrary but consistent codeword per concept
  (low naming entropy, high AMI, but no distance structure);
- an idiolect: a fresh random message for every game, as reference-game
  teachers tend to develop (high naming entropy, chance-level AMI).
"""

import warnings

import numpy as np

warnings.filterwarnings("ignore", category=UserWarning)

from setlang import (
    MessageCorpus,
    adjusted_mutual_info,
    bleu,
    conditional_entropy,
    enumerate_concepts,
    topographic_rho,
)
from setlang.concepts import formula_tokens

rng = np.random.default_rng(0)
concepts = list(enumerate_concepts())[:60]

vocab: dict[str, int] = {}


def compositional(c):
    return tuple(vocab.setdefault(w, len(vocab)) for w in formula_tokens(c))


codewords = {c: tuple(rng.integers(0, 20, size=4).tolist()) for c in concepts}

languages = {
    "compositional": lambda c: compositional(c),
    "holistic": lambda c: codewords[c],
    "idiolect": lambda c: tuple(rng.integers(0, 20, size=4).tolist()),
}

print(f"{'language':15s} {'H(M|C) bits':>12s} {'AMI':>7s} {'topo rho':>9s}")
for name, speak in languages.items():
    corpus = MessageCorpus()
    gid = 0
    for c in concepts:
        for _ in range(5):  # five games per concept
            corpus.add(c, speak(c), "seen", gid)
            gid += 1
    h = conditional_entropy(corpus)
    ami = adjusted_mutual_info(corpus)
    rho = topographic_rho(corpus, "edit")
    print(f"{name:15s} {h:12.3f} {ami:7.3f} {rho:9.3f}")

print("\nBLEU against a reference set (how ACRe reconstructions are scored):")
refs = [(1, 2, 3), (1, 2, 4)]
for cand in [(1, 2, 3), (1, 2), (4, 2, 1), (9, 9, 9)]:
    print(f"  candidate {cand!s:12s} BLEU-1 {bleu(cand, refs, max_n=1):6.1f} "
          f"BLEU-2 {bleu(cand, refs, max_n=2):6.1f}")
