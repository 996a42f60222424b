"""Language systematicity measures.

All metrics are pure functions of a message corpus (plus a recorded
subsample seed where pairwise computations are capped).
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
from scipy.stats import spearmanr
from sklearn.metrics import adjusted_mutual_info_score

from .concepts import (
    Concept,
    concept_edit_distance,
    concept_hausdorff_distance,
    format_concept,
    levenshtein,
)

__all__ = [
    "CorpusRecord",
    "MessageCorpus",
    "SystematicityReport",
    "conditional_entropy",
    "adjusted_mutual_info",
    "levenshtein",
    "spearman",
    "topographic_rho",
    "bleu",
    "cross_evaluate",
]

PAIR_CAP = 50_000


@dataclass(frozen=True)
class CorpusRecord:
    concept: Concept
    tokens: tuple[int, ...]
    split: str  # "seen" or "unseen"
    game_id: int


@dataclass
class MessageCorpus:
    records: list[CorpusRecord] = field(default_factory=list)

    def add(self, concept: Concept, tokens: Sequence[int], split: str, game_id: int):
        self.records.append(CorpusRecord(concept, tuple(tokens), split, game_id))

    def subset(self, split: str) -> "MessageCorpus":
        return MessageCorpus([r for r in self.records if r.split == split])

    def __len__(self):
        return len(self.records)

    def write(self, path) -> None:
        """Line-delimited dump: game id, split, concept formula, token ids."""
        with open(path, "w") as f:
            for r in self.records:
                toks = ",".join(map(str, r.tokens))
                f.write(f"{r.game_id}\t{r.split}\t{format_concept(r.concept)}\t{toks}\n")

    @classmethod
    def read(cls, path) -> "MessageCorpus":
        from .concepts import parse_concept

        corpus = cls()
        with open(path) as f:
            for line in f:
                gid, split, formula, toks = line.rstrip("\n").split("\t")
                tokens = tuple(int(t) for t in toks.split(",")) if toks else ()
                corpus.add(parse_concept(formula), tokens, split, int(gid))
        return corpus


def _split_entropy(records: list[CorpusRecord]) -> float:
    by_concept: dict = {}
    for r in records:
        by_concept.setdefault(r.concept, []).append(r.tokens)
    n = len(records)
    h = 0.0
    for msgs in by_concept.values():
        p_c = len(msgs) / n
        counts = Counter(msgs)
        h_c = -sum(
            (k / len(msgs)) * math.log2(k / len(msgs)) for k in counts.values()
        )
        h += p_c * h_c
    return h


def conditional_entropy(corpus: MessageCorpus) -> float:
    """Empirical H(M|C) in bits, computed per split then averaged over splits."""
    if not corpus.records:
        raise ValueError("empty corpus")
    splits = [s for s in ("seen", "unseen") if len(corpus.subset(s))]
    if not splits:
        return _split_entropy(corpus.records)
    return float(np.mean([_split_entropy(corpus.subset(s).records) for s in splits]))


def adjusted_mutual_info(corpus: MessageCorpus) -> float:
    """AMI between the message partition and concept partition.

    Chance-corrected under the hypergeometric permutation model, with the
    max(H(M), H(C)) normalizer. Records are pooled across splits.
    """
    if len(corpus) < 2:
        raise ValueError("AMI needs at least 2 records")
    concept_labels = {}
    message_labels = {}
    cs = [concept_labels.setdefault(r.concept, len(concept_labels)) for r in corpus.records]
    ms = [message_labels.setdefault(r.tokens, len(message_labels)) for r in corpus.records]
    if len(concept_labels) == 1 and len(message_labels) == 1:
        # degenerate: both partitions trivial; no information, no chance correction
        return 0.0
    return float(adjusted_mutual_info_score(cs, ms, average_method="max"))


def spearman(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Spearman rank correlation with average ranks for ties."""
    xs, ys = np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)
    if xs.shape != ys.shape or xs.ndim != 1 or len(xs) < 2:
        raise ValueError("spearman needs two equal-length vectors of length >= 2")
    if np.all(xs == xs[0]) or np.all(ys == ys[0]):
        raise ValueError("spearman undefined for zero-variance ranks")
    rho = spearmanr(xs, ys).statistic
    return float(rho)


CONCEPT_DISTANCES: dict[str, Callable[[Concept, Concept], float]] = {
    "edit": concept_edit_distance,
    "hausdorff": concept_hausdorff_distance,
}


def topographic_rho(
    corpus: MessageCorpus,
    concept_distance: str = "edit",
    pair_cap: int = PAIR_CAP,
    seed: int = 0,
) -> float:
    """Spearman rho between pairwise message and concept distances.

    All unordered record pairs are used, subsampled to `pair_cap` with the
    recorded seed when the pair count exceeds it.
    """
    if concept_distance not in CONCEPT_DISTANCES:
        raise ValueError(f"unknown concept distance {concept_distance!r}")
    records = corpus.records
    if len({r.concept for r in records}) < 2:
        raise ValueError("topographic rho needs at least 2 distinct concepts")
    d_c = CONCEPT_DISTANCES[concept_distance]
    n = len(records)
    n_pairs = n * (n - 1) // 2
    if n_pairs > pair_cap:
        rng = np.random.default_rng(seed)
        flat = rng.choice(n_pairs, size=pair_cap, replace=False)
        pairs = []
        for k in sorted(flat.tolist()):
            # unrank the k-th unordered pair (i, j), i < j
            i = int((2 * n - 1 - math.sqrt((2 * n - 1) ** 2 - 8 * k)) // 2)
            j = int(k - i * (2 * n - i - 1) // 2 + i + 1)
            pairs.append((i, j))
    else:
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]

    cdist_cache: dict[tuple, float] = {}
    msg_d, con_d = [], []
    for i, j in pairs:
        a, b = records[i], records[j]
        msg_d.append(levenshtein(a.tokens, b.tokens))
        key = (a.concept, b.concept)
        if key not in cdist_cache:
            cdist_cache[key] = cdist_cache[(b.concept, a.concept)] = d_c(a.concept, b.concept)
        con_d.append(cdist_cache[key])
    return spearman(msg_d, con_d)


def _ngram_counts(tokens: Sequence, n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(
    candidate: Sequence, references: Iterable[Sequence], max_n: int = 4
) -> float:
    """Corpus-of-one BLEU in [0, 100]: modified n-gram precision with
    brevity penalty, against a multi-reference set."""
    references = [tuple(r) for r in references]
    if not references:
        raise ValueError("bleu needs at least one reference")
    candidate = tuple(candidate)
    if not candidate:
        return 0.0
    log_precisions = []
    for n in range(1, min(max_n, len(candidate)) + 1):
        cand_counts = _ngram_counts(candidate, n)
        total = sum(cand_counts.values())
        max_ref = Counter()
        for ref in references:
            for g, k in _ngram_counts(ref, n).items():
                max_ref[g] = max(max_ref[g], k)
        clipped = sum(min(k, max_ref[g]) for g, k in cand_counts.items())
        if clipped == 0:
            return 0.0
        log_precisions.append(math.log(clipped / total))
    # closest reference length (ties to the shorter)
    ref_len = min(
        (abs(len(r) - len(candidate)), len(r)) for r in references
    )[1]
    bp = 1.0 if len(candidate) >= ref_len else math.exp(1 - ref_len / len(candidate))
    return 100.0 * bp * math.exp(sum(log_precisions) / len(log_precisions))


@dataclass
class SystematicityReport:
    acc_seen: float
    acc_unseen: float
    cond_entropy_bits: float
    ami: float
    ami_seen: float
    ami_unseen: float
    topo_rho_edit: float
    topo_rho_hausdorff: float
    pair_cap: int = PAIR_CAP
    pair_seed: int = 0

    FIELDS = (
        "acc_seen", "acc_unseen", "cond_entropy_bits", "ami", "ami_seen",
        "ami_unseen", "topo_rho_edit", "topo_rho_hausdorff", "pair_cap", "pair_seed",
    )

    def write(self, path) -> None:
        with open(path, "w") as f:
            for name in self.FIELDS:
                f.write(f"{name}\t{getattr(self, name)!r}\n")

    @classmethod
    def read(cls, path) -> "SystematicityReport":
        kv = {}
        with open(path) as f:
            for line in f:
                name, value = line.rstrip("\n").split("\t")
                kv[name] = int(value) if name in ("pair_cap", "pair_seed") else float(value)
        return cls(**kv)


def _safe(fn, *args, **kwargs) -> float:
    try:
        return fn(*args, **kwargs)
    except ValueError:
        return float("nan")


def systematicity_report(
    corpus: MessageCorpus,
    acc_seen: float,
    acc_unseen: float,
    pair_cap: int = PAIR_CAP,
    pair_seed: int = 0,
) -> SystematicityReport:
    return SystematicityReport(
        acc_seen=acc_seen,
        acc_unseen=acc_unseen,
        cond_entropy_bits=conditional_entropy(corpus),
        ami=adjusted_mutual_info(corpus),
        ami_seen=_safe(lambda: adjusted_mutual_info(corpus.subset("seen"))),
        ami_unseen=_safe(lambda: adjusted_mutual_info(corpus.subset("unseen"))),
        topo_rho_edit=_safe(topographic_rho, corpus, "edit", pair_cap, pair_seed),
        topo_rho_hausdorff=_safe(topographic_rho, corpus, "hausdorff", pair_cap, pair_seed),
        pair_cap=pair_cap,
        pair_seed=pair_seed,
    )


def cross_evaluate(pair, game_type: str, dataset) -> tuple[float, float, float]:
    """Zero-shot evaluation of a trained pair on another game type.

    Returns (accuracy, AMI, topographic rho with edit concept distance) on
    the dataset's test games. The caller builds the dataset for the target
    game type; a "ref" dataset automatically restricts the concepts to the
    30 reference conjunctions.
    """
    from .training import evaluate_pair

    if dataset.game_type != game_type:
        raise ValueError(
            f"dataset game type {dataset.game_type!r} != requested {game_type!r}"
        )
    if dataset.image_size != pair.hp.image_size:
        raise ValueError("image size mismatch between pair and dataset")
    games = [dataset.materialize_eval_game(r) for r in dataset.test_games]
    acc, msgs = evaluate_pair(pair, games)
    corpus = MessageCorpus()
    for gid, (rec, tokens) in enumerate(zip(dataset.test_games, msgs)):
        corpus.add(rec.concept, tokens, rec.split, gid)
    return acc, adjusted_mutual_info(corpus), _safe(topographic_rho, corpus, "edit")
