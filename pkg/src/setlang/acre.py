"""Approximate compositional reconstruction of a trained teacher's language.

One unconditional LM per primitive concept, one seq2seq model per logical
operator, trained in curriculum order (primitives, then NOT, then AND/OR)
with arguments sampled from the already-frozen lower models. Sampling for
a composite concept recurses along the concept's structure.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .agents import AgentPair, ChannelConfig, message_tokens, tokens_to_message
from .concepts import (
    And,
    Concept,
    Not,
    Or,
    Primitive,
    concept_edit_distance,
    format_concept,
    formula_tokens,
)
from .shapeworld import BaseGame, Game, ShapeWorldDataset, augment
from .training import games_to_tensors, student_accuracy
from .metrics import bleu

log = logging.getLogger(__name__)

OPERATORS = ("NOT", "AND", "OR")


def operator_of(c: Concept) -> Optional[str]:
    if isinstance(c, Not):
        return "NOT"
    if isinstance(c, And):
        return "AND"
    if isinstance(c, Or):
        return "OR"
    return None


def concept_args(c: Concept) -> tuple[Concept, ...]:
    if isinstance(c, Not):
        return (c.arg,)
    if isinstance(c, (And, Or)):
        return (c.left, c.right)
    return ()


@dataclass
class AcreCorpus:
    """(message, concept) pairs sampled from a frozen teacher."""

    channel: ChannelConfig
    records: list[tuple[Concept, tuple[int, ...]]] = field(default_factory=list)

    def bucket(self, c: Concept) -> list[tuple[int, ...]]:
        return [m for cc, m in self.records if cc == c]

    def operator_bucket(self, op: str) -> list[tuple[Concept, tuple[int, ...]]]:
        return [(c, m) for c, m in self.records if operator_of(c) == op]

    @property
    def concepts(self) -> list[Concept]:
        seen, out = set(), []
        for c, _ in self.records:
            if c not in seen:
                seen.add(c)
                out.append(c)
        return out


SpeakerFn = Callable[[list[Game]], list[tuple[int, ...]]]


def pair_speaker(pair: AgentPair, mode: str = "eval") -> SpeakerFn:
    """Eval-mode (greedy) teacher speaking function."""

    def speak(games: list[Game]) -> list[tuple[int, ...]]:
        pair.eval()
        t_scenes, t_labels, _, _ = games_to_tensors(games)
        with torch.no_grad():
            msg = pair.teacher.emit(t_scenes, t_labels, mode=mode)
        return message_tokens(msg, pair.channel)

    return speak


class CompositionalSpeaker:
    """Synthetic perfectly-compositional teacher: the message for a concept
    is its formula token sequence mapped onto channel token ids."""

    needs_games = False  # messages depend only on the concept

    def __init__(self, channel: ChannelConfig = ChannelConfig(14, 5)):
        from .concepts import PRIMITIVE_VALUES

        self.channel = channel
        self.token_ids = {w: i for i, w in enumerate(PRIMITIVE_VALUES + ("NOT", "AND", "OR"))}
        if len(self.token_ids) > channel.vocab_size:
            raise ValueError("channel vocabulary too small for the formula alphabet")

    def __call__(self, games: list[Game]) -> list[tuple[int, ...]]:
        return [
            tuple(self.token_ids[w] for w in formula_tokens(g.concept)) for g in games
        ]


def collect_corpus(
    speaker: Union[AgentPair, SpeakerFn],
    dataset: ShapeWorldDataset,
    n: int = 200_000,
    rng: Optional[np.random.Generator] = None,
    batch_size: int = 64,
) -> AcreCorpus:
    """Sample n messages from a frozen teacher, evenly across concepts (+-1)."""
    rng = np.random.default_rng() if rng is None else rng
    if isinstance(speaker, AgentPair):
        channel = speaker.channel
        speak = pair_speaker(speaker)
    else:
        channel = speaker.channel
        speak = speaker
    concepts = list(dataset.seen_concepts) + list(dataset.unseen_concepts)
    k = len(concepts)
    counts = [n // k + (1 if i < n % k else 0) for i in range(k)]

    corpus = AcreCorpus(channel=channel)
    pending: list[tuple[Concept, Game]] = []

    def flush():
        games = [g for _, g in pending]
        for (c, _), m in zip(pending, speak(games)):
            corpus.records.append((c, m))
        pending.clear()

    needs_games = getattr(speak, "needs_games", True)
    for c, cnt in zip(concepts, counts):
        for _ in range(cnt):
            seed = int(rng.integers(0, 2 ** 63 - 1))
            if needs_games:
                base = BaseGame(
                    c, seed, pool_size=dataset.pool_size, image_size=dataset.image_size
                )
                game = augment(
                    base, dataset.game_type, dataset.n_targets, dataset.n_distractors,
                    np.random.default_rng([seed, 3]),
                )
            else:
                game = Game(dataset.game_type, c, [], np.array([]), [], np.array([]))
            pending.append((c, game))
            if len(pending) >= batch_size:
                flush()
    if pending:
        flush()
    return corpus


# ---------------------------------------------------------------------------
# Transformer language models


@dataclass
class AcreConfig:
    n_layers: int = 2
    n_heads: int = 2
    embedding_size: int = 50
    hidden_size: int = 100  # model and feed-forward width
    learning_rate: float = 1e-4
    batch_size: int = 32
    epochs: int = 20
    seed: int = 0


class _TokenCodec:
    """Shared id scheme: channel tokens, then PAD/SOS/EOS/SEP specials."""

    def __init__(self, channel: ChannelConfig):
        self.channel = channel
        v = channel.vocab_size
        self.pad, self.sos, self.eos, self.sep = v, v + 1, v + 2, v + 3
        self.vocab_size = v + 4
        self.max_len = channel.max_len


class PrimitiveLM(nn.Module):
    """Unconditional autoregressive transformer over messages."""

    def __init__(self, codec: _TokenCodec, cfg: AcreConfig):
        super().__init__()
        self.codec = codec
        d = cfg.hidden_size
        self.embed = nn.Embedding(codec.vocab_size, cfg.embedding_size)
        self.in_proj = nn.Linear(cfg.embedding_size, d)
        self.pos = nn.Embedding(codec.max_len + 2, d)
        layer = nn.TransformerEncoderLayer(
            d, cfg.n_heads, dim_feedforward=cfg.hidden_size, batch_first=True,
            dropout=0.0,
        )
        self.encoder = nn.TransformerEncoder(layer, cfg.n_layers, enable_nested_tensor=False)
        self.head = nn.Linear(d, codec.vocab_size)

    def logits(self, ids: torch.Tensor) -> torch.Tensor:
        L = ids.shape[1]
        x = self.in_proj(self.embed(ids)) + self.pos.weight[:L]
        mask = nn.Transformer.generate_square_subsequent_mask(L)
        return self.head(self.encoder(x, mask=mask, is_causal=True))

    def loss(self, messages: torch.Tensor) -> torch.Tensor:
        """messages: [B, L] padded token ids including EOS."""
        sos = torch.full_like(messages[:, :1], self.codec.sos)
        inp = torch.cat([sos, messages[:, :-1]], dim=1)
        logits = self.logits(inp)
        return F.cross_entropy(
            logits.flatten(0, 1), messages.flatten(), ignore_index=self.codec.pad
        )

    @torch.no_grad()
    def sample(
        self, n: int, generator: Optional[torch.Generator] = None, greedy: bool = False
    ) -> list[tuple[int, ...]]:
        ids = torch.full((n, 1), self.codec.sos, dtype=torch.long)
        done = torch.zeros(n, dtype=torch.bool)
        out = [[] for _ in range(n)]
        for _ in range(self.codec.max_len + 1):
            logits = self.logits(ids)[:, -1]
            if greedy:
                nxt = logits.argmax(-1)
            else:
                probs = F.softmax(logits, dim=-1)
                nxt = torch.multinomial(probs, 1, generator=generator).squeeze(-1)
            for b in range(n):
                if not done[b]:
                    if nxt[b].item() == self.codec.eos:
                        done[b] = True
                    elif nxt[b].item() < self.codec.channel.vocab_size:
                        out[b].append(nxt[b].item())
                    else:
                        done[b] = True  # stray special token ends the message
            ids = torch.cat([ids, nxt.unsqueeze(-1)], dim=1)
            if done.all():
                break
        return [tuple(m[: self.codec.max_len]) for m in out]


class OperatorLM(nn.Module):
    """Encoder-decoder transformer: separator-joined argument messages in,
    composed message out."""

    def __init__(self, codec: _TokenCodec, cfg: AcreConfig, arity: int):
        super().__init__()
        self.codec = codec
        self.arity = arity
        d = cfg.hidden_size
        self.embed = nn.Embedding(codec.vocab_size, cfg.embedding_size)
        self.in_proj = nn.Linear(cfg.embedding_size, d)
        max_src = arity * (codec.max_len + 1) + 1
        self.src_pos = nn.Embedding(max_src, d)
        self.tgt_pos = nn.Embedding(codec.max_len + 2, d)
        enc_layer = nn.TransformerEncoderLayer(
            d, cfg.n_heads, dim_feedforward=cfg.hidden_size, batch_first=True, dropout=0.0
        )
        dec_layer = nn.TransformerDecoderLayer(
            d, cfg.n_heads, dim_feedforward=cfg.hidden_size, batch_first=True, dropout=0.0
        )
        self.encoder = nn.TransformerEncoder(enc_layer, cfg.n_layers, enable_nested_tensor=False)
        self.decoder = nn.TransformerDecoder(dec_layer, cfg.n_layers)
        self.head = nn.Linear(d, codec.vocab_size)

    def encode_args(self, args_batch: list[Sequence[tuple[int, ...]]]) -> torch.Tensor:
        """Join argument messages with [SEP] and pad to a tensor of ids."""
        rows = []
        for args in args_batch:
            row = []
            for i, arg in enumerate(args):
                if i > 0:
                    row.append(self.codec.sep)
                row.extend(arg)
            if not row:
                row = [self.codec.eos]  # explicit empty-message marker
            rows.append(row)
        L = max(len(r) for r in rows)
        ids = torch.full((len(rows), L), self.codec.pad, dtype=torch.long)
        for b, row in enumerate(rows):
            ids[b, : len(row)] = torch.tensor(row, dtype=torch.long)
        return ids

    def _memory(self, src_ids: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        x = self.in_proj(self.embed(src_ids)) + self.src_pos.weight[: src_ids.shape[1]]
        pad_mask = src_ids == self.codec.pad
        return self.encoder(x, src_key_padding_mask=pad_mask), pad_mask

    def _decode(self, tgt_ids, memory, mem_pad):
        L = tgt_ids.shape[1]
        y = self.in_proj(self.embed(tgt_ids)) + self.tgt_pos.weight[:L]
        mask = nn.Transformer.generate_square_subsequent_mask(L)
        out = self.decoder(
            y, memory, tgt_mask=mask, tgt_is_causal=True, memory_key_padding_mask=mem_pad
        )
        return self.head(out)

    def loss(self, src_ids: torch.Tensor, messages: torch.Tensor) -> torch.Tensor:
        memory, mem_pad = self._memory(src_ids)
        sos = torch.full_like(messages[:, :1], self.codec.sos)
        inp = torch.cat([sos, messages[:, :-1]], dim=1)
        logits = self._decode(inp, memory, mem_pad)
        return F.cross_entropy(
            logits.flatten(0, 1), messages.flatten(), ignore_index=self.codec.pad
        )

    @torch.no_grad()
    def sample(
        self,
        args_batch: list[Sequence[tuple[int, ...]]],
        generator: Optional[torch.Generator] = None,
        greedy: bool = True,
    ) -> list[tuple[int, ...]]:
        src_ids = self.encode_args(args_batch)
        memory, mem_pad = self._memory(src_ids)
        n = len(args_batch)
        ids = torch.full((n, 1), self.codec.sos, dtype=torch.long)
        done = torch.zeros(n, dtype=torch.bool)
        out = [[] for _ in range(n)]
        for _ in range(self.codec.max_len + 1):
            logits = self._decode(ids, memory, mem_pad)[:, -1]
            if greedy:
                nxt = logits.argmax(-1)
            else:
                nxt = torch.multinomial(
                    F.softmax(logits, dim=-1), 1, generator=generator
                ).squeeze(-1)
            for b in range(n):
                if not done[b]:
                    if nxt[b].item() >= self.codec.channel.vocab_size:
                        done[b] = True
                    else:
                        out[b].append(nxt[b].item())
            ids = torch.cat([ids, nxt.unsqueeze(-1)], dim=1)
            if done.all():
                break
        return [tuple(m[: self.codec.max_len]) for m in out]


@dataclass
class AcreModelSet:
    codec: _TokenCodec
    primitive_lms: dict[Primitive, PrimitiveLM]
    operator_lms: dict[str, OperatorLM]
    training_order: list[str]
    operator_splits: dict[str, dict[str, list[Concept]]]  # op -> {train/val/test: concepts}


def _pad_messages(msgs: list[tuple[int, ...]], codec: _TokenCodec) -> torch.Tensor:
    """Target ids: tokens + EOS, padded with PAD."""
    L = codec.max_len + 1
    ids = torch.full((len(msgs), L), codec.pad, dtype=torch.long)
    for b, m in enumerate(msgs):
        m = tuple(m)[: codec.max_len]
        ids[b, : len(m)] = torch.tensor(m, dtype=torch.long)
        ids[b, len(m)] = codec.eos
    return ids


def _train_lm(
    model: nn.Module,
    train_fn: Callable[[list[int]], torch.Tensor],
    n_train: int,
    val_fn: Callable[[], torch.Tensor],
    cfg: AcreConfig,
    rng: np.random.Generator,
) -> None:
    """Generic epoch loop with early stopping on validation loss."""
    import copy

    opt = torch.optim.Adam(model.parameters(), lr=cfg.learning_rate)
    best_val, best_state = float("inf"), None
    for epoch in range(cfg.epochs):
        model.train()
        order = rng.permutation(n_train)
        for i in range(0, n_train, cfg.batch_size):
            idx = order[i : i + cfg.batch_size].tolist()
            loss = train_fn(idx)
            opt.zero_grad()
            loss.backward()
            opt.step()
        model.eval()
        with torch.no_grad():
            val = val_fn().item()
        if val < best_val:
            best_val = val
            best_state = copy.deepcopy(model.state_dict())
    if best_state is not None:
        model.load_state_dict(best_state)
    model.eval()


def _sample_for_concept(
    models_prim: dict[Primitive, PrimitiveLM],
    not_model: Optional[OperatorLM],
    c: Concept,
    generator: Optional[torch.Generator],
) -> tuple[int, ...]:
    """Sample an argument message for a primitive or NOT(primitive) concept."""
    return sample_args_batch(models_prim, not_model, [c], generator)[0]


def sample_args_batch(
    models_prim: dict[Primitive, PrimitiveLM],
    not_model: Optional[OperatorLM],
    concepts: list[Concept],
    generator: Optional[torch.Generator],
) -> list[tuple[int, ...]]:
    """Sample one argument message per concept (primitive or NOT(primitive)),
    batching the per-model autoregressive decoding."""
    inner_prims: list[Primitive] = []
    for c in concepts:
        if isinstance(c, Primitive):
            inner_prims.append(c)
        elif isinstance(c, Not) and isinstance(c.arg, Primitive):
            if not_model is None:
                raise ValueError("NOT model required to sample a negated argument")
            inner_prims.append(c.arg)
        else:
            raise ValueError(f"cannot sample argument for nested concept {format_concept(c)}")

    by_prim: dict[Primitive, list[int]] = {}
    for i, p in enumerate(inner_prims):
        by_prim.setdefault(p, []).append(i)
    inner_msgs: list[tuple[int, ...]] = [()] * len(concepts)
    for p, rows in sorted(by_prim.items(), key=lambda kv: kv[0].value):
        msgs = models_prim[p].sample(len(rows), generator=generator)
        for r, m in zip(rows, msgs):
            inner_msgs[r] = m

    negated_rows = [i for i, c in enumerate(concepts) if isinstance(c, Not)]
    if negated_rows:
        outs = not_model.sample(
            [[inner_msgs[i]] for i in negated_rows], generator=generator, greedy=False
        )
        for i, m in zip(negated_rows, outs):
            inner_msgs[i] = m
    return inner_msgs


def _stratified_concept_split(
    concepts: list[Concept], rng: np.random.Generator
) -> dict[str, list[Concept]]:
    """80/10/10 split by concept, stratified so concepts with and without
    negated arguments both reach the val and test folds."""
    groups = {}
    for c in concepts:
        has_not = any(isinstance(a, Not) for a in concept_args(c))
        groups.setdefault(has_not, []).append(c)
    folds = {"train": [], "val": [], "test": []}
    for cs in groups.values():
        cs = list(cs)
        order = rng.permutation(len(cs))
        n = len(cs)
        n_test = max(1, int(round(0.1 * n)))
        n_val = max(1, int(round(0.1 * n)))
        for k, i in enumerate(order):
            if k < n_test:
                folds["test"].append(cs[i])
            elif k < n_test + n_val:
                folds["val"].append(cs[i])
            else:
                folds["train"].append(cs[i])
    return folds


def train_acre(corpus: AcreCorpus, cfg: AcreConfig = AcreConfig()) -> AcreModelSet:
    """Train the full curriculum: primitive LMs, then NOT, then AND and OR."""
    torch.manual_seed(cfg.seed)
    rng = np.random.default_rng(cfg.seed)
    generator = torch.Generator().manual_seed(cfg.seed + 1)
    codec = _TokenCodec(corpus.channel)

    primitives = [c for c in corpus.concepts if isinstance(c, Primitive)]
    missing = {p.value for p in set(Primitive(v) for v in _all_primitive_values())} - {
        p.value for p in primitives
    }
    if missing:
        raise ValueError(f"corpus missing buckets for primitives: {sorted(missing)}")

    training_order: list[str] = []
    primitive_lms: dict[Primitive, PrimitiveLM] = {}
    for p in sorted(primitives, key=lambda q: q.value):
        msgs = corpus.bucket(p)
        lm = PrimitiveLM(codec, cfg)
        tgt = _pad_messages(msgs, codec)
        n_val = max(1, len(msgs) // 10)
        perm = rng.permutation(len(msgs))
        val_idx, train_idx = perm[:n_val], perm[n_val:]
        _train_lm(
            lm,
            lambda idx, t=tgt, ti=train_idx: lm.loss(t[ti[idx]]),
            len(train_idx),
            lambda t=tgt, vi=val_idx: lm.loss(t[vi]),
            cfg,
            rng,
        )
        primitive_lms[p] = lm
        training_order.append(p.value)

    operator_lms: dict[str, OperatorLM] = {}
    operator_splits: dict[str, dict[str, list[Concept]]] = {}

    # NOT: split by message, arguments sampled from frozen primitive LMs
    not_records = corpus.operator_bucket("NOT")
    if not_records:
        model = OperatorLM(codec, cfg, arity=1)
        tgt = _pad_messages([m for _, m in not_records], codec)
        concepts_b = [c for c, _ in not_records]
        perm = rng.permutation(len(not_records))
        n_val = max(1, len(not_records) // 10)
        val_idx, train_idx = perm[:n_val], perm[n_val:]

        def batch_loss(idx, which):
            rows = [which[i] for i in idx] if isinstance(idx, list) else which
            inner = sample_args_batch(
                primitive_lms, None, [concept_args(concepts_b[i])[0] for i in rows], generator
            )
            return model.loss(model.encode_args([[m] for m in inner]), tgt[rows])

        _train_lm(
            model,
            lambda idx, ti=train_idx: batch_loss(idx, [int(x) for x in ti]),
            len(train_idx),
            lambda vi=val_idx: batch_loss(None, [int(x) for x in vi]),
            cfg,
            rng,
        )
        operator_lms["NOT"] = model
        operator_splits["NOT"] = {"train": list(dict.fromkeys(concepts_b)), "val": [], "test": []}
        training_order.append("NOT")

    # AND / OR: split by concept (stratified), arguments from frozen lower models
    for op in ("AND", "OR"):
        records = corpus.operator_bucket(op)
        if not records:
            continue
        concepts_op = list(dict.fromkeys(c for c, _ in records))
        folds = _stratified_concept_split(concepts_op, rng)
        operator_splits[op] = folds
        train_set = set(folds["train"])
        val_set = set(folds["val"])
        train_records = [(c, m) for c, m in records if c in train_set]
        val_records = [(c, m) for c, m in records if c in val_set]

        model = OperatorLM(codec, cfg, arity=2)
        not_model = operator_lms.get("NOT")
        tgt_train = _pad_messages([m for _, m in train_records], codec)
        tgt_val = _pad_messages([m for _, m in val_records], codec)

        def op_loss(rows, recs, tgt):
            flat = [a for i in rows for a in concept_args(recs[i][0])]
            msgs = sample_args_batch(primitive_lms, not_model, flat, generator)
            args = [msgs[2 * k : 2 * k + 2] for k in range(len(rows))]
            return model.loss(model.encode_args(args), tgt[rows])

        _train_lm(
            model,
            lambda idx: op_loss([int(x) for x in idx], train_records, tgt_train),
            len(train_records),
            lambda: op_loss(list(range(len(val_records))), val_records, tgt_val),
            cfg,
            rng,
        )
        operator_lms[op] = model
        training_order.append(op)

    return AcreModelSet(codec, primitive_lms, operator_lms, training_order, operator_splits)


def _all_primitive_values():
    from .concepts import PRIMITIVE_VALUES

    return PRIMITIVE_VALUES


def acre_sample(
    models: AcreModelSet,
    c: Concept,
    generator: Optional[torch.Generator] = None,
    greedy: bool = True,
) -> tuple[int, ...]:
    """Sample a message for a concept by recursing along its structure.

    Argument messages are sampled stochastically from the frozen lower
    models; the top-level decode is greedy by default.
    """
    if isinstance(c, Primitive):
        return models.primitive_lms[c].sample(1, generator=generator, greedy=greedy)[0]
    op = operator_of(c)
    if op not in models.operator_lms:
        raise ValueError(f"no trained model for operator {op!r}")
    args = [
        acre_sample(models, a, generator=generator, greedy=False)
        if isinstance(a, Primitive) or operator_of(a) in models.operator_lms
        else None
        for a in concept_args(c)
    ]
    if any(a is None for a in args):
        raise ValueError(f"untrained sub-operator in {format_concept(c)}")
    return models.operator_lms[op].sample([args], generator=generator, greedy=greedy)[0]


def closest_baseline(
    corpus: AcreCorpus,
    c: Concept,
    rng: np.random.Generator,
    candidate_concepts: Optional[list[Concept]] = None,
) -> tuple[int, ...]:
    """A teacher message from the candidate concept nearest in formula edit
    distance (ties broken uniformly per draw)."""
    pool = candidate_concepts if candidate_concepts is not None else corpus.concepts
    pool = [p for p in pool if corpus.bucket(p)]
    if not pool:
        raise ValueError("no candidate concepts with messages")
    dists = [concept_edit_distance(c, p) for p in pool]
    dmin = min(dists)
    tied = [p for p, d in zip(pool, dists) if d == dmin]
    chosen = tied[int(rng.integers(0, len(tied)))]
    bucket = corpus.bucket(chosen)
    return bucket[int(rng.integers(0, len(bucket)))]


def random_baseline(corpus: AcreCorpus, rng: np.random.Generator) -> tuple[int, ...]:
    """Uniform draw over all corpus messages."""
    if not corpus.records:
        raise ValueError("empty corpus")
    return corpus.records[int(rng.integers(0, len(corpus.records)))][1]


@dataclass
class AcreEvalRow:
    language: str
    split: str
    bleu1: float
    bleu4: float
    student_acc: float


def evaluate_acre(
    models: AcreModelSet,
    speaker: Union[AgentPair, SpeakerFn],
    student,
    corpus: AcreCorpus,
    dataset: ShapeWorldDataset,
    games_per_concept: int = 5,
    seed: int = 0,
    splits: tuple[str, ...] = ("train", "test"),
) -> list[AcreEvalRow]:
    """Table of (language, BLEU-1, BLEU-4, student accuracy) per split.

    Splits follow the AND/OR concept folds recorded at ACRe training time;
    `games_per_concept` passes are made through each split's concepts.
    """
    rng = np.random.default_rng(seed)
    generator = torch.Generator().manual_seed(seed)
    channel = corpus.channel
    speak = pair_speaker(speaker) if isinstance(speaker, AgentPair) else speaker

    split_concepts = {s: [] for s in splits}
    for op in ("AND", "OR"):
        folds = models.operator_splits.get(op, {})
        for s in splits:
            split_concepts[s].extend(folds.get(s, []))

    train_pool = [
        c
        for op in ("AND", "OR")
        for c in models.operator_splits.get(op, {}).get("train", [])
    ] + [c for c in corpus.concepts if operator_of(c) in (None, "NOT")]

    rows = []
    for split in splits:
        concepts = split_concepts[split]
        if not concepts:
            continue
        per_lang: dict[str, list[tuple[float, float, float]]] = {
            "Teacher": [], "ACRe": [], "Closest": [], "Random": [],
        }
        for c in concepts:
            refs = corpus.bucket(c)
            for _ in range(games_per_concept):
                seed_g = int(rng.integers(0, 2 ** 63 - 1))
                needs_games = student is not None or getattr(speak, "needs_games", True)
                if needs_games:
                    base = BaseGame(
                        c, seed_g, pool_size=dataset.pool_size, image_size=dataset.image_size
                    )
                    game = augment(
                        base, dataset.game_type, dataset.n_targets, dataset.n_distractors,
                        np.random.default_rng([seed_g, 5]),
                    )
                else:
                    game = Game(dataset.game_type, c, [], np.array([]), [], np.array([]))
                teacher_msg = speak([game])[0]
                candidates = {
                    "Teacher": teacher_msg,
                    "ACRe": acre_sample(models, c, generator=generator),
                    "Closest": closest_baseline(corpus, c, rng, train_pool),
                    "Random": random_baseline(corpus, rng),
                }
                refset = refs + [teacher_msg]
                if student is not None:
                    _, _, s_scenes, s_labels = games_to_tensors([game])
                for lang, msg in candidates.items():
                    b1 = bleu(msg, refset, max_n=1)
                    b4 = bleu(msg, refset, max_n=4)
                    if student is not None:
                        with torch.no_grad():
                            probs = student.score(tokens_to_message([msg], channel), s_scenes)
                        acc = student_accuracy(probs, s_labels)
                    else:
                        acc = float("nan")
                    per_lang[lang].append((b1, b4, acc))
        for lang, vals in per_lang.items():
            arr = np.array(vals)
            rows.append(
                AcreEvalRow(lang, split, float(arr[:, 0].mean()), float(arr[:, 1].mean()),
                            float(100 * arr[:, 2].mean()))
            )
    return rows


def write_acre_table(rows: list[AcreEvalRow], path) -> None:
    with open(path, "w") as f:
        f.write("language\tsplit\tbleu1\tbleu4\tstudent_acc\n")
        for r in rows:
            f.write(f"{r.language}\t{r.split}\t{r.bleu1:.2f}\t{r.bleu4:.2f}\t{r.student_acc:.2f}\n")


def read_acre_table(path) -> list[AcreEvalRow]:
    rows = []
    with open(path) as f:
        next(f)  # header
        for line in f:
            lang, split, b1, b4, acc = line.rstrip("\n").split("\t")
            rows.append(AcreEvalRow(lang, split, float(b1), float(b4), float(acc)))
    return rows
