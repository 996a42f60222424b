"""Acceptance gate: the package's end-to-end guarantees.

Fast guarantees (concept inventory, metric oracles, channel mechanics) run
from scratch every time. The training-dependent guarantees reuse cached run
directories under runs/acceptance — warm them with
``python3 scripts/warm_acceptance_cache.py`` first; on a cold cache the
fixtures train everything from scratch, which takes hours on one CPU core.

Desk scale here means 24 px scenes, 5+5 sets, 400 base games, 40 epochs,
and a 12-filter encoder (see setlang.desk); thresholds below are the
full-scale targets with the slack stated alongside each assertion.
"""

import time

import numpy as np
import pytest
import torch

from setlang.agents import ChannelConfig, Student, Teacher, straight_through
from setlang.concepts import (
    concept_edit_distance,
    concept_hausdorff_distance,
    enumerate_concepts,
    enumerate_ref_concepts,
    extension,
    formula_tokens,
    levenshtein,
)
from setlang.desk import (
    cross_game_results,
    desk_config,
    ideal_listener_result,
    sweep_base_config,
    synthetic_acre_rows,
    teacher_acre_rows,
)
from setlang.harness import run_experiment, sweep_set_size
from setlang.metrics import adjusted_mutual_info, bleu, conditional_entropy, spearman

from test_agents import TINY, fake_labels, fake_scenes
from test_concepts import hausdorff_oracle, levenshtein_oracle
from test_metrics import ami_oracle, entropy_oracle, make_corpus, spearman_oracle

GAME_TYPES = ("ref", "setref", "concept")


# ---------------------------------------------------------------------------
# 1. concept inventory


def test_concept_inventory_exact_counts_within_one_second():
    t0 = time.perf_counter()
    assert len(enumerate_concepts()) == 312
    assert len(enumerate_ref_concepts()) == 30
    assert time.perf_counter() - t0 < 1.0


# ---------------------------------------------------------------------------
# 2. metric oracle suite


def test_metric_oracle_suite_within_one_minute():
    t0 = time.perf_counter()
    rng = np.random.default_rng(0)
    concepts = list(enumerate_concepts())

    # Levenshtein vs exponential recursion, lengths <= 8, exact.
    for _ in range(60):
        a = tuple(rng.integers(0, 4, size=rng.integers(0, 9)).tolist())
        b = tuple(rng.integers(0, 4, size=rng.integers(0, 9)).tolist())
        assert levenshtein(a, b) == levenshtein_oracle(a, b)
    # Concept edit distance is Levenshtein on formula tokens, exact.
    for _ in range(30):
        a, b = (concepts[i] for i in rng.integers(0, len(concepts), size=2))
        assert concept_edit_distance(a, b) == levenshtein_oracle(
            formula_tokens(a), formula_tokens(b)
        )
        assert concept_hausdorff_distance(a, b) == hausdorff_oracle(
            extension(a), extension(b)
        )
    # Conditional entropy and AMI vs direct-summation oracles, <= 1e-6.
    for _ in range(10):
        pairs = [
            (concepts[int(rng.integers(0, 6))], (int(rng.integers(0, 3)),))
            for _ in range(40)
        ]
        corpus = make_corpus(pairs)
        assert conditional_entropy(corpus) == pytest.approx(
            entropy_oracle(pairs), abs=1e-6
        )
        cs = [concepts.index(c) for c, _ in pairs]
        ms = [m[0] for _, m in pairs]
        assert adjusted_mutual_info(corpus) == pytest.approx(
            ami_oracle(cs, ms), abs=1e-6
        )
    # Spearman vs rank-then-Pearson, <= 1e-9 (tied and untied cases).
    assert spearman([1.0, 2.0, 2.0, 3.0], [0.5, 0.5, 1.0, 2.0]) == pytest.approx(
        spearman_oracle([1.0, 2.0, 2.0, 3.0], [0.5, 0.5, 1.0, 2.0]), abs=1e-9
    )
    for _ in range(10):
        xs = rng.integers(0, 5, size=12).astype(float).tolist()
        ys = rng.integers(0, 5, size=12).astype(float).tolist()
        if len(set(xs)) < 2 or len(set(ys)) < 2:
            continue
        assert spearman(xs, ys) == pytest.approx(spearman_oracle(xs, ys), abs=1e-9)
    # BLEU hand-counted toy cases, exact within float arithmetic.
    import math

    cand, ref = (1, 2, 3, 4), [(1, 2, 4)]
    # unigram 3/4 clipped, bigram 1/3; no brevity penalty (cand longer).
    assert bleu(cand, ref, max_n=2) == pytest.approx(
        100 * math.exp((math.log(3 / 4) + math.log(1 / 3)) / 2)
    )
    assert bleu((1, 2), [(1, 2)], max_n=4) == pytest.approx(100.0)
    assert time.perf_counter() - t0 < 60.0


# ---------------------------------------------------------------------------
# 3. channel mechanics


def test_messages_stay_one_hot_over_1000_training_steps():
    torch.manual_seed(0)
    ch = ChannelConfig(6, 4)
    teacher = Teacher(ch, TINY)
    opt = torch.optim.Adam(teacher.parameters(), lr=1e-3)
    scenes = fake_scenes(2, 4)
    labels = fake_labels(2, 4, 2)
    weights = torch.randn(ch.max_len, ch.n_symbols)
    gen = torch.Generator().manual_seed(1)
    for _ in range(1000):
        msg = teacher.emit(scenes, labels, mode="train", eps_mix=0.1, generator=gen)
        assert torch.all((msg == 0.0) | (msg == 1.0))
        assert torch.all(msg.sum(-1) == 1.0)
        loss = (msg * weights).sum()
        opt.zero_grad()
        loss.backward()
        opt.step()


def test_channel_gradient_matches_finite_differences():
    """Backprop through the relaxed channel matches central differences to
    1e-3 relative, and the straight-through backward is the identity on the
    soft path — together the end-to-end gradient check."""
    torch.manual_seed(3)
    ch = ChannelConfig(2, 2)
    student = Student(ch, TINY).double().eval()
    scenes = fake_scenes(1, 4).double()
    labels = fake_labels(1, 4, 2)
    logits = torch.randn(
        1, ch.max_len, ch.n_symbols, dtype=torch.float64,
        generator=torch.Generator().manual_seed(4),
    ).requires_grad_()
    gumbel = -torch.log(-torch.log(torch.rand(
        1, ch.max_len, ch.n_symbols, dtype=torch.float64,
        generator=torch.Generator().manual_seed(5),
    )))

    def loss_of(lg):
        soft = torch.softmax(lg + gumbel, dim=-1)
        probs = student.score(soft, scenes)
        return torch.nn.functional.binary_cross_entropy(
            probs.clamp(1e-9, 1 - 1e-9), labels.double()
        )

    loss_of(logits).backward()
    grad = logits.grad.clone()
    assert grad.abs().max() > 0
    idx = int(grad.abs().flatten().argmax())
    eps = 1e-6
    with torch.no_grad():
        up = logits.detach().clone()
        up.flatten()[idx] += eps
        down = logits.detach().clone()
        down.flatten()[idx] -= eps
    fd = (loss_of(up).item() - loss_of(down).item()) / (2 * eps)
    assert fd == pytest.approx(grad.flatten()[idx].item(), rel=1e-3)

    # Straight-through backward: d(hard)/d(soft) == identity, exactly.
    soft = torch.softmax(logits.detach() + gumbel, dim=-1).requires_grad_()
    v = torch.randn_like(soft)
    (g,) = torch.autograd.grad(straight_through(soft), soft, grad_outputs=v)
    assert torch.equal(g, v)


# ---------------------------------------------------------------------------
# 4-9. trained-behavior guarantees (cached desk-scale runs)


@pytest.fixture(scope="module")
def headline_reports():
    return {
        (gt, seed): run_experiment(desk_config(gt, seed)).report
        for gt in GAME_TYPES
        for seed in range(5)
    }


def _means(reports, field):
    return {
        gt: float(np.mean([getattr(reports[(gt, s)], field) for s in range(5)]))
        for gt in GAME_TYPES
    }


def test_reference_game_reaches_90_percent_seen_accuracy(headline_reports):
    assert _means(headline_reports, "acc_seen")["ref"] >= 0.90


def test_naming_entropy_ordering_with_reference_gap(headline_reports):
    h = _means(headline_reports, "cond_entropy_bits")
    assert h["concept"] < h["setref"] < h["ref"]
    assert h["ref"] - max(h["concept"], h["setref"]) >= 1.5


def test_concept_message_mutual_information_gap(headline_reports):
    ami = _means(headline_reports, "ami")
    assert ami["ref"] + 0.2 <= min(ami["setref"], ami["concept"])


def test_set_games_more_topographic_than_reference_in_4_of_5_seeds(headline_reports):
    wins = sum(
        1
        for s in range(5)
        if headline_reports[("setref", s)].topo_rho_edit
        > headline_reports[("ref", s)].topo_rho_edit
        and headline_reports[("concept", s)].topo_rho_edit
        > headline_reports[("ref", s)].topo_rho_edit
    )
    assert wins >= 4


def test_cross_game_zero_shot_transfer_pattern():
    res = cross_game_results(seeds=(0, 1, 2))

    def mean(source, target):
        return float(np.mean([res[(source, target, s)] for s in range(3)]))

    assert mean("ref", "setref") <= 0.65  # bound 60%, +5pt desk slack
    assert mean("ref", "concept") <= 0.60  # bound 55%, +5pt desk slack
    assert mean("setref", "concept") >= 0.75  # bound 80%, -5pt desk slack


def test_larger_sets_yield_more_systematic_languages():
    rows, rho = sweep_set_size(sweep_base_config(), [1, 3, 5, 10], repetitions=3)
    assert len(rows) == 12
    assert np.isfinite(rho)
    assert rho > 0.3


def test_compositional_probe_reconstructs_scripted_speaker():
    t0 = time.perf_counter()
    rows = synthetic_acre_rows(0)
    assert time.perf_counter() - t0 < 1800.0
    by = {(r.language, r.split): r for r in rows}
    assert by[("ACRe", "train")].bleu1 >= 95.0
    assert by[("ACRe", "test")].bleu1 >= 90.0


def test_compositional_probe_beats_nearest_concept_baseline():
    per_seed = [
        {(r.language, r.split): r for r in teacher_acre_rows(seed)}
        for seed in range(3)
    ]

    def mean(lang, split, field):
        return float(np.mean([getattr(t[(lang, split)], field) for t in per_seed]))

    assert mean("ACRe", "test", "student_acc") > mean("Closest", "test", "student_acc")
    assert mean("ACRe", "test", "bleu1") > mean("Closest", "test", "bleu1")
    random_acc = float(
        np.mean([t[("Random", split)].student_acc for t in per_seed
                 for split in ("train", "test")])
    )
    assert 48.0 <= random_acc <= 52.0


def test_ideal_language_listener_upper_bound():
    seen, unseen = ideal_listener_result(0)
    assert seen >= 0.99
    assert unseen >= 0.99
