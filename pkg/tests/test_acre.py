"""ACRe corpus collection, curriculum, sampling, and baselines."""

import numpy as np
import pytest
import torch

from setlang.acre import (
    AcreConfig,
    AcreCorpus,
    CompositionalSpeaker,
    acre_sample,
    closest_baseline,
    collect_corpus,
    concept_args,
    evaluate_acre,
    operator_of,
    random_baseline,
    train_acre,
)
from setlang.agents import ChannelConfig
from setlang.concepts import (
    And,
    Not,
    Or,
    PRIMITIVE_VALUES,
    Primitive,
    formula_tokens,
    parse_concept,
)
from setlang.shapeworld import build_shapeworld_dataset

CH = ChannelConfig(14, 5)


def tiny_dataset(seed=0, held_out_fraction=0.2):
    return build_shapeworld_dataset(
        seed=seed, game_type="concept", n_base=4, n_val=2, n_test=2,
        n_targets=2, n_distractors=2, image_size=24, pool_size=4,
        held_out_fraction=held_out_fraction,
    )


@pytest.fixture(scope="module")
def synthetic_corpus():
    ds = tiny_dataset()
    speaker = CompositionalSpeaker(CH)
    return ds, speaker, collect_corpus(speaker, ds, n=936, rng=np.random.default_rng(0))


@pytest.fixture(scope="module")
def trained_models(synthetic_corpus):
    _, _, corpus = synthetic_corpus
    return train_acre(corpus, AcreConfig(epochs=3, batch_size=64, seed=0))


# ---------------------------------------------------------------------------
# structure helpers


def test_operator_of_and_args():
    c = parse_concept("NOT gray AND circle")
    assert operator_of(c) == "AND"
    left, right = concept_args(c)
    assert operator_of(left) == "NOT"
    assert concept_args(left) == (Primitive("gray"),)
    assert operator_of(Primitive("red")) is None


# ---------------------------------------------------------------------------
# corpus collection


def test_corpus_even_distribution(synthetic_corpus):
    _, _, corpus = synthetic_corpus
    sizes = [len(corpus.bucket(c)) for c in corpus.concepts]
    assert len(corpus.concepts) == 312
    assert max(sizes) - min(sizes) <= 1
    assert sum(sizes) == 936


def test_corpus_one_message_per_concept_at_n_312():
    ds = tiny_dataset()
    corpus = collect_corpus(CompositionalSpeaker(CH), ds, n=312,
                            rng=np.random.default_rng(1))
    assert all(len(corpus.bucket(c)) == 1 for c in corpus.concepts)


def test_corpus_messages_within_channel(synthetic_corpus):
    _, _, corpus = synthetic_corpus
    for _, m in corpus.records:
        assert len(m) <= CH.max_len
        assert all(0 <= t < CH.vocab_size for t in m)


def test_compositional_speaker_messages_are_formula_tokens():
    speaker = CompositionalSpeaker(CH)
    from setlang.shapeworld import Game

    c = parse_concept("NOT gray AND NOT circle")
    (msg,) = speaker([Game("concept", c, [], np.array([]), [], np.array([]))])
    expected = tuple(speaker.token_ids[w] for w in formula_tokens(c))
    assert msg == expected
    assert len(msg) == 5


# ---------------------------------------------------------------------------
# training curriculum


def test_training_order_is_curriculum(trained_models):
    order = trained_models.training_order
    n_prim = len(PRIMITIVE_VALUES)
    assert len(order) == n_prim + 3
    assert set(order[:n_prim]) == set(PRIMITIVE_VALUES)
    assert order[n_prim:] == ["NOT", "AND", "OR"]


def test_operator_splits_partition_concepts(trained_models, synthetic_corpus):
    _, _, corpus = synthetic_corpus
    for op in ("AND", "OR"):
        folds = trained_models.operator_splits[op]
        all_concepts = [c for c, _ in corpus.operator_bucket(op)]
        uniq = []
        for c in all_concepts:
            if c not in uniq:
                uniq.append(c)
        combined = folds["train"] + folds["val"] + folds["test"]
        assert sorted(map(str, combined)) == sorted(map(str, uniq))
        assert folds["test"]  # stratified split leaves a non-empty test fold
        assert len(folds["train"]) > len(folds["test"])


def test_missing_primitive_bucket_errors():
    corpus = AcreCorpus(channel=CH, records=[(Primitive("red"), (0, 1))])
    with pytest.raises(ValueError, match="primitive"):
        train_acre(corpus, AcreConfig(epochs=1))


# ---------------------------------------------------------------------------
# sampling


def test_acre_sample_greedy_deterministic(trained_models):
    c = parse_concept("red AND triangle")
    g1 = torch.Generator().manual_seed(7)
    g2 = torch.Generator().manual_seed(7)
    a = acre_sample(trained_models, c, generator=g1)
    b = acre_sample(trained_models, c, generator=g2)
    assert a == b


def test_acre_sample_primitive_uses_only_its_lm(trained_models):
    msg = acre_sample(trained_models, Primitive("red"),
                      generator=torch.Generator().manual_seed(8))
    assert isinstance(msg, tuple)
    assert all(0 <= t < CH.vocab_size for t in msg)


def test_acre_sample_untrained_operator_errors(synthetic_corpus):
    _, _, corpus = synthetic_corpus
    prim_only = AcreCorpus(
        channel=CH,
        records=[(c, m) for c, m in corpus.records if operator_of(c) is None],
    )
    models = train_acre(prim_only, AcreConfig(epochs=1, batch_size=64))
    with pytest.raises(ValueError):
        acre_sample(models, parse_concept("red AND triangle"))


# ---------------------------------------------------------------------------
# baselines


def test_closest_baseline_own_concept(synthetic_corpus):
    _, _, corpus = synthetic_corpus
    c = corpus.concepts[5]
    rng = np.random.default_rng(2)
    for _ in range(5):
        assert closest_baseline(corpus, c, rng) in corpus.bucket(c)


def test_closest_baseline_unique_nearest():
    red = Primitive("red")
    blue = Primitive("blue")
    corpus = AcreCorpus(channel=CH, records=[(blue, (1,)), (And(red, blue), (2, 3))])
    rng = np.random.default_rng(3)
    # query "red": distance 1 to "blue", 2 to "red AND blue"
    for _ in range(10):
        assert closest_baseline(corpus, red, rng) == (1,)


def test_closest_baseline_tie_break_is_uniform():
    a = Primitive("blue")
    b = Primitive("green")
    corpus = AcreCorpus(channel=CH, records=[(a, (1,)), (b, (2,))])
    rng = np.random.default_rng(4)
    draws = [closest_baseline(corpus, Primitive("red"), rng) for _ in range(10000)]
    frac = sum(d == (1,) for d in draws) / len(draws)
    assert 0.48 <= frac <= 0.52


def test_random_baseline_uniform():
    corpus = AcreCorpus(
        channel=CH, records=[(Primitive("red"), (i,)) for i in range(4)]
    )
    rng = np.random.default_rng(5)
    draws = [random_baseline(corpus, rng) for _ in range(8000)]
    for i in range(4):
        frac = sum(d == (i,) for d in draws) / len(draws)
        assert abs(frac - 0.25) < 0.02
    assert all(d in [(i,) for i in range(4)] for d in draws)


def test_random_baseline_single_message():
    corpus = AcreCorpus(channel=CH, records=[(Primitive("red"), (3, 1))])
    assert random_baseline(corpus, np.random.default_rng(6)) == (3, 1)


# ---------------------------------------------------------------------------
# evaluation


def test_evaluate_acre_teacher_row_is_100(trained_models, synthetic_corpus):
    ds, speaker, corpus = synthetic_corpus
    rows = evaluate_acre(
        trained_models, speaker, None, corpus, ds, games_per_concept=1, seed=0
    )
    langs = {(r.language, r.split) for r in rows}
    assert ("Teacher", "train") in langs and ("Teacher", "test") in langs
    for r in rows:
        if r.language == "Teacher":
            assert r.bleu1 == pytest.approx(100.0)
            assert r.bleu4 == pytest.approx(100.0)
        assert 0.0 <= r.bleu1 <= 100.0
        assert np.isnan(r.student_acc)  # no student provided
