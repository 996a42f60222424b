"""Loss oracles, accuracy, and the training loop's reproducibility contracts."""

import math

import numpy as np
import pytest
import torch

from setlang.agents import AgentHyperparams, AgentPair, ChannelConfig
from setlang.shapeworld import build_shapeworld_dataset
from setlang.training import (
    TrainConfig,
    evaluate_pair,
    game_loss_bce,
    game_loss_xent,
    student_accuracy,
    train_pair,
)

TINY = AgentHyperparams(
    image_size=24, n_filters=4, n_conv_blocks=2, hidden_size=32, embedding_size=16
)
CH = ChannelConfig(6, 3)


def tiny_dataset(seed=0, game_type="concept"):
    return build_shapeworld_dataset(
        seed=seed, game_type=game_type, n_base=8, n_val=4, n_test=4,
        n_targets=2, n_distractors=2, image_size=24, pool_size=4,
    )


# ---------------------------------------------------------------------------
# losses


def test_bce_matching_probs_is_near_zero():
    eps = 1e-7
    labels = torch.tensor([1.0, 0.0, 1.0])
    probs = torch.tensor([1 - eps, eps, 1 - eps])
    assert game_loss_bce(probs, labels).item() == pytest.approx(0.0, abs=1e-5)


def test_bce_uniform_20_inputs_is_20_ln2():
    probs = torch.full((20,), 0.5)
    labels = torch.tensor([1.0] * 10 + [0.0] * 10)
    assert game_loss_bce(probs, labels).item() == pytest.approx(20 * math.log(2), rel=1e-6)


def test_bce_matches_hand_rolled_sum():
    rng = np.random.default_rng(0)
    for _ in range(20):
        p = rng.uniform(0.05, 0.95, size=12)
        y = rng.integers(0, 2, size=12).astype(float)
        oracle = -sum(
            yi * math.log(pi) + (1 - yi) * math.log(1 - pi) for pi, yi in zip(p, y)
        )
        got = game_loss_bce(torch.tensor(p), torch.tensor(y)).item()
        assert got == pytest.approx(oracle, abs=1e-6)


def test_bce_shape_mismatch_errors():
    with pytest.raises(ValueError):
        game_loss_bce(torch.rand(3), torch.rand(4))


def test_xent_uniform_11_inputs_is_ln11():
    scores = torch.zeros(11)
    assert game_loss_xent(scores, 0).item() == pytest.approx(math.log(11), rel=1e-6)


def test_xent_confident_target_near_zero():
    scores = torch.tensor([100.0, 0.0, 0.0])
    assert game_loss_xent(scores, 0).item() == pytest.approx(0.0, abs=1e-6)


def test_xent_matches_log_sum_exp_oracle():
    rng = np.random.default_rng(1)
    for _ in range(20):
        s = rng.normal(size=7)
        t = int(rng.integers(0, 7))
        oracle = -s[t] + math.log(sum(math.exp(v) for v in s))
        got = game_loss_xent(torch.tensor(s), t).item()
        assert got == pytest.approx(oracle, abs=1e-6)


def test_xent_index_out_of_range():
    with pytest.raises(IndexError):
        game_loss_xent(torch.zeros(5), 5)


# ---------------------------------------------------------------------------
# accuracy


def test_student_accuracy_partial_credit():
    probs = torch.tensor([[0.9, 0.2, 0.6, 0.4]])
    labels = torch.tensor([[1.0, 0.0, 0.0, 1.0]])
    # correct: 0.9->1, 0.2->0; wrong: 0.6->1 vs 0, 0.4->0 vs 1
    assert student_accuracy(probs, labels) == pytest.approx(0.5)


def test_student_accuracy_bounds():
    probs = torch.rand(5, 8)
    labels = (torch.rand(5, 8) > 0.5).float()
    assert 0.0 <= student_accuracy(probs, labels) <= 1.0


# ---------------------------------------------------------------------------
# config validation


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=0)
    with pytest.raises(ValueError):
        TrainConfig(loss="mse")
    TrainConfig()  # defaults valid


# ---------------------------------------------------------------------------
# training loop


def test_zero_epochs_returns_initial_pair():
    torch.manual_seed(0)
    pair = AgentPair(CH, TINY)
    before = {k: v.clone() for k, v in pair.state_dict().items()}
    pair2, log = train_pair(pair, tiny_dataset(), TrainConfig(epochs=0, batch_size=4))
    assert log.epochs == []
    for k, v in pair2.state_dict().items():
        assert torch.equal(before[k], v)


def test_training_is_deterministic():
    def run():
        torch.manual_seed(1)
        pair = AgentPair(CH, TINY)
        _, log = train_pair(
            pair, tiny_dataset(seed=2),
            TrainConfig(epochs=2, batch_size=4, seed=3, eval_every=1),
        )
        return log.train_loss

    assert run() == run()


def test_xent_rejected_for_non_ref_games():
    torch.manual_seed(2)
    pair = AgentPair(CH, TINY)
    with pytest.raises(ValueError):
        train_pair(
            pair, tiny_dataset(game_type="concept"),
            TrainConfig(epochs=1, batch_size=4, loss="xent"),
        )


def test_xent_runs_on_ref_games():
    torch.manual_seed(3)
    pair = AgentPair(CH, TINY)
    _, log = train_pair(
        pair, tiny_dataset(seed=4, game_type="ref"),
        TrainConfig(epochs=1, batch_size=4, loss="xent"),
    )
    assert len(log.train_loss) == 1
    assert math.isfinite(log.train_loss[0])


def test_best_checkpoint_reproduces_logged_accuracy():
    torch.manual_seed(4)
    ds = tiny_dataset(seed=5)
    pair = AgentPair(CH, TINY)
    pair, log = train_pair(pair, ds, TrainConfig(epochs=2, batch_size=4, eval_every=1))
    val = [ds.materialize_eval_game(r) for r in ds.val_games]
    seen = [g for g, r in zip(val, ds.val_games) if r.split == "seen"]
    unseen = [g for g, r in zip(val, ds.val_games) if r.split == "unseen"]
    acc_seen, _ = evaluate_pair(pair, seen)
    acc_unseen, _ = evaluate_pair(pair, unseen)
    assert (acc_seen + acc_unseen) / 2 == pytest.approx(log.best_val_acc, abs=1e-6)


def test_evaluate_pair_greedy_and_messages():
    torch.manual_seed(5)
    ds = tiny_dataset(seed=6)
    pair = AgentPair(CH, TINY)
    games = [ds.materialize_eval_game(r) for r in ds.test_games]
    acc1, msgs1 = evaluate_pair(pair, games)
    acc2, msgs2 = evaluate_pair(pair, games)
    assert acc1 == acc2
    assert msgs1 == msgs2
    assert len(msgs1) == len(games)
    for m in msgs1:
        assert len(m) <= CH.max_len
        assert all(0 <= t < CH.vocab_size for t in m)
