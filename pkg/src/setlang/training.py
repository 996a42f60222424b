"""Joint teacher-student optimization on signaling games."""

from __future__ import annotations

import copy
import logging
import time
from dataclasses import dataclass, field

import numpy as np
import torch
import torch.nn.functional as F
from torch.optim import Adam

from .agents import AgentPair, message_tokens
from .shapeworld import Game, ShapeWorldDataset, augment

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    learning_rate: float = 1e-4
    batch_size: int = 128
    epochs: int = 100
    loss: str = "bce"  # "xent" only valid for single-target reference games
    eps_mix: float = 0.1  # token mixture weight for exploration; 0 disables
    seed: int = 0
    eval_every: int = 1
    lr_schedule: str = "constant"  # or "cosine" (anneal to 0 over epochs)

    def __post_init__(self):
        if self.learning_rate <= 0 or self.batch_size <= 0 or self.epochs < 0:
            raise ValueError("learning_rate/batch_size must be positive, epochs >= 0")
        if self.loss not in ("bce", "xent"):
            raise ValueError(f"unknown loss {self.loss!r}")
        if self.lr_schedule not in ("constant", "cosine"):
            raise ValueError(f"unknown lr_schedule {self.lr_schedule!r}")


@dataclass
class TrainLog:
    epochs: list[int] = field(default_factory=list)
    train_loss: list[float] = field(default_factory=list)
    val_acc_seen: list[float] = field(default_factory=list)
    val_acc_unseen: list[float] = field(default_factory=list)
    best_epoch: int = -1
    best_val_acc: float = float("nan")
    wall_clock: float = 0.0


def game_loss_bce(probs: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    """Summed binary cross-entropy over independent per-input decisions."""
    if probs.shape != labels.shape:
        raise ValueError(f"shape mismatch: {tuple(probs.shape)} vs {tuple(labels.shape)}")
    y = labels.float()
    return -(y * torch.log(probs) + (1 - y) * torch.log(1 - probs)).sum()


def game_loss_xent(scores: torch.Tensor, target_index: int) -> torch.Tensor:
    """Softmax cross-entropy for a single-target forced-choice game."""
    if not 0 <= target_index < scores.shape[-1]:
        raise IndexError(f"target index {target_index} out of range")
    return -F.log_softmax(scores, dim=-1)[..., target_index].squeeze()


def student_accuracy(probs: torch.Tensor, labels: torch.Tensor) -> float:
    """Mean per-input correctness at threshold 0.5 (partial credit)."""
    pred = probs > 0.5
    return (pred == labels.bool()).float().mean().item()


def games_to_tensors(games: list[Game], device="cpu") -> tuple[torch.Tensor, ...]:
    def stack(scenes_list):
        arr = np.stack([[s.pixels for s in scenes] for scenes in scenes_list])
        return torch.from_numpy(arr).permute(0, 1, 4, 2, 3).contiguous().to(device)

    t_scenes = stack([g.teacher_scenes for g in games])
    t_labels = torch.from_numpy(np.stack([g.teacher_labels for g in games])).to(device)
    s_scenes = stack([g.student_scenes for g in games])
    s_labels = torch.from_numpy(np.stack([g.student_labels for g in games])).to(device)
    return t_scenes, t_labels, s_scenes, s_labels


def play_games(
    pair: AgentPair,
    games: list[Game],
    mode: str = "eval",
    eps_mix: float = 0.0,
    generator: torch.Generator | None = None,
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """Run the pair on a batch of games; returns (message, probs, student labels)."""
    t_scenes, t_labels, s_scenes, s_labels = games_to_tensors(games)
    message = pair.teacher.emit(
        t_scenes, t_labels, mode=mode, eps_mix=eps_mix if mode == "train" else 0.0,
        generator=generator,
    )
    probs = pair.student.score(message, s_scenes)
    return message, probs, s_labels


def evaluate_pair(
    pair: AgentPair, games: list[Game], batch_size: int = 64
) -> tuple[float, list[tuple[int, ...]]]:
    """Greedy-deterministic evaluation; returns accuracy and emitted messages."""
    pair.eval()
    accs, msgs, n = 0.0, [], 0
    with torch.no_grad():
        for i in range(0, len(games), batch_size):
            chunk = games[i : i + batch_size]
            message, probs, labels = play_games(pair, chunk, mode="eval")
            accs += student_accuracy(probs, labels) * len(chunk)
            msgs.extend(message_tokens(message, pair.channel))
            n += len(chunk)
    return accs / max(n, 1), msgs


def _clamped_probs(probs: torch.Tensor, eps: float = 1e-7) -> torch.Tensor:
    return probs.clamp(eps, 1 - eps)


def train_pair(
    pair: AgentPair, dataset: ShapeWorldDataset, config: TrainConfig,
    epoch_callback=None,
) -> tuple[AgentPair, TrainLog]:
    """Train a pair to the best-validation checkpoint.

    Each epoch is one pass over the base games with fresh augmentation;
    fully reproducible under a fixed seed (single-worker data loading).
    """
    start = time.time()
    torch.manual_seed(config.seed)
    generator = torch.Generator().manual_seed(config.seed + 1)
    optimizer = Adam(pair.parameters(), lr=config.learning_rate)
    scheduler = None
    if config.lr_schedule == "cosine":
        scheduler = torch.optim.lr_scheduler.CosineAnnealingLR(
            optimizer, T_max=config.epochs
        )
    train_log = TrainLog()
    if config.epochs == 0:
        return pair, train_log

    val_games = [dataset.materialize_eval_game(r) for r in dataset.val_games]
    val_seen = [g for g, r in zip(val_games, dataset.val_games) if r.split == "seen"]
    val_unseen = [g for g, r in zip(val_games, dataset.val_games) if r.split == "unseen"]

    best_state, best_acc, best_epoch = None, -1.0, -1
    n_base = len(dataset.base_games)

    for epoch in range(config.epochs):
        pair.train()
        epoch_rng = np.random.default_rng([dataset.seed, 101, config.seed, epoch])
        order = epoch_rng.permutation(n_base)
        losses = []
        for i in range(0, n_base, config.batch_size):
            batch_idx = order[i : i + config.batch_size]
            games = [
                augment(
                    dataset.base_games[j],
                    dataset.game_type,
                    dataset.n_targets,
                    dataset.n_distractors,
                    np.random.default_rng([dataset.seed, 11, config.seed, epoch, int(j)]),
                )
                for j in batch_idx
            ]
            message, probs, labels = play_games(
                pair, games, mode="train", eps_mix=config.eps_mix, generator=generator
            )
            if config.loss == "xent":
                if dataset.game_type != "ref":
                    raise ValueError("xent loss is only valid for reference games")
                logits = torch.log(_clamped_probs(probs)) - torch.log1p(-_clamped_probs(probs))
                # single-target forced choice: first positive index per game
                targets = labels.float().argmax(dim=1)
                loss = F.cross_entropy(logits, targets)
            else:
                loss = F.binary_cross_entropy(_clamped_probs(probs), labels.float())
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            if not torch.isfinite(loss):
                raise RuntimeError(
                    f"training diverged at epoch {epoch}: loss={loss.item()}"
                )
            losses.append(loss.item())

        if scheduler is not None:
            scheduler.step()
        train_log.epochs.append(epoch)
        train_log.train_loss.append(float(np.mean(losses)))

        if (epoch + 1) % config.eval_every == 0 or epoch == config.epochs - 1:
            acc_seen, _ = evaluate_pair(pair, val_seen)
            acc_unseen, _ = evaluate_pair(pair, val_unseen) if val_unseen else (float("nan"), [])
            mean_acc = acc_seen if val_unseen == [] else (acc_seen + acc_unseen) / 2
            train_log.val_acc_seen.append(acc_seen)
            train_log.val_acc_unseen.append(acc_unseen)
            if mean_acc > best_acc:
                best_acc, best_epoch = mean_acc, epoch
                best_state = copy.deepcopy(pair.state_dict())
            log.info(
                "epoch %d loss %.4f val seen %.3f unseen %.3f",
                epoch, train_log.train_loss[-1], acc_seen, acc_unseen,
            )
            if epoch_callback is not None:
                epoch_callback(pair, epoch)

    if best_state is not None:
        pair.load_state_dict(best_state)
    train_log.best_epoch = best_epoch
    train_log.best_val_acc = best_acc
    train_log.wall_clock = time.time() - start
    return pair, train_log
