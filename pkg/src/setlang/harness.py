"""Experiment orchestration: configs, run directories, sweeps, upper bounds.

A run directory is self-contained and replayable: the systematicity report
can be recomputed from the dumped message corpus alone.
"""

from __future__ import annotations

import copy
import dataclasses
import logging
import os
from dataclasses import dataclass, field

import numpy as np
import torch

from .agents import (
    AgentHyperparams,
    AgentPair,
    CHANNEL_PRESETS,
    ChannelConfig,
    load_checkpoint,
    save_checkpoint,
    tokens_to_message,
)
from .metrics import (
    MessageCorpus,
    SystematicityReport,
    spearman,
    systematicity_report,
    topographic_rho,
)
from .shapeworld import ShapeWorldDataset, build_shapeworld_dataset, read_manifest, write_manifest
from .training import TrainConfig, TrainLog, evaluate_pair, games_to_tensors, train_pair

log = logging.getLogger(__name__)


@dataclass
class ExperimentConfig:
    dataset: str = "shapeworld"  # or "birds"
    game_type: str = "concept"
    channel_preset: str = "default"  # S / M / L / XL / default / birds
    n_targets: int = 10
    n_distractors: int = 10
    n_base: int = 20000
    n_val: int = 2000
    n_test: int = 2000
    image_size: int = 64
    pool_size: int = 40
    held_out_fraction: float = 0.2
    data_seed: int = 0
    train: TrainConfig = field(default_factory=TrainConfig)
    model: AgentHyperparams = field(default_factory=AgentHyperparams)
    pair_cap: int = 50000
    pair_seed: int = 0
    rho_every: int = 0  # if > 0, record topographic rho every k epochs
    out_dir: str = "runs/experiment"

    @property
    def channel(self) -> ChannelConfig:
        if self.channel_preset not in CHANNEL_PRESETS:
            raise ValueError(f"unknown channel preset {self.channel_preset!r}")
        return CHANNEL_PRESETS[self.channel_preset]


def config_to_text(config: ExperimentConfig) -> str:
    """Flat key = value lines; nested configs use dotted keys."""
    lines = []

    def emit(prefix, obj):
        for f in dataclasses.fields(obj):
            v = getattr(obj, f.name)
            if dataclasses.is_dataclass(v):
                emit(f"{prefix}{f.name}.", v)
            else:
                lines.append(f"{prefix}{f.name} = {v!r}")

    emit("", config)
    return "\n".join(lines) + "\n"


def config_from_text(text: str) -> ExperimentConfig:
    import ast

    config = ExperimentConfig()
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, value = [s.strip() for s in line.split("=", 1)]
        obj = config
        parts = key.split(".")
        for p in parts[:-1]:
            obj = getattr(obj, p)
        setattr(obj, parts[-1], ast.literal_eval(value))
    return config


@dataclass
class RunArtifact:
    directory: str
    config: ExperimentConfig
    train_log: TrainLog
    corpus: MessageCorpus
    report: SystematicityReport

    @property
    def checkpoint_path(self) -> str:
        return os.path.join(self.directory, "checkpoints", "best.pt")

    def load_pair(self) -> AgentPair:
        pair, _ = load_checkpoint(self.checkpoint_path)
        return pair


def _write_train_log(train_log: TrainLog, path: str) -> None:
    with open(path, "w") as f:
        f.write(f"best_epoch\t{train_log.best_epoch}\n")
        f.write(f"best_val_acc\t{train_log.best_val_acc!r}\n")
        f.write(f"wall_clock\t{train_log.wall_clock!r}\n")
        for i, e in enumerate(train_log.epochs):
            seen = train_log.val_acc_seen[i] if i < len(train_log.val_acc_seen) else float("nan")
            unseen = (
                train_log.val_acc_unseen[i] if i < len(train_log.val_acc_unseen) else float("nan")
            )
            f.write(f"epoch\t{e}\t{train_log.train_loss[i]!r}\t{seen!r}\t{unseen!r}\n")


def _read_train_log(path: str) -> TrainLog:
    train_log = TrainLog()
    with open(path) as f:
        for line in f:
            parts = line.rstrip("\n").split("\t")
            if parts[0] == "best_epoch":
                train_log.best_epoch = int(parts[1])
            elif parts[0] == "best_val_acc":
                train_log.best_val_acc = float(parts[1])
            elif parts[0] == "wall_clock":
                train_log.wall_clock = float(parts[1])
            elif parts[0] == "epoch":
                train_log.epochs.append(int(parts[1]))
                train_log.train_loss.append(float(parts[2]))
                train_log.val_acc_seen.append(float(parts[3]))
                train_log.val_acc_unseen.append(float(parts[4]))
    return train_log


def build_dataset(config: ExperimentConfig) -> ShapeWorldDataset:
    if config.dataset != "shapeworld":
        raise NotImplementedError(
            "run_experiment builds ShapeWorld datasets; use the birds module "
            "directly for CUB ingestion"
        )
    return build_shapeworld_dataset(
        seed=config.data_seed,
        game_type=config.game_type,
        n_base=config.n_base,
        n_val=config.n_val,
        n_test=config.n_test,
        n_targets=config.n_targets,
        n_distractors=config.n_distractors,
        image_size=config.image_size,
        pool_size=config.pool_size,
        held_out_fraction=config.held_out_fraction,
    )


def collect_test_corpus(pair: AgentPair, dataset: ShapeWorldDataset) -> tuple[MessageCorpus, float, float]:
    """Greedy messages and accuracy on the fixed test games, per split."""
    corpus = MessageCorpus()
    accs = {}
    for split in ("seen", "unseen"):
        recs = [r for r in dataset.test_games if r.split == split]
        if not recs:
            accs[split] = float("nan")
            continue
        games = [dataset.materialize_eval_game(r) for r in recs]
        acc, msgs = evaluate_pair(pair, games)
        accs[split] = acc
        for gid, (rec, tokens) in enumerate(zip(recs, msgs)):
            corpus.add(rec.concept, tokens, split, gid)
    return corpus, accs["seen"], accs["unseen"]


def run_experiment(config: ExperimentConfig, reuse: bool = True) -> RunArtifact:
    """Full pipeline: dataset -> training -> corpus dump -> report -> plots.

    With reuse=True a completed run directory is loaded instead of re-run.
    """
    d = config.out_dir
    report_path = os.path.join(d, "report.txt")
    if reuse and os.path.exists(report_path):
        return RunArtifact(
            directory=d,
            config=config,
            train_log=_read_train_log(os.path.join(d, "logs", "train_log.txt")),
            corpus=MessageCorpus.read(os.path.join(d, "messages", "test_messages.txt")),
            report=SystematicityReport.read(report_path),
        )

    os.makedirs(d, exist_ok=True)
    for sub in ("checkpoints", "logs", "messages", "plots"):
        os.makedirs(os.path.join(d, sub), exist_ok=True)
    with open(os.path.join(d, "config.txt"), "w") as f:
        f.write(config_to_text(config))

    stage = "dataset"
    try:
        dataset = build_dataset(config)
        write_manifest(dataset, os.path.join(d, "dataset.manifest"))

        stage = "train"
        torch.manual_seed(config.train.seed)
        pair = AgentPair(config.channel, config.model)
        rho_curve: list[tuple[int, float]] = []
        callback = None
        if config.rho_every > 0:
            def callback(p, epoch):
                if (epoch + 1) % config.rho_every == 0:
                    corpus, _, _ = collect_test_corpus(p, dataset)
                    try:
                        rho = topographic_rho(corpus, "edit", config.pair_cap, config.pair_seed)
                    except ValueError:
                        rho = float("nan")
                    rho_curve.append((epoch, rho))
        pair, train_log = train_pair(pair, dataset, config.train, epoch_callback=callback)
        save_checkpoint(
            os.path.join(d, "checkpoints", "best.pt"), pair,
            extra={"best_epoch": train_log.best_epoch},
        )
        _write_train_log(train_log, os.path.join(d, "logs", "train_log.txt"))
        if rho_curve:
            with open(os.path.join(d, "logs", "rho_curve.txt"), "w") as f:
                f.write(f"# cadence: every {config.rho_every} epochs\n")
                for e, r in rho_curve:
                    f.write(f"{e}\t{r!r}\n")

        stage = "corpus"
        corpus, acc_seen, acc_unseen = collect_test_corpus(pair, dataset)
        corpus.write(os.path.join(d, "messages", "test_messages.txt"))

        stage = "report"
        report = systematicity_report(
            corpus, acc_seen, acc_unseen, config.pair_cap, config.pair_seed
        )
        report.write(report_path)

        stage = "plots"
        from .plots import emit_plots

        artifact = RunArtifact(d, config, train_log, corpus, report)
        emit_plots(artifact)
        return artifact
    except Exception as e:
        raise RuntimeError(
            f"experiment stage {stage!r} failed in {d}; partial artifacts preserved"
        ) from e


def replay_report(directory: str) -> SystematicityReport:
    """Recompute the report from the dumped corpus and train log alone."""
    stored = SystematicityReport.read(os.path.join(directory, "report.txt"))
    corpus = MessageCorpus.read(os.path.join(directory, "messages", "test_messages.txt"))
    return systematicity_report(
        corpus, stored.acc_seen, stored.acc_unseen, stored.pair_cap, stored.pair_seed
    )


def sweep_set_size(
    config: ExperimentConfig,
    sizes: list[int],
    repetitions: int = 3,
    reuse: bool = True,
) -> tuple[list[tuple[int, int, float]], float]:
    """One independent run per (size, repetition); returns rows of
    (size, repetition, topographic rho edit) and the Spearman correlation
    of size vs rho."""
    rows = []
    for size in sizes:
        for rep in range(repetitions):
            sub = copy.deepcopy(config)
            sub.n_targets = size
            sub.n_distractors = size
            sub.train.seed = config.train.seed + rep
            sub.data_seed = config.data_seed + rep
            sub.out_dir = os.path.join(config.out_dir, f"n{size}_rep{rep}")
            artifact = run_experiment(sub, reuse=reuse)
            rows.append((size, rep, artifact.report.topo_rho_edit))
    try:
        rho = spearman([r[0] for r in rows], [r[2] for r in rows])
    except ValueError:
        rho = float("nan")
    return rows, rho


def ideal_language_listener(
    dataset: ShapeWorldDataset,
    train_config: TrainConfig,
    model: AgentHyperparams = None,
    channel: ChannelConfig = None,
) -> tuple[float, float]:
    """Upper bound: train a student alone on tokenized ground-truth formulas.

    Same training and evaluation protocol as the student half of train_pair;
    the only difference is the message source. ShapeWorld datasets only.
    """
    from .acre import CompositionalSpeaker
    from .agents import Student
    from .shapeworld import augment
    import torch.nn.functional as F

    if not isinstance(dataset, ShapeWorldDataset):
        raise NotImplementedError("ideal-language listener is supported for ShapeWorld only")
    channel = channel or ChannelConfig(14, 5)
    model = model or AgentHyperparams()
    speaker = CompositionalSpeaker(channel)
    torch.manual_seed(train_config.seed)
    student = Student(channel, model)
    optimizer = torch.optim.Adam(student.parameters(), lr=train_config.learning_rate)

    def ground_truth_messages(games):
        return tokens_to_message(speaker(games), channel)

    def run_eval(recs):
        if not recs:
            return float("nan")
        student.eval()
        total, n = 0.0, 0
        with torch.no_grad():
            for i in range(0, len(recs), 64):
                games = [dataset.materialize_eval_game(r) for r in recs[i : i + 64]]
                _, _, s_scenes, s_labels = games_to_tensors(games)
                probs = student.score(ground_truth_messages(games), s_scenes)
                total += ((probs > 0.5) == s_labels.bool()).float().mean().item() * len(games)
                n += len(games)
        return total / n

    n_base = len(dataset.base_games)
    best = (-1.0, None)
    for epoch in range(train_config.epochs):
        student.train()
        epoch_rng = np.random.default_rng([dataset.seed, 909, train_config.seed, epoch])
        order = epoch_rng.permutation(n_base)
        for i in range(0, n_base, train_config.batch_size):
            games = [
                augment(
                    dataset.base_games[j],
                    dataset.game_type,
                    dataset.n_targets,
                    dataset.n_distractors,
                    np.random.default_rng([dataset.seed, 919, train_config.seed, epoch, int(j)]),
                )
                for j in order[i : i + train_config.batch_size]
            ]
            _, _, s_scenes, s_labels = games_to_tensors(games)
            probs = student.score(ground_truth_messages(games), s_scenes)
            loss = F.binary_cross_entropy(probs.clamp(1e-7, 1 - 1e-7), s_labels.float())
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
        val = run_eval(dataset.val_games)
        if val > best[0]:
            best = (val, copy.deepcopy(student.state_dict()))
        log.info("ideal listener epoch %d val %.4f", epoch, val)
    if best[1] is not None:
        student.load_state_dict(best[1])

    seen = run_eval([r for r in dataset.test_games if r.split == "seen"])
    unseen = run_eval([r for r in dataset.test_games if r.split == "unseen"])
    return seen, unseen
