"""Reduced-scale experiment presets sized for a single CPU core.

The package defaults mirror the full-scale configuration (64 px scenes,
10+10 sets, 20k base games, 100 epochs, 64-filter encoders). That takes
GPU-days. These presets shrink every axis that does not change what is
being measured — image size, encoder width, dataset size, epochs — so a
complete train/evaluate cycle takes minutes on one core. The qualitative
phenomena (languages that generalize, the degenerate reference-game
idiolect, set-size effects on systematicity) survive the shrink; absolute
accuracies are a few points lower than at full scale.

All desk runs write under ``desk_root()`` (default ``runs/acceptance``,
overridable via the SETLANG_DESK_ROOT environment variable) and are reused
on re-run, so repeated test invocations never retrain.
"""

from __future__ import annotations

import logging
import os

from .agents import AgentHyperparams
from .harness import ExperimentConfig
from .training import TrainConfig

log = logging.getLogger(__name__)

DESK_IMAGE_SIZE = 24
DESK_EPOCHS = 40


def desk_root() -> str:
    return os.environ.get("SETLANG_DESK_ROOT", os.path.join("runs", "acceptance"))


def desk_model(image_size: int = DESK_IMAGE_SIZE) -> AgentHyperparams:
    return AgentHyperparams(
        image_size=image_size,
        n_filters=12,
        n_conv_blocks=3,
        hidden_size=96,
        embedding_size=48,
    )


def desk_train(seed: int = 0, epochs: int = DESK_EPOCHS) -> TrainConfig:
    return TrainConfig(
        learning_rate=1e-3,
        batch_size=32,
        epochs=epochs,
        loss="bce",
        eps_mix=0.1,
        seed=seed,
    )


def desk_config(
    game_type: str = "concept",
    seed: int = 0,
    *,
    n_targets: int = 5,
    n_distractors: int = 5,
    n_base: int = 400,
    n_val: int = 100,
    n_test: int = 300,
    epochs: int = DESK_EPOCHS,
    held_out_fraction: float = 0.2,
    rho_every: int = 0,
    out_dir: str | None = None,
) -> ExperimentConfig:
    """A complete desk-scale ExperimentConfig for one (game type, seed)."""
    if out_dir is None:
        out_dir = os.path.join(desk_root(), f"{game_type}_seed{seed}")
    return ExperimentConfig(
        game_type=game_type,
        channel_preset="default",
        n_targets=n_targets,
        n_distractors=n_distractors,
        n_base=n_base,
        n_val=n_val,
        n_test=n_test,
        image_size=DESK_IMAGE_SIZE,
        pool_size=12,
        held_out_fraction=held_out_fraction,
        data_seed=seed,
        train=desk_train(seed=seed, epochs=epochs),
        model=desk_model(),
        rho_every=rho_every,
        out_dir=out_dir,
    )


def full_inventory_config(seed: int = 0) -> ExperimentConfig:
    """Concept-game config trained on every concept (no held-out split)."""
    return desk_config(
        "concept",
        seed,
        held_out_fraction=0.0,
        out_dir=os.path.join(desk_root(), f"concept_all_seed{seed}"),
    )


def sweep_base_config() -> ExperimentConfig:
    """Parent config for the set-size sweep; sweep_set_size fills in sizes."""
    return desk_config("concept", 0, out_dir=os.path.join(desk_root(), "sweep"))


def synthetic_acre_rows(seed: int = 0, n_messages: int = 3120, epochs: int = 10):
    """Compositional-reconstruction table for the scripted speaker, cached."""
    import numpy as np

    from .acre import (
        AcreConfig,
        CompositionalSpeaker,
        collect_corpus,
        evaluate_acre,
        read_acre_table,
        train_acre,
        write_acre_table,
    )
    from .harness import build_dataset

    out_dir = os.path.join(desk_root(), f"acre_synthetic_seed{seed}")
    table = os.path.join(out_dir, "acre_table.txt")
    if os.path.exists(table):
        return read_acre_table(table)
    os.makedirs(out_dir, exist_ok=True)
    dataset = build_dataset(desk_config("concept", seed))
    speaker = CompositionalSpeaker()
    corpus = collect_corpus(
        speaker, dataset, n=n_messages, rng=np.random.default_rng(seed)
    )
    models = train_acre(corpus, AcreConfig(epochs=epochs, seed=seed))
    rows = evaluate_acre(models, speaker, None, corpus, dataset, seed=seed)
    write_acre_table(rows, table)
    return rows


def teacher_acre_rows(seed: int = 0, n_messages: int = 3120, epochs: int = 10):
    """Reconstruction table for a trained teacher (full concept inventory).

    Trains (or reuses) the full-inventory concept run for this seed, then
    probes its frozen teacher; the table is cached inside the run directory.
    """
    import numpy as np

    from .acre import (
        AcreConfig,
        collect_corpus,
        evaluate_acre,
        read_acre_table,
        train_acre,
        write_acre_table,
    )
    from .harness import build_dataset, run_experiment

    config = full_inventory_config(seed)
    artifact = run_experiment(config, reuse=True)
    table = os.path.join(artifact.directory, "acre_table.txt")
    if os.path.exists(table):
        return read_acre_table(table)
    pair = artifact.load_pair()
    dataset = build_dataset(config)
    corpus = collect_corpus(
        pair, dataset, n=n_messages, rng=np.random.default_rng(seed)
    )
    models = train_acre(corpus, AcreConfig(epochs=epochs, seed=seed))
    rows = evaluate_acre(models, pair, pair.student, corpus, dataset, seed=seed)
    write_acre_table(rows, table)
    return rows


CROSS_GAME_PAIRS = (("ref", "setref"), ("ref", "concept"), ("setref", "concept"))


def cross_game_results(seeds: tuple[int, ...] = (0, 1, 2)) -> dict:
    """Zero-shot transfer accuracies {(source, target, seed): acc}, cached.

    Loads the cached headline run for each (source game, seed) and evaluates
    its pair on fresh test games of the target type (shared eval data seed).
    """
    from .harness import run_experiment
    from .metrics import cross_evaluate
    from .shapeworld import build_shapeworld_dataset

    cache = os.path.join(desk_root(), "cross_eval.txt")
    results: dict = {}
    if os.path.exists(cache):
        with open(cache) as f:
            for line in f:
                source, target, seed, acc = line.split()
                results[(source, target, int(seed))] = float(acc)
    needed = [
        (s, t, seed) for s, t in CROSS_GAME_PAIRS for seed in seeds
    ]
    if all(k in results for k in needed):
        return results

    datasets = {}
    for target in {t for _, t in CROSS_GAME_PAIRS}:
        datasets[target] = build_shapeworld_dataset(
            seed=1000,
            game_type=target,
            n_base=1,
            n_val=1,
            n_test=100,
            n_targets=5,
            n_distractors=5,
            image_size=DESK_IMAGE_SIZE,
            pool_size=12,
        )
    for source, target in CROSS_GAME_PAIRS:
        for seed in seeds:
            if (source, target, seed) in results:
                continue
            pair = run_experiment(desk_config(source, seed)).load_pair()
            acc, _, _ = cross_evaluate(pair, target, datasets[target])
            results[(source, target, seed)] = acc
            log.info("cross %s->%s seed %d acc %.3f", source, target, seed, acc)
    os.makedirs(desk_root(), exist_ok=True)
    with open(cache, "w") as f:
        for (source, target, seed), acc in sorted(results.items()):
            f.write(f"{source} {target} {seed} {acc!r}\n")
    return results


def ideal_listener_result(seed: int = 0, epochs: int = 25) -> tuple[float, float]:
    """Ground-truth-language listener accuracy (seen, unseen), cached."""
    from .harness import build_dataset, ideal_language_listener

    cache = os.path.join(desk_root(), f"ideal_listener_seed{seed}.txt")
    if os.path.exists(cache):
        with open(cache) as f:
            seen, unseen = (float(x) for x in f.read().split())
        return seen, unseen
    config = desk_config("concept", seed, epochs=epochs)
    dataset = build_dataset(config)
    seen, unseen = ideal_language_listener(
        dataset, config.train, model=config.model, channel=config.channel
    )
    os.makedirs(desk_root(), exist_ok=True)
    with open(cache, "w") as f:
        f.write(f"{seen!r} {unseen!r}\n")
    return seen, unseen
