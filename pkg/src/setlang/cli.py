"""Command-line entry points.

Verbs: generate, train, evaluate, cross-eval, acre, sweep, plot.
The SETLANG_DATA_ROOT environment variable sets the default parent
directory for run outputs; everything else is an explicit flag.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .agents import AgentHyperparams, CHANNEL_PRESETS
from .harness import (
    ExperimentConfig,
    replay_report,
    run_experiment,
    sweep_set_size,
)
from .training import TrainConfig


def data_root() -> str:
    return os.environ.get("SETLANG_DATA_ROOT", "runs")


def _add_experiment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--game-type", default="concept", choices=["ref", "setref", "concept"])
    p.add_argument("--channel", default="default", choices=sorted(CHANNEL_PRESETS))
    p.add_argument("--n-targets", type=int, default=10)
    p.add_argument("--n-distractors", type=int, default=10)
    p.add_argument("--n-base", type=int, default=20000)
    p.add_argument("--n-val", type=int, default=2000)
    p.add_argument("--n-test", type=int, default=2000)
    p.add_argument("--image-size", type=int, default=64)
    p.add_argument("--pool-size", type=int, default=40)
    p.add_argument("--held-out-fraction", type=float, default=0.2)
    p.add_argument("--data-seed", type=int, default=0)
    p.add_argument("--seed", type=int, default=0, help="training seed")
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--learning-rate", type=float, default=1e-4)
    p.add_argument("--loss", default="bce", choices=["bce", "xent"])
    p.add_argument("--eps-mix", type=float, default=0.1)
    p.add_argument("--lr-schedule", default="constant", choices=["constant", "cosine"])
    p.add_argument("--n-filters", type=int, default=64)
    p.add_argument("--n-conv-blocks", type=int, default=4)
    p.add_argument("--hidden-size", type=int, default=1024)
    p.add_argument("--embedding-size", type=int, default=500)
    p.add_argument("--rho-every", type=int, default=0)
    p.add_argument("--run-dir", default=None, help="output directory for this run")


def _config_from_args(args) -> ExperimentConfig:
    run_dir = args.run_dir or os.path.join(
        data_root(), f"{args.game_type}_seed{args.seed}"
    )
    return ExperimentConfig(
        game_type=args.game_type,
        channel_preset=args.channel,
        n_targets=args.n_targets,
        n_distractors=args.n_distractors,
        n_base=args.n_base,
        n_val=args.n_val,
        n_test=args.n_test,
        image_size=args.image_size,
        pool_size=args.pool_size,
        held_out_fraction=args.held_out_fraction,
        data_seed=args.data_seed,
        train=TrainConfig(
            learning_rate=args.learning_rate,
            batch_size=args.batch_size,
            epochs=args.epochs,
            loss=args.loss,
            eps_mix=args.eps_mix,
            seed=args.seed,
            lr_schedule=args.lr_schedule,
        ),
        model=AgentHyperparams(
            image_size=args.image_size,
            n_filters=args.n_filters,
            n_conv_blocks=args.n_conv_blocks,
            hidden_size=args.hidden_size,
            embedding_size=args.embedding_size,
        ),
        rho_every=args.rho_every,
        out_dir=run_dir,
    )


def cmd_generate(args) -> int:
    from .harness import build_dataset
    from .shapeworld import write_manifest

    config = _config_from_args(args)
    dataset = build_dataset(config)
    out = args.out or os.path.join(data_root(), "dataset.manifest")
    os.makedirs(os.path.dirname(os.path.abspath(out)), exist_ok=True)
    write_manifest(dataset, out)
    print(f"wrote {len(dataset.base_games)} base / {len(dataset.val_games)} val / "
          f"{len(dataset.test_games)} test games to {out}")
    return 0


def cmd_train(args) -> int:
    config = _config_from_args(args)
    artifact = run_experiment(config, reuse=not args.no_reuse)
    r = artifact.report
    print(f"run directory: {artifact.directory}")
    print(f"test acc seen {r.acc_seen:.4f} unseen {r.acc_unseen:.4f}")
    print(f"H(M|C) {r.cond_entropy_bits:.3f} bits  AMI {r.ami:.3f}  "
          f"topo rho edit {r.topo_rho_edit:.3f} hausdorff {r.topo_rho_hausdorff:.3f}")
    return 0


def cmd_evaluate(args) -> int:
    stored_path = os.path.join(args.run_dir, "report.txt")
    if not os.path.exists(stored_path):
        print(f"no report at {stored_path}", file=sys.stderr)
        return 1
    report = replay_report(args.run_dir)
    for name in report.FIELDS:
        print(f"{name}\t{getattr(report, name)}")
    return 0


def cmd_cross_eval(args) -> int:
    from .harness import config_from_text
    from .metrics import cross_evaluate
    from .shapeworld import build_shapeworld_dataset

    with open(os.path.join(args.run_dir, "config.txt")) as f:
        source = config_from_text(f.read())
    from .agents import load_checkpoint

    pair, _ = load_checkpoint(os.path.join(args.run_dir, "checkpoints", "best.pt"))
    dataset = build_shapeworld_dataset(
        seed=args.data_seed,
        game_type=args.game_type,
        n_base=1,
        n_val=1,
        n_test=args.n_test,
        n_targets=args.n_targets,
        n_distractors=args.n_distractors,
        image_size=source.image_size,
        pool_size=args.pool_size,
    )
    acc, ami, rho = cross_evaluate(pair, args.game_type, dataset)
    print(f"{source.game_type}-trained pair on {args.game_type} test games:")
    print(f"acc {acc:.4f}  AMI {ami:.3f}  topo rho edit {rho:.3f}")
    return 0


def cmd_acre(args) -> int:
    import numpy as np

    from .acre import (
        AcreConfig,
        CompositionalSpeaker,
        collect_corpus,
        evaluate_acre,
        train_acre,
        write_acre_table,
    )
    from .agents import load_checkpoint
    from .shapeworld import read_manifest

    dataset = read_manifest(os.path.join(args.run_dir, "dataset.manifest"))
    if args.synthetic:
        from .harness import config_from_text

        with open(os.path.join(args.run_dir, "config.txt")) as f:
            channel = config_from_text(f.read()).channel
        speaker, student = CompositionalSpeaker(channel), None
    else:
        pair, _ = load_checkpoint(os.path.join(args.run_dir, "checkpoints", "best.pt"))
        speaker, student = pair, pair.student
    corpus = collect_corpus(
        speaker, dataset, n=args.n_messages, rng=np.random.default_rng(args.seed)
    )
    models = train_acre(corpus, AcreConfig(epochs=args.epochs, seed=args.seed))
    rows = evaluate_acre(models, speaker, student, corpus, dataset, seed=args.seed)
    out = os.path.join(args.run_dir, "acre_table.txt")
    write_acre_table(rows, out)
    for r in rows:
        print(f"{r.language:8s} {r.split:5s} BLEU-1 {r.bleu1:6.2f} "
              f"BLEU-4 {r.bleu4:6.2f} acc {r.student_acc:.3f}")
    print(f"table written to {out}")
    return 0


def cmd_sweep(args) -> int:
    from .plots import plot_sweep

    config = _config_from_args(args)
    sizes = [int(s) for s in args.sizes.split(",")]
    rows, rho = sweep_set_size(config, sizes, repetitions=args.repetitions)
    out = os.path.join(config.out_dir, "sweep.txt")
    with open(out, "w") as f:
        f.write("n_targets\trepetition\ttopo_rho_edit\n")
        for size, rep, r in rows:
            f.write(f"{size}\t{rep}\t{r!r}\n")
        f.write(f"# spearman(size, rho) = {rho!r}\n")
    plot_sweep(rows, os.path.join(config.out_dir, "sweep.png"))
    for size, rep, r in rows:
        print(f"n={size:4d} rep={rep} rho={r:.3f}")
    print(f"spearman(size, rho) = {rho:.3f}")
    return 0


def cmd_plot(args) -> int:
    from .plots import emit_plots

    config = ExperimentConfig(out_dir=args.run_dir)
    with open(os.path.join(args.run_dir, "config.txt")) as f:
        from .harness import config_from_text

        config = config_from_text(f.read())
    config.out_dir = args.run_dir
    artifact = run_experiment(config, reuse=True)
    for path in emit_plots(artifact):
        print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="setlang",
        description="signaling games over sets: datasets, agents, analysis",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="build a dataset manifest")
    _add_experiment_flags(p)
    p.add_argument("--out", default=None, help="manifest output path")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="train a teacher-student pair")
    _add_experiment_flags(p)
    p.add_argument("--no-reuse", action="store_true",
                   help="retrain even if the run directory is complete")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="recompute a run's report from its dumps")
    p.add_argument("--run-dir", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("cross-eval", help="zero-shot eval on another game type")
    p.add_argument("--run-dir", required=True, help="directory of the trained pair")
    p.add_argument("--game-type", required=True, choices=["ref", "setref", "concept"])
    p.add_argument("--n-targets", type=int, default=10)
    p.add_argument("--n-distractors", type=int, default=10)
    p.add_argument("--n-test", type=int, default=2000)
    p.add_argument("--pool-size", type=int, default=40)
    p.add_argument("--data-seed", type=int, default=0)
    p.set_defaults(func=cmd_cross_eval)

    p = sub.add_parser("acre", help="compositional reconstruction of a teacher")
    p.add_argument("--run-dir", required=True)
    p.add_argument("--synthetic", action="store_true",
                   help="probe the synthetic compositional speaker instead")
    p.add_argument("--n-messages", type=int, default=200000)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_acre)

    p = sub.add_parser("sweep", help="topographic rho vs set size")
    _add_experiment_flags(p)
    p.add_argument("--sizes", default="1,3,5,10", help="comma-separated target counts")
    p.add_argument("--repetitions", type=int, default=3)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("plot", help="re-emit plots for a completed run")
    p.add_argument("--run-dir", required=True)
    p.set_defaults(func=cmd_plot)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(name)s %(message)s",
    )
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
