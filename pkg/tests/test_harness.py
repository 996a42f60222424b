"""Experiment orchestration: configs, run directories, replay, sweeps, plots."""

import copy
import math
import os

import numpy as np
import pytest

from setlang.agents import AgentHyperparams
from setlang.harness import (
    ExperimentConfig,
    config_from_text,
    config_to_text,
    ideal_language_listener,
    replay_report,
    run_experiment,
    sweep_set_size,
)
from setlang.metrics import SystematicityReport
from setlang.training import TrainConfig


def tiny_config(out_dir, **kw):
    base = dict(
        game_type="setref",
        n_targets=2,
        n_distractors=2,
        n_base=16,
        n_val=8,
        n_test=8,
        image_size=24,
        pool_size=4,
        data_seed=0,
        train=TrainConfig(epochs=1, batch_size=8, eval_every=1, seed=0),
        model=AgentHyperparams(
            image_size=24, n_filters=4, n_conv_blocks=2, hidden_size=32,
            embedding_size=16,
        ),
        out_dir=str(out_dir),
    )
    base.update(kw)
    return ExperimentConfig(**base)


@pytest.fixture(scope="module")
def smoke_run(tmp_path_factory):
    cfg = tiny_config(tmp_path_factory.mktemp("run") / "smoke", rho_every=1)
    return cfg, run_experiment(cfg, reuse=True)


def reports_equal(a, b):
    for name in SystematicityReport.FIELDS:
        x, y = getattr(a, name), getattr(b, name)
        if not (x == y or (isinstance(x, float) and math.isnan(x) and math.isnan(y))):
            return False
    return True


# ---------------------------------------------------------------------------
# config serialization


def test_config_text_round_trip(tmp_path):
    cfg = tiny_config(tmp_path / "x", game_type="concept", rho_every=5)
    back = config_from_text(config_to_text(cfg))
    assert back == cfg


def test_unknown_channel_preset_errors(tmp_path):
    cfg = tiny_config(tmp_path / "x")
    cfg.channel_preset = "XXL"
    with pytest.raises(ValueError):
        cfg.channel


# ---------------------------------------------------------------------------
# run_experiment


def test_run_directory_contents(smoke_run):
    _, art = smoke_run
    d = art.directory
    for rel in (
        "config.txt",
        "dataset.manifest",
        "checkpoints/best.pt",
        "logs/train_log.txt",
        "logs/rho_curve.txt",
        "messages/test_messages.txt",
        "report.txt",
        "plots/prefix_tree.txt",
        "plots/sunburst.png",
    ):
        assert os.path.exists(os.path.join(d, rel)), rel
    for name in SystematicityReport.FIELDS:
        assert hasattr(art.report, name)


def test_replay_matches_stored_report(smoke_run):
    _, art = smoke_run
    assert reports_equal(replay_report(art.directory), art.report)


def test_reuse_skips_retraining(smoke_run):
    cfg, art = smoke_run
    mtime = os.path.getmtime(os.path.join(art.directory, "checkpoints", "best.pt"))
    art2 = run_experiment(cfg, reuse=True)
    assert os.path.getmtime(os.path.join(art.directory, "checkpoints", "best.pt")) == mtime
    assert reports_equal(art2.report, art.report)


def test_same_seed_identical_reports(tmp_path):
    a = run_experiment(tiny_config(tmp_path / "a"), reuse=False)
    b = run_experiment(tiny_config(tmp_path / "b"), reuse=False)
    assert reports_equal(a.report, b.report)
    ca = open(os.path.join(a.directory, "messages", "test_messages.txt")).read()
    cb = open(os.path.join(b.directory, "messages", "test_messages.txt")).read()
    assert ca == cb


def test_stage_failure_names_stage(tmp_path):
    cfg = tiny_config(tmp_path / "bad")
    cfg.dataset = "birds"
    with pytest.raises(RuntimeError, match="stage 'dataset'"):
        run_experiment(cfg, reuse=False)


def test_checkpoint_loads_back(smoke_run):
    _, art = smoke_run
    pair = art.load_pair()
    assert pair.channel == art.config.channel


# ---------------------------------------------------------------------------
# plots


def test_plots_reemit_byte_identical(smoke_run):
    from setlang.plots import emit_plots

    _, art = smoke_run
    d = os.path.join(art.directory, "plots")
    paths = emit_plots(art)
    first = {p: open(p, "rb").read() for p in paths}
    paths2 = emit_plots(art)
    assert paths2 == paths
    for p in paths:
        assert open(p, "rb").read() == first[p]


def test_prefix_tree_counts_match_corpus(smoke_run):
    _, art = smoke_run
    table = os.path.join(art.directory, "plots", "prefix_tree.txt")
    root_counts = {}
    with open(table) as f:
        next(f)
        for line in f:
            concept, prefix, token, count = line.rstrip("\n").split("\t")
            if prefix == "":
                root_counts[concept] = root_counts.get(concept, 0) + int(count)
    from setlang.concepts import format_concept

    per_concept = {}
    for r in art.corpus.records:
        key = format_concept(r.concept)
        per_concept[key] = per_concept.get(key, 0) + 1
    assert root_counts == per_concept


def test_sunburst_entropy_annotation_consistency(smoke_run):
    # the per-concept entropy shown on the plot is conditional_entropy of the
    # single-concept restriction of the corpus
    from setlang.metrics import MessageCorpus, conditional_entropy

    _, art = smoke_run
    c = art.corpus.records[0].concept
    sub = MessageCorpus([r for r in art.corpus.records if r.concept == c])
    h = conditional_entropy(sub)
    assert h >= 0.0


# ---------------------------------------------------------------------------
# sweeps and the ideal listener


def test_sweep_rows_structure(tmp_path):
    cfg = tiny_config(tmp_path / "sweep", game_type="concept")
    rows, rho = sweep_set_size(cfg, sizes=[1, 2], repetitions=1, reuse=True)
    assert [(r[0], r[1]) for r in rows] == [(1, 0), (2, 0)]
    for size, rep, r in rows:
        assert math.isnan(r) or -1 <= r <= 1
    assert os.path.isdir(os.path.join(cfg.out_dir, "n1_rep0"))
    assert os.path.isdir(os.path.join(cfg.out_dir, "n2_rep0"))


def test_sweep_cells_are_independent(tmp_path):
    cfg = tiny_config(tmp_path / "sweep2", game_type="concept")
    sweep_set_size(cfg, sizes=[1], repetitions=2, reuse=True)
    c1 = open(os.path.join(cfg.out_dir, "n1_rep0", "config.txt")).read()
    c2 = open(os.path.join(cfg.out_dir, "n1_rep1", "config.txt")).read()
    assert c1 != c2  # different training and data seeds per repetition


def test_ideal_listener_smoke():
    from setlang.harness import build_dataset

    cfg = tiny_config("/tmp/unused", game_type="concept")
    ds = build_dataset(cfg)
    seen, unseen = ideal_language_listener(
        ds, TrainConfig(epochs=1, batch_size=8), model=cfg.model
    )
    assert 0.0 <= seen <= 1.0
    assert 0.0 <= unseen <= 1.0


def test_ideal_listener_rejects_non_shapeworld():
    with pytest.raises(NotImplementedError):
        ideal_language_listener(object(), TrainConfig(epochs=1))
