"""Command-line surface: every verb parses and the light verbs run end-to-end."""

import os

import pytest

from setlang.cli import build_parser, main


def test_all_verbs_parse():
    parser = build_parser()
    for argv in (
        ["generate", "--n-base", "10"],
        ["train", "--game-type", "ref", "--epochs", "2"],
        ["evaluate", "--run-dir", "x"],
        ["cross-eval", "--run-dir", "x", "--game-type", "setref"],
        ["acre", "--run-dir", "x", "--synthetic"],
        ["sweep", "--sizes", "1,3,5,10"],
        ["plot", "--run-dir", "x"],
    ):
        args = parser.parse_args(argv)
        assert callable(args.func)


def test_missing_subcommand_errors():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])


def test_unknown_game_type_rejected():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["train", "--game-type", "chat"])


@pytest.fixture(scope="module")
def cli_run_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli") / "run"
    code = main([
        "train", "--game-type", "setref", "--n-base", "12", "--n-val", "6",
        "--n-test", "6", "--n-targets", "2", "--n-distractors", "2",
        "--image-size", "24", "--pool-size", "4", "--epochs", "1",
        "--batch-size", "6", "--n-filters", "4", "--n-conv-blocks", "2",
        "--hidden-size", "32", "--embedding-size", "16",
        "--run-dir", str(d),
    ])
    assert code == 0
    return str(d)


def test_generate_writes_manifest(tmp_path):
    out = tmp_path / "ds.manifest"
    code = main([
        "generate", "--n-base", "10", "--n-val", "4", "--n-test", "4",
        "--n-targets", "2", "--n-distractors", "2", "--image-size", "24",
        "--pool-size", "4", "--out", str(out),
    ])
    assert code == 0
    assert out.exists()
    assert out.read_text().startswith("#shapeworld")


def test_train_then_evaluate(cli_run_dir, capsys):
    code = main(["evaluate", "--run-dir", cli_run_dir])
    assert code == 0
    out = capsys.readouterr().out
    assert "cond_entropy_bits" in out


def test_evaluate_missing_run_dir(tmp_path):
    assert main(["evaluate", "--run-dir", str(tmp_path / "none")]) == 1


def test_plot_verb(cli_run_dir, capsys):
    code = main(["plot", "--run-dir", cli_run_dir])
    assert code == 0
    out = capsys.readouterr().out
    assert "prefix_tree.txt" in out
    assert os.path.exists(os.path.join(cli_run_dir, "plots", "sunburst.png"))


def test_cross_eval_verb(cli_run_dir, capsys):
    code = main([
        "cross-eval", "--run-dir", cli_run_dir, "--game-type", "ref",
        "--n-targets", "2", "--n-distractors", "2", "--n-test", "6",
        "--pool-size", "4",
    ])
    assert code == 0
    out = capsys.readouterr().out
    assert "setref-trained pair on ref test games" in out
