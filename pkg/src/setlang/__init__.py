"""Emergent communication over sets: signaling games, agents, analysis."""

from .concepts import (
    And,
    ConceptParseError,
    Not,
    ObjectVector,
    Or,
    Primitive,
    UNIVERSE,
    canonicalize,
    concept_edit_distance,
    concept_hausdorff_distance,
    enumerate_concepts,
    enumerate_ref_concepts,
    extension,
    format_concept,
    parse_concept,
    satisfies,
)
from .shapeworld import (
    Game,
    ShapeWorldDataset,
    build_shapeworld_dataset,
    read_manifest,
    render_scene,
    sample_hard_pools,
    write_manifest,
)
from .agents import (
    AgentHyperparams,
    AgentPair,
    BIRDS_CHANNEL,
    CHANNEL_PRESETS,
    ChannelConfig,
    SHAPEWORLD_CHANNEL,
    Student,
    Teacher,
    load_checkpoint,
    save_checkpoint,
)
from .training import TrainConfig, TrainLog, evaluate_pair, train_pair
from .metrics import (
    MessageCorpus,
    SystematicityReport,
    adjusted_mutual_info,
    bleu,
    conditional_entropy,
    cross_evaluate,
    spearman,
    systematicity_report,
    topographic_rho,
)
from .acre import (
    AcreConfig,
    AcreCorpus,
    AcreModelSet,
    CompositionalSpeaker,
    acre_sample,
    closest_baseline,
    collect_corpus,
    evaluate_acre,
    random_baseline,
    read_acre_table,
    train_acre,
    write_acre_table,
)
from .harness import (
    ExperimentConfig,
    RunArtifact,
    ideal_language_listener,
    replay_report,
    run_experiment,
    sweep_set_size,
)
from .birds import BirdGame, CubIngestionError, load_cub, sample_bird_game

__version__ = "0.1.0"

__all__ = [
    "And", "ConceptParseError", "Not", "ObjectVector", "Or", "Primitive",
    "UNIVERSE", "canonicalize", "concept_edit_distance",
    "concept_hausdorff_distance", "enumerate_concepts",
    "enumerate_ref_concepts", "extension", "format_concept", "parse_concept",
    "satisfies",
    "Game", "ShapeWorldDataset", "build_shapeworld_dataset", "read_manifest",
    "render_scene", "sample_hard_pools", "write_manifest",
    "AgentHyperparams", "AgentPair", "BIRDS_CHANNEL", "CHANNEL_PRESETS",
    "ChannelConfig", "SHAPEWORLD_CHANNEL", "Student", "Teacher",
    "load_checkpoint", "save_checkpoint",
    "TrainConfig", "TrainLog", "evaluate_pair", "train_pair",
    "MessageCorpus", "SystematicityReport", "adjusted_mutual_info", "bleu",
    "conditional_entropy", "cross_evaluate", "spearman",
    "systematicity_report", "topographic_rho",
    "AcreConfig", "AcreCorpus", "AcreModelSet", "CompositionalSpeaker",
    "acre_sample", "closest_baseline", "collect_corpus", "evaluate_acre",
    "random_baseline", "read_acre_table", "train_acre", "write_acre_table",
    "ExperimentConfig", "RunArtifact", "ideal_language_listener",
    "replay_report", "run_experiment", "sweep_set_size",
    "BirdGame", "CubIngestionError", "load_cub", "sample_bird_game",
]
