"""Scene rendering, hard target/distractor sampling, and game assembly.

Datasets are stored as manifests (concept + pool seed per game) and scenes
are re-rendered deterministically on demand, so a 20k-game dataset stays
small on disk and builds are reproducible.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .concepts import (
    And,
    Concept,
    Not,
    ObjectVector,
    Or,
    Primitive,
    UNIVERSE,
    enumerate_concepts,
    enumerate_ref_concepts,
    format_concept,
    parse_concept,
    satisfies,
)

log = logging.getLogger(__name__)

GAME_TYPES = ("ref", "setref", "concept")

# fallback bookkeeping: concept formula -> number of uniform fallbacks taken
HARD_SAMPLING_FALLBACKS: dict[str, int] = {}


def _note_fallback(c: Concept, reason: str) -> None:
    formula = format_concept(c)
    if formula not in HARD_SAMPLING_FALLBACKS:
        log.warning("hard-sampling fallback (%s) for %s", reason, formula)
    HARD_SAMPLING_FALLBACKS[formula] = HARD_SAMPLING_FALLBACKS.get(formula, 0) + 1

COLOR_RGB = {
    "red": (0.90, 0.10, 0.10),
    "blue": (0.10, 0.15, 0.90),
    "green": (0.10, 0.80, 0.15),
    "yellow": (0.90, 0.90, 0.10),
    "white": (0.92, 0.92, 0.88),  # off-white; background stays dark
    "gray": (0.50, 0.50, 0.50),
}

ROTATABLE = {"triangle", "ellipse", "rectangle"}


@dataclass
class Scene:
    pixels: np.ndarray  # H x W x 3, float32 in [0, 1]
    object: ObjectVector
    pose: tuple  # (cx, cy, size, rotation)


def render_scene(z: ObjectVector, rng: np.random.Generator, image_size: int = 64) -> Scene:
    """Render one object on a dark noise background. Deterministic given rng state."""
    H = W = image_size
    base_size = 0.22 * H
    size = base_size * rng.uniform(0.75, 1.25)
    # keep the object fully inside the frame; 1.25 covers the triangle
    # circumradius (1.2 * size) and the rotated rectangle half-diagonal
    margin = size * 1.25 + 1.0
    cx = rng.uniform(margin, W - margin)
    cy = rng.uniform(margin, H - margin)
    if z.shape_name == "triangle":
        rot = rng.uniform(0, 2 * np.pi)
    elif z.shape_name in ROTATABLE:
        # elongated shapes keep a bounded tilt so their axis (the cue that
        # separates them from circle/square) stays readable at small sizes
        rot = rng.uniform(-0.5, 0.5)
    else:
        rot = 0.0

    pixels = rng.uniform(0.0, 0.25, size=(H, W, 3)).astype(np.float32)

    # supersample the mask 3x per axis for anti-aliased edges; at desk image
    # sizes the hard binary mask loses the corner/curvature cues that tell
    # rectangles from ellipses. Only the object's bounding box is evaluated.
    SS = 3
    reach = int(np.ceil(size * 1.25)) + 1
    x0, x1 = max(0, int(cx) - reach), min(W, int(cx) + reach + 1)
    y0, y1 = max(0, int(cy) - reach), min(H, int(cy) + reach + 1)
    gx = x0 + (np.arange((x1 - x0) * SS) + 0.5) / SS - 0.5
    gy = y0 + (np.arange((y1 - y0) * SS) + 0.5) / SS - 0.5
    ys, xs = np.meshgrid(gy, gx, indexing="ij")
    x = xs - cx
    y = ys - cy
    if rot != 0.0:
        xr = x * np.cos(rot) + y * np.sin(rot)
        yr = -x * np.sin(rot) + y * np.cos(rot)
        x, y = xr, yr

    shape = z.shape_name
    if shape == "circle":
        mask = x ** 2 + y ** 2 <= size ** 2
    elif shape == "ellipse":
        mask = (x / size) ** 2 + (y / (0.5 * size)) ** 2 <= 1.0
    elif shape == "square":
        h = size * 0.85
        mask = (np.abs(x) <= h) & (np.abs(y) <= h)
    elif shape == "rectangle":
        mask = (np.abs(x) <= size) & (np.abs(y) <= 0.33 * size)
    elif shape == "triangle":
        # equilateral triangle, apex up, circumradius ~ 1.2 * size
        r = 1.2 * size
        a = np.stack([x, y - (-r)], axis=-1)
        verts = np.array(
            [
                [0.0, -r],
                [r * np.sin(2 * np.pi / 3), -r * np.cos(2 * np.pi / 3)],
                [-r * np.sin(2 * np.pi / 3), -r * np.cos(2 * np.pi / 3)],
            ]
        )
        mask = np.ones_like(x, dtype=bool)
        for i in range(3):
            p, q = verts[i], verts[(i + 1) % 3]
            cross = (q[0] - p[0]) * (y - p[1]) - (q[1] - p[1]) * (x - p[0])
            mask &= cross >= 0
    else:
        raise ValueError(f"unknown shape {shape!r}")

    color = np.array(COLOR_RGB[z.color_name], dtype=np.float32)
    alpha = (
        mask.astype(np.float32)
        .reshape(y1 - y0, SS, x1 - x0, SS)
        .mean(axis=(1, 3))[..., None]
    )
    patch = pixels[y0:y1, x0:x1]
    pixels[y0:y1, x0:x1] = patch * (1.0 - alpha) + color * alpha
    return Scene(pixels=pixels, object=z, pose=(cx, cy, size, rot))


def _region(pred) -> list[ObjectVector]:
    return [z for z in UNIVERSE if pred(z)]


def _sample_from(region: list[ObjectVector], n: int, rng: np.random.Generator) -> list[ObjectVector]:
    idx = rng.integers(0, len(region), size=n)
    return [region[i] for i in idx]


def _quota_counts(n: int) -> list[int]:
    # thirds, remainder round-robin: first region, second, both
    counts = [n // 3] * 3
    for k in range(n - 3 * (n // 3)):
        counts[k] += 1
    return counts


def sample_hard_pools(
    c: Concept, n_pos: int, n_neg: int, rng: np.random.Generator
) -> tuple[list[ObjectVector], list[ObjectVector]]:
    """Sample target/distractor object pools with hard quotas.

    Disjunctions: targets split 1/3 left-only, 1/3 right-only, 1/3 both.
    Conjunctions: distractors split 1/3 fail-left-only, 1/3 fail-right-only,
    1/3 fail-both. Empty sub-regions fall back to uniform sampling (logged).
    """
    pos_region = _region(lambda z: satisfies(c, z))
    neg_region = _region(lambda z: not satisfies(c, z))
    if not pos_region or not neg_region:
        raise ValueError(f"concept has empty target or distractor region: {format_concept(c)}")

    targets: Optional[list[ObjectVector]] = None
    distractors: Optional[list[ObjectVector]] = None

    if isinstance(c, Or):
        left, right = c.left, c.right
        regions = [
            _region(lambda z: satisfies(left, z) and not satisfies(right, z)),
            _region(lambda z: satisfies(right, z) and not satisfies(left, z)),
            _region(lambda z: satisfies(left, z) and satisfies(right, z)),
        ]
        if all(regions):
            targets = []
            for region, k in zip(regions, _quota_counts(n_pos)):
                targets.extend(_sample_from(region, k, rng))
        else:
            _note_fallback(c, "empty disjunct region")
    elif isinstance(c, And):
        left, right = c.left, c.right
        regions = [
            _region(lambda z: not satisfies(left, z) and satisfies(right, z)),
            _region(lambda z: satisfies(left, z) and not satisfies(right, z)),
            _region(lambda z: not satisfies(left, z) and not satisfies(right, z)),
        ]
        if all(regions):
            distractors = []
            for region, k in zip(regions, _quota_counts(n_neg)):
                distractors.extend(_sample_from(region, k, rng))
        else:
            _note_fallback(c, "empty conjunct fail-region")

    if targets is None:
        targets = _sample_from(pos_region, n_pos, rng)
    if distractors is None:
        distractors = _sample_from(neg_region, n_neg, rng)
    return targets, distractors


@dataclass
class BaseGame:
    """A concept with sampled object pools; scenes render lazily from the seed."""

    concept: Concept
    pool_seed: int
    pool_size: int = 40
    image_size: int = 64
    _targets: Optional[list[ObjectVector]] = field(default=None, repr=False)
    _distractors: Optional[list[ObjectVector]] = field(default=None, repr=False)
    _scene_cache: dict = field(default_factory=dict, repr=False)

    def _ensure_pools(self):
        if self._targets is None:
            rng = np.random.default_rng(self.pool_seed)
            self._targets, self._distractors = sample_hard_pools(
                self.concept, self.pool_size, self.pool_size, rng
            )

    @property
    def target_objects(self) -> list[ObjectVector]:
        self._ensure_pools()
        return self._targets

    @property
    def distractor_objects(self) -> list[ObjectVector]:
        self._ensure_pools()
        return self._distractors

    def render(self, pool: str, index: int) -> Scene:
        """Render pool scene `index`; repeated calls give identical pixels
        (and are cached, since pool scenes are fixed for a base game)."""
        key = (pool, index)
        if key not in self._scene_cache:
            objs = self.target_objects if pool == "target" else self.distractor_objects
            seed = np.random.default_rng([self.pool_seed, 0 if pool == "target" else 1, index])
            self._scene_cache[key] = render_scene(objs[index], seed, self.image_size)
        return self._scene_cache[key]


@dataclass
class Game:
    game_type: str
    concept: Concept
    teacher_scenes: list[Scene]
    teacher_labels: np.ndarray
    student_scenes: list[Scene]
    student_labels: np.ndarray


def _draw_view(
    base: BaseGame, n_targets: int, n_distractors: int, rng: np.random.Generator,
    repeat_target: bool = False,
) -> tuple[list[Scene], np.ndarray]:
    if repeat_target:
        t_idx = [int(rng.integers(0, len(base.target_objects)))] * n_targets
    else:
        t_idx = list(rng.choice(len(base.target_objects), size=n_targets, replace=False))
    d_idx = list(rng.choice(len(base.distractor_objects), size=n_distractors, replace=False))
    scenes = [base.render("target", i) for i in t_idx] + [
        base.render("distractor", i) for i in d_idx
    ]
    labels = np.array([True] * n_targets + [False] * n_distractors)
    order = rng.permutation(len(scenes))
    return [scenes[i] for i in order], labels[order]


def augment(
    base: BaseGame,
    game_type: str,
    n_targets: int = 10,
    n_distractors: int = 10,
    rng: Optional[np.random.Generator] = None,
) -> Game:
    """Draw one playable game from a base game's pools."""
    if game_type not in GAME_TYPES:
        raise ValueError(f"unknown game type {game_type!r}")
    rng = np.random.default_rng() if rng is None else rng
    if game_type == "ref":
        scenes, labels = _draw_view(base, n_targets, n_distractors, rng, repeat_target=True)
        return Game(game_type, base.concept, scenes, labels, scenes, labels)
    if game_type == "setref":
        scenes, labels = _draw_view(base, n_targets, n_distractors, rng)
        return Game(game_type, base.concept, scenes, labels, scenes, labels)
    t_scenes, t_labels = _draw_view(base, n_targets, n_distractors, rng)
    s_scenes, s_labels = _draw_view(base, n_targets, n_distractors, rng)
    return Game(game_type, base.concept, t_scenes, t_labels, s_scenes, s_labels)


@dataclass
class EvalGameRecord:
    concept: Concept
    seed: int
    split: str  # "seen" or "unseen"


@dataclass
class ShapeWorldDataset:
    game_type: str
    seed: int
    seen_concepts: list[Concept]
    unseen_concepts: list[Concept]
    base_games: list[BaseGame]
    val_games: list[EvalGameRecord]
    test_games: list[EvalGameRecord]
    n_targets: int = 10
    n_distractors: int = 10
    image_size: int = 64
    pool_size: int = 40

    def materialize_eval_game(self, rec: EvalGameRecord) -> Game:
        base = BaseGame(
            rec.concept, rec.seed, pool_size=self.pool_size, image_size=self.image_size
        )
        rng = np.random.default_rng([rec.seed, 7])
        return augment(base, self.game_type, self.n_targets, self.n_distractors, rng)


def split_concepts(
    concepts: list[Concept], rng: np.random.Generator, held_out_fraction: float = 0.2
) -> tuple[list[Concept], list[Concept]]:
    """Deterministic 80/20 partition into seen/unseen concepts."""
    order = rng.permutation(len(concepts))
    n_unseen = int(round(held_out_fraction * len(concepts)))
    unseen_idx = set(order[:n_unseen].tolist())
    seen = [c for i, c in enumerate(concepts) if i not in unseen_idx]
    unseen = [c for i, c in enumerate(concepts) if i in unseen_idx]
    return seen, unseen


def build_shapeworld_dataset(
    seed: int,
    game_type: str = "concept",
    n_base: int = 20000,
    n_val: int = 2000,
    n_test: int = 2000,
    n_targets: int = 10,
    n_distractors: int = 10,
    image_size: int = 64,
    pool_size: int = 40,
    held_out_fraction: float = 0.2,
) -> ShapeWorldDataset:
    """Build a reproducible dataset: base games from seen concepts, fixed
    eval games split evenly between seen and unseen concepts."""
    if game_type not in GAME_TYPES:
        raise ValueError(f"unknown game type {game_type!r}")
    rng = np.random.default_rng([seed, 0])
    all_concepts = list(
        enumerate_ref_concepts() if game_type == "ref" else enumerate_concepts()
    )
    seen, unseen = split_concepts(all_concepts, rng, held_out_fraction)
    if not unseen:
        unseen = []

    def draw_seed():
        return int(rng.integers(0, 2 ** 63 - 1))

    base_games = [
        BaseGame(
            seen[int(rng.integers(0, len(seen)))],
            draw_seed(),
            pool_size=pool_size,
            image_size=image_size,
        )
        for _ in range(n_base)
    ]

    def eval_records(n: int) -> list[EvalGameRecord]:
        recs = []
        for i in range(n):
            if unseen and i % 2 == 1:
                pool, tag = unseen, "unseen"
            else:
                pool, tag = seen, "seen"
            c = pool[int(rng.integers(0, len(pool)))]
            recs.append(EvalGameRecord(c, draw_seed(), tag))
        return recs

    return ShapeWorldDataset(
        game_type=game_type,
        seed=seed,
        seen_concepts=seen,
        unseen_concepts=unseen,
        base_games=base_games,
        val_games=eval_records(n_val),
        test_games=eval_records(n_test),
        n_targets=n_targets,
        n_distractors=n_distractors,
        image_size=image_size,
        pool_size=pool_size,
    )


def write_manifest(ds: ShapeWorldDataset, path) -> None:
    """Line-delimited manifest: header line, then one record per line."""
    with open(path, "w") as f:
        f.write(
            "#shapeworld\tgame_type=%s\tseed=%d\tn_targets=%d\tn_distractors=%d"
            "\timage_size=%d\tpool_size=%d\n"
            % (
                ds.game_type,
                ds.seed,
                ds.n_targets,
                ds.n_distractors,
                ds.image_size,
                ds.pool_size,
            )
        )
        for c in ds.seen_concepts:
            f.write(f"concept\tseen\t{format_concept(c)}\n")
        for c in ds.unseen_concepts:
            f.write(f"concept\tunseen\t{format_concept(c)}\n")
        for g in ds.base_games:
            f.write(f"base\ttrain\t{format_concept(g.concept)}\t{g.pool_seed}\n")
        for tag, recs in (("val", ds.val_games), ("test", ds.test_games)):
            for r in recs:
                f.write(f"eval\t{tag}:{r.split}\t{format_concept(r.concept)}\t{r.seed}\n")


def read_manifest(path) -> ShapeWorldDataset:
    with open(path) as f:
        header = f.readline()
        if not header.startswith("#shapeworld"):
            raise ValueError(f"not a shapeworld manifest: {path}")
        kv = dict(item.split("=") for item in header.strip().split("\t")[1:])
        seen, unseen, base_games, val_games, test_games = [], [], [], [], []
        for line in f:
            parts = line.rstrip("\n").split("\t")
            kind, tag = parts[0], parts[1]
            if kind == "concept":
                (seen if tag == "seen" else unseen).append(parse_concept(parts[2]))
            elif kind == "base":
                base_games.append(
                    BaseGame(
                        parse_concept(parts[2]),
                        int(parts[3]),
                        pool_size=int(kv["pool_size"]),
                        image_size=int(kv["image_size"]),
                    )
                )
            elif kind == "eval":
                where, split = tag.split(":")
                rec = EvalGameRecord(parse_concept(parts[2]), int(parts[3]), split)
                (val_games if where == "val" else test_games).append(rec)
            else:
                raise ValueError(f"unknown manifest record kind {kind!r}")
    return ShapeWorldDataset(
        game_type=kv["game_type"],
        seed=int(kv["seed"]),
        seen_concepts=seen,
        unseen_concepts=unseen,
        base_games=base_games,
        val_games=val_games,
        test_games=test_games,
        n_targets=int(kv["n_targets"]),
        n_distractors=int(kv["n_distractors"]),
        image_size=int(kv["image_size"]),
        pool_size=int(kv["pool_size"]),
    )
