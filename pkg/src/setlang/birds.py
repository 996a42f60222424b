"""Caltech-UCSD Birds (CUB-200-2011) ingestion adapter.

Reads the published directory layout unmodified and produces per-class
games with boolean attribute concepts. Real CUB training is supported but
large-scale reproduction is not an acceptance target; the adapter is
validated by its structural invariants.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

EXPECTED_LAYOUT = """\
expected CUB-200-2011 layout under the root directory:
  images.txt                      (image id -> relative path)
  image_class_labels.txt          (image id -> class id)
  classes.txt                     (class id -> class name)
  images/<class dir>/<image>.jpg
  attributes/image_attribute_labels.txt  (image id, attribute id, is_present, ...)
"""


class CubIngestionError(RuntimeError):
    pass


@dataclass
class BirdGame:
    class_id: int
    class_name: str
    images: list[str]  # file paths
    class_attributes: np.ndarray  # boolean
    instance_attributes: np.ndarray  # [n_images, n_attributes] boolean
    split: str  # "train" or "test"


def _require(path: str) -> str:
    if not os.path.exists(path):
        raise CubIngestionError(f"missing {path}\n{EXPECTED_LAYOUT}")
    return path


def load_cub(
    root_path: str,
    n_train_classes: int = 100,
    n_test_classes: int = 50,
    seed: int = 0,
) -> list[BirdGame]:
    """Load CUB classes with attribute vectors; deterministic class split.

    Class attribute bits are the per-instance bits averaged across all
    individual birds of the class, rounded (>= 0.5 -> 1).
    """
    if not os.path.isdir(root_path):
        raise CubIngestionError(f"not a directory: {root_path}\n{EXPECTED_LAYOUT}")

    images_txt = _require(os.path.join(root_path, "images.txt"))
    labels_txt = _require(os.path.join(root_path, "image_class_labels.txt"))
    classes_txt = _require(os.path.join(root_path, "classes.txt"))
    attrs_txt = _require(
        os.path.join(root_path, "attributes", "image_attribute_labels.txt")
    )
    images_dir = _require(os.path.join(root_path, "images"))

    image_paths: dict[int, str] = {}
    with open(images_txt) as f:
        for line in f:
            iid, rel = line.split()
            image_paths[int(iid)] = os.path.join(images_dir, rel)

    image_class: dict[int, int] = {}
    with open(labels_txt) as f:
        for line in f:
            iid, cid = line.split()
            image_class[int(iid)] = int(cid)

    class_names: dict[int, str] = {}
    with open(classes_txt) as f:
        for line in f:
            cid, name = line.split()
            class_names[int(cid)] = name

    n_attrs = 0
    attr_rows: dict[int, dict[int, int]] = {}
    with open(attrs_txt) as f:
        for line in f:
            parts = line.split()
            iid, aid, present = int(parts[0]), int(parts[1]), int(parts[2])
            attr_rows.setdefault(iid, {})[aid] = present
            n_attrs = max(n_attrs, aid)
    if n_attrs == 0:
        raise CubIngestionError(f"no attribute rows in {attrs_txt}\n{EXPECTED_LAYOUT}")

    class_ids = sorted(class_names)
    if len(class_ids) < n_train_classes + n_test_classes:
        raise CubIngestionError(
            f"need {n_train_classes + n_test_classes} classes, found {len(class_ids)}"
        )
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(class_ids))
    chosen = [class_ids[i] for i in order[: n_train_classes + n_test_classes]]
    split_of = {
        cid: ("train" if k < n_train_classes else "test") for k, cid in enumerate(chosen)
    }

    by_class: dict[int, list[int]] = {cid: [] for cid in chosen}
    for iid, cid in image_class.items():
        if cid in by_class:
            by_class[cid].append(iid)

    games = []
    for cid in chosen:
        iids = sorted(by_class[cid])
        if not iids:
            raise CubIngestionError(
                f"class {cid} ({class_names[cid]}) has no images\n{EXPECTED_LAYOUT}"
            )
        inst = np.zeros((len(iids), n_attrs), dtype=bool)
        for k, iid in enumerate(iids):
            row = attr_rows.get(iid)
            if row is None:
                raise CubIngestionError(
                    f"image {iid} has no attribute rows\n{EXPECTED_LAYOUT}"
                )
            for aid, present in row.items():
                inst[k, aid - 1] = bool(present)
        class_vec = inst.mean(axis=0) >= 0.5
        games.append(
            BirdGame(
                class_id=cid,
                class_name=class_names[cid],
                images=[image_paths[i] for i in iids],
                class_attributes=class_vec,
                instance_attributes=inst,
                split=split_of[cid],
            )
        )
    return games


def sample_bird_game(
    game: BirdGame,
    others: list[BirdGame],
    rng: np.random.Generator,
    n_targets: int = 5,
    n_distractors: int = 5,
) -> tuple[list[str], np.ndarray]:
    """Image paths and labels for one game: targets from the class, random
    distractors from other classes."""
    t_idx = rng.choice(len(game.images), size=min(n_targets, len(game.images)), replace=False)
    paths = [game.images[i] for i in t_idx]
    for _ in range(n_distractors):
        other = others[int(rng.integers(0, len(others)))]
        paths.append(other.images[int(rng.integers(0, len(other.images)))])
    labels = np.array([True] * len(t_idx) + [False] * n_distractors)
    order = rng.permutation(len(paths))
    return [paths[i] for i in order], labels[order]
