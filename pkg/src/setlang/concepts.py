"""Logical concept DSL over colored shapes.

Concepts are boolean formulas (depth <= 2) over color/shape primitives,
with NOT/AND/OR. Each concept denotes a subset of the 30-object universe
of (color, shape) pairs.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence, Union

import numpy as np

SHAPES = ("triangle", "square", "circle", "ellipse", "rectangle")
COLORS = ("red", "blue", "green", "yellow", "white", "gray")
PRIMITIVE_VALUES = COLORS + SHAPES  # 11 primitives; bit order: colors then shapes
N_FEATURES = len(PRIMITIVE_VALUES)


class ConceptParseError(ValueError):
    pass


@dataclass(frozen=True)
class Primitive:
    value: str

    def __post_init__(self):
        if self.value not in PRIMITIVE_VALUES:
            raise ConceptParseError(f"unknown primitive: {self.value!r}")

    @property
    def kind(self) -> str:
        return "color" if self.value in COLORS else "shape"


@dataclass(frozen=True)
class Not:
    arg: "Concept"


@dataclass(frozen=True)
class And:
    left: "Concept"
    right: "Concept"


@dataclass(frozen=True)
class Or:
    left: "Concept"
    right: "Concept"


Concept = Union[Primitive, Not, And, Or]


@dataclass(frozen=True, order=True)
class ObjectVector:
    """One object in the universe: a color index and a shape index."""

    color: int
    shape: int

    @property
    def bits(self) -> np.ndarray:
        v = np.zeros(N_FEATURES, dtype=bool)
        v[self.color] = True
        v[len(COLORS) + self.shape] = True
        return v

    @property
    def color_name(self) -> str:
        return COLORS[self.color]

    @property
    def shape_name(self) -> str:
        return SHAPES[self.shape]

    def __str__(self):
        return f"{self.color_name}-{self.shape_name}"


UNIVERSE: tuple[ObjectVector, ...] = tuple(
    ObjectVector(c, s) for c in range(len(COLORS)) for s in range(len(SHAPES))
)


def satisfies(c: Concept, z: ObjectVector) -> bool:
    if isinstance(c, Primitive):
        if c.kind == "color":
            return z.color_name == c.value
        return z.shape_name == c.value
    if isinstance(c, Not):
        return not satisfies(c.arg, z)
    if isinstance(c, And):
        return satisfies(c.left, z) and satisfies(c.right, z)
    if isinstance(c, Or):
        return satisfies(c.left, z) or satisfies(c.right, z)
    raise TypeError(f"not a concept: {c!r}")


def extension(c: Concept) -> frozenset[ObjectVector]:
    members = frozenset(z for z in UNIVERSE if satisfies(c, z))
    if not members:
        raise ValueError(f"concept is unsatisfiable: {format_concept(c)}")
    return members


def extension_mask(c: Concept) -> int:
    """Bitmask of the extension over UNIVERSE; used for boolean equivalence."""
    mask = 0
    for i, z in enumerate(UNIVERSE):
        if satisfies(c, z):
            mask |= 1 << i
    return mask


def format_concept(c: Concept) -> str:
    return " ".join(formula_tokens(c))


def formula_tokens(c: Concept) -> tuple[str, ...]:
    if isinstance(c, Primitive):
        return (c.value,)
    if isinstance(c, Not):
        return ("NOT",) + formula_tokens(c.arg)
    if isinstance(c, (And, Or)):
        op = "AND" if isinstance(c, And) else "OR"
        return formula_tokens(c.left) + (op,) + formula_tokens(c.right)
    raise TypeError(f"not a concept: {c!r}")


def _operand_key(c: Concept) -> tuple:
    prim = c.arg if isinstance(c, Not) else c
    # colors sort before shapes, then alphabetical; NOT x sorts after x
    return (prim.kind != "color", prim.value, isinstance(c, Not))


def canonicalize(c: Concept) -> Concept:
    """Sort binary operands into canonical order."""
    if isinstance(c, (And, Or)):
        left, right = canonicalize(c.left), canonicalize(c.right)
        if _operand_key(left) > _operand_key(right):
            left, right = right, left
        return type(c)(left, right)
    return c


def parse_concept(text: str) -> Concept:
    """Parse a whitespace-tokenized infix formula, e.g. "NOT gray AND circle"."""
    tokens = text.split()
    if not tokens:
        raise ConceptParseError("empty formula")

    pos = 0

    def peek():
        return tokens[pos] if pos < len(tokens) else None

    def take_operand() -> Concept:
        nonlocal pos
        tok = peek()
        if tok is None:
            raise ConceptParseError("missing operand at end of formula")
        if tok in ("AND", "OR"):
            raise ConceptParseError(f"missing operand before {tok!r}")
        negated = False
        if tok == "NOT":
            negated = True
            pos += 1
            tok = peek()
            if tok is None:
                raise ConceptParseError("NOT without operand")
        if tok not in PRIMITIVE_VALUES:
            raise ConceptParseError(f"unknown token: {tok!r}")
        pos += 1
        prim: Concept = Primitive(tok)
        return Not(prim) if negated else prim

    left = take_operand()
    if peek() is None:
        return left
    op = peek()
    if op not in ("AND", "OR"):
        raise ConceptParseError(f"expected AND/OR, got {op!r}")
    pos += 1
    right = take_operand()
    if peek() is not None:
        raise ConceptParseError(f"trailing token: {peek()!r} (formulas have at most one connective)")
    cls = And if op == "AND" else Or
    return canonicalize(cls(left, right))


def _possibly_negated(p: Primitive) -> list[Concept]:
    return [p, Not(p)]


@lru_cache(maxsize=1)
def enumerate_concepts() -> tuple[Concept, ...]:
    """All valid concepts, deduplicated by boolean equivalence; deterministic order.

    Generation order: primitives, negated primitives, then binary formulas
    (AND before OR, operands in canonical order). Tautologies and
    unsatisfiable formulas are dropped; later duplicates of an earlier
    equivalent formula are dropped.
    """
    full_mask = (1 << len(UNIVERSE)) - 1
    prims = [Primitive(v) for v in PRIMITIVE_VALUES]
    candidates: list[Concept] = []
    candidates.extend(prims)
    candidates.extend(Not(p) for p in prims)
    operands = [o for p in prims for o in _possibly_negated(p)]
    operands.sort(key=_operand_key)
    for cls in (And, Or):
        for i in range(len(operands)):
            for j in range(i + 1, len(operands)):
                candidates.append(cls(operands[i], operands[j]))

    seen_masks: set[int] = set()
    out: list[Concept] = []
    for c in candidates:
        mask = extension_mask(c)
        if mask == 0 or mask == full_mask or mask in seen_masks:
            continue
        seen_masks.add(mask)
        out.append(c)
    return tuple(out)


@lru_cache(maxsize=1)
def enumerate_ref_concepts() -> tuple[Concept, ...]:
    """The 30 color AND shape conjunctions used in reference games."""
    return tuple(
        And(Primitive(c), Primitive(s)) for c in COLORS for s in SHAPES
    )


def levenshtein(a: Sequence, b: Sequence) -> int:
    """Unit-cost edit distance between two token sequences."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, start=1):
        cur = [i]
        for j, y in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x != y)))
        prev = cur
    return prev[-1]


def concept_edit_distance(c1: Concept, c2: Concept) -> int:
    """Word-level edit distance between canonical formula strings."""
    return levenshtein(formula_tokens(c1), formula_tokens(c2))


def hamming(a: np.ndarray, b: np.ndarray) -> int:
    return int(np.sum(np.asarray(a, dtype=bool) != np.asarray(b, dtype=bool)))


def hausdorff_distance(za: Iterable, zb: Iterable) -> float:
    """Max distance from any member of one set to the closest member of the other.

    Members are ObjectVectors or equal-length boolean vectors; the inner
    distance is Hamming distance.
    """

    def as_bits(z):
        return z.bits if isinstance(z, ObjectVector) else np.asarray(z, dtype=bool)

    A = [as_bits(z) for z in za]
    B = [as_bits(z) for z in zb]
    if not A or not B:
        raise ValueError("hausdorff_distance requires non-empty sets")

    def directed(xs, ys):
        return max(min(hamming(x, y) for y in ys) for x in xs)

    return float(max(directed(A, B), directed(B, A)))


def concept_hausdorff_distance(c1: Concept, c2: Concept) -> float:
    return hausdorff_distance(extension(c1), extension(c2))


def write_concept_list(concepts: Iterable[Concept], path) -> None:
    """One canonical formula per line, in the given order."""
    with open(path, "w") as f:
        for c in concepts:
            f.write(format_concept(c) + "\n")


def read_concept_list(path) -> list[Concept]:
    with open(path) as f:
        return [parse_concept(line.strip()) for line in f if line.strip()]
