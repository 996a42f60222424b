"""The concept space: a small logical language over colored shapes.

Objects have one of 6 colors and one of 5 shapes (a 30-object universe).
Concepts are primitives, negations, and depth-2 AND/OR compositions,
deduplicated by extension: 312 distinct concepts, of which 30 are the
color-AND-shape conjunctions used by reference games.
"""

from collections import Counter

from setlang import (
    concept_edit_distance,
    concept_hausdorff_distance,
    enumerate_concepts,
    enumerate_ref_concepts,
    extension,
    format_concept,
    parse_concept,
)

concepts = enumerate_concepts()
print(f"{len(concepts)} concepts total, {len(enumerate_ref_concepts())} reference conjunctions")

sizes = Counter(len(extension(c)) for c in concepts)
print("extension sizes:", dict(sorted(sizes.items())))

print("\na few concepts and their extensions:")
for text in ("red", "NOT red", "red AND triangle", "blue OR square",
             "NOT red AND NOT blue"):
    c = parse_concept(text)
    ext = extension(c)
    sample = sorted(ext, key=str)[:3]
    print(f"  {format_concept(c):24s} -> {len(ext):2d} objects, e.g. "
          + ", ".join(str(z) for z in sample))

print("\ntwo notions of distance between concepts:")
pairs = [("red", "blue"), ("red", "red AND triangle"), ("red", "NOT red")]
for a_text, b_text in pairs:
    a, b = parse_concept(a_text), parse_concept(b_text)
    print(f"  d({a_text!r}, {b_text!r}): "
          f"edit {concept_edit_distance(a, b)}, "
          f"hausdorff {concept_hausdorff_distance(a, b):.0f}")
