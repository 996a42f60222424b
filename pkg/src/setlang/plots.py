"""Plot emission: message sunbursts, rho-vs-epoch curves, sweep scatter.

The raw prefix-tree table is always written next to the pictures so the
results survive without any plotting dependency.
"""

from __future__ import annotations

import os
from collections import Counter

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .concepts import format_concept
from .metrics import MessageCorpus, conditional_entropy


def prefix_tree(messages: list[tuple[int, ...]]) -> dict[tuple, Counter]:
    """Map prefix -> Counter of next tokens (None marks end of message)."""
    tree: dict[tuple, Counter] = {}
    for m in messages:
        for d in range(len(m) + 1):
            nxt = m[d] if d < len(m) else None
            tree.setdefault(tuple(m[:d]), Counter())[nxt] += 1
    return tree


def write_prefix_table(corpus: MessageCorpus, path) -> None:
    """Line-delimited (concept, prefix, token, count) records."""
    by_concept: dict = {}
    for r in corpus.records:
        by_concept.setdefault(r.concept, []).append(r.tokens)
    with open(path, "w") as f:
        f.write("concept\tprefix\ttoken\tcount\n")
        for c in sorted(by_concept, key=format_concept):
            tree = prefix_tree(by_concept[c])
            for prefix in sorted(tree):
                for token, count in sorted(
                    tree[prefix].items(), key=lambda kv: (kv[0] is None, kv[0])
                ):
                    ptxt = ",".join(map(str, prefix))
                    ttxt = "<end>" if token is None else str(token)
                    f.write(f"{format_concept(c)}\t{ptxt}\t{ttxt}\t{count}\n")


def sunburst(messages: list[tuple[int, ...]], ax, n_tokens: int, max_len: int) -> None:
    """Messages proceed outwards from the center; each wedge is a token at
    that position; gaps are end of message."""
    tree = prefix_tree(messages)
    total = len(messages)
    cmap = plt.get_cmap("tab20")

    def draw(prefix, theta0, theta_span, depth):
        if depth >= max_len or prefix not in tree:
            return
        counts = tree[prefix]
        subtotal = sum(counts.values())
        t = theta0
        for token in sorted(counts, key=lambda x: (x is None, x)):
            width = theta_span * counts[token] / subtotal
            if token is not None:
                ax.bar(
                    x=t + width / 2,
                    height=1.0,
                    width=width,
                    bottom=depth + 1,
                    color=cmap(token % 20),
                    edgecolor="white",
                    linewidth=0.3,
                )
                draw(prefix + (token,), t, width, depth + 1)
            t += width

    draw((), 0.0, 2 * np.pi, 0)
    ax.set_ylim(0, max_len + 1)
    ax.set_xticks([])
    ax.set_yticks([])
    ax.spines.clear()
    assert total > 0


def plot_sunbursts(
    corpus: MessageCorpus, out_path, n_tokens: int, max_len: int, max_concepts: int = 12
) -> None:
    by_concept: dict = {}
    for r in corpus.records:
        by_concept.setdefault(r.concept, []).append(r.tokens)
    concepts = sorted(by_concept, key=lambda c: (-len(by_concept[c]), format_concept(c)))
    concepts = concepts[:max_concepts]
    n = len(concepts)
    cols = min(4, max(1, n))
    rows = (n + cols - 1) // cols
    fig, axes = plt.subplots(
        rows, cols, figsize=(3 * cols, 3 * rows), subplot_kw={"projection": "polar"}
    )
    axes = np.atleast_1d(axes).ravel()
    for ax in axes[n:]:
        ax.set_visible(False)
    for c, ax in zip(concepts, axes):
        msgs = by_concept[c]
        sub = MessageCorpus([r for r in corpus.records if r.concept == c])
        h = conditional_entropy(sub)
        sunburst(msgs, ax, n_tokens, max_len)
        ax.set_title(f"{format_concept(c)}\nH = {h:.2f} bits", fontsize=7)
    fig.tight_layout()
    fig.savefig(out_path, dpi=100, metadata={"Software": None})
    plt.close(fig)


def plot_rho_curve(curve: list[tuple[int, float]], out_path) -> None:
    fig, ax = plt.subplots(figsize=(5, 3))
    ax.plot([e for e, _ in curve], [r for _, r in curve], marker="o")
    ax.set_xlabel("epoch")
    ax.set_ylabel("topographic rho (edit)")
    fig.tight_layout()
    fig.savefig(out_path, dpi=100, metadata={"Software": None})
    plt.close(fig)


def plot_sweep(rows: list[tuple[int, int, float]], out_path) -> None:
    fig, ax = plt.subplots(figsize=(5, 3))
    ax.scatter([r[0] for r in rows], [r[2] for r in rows], alpha=0.7)
    ax.set_xlabel("number of targets")
    ax.set_ylabel("topographic rho (edit)")
    fig.tight_layout()
    fig.savefig(out_path, dpi=100, metadata={"Software": None})
    plt.close(fig)


def emit_plots(artifact) -> list[str]:
    """Write all plots and the prefix-tree table for a run; returns paths."""
    d = os.path.join(artifact.directory, "plots")
    os.makedirs(d, exist_ok=True)
    paths = []
    channel = artifact.config.channel

    table = os.path.join(d, "prefix_tree.txt")
    write_prefix_table(artifact.corpus, table)
    paths.append(table)

    sb = os.path.join(d, "sunburst.png")
    plot_sunbursts(artifact.corpus, sb, channel.n_symbols, channel.max_len)
    paths.append(sb)

    curve_file = os.path.join(artifact.directory, "logs", "rho_curve.txt")
    if os.path.exists(curve_file):
        curve = []
        with open(curve_file) as f:
            for line in f:
                if line.startswith("#"):
                    continue
                e, r = line.split("\t")
                curve.append((int(e), float(r)))
        if curve:
            rc = os.path.join(d, "rho_curve.png")
            plot_rho_curve(curve, rc)
            paths.append(rc)
    return paths
