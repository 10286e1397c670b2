"""Jaccard dissimilarity and average-linkage clustering of crisis series.

Two series are compared over the years observed in both. The Jaccard
distance ignores years in which neither country had a crisis, so a pair is
judged only on its crisis years.
"""

from __future__ import annotations

import csv
import io
import json
import warnings
from dataclasses import dataclass

import numpy as np

from ._svg import Svg, num
from .panel import BinarySeries, CrisisPanel

TIE_TOL = 1e-12
PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
           "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")
ABOVE_CUT_COLOR = "#404040"


class EmptyUnionWarning(UserWarning):
    """Neither series has a crisis over the overlap; distance set to 0."""


@dataclass(frozen=True)
class DissimilarityMatrix:
    labels: tuple[str, ...]
    d: np.ndarray
    empty_union: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float)
        k = len(self.labels)
        if d.shape != (k, k):
            raise ValueError(f"matrix shape {d.shape} does not match {k} labels")
        if not np.array_equal(d, d.T) or np.any(np.diag(d) != 0):
            raise ValueError("dissimilarity matrix must be symmetric with zero diagonal")
        if np.any((d < 0) | (d > 1)):
            raise ValueError("dissimilarities must lie in [0, 1]")
        object.__setattr__(self, "d", d)

    def __getitem__(self, pair):
        a, b = pair
        return float(self.d[self.labels.index(a), self.labels.index(b)])


@dataclass(frozen=True)
class Merge:
    left: int
    right: int
    height: float
    size: int


@dataclass(frozen=True)
class Dendrogram:
    """Merge list in the usual linkage numbering: leaves are 0..k-1 and the
    cluster created by merge ``i`` is ``k + i``."""

    leaves: tuple[str, ...]
    merges: tuple[Merge, ...]

    def __post_init__(self):
        if len(self.leaves) and len(self.merges) != len(self.leaves) - 1:
            raise ValueError("a dendrogram over k leaves needs exactly k - 1 merges")

    @property
    def heights(self) -> np.ndarray:
        return np.array([m.height for m in self.merges])

    def members(self, node: int) -> tuple[str, ...]:
        """Sorted leaf labels below ``node``."""
        k = len(self.leaves)
        stack, out = [node], []
        while stack:
            i = stack.pop()
            if i < k:
                out.append(self.leaves[i])
            else:
                m = self.merges[i - k]
                stack.extend((m.left, m.right))
        return tuple(sorted(out))

    def leaf_order(self) -> list[str]:
        """Leaves left to right as drawn."""
        k = len(self.leaves)
        if k == 0:
            return []
        out, stack = [], [2 * k - 2 if k > 1 else 0]
        while stack:
            i = stack.pop()
            if i < k:
                out.append(self.leaves[i])
            else:
                m = self.merges[i - k]
                stack.extend((m.right, m.left))
        return out

    def to_linkage(self) -> np.ndarray:
        """SciPy-style ``(k-1) x 4`` linkage matrix."""
        return np.array([[m.left, m.right, m.height, m.size] for m in self.merges], dtype=float).reshape(-1, 4)

    def canonical(self) -> list[tuple[tuple[str, ...], tuple[str, ...], float]]:
        """Merges as ``(left leaves, right leaves, height)``; independent of leaf numbering."""
        return [(self.members(m.left), self.members(m.right), m.height) for m in self.merges]


@dataclass(frozen=True)
class ClusterCut:
    height: float
    groups: tuple[tuple[str, ...], ...]

    def group_of(self, label: str) -> int:
        for i, g in enumerate(self.groups):
            if label in g:
                return i
        raise KeyError(label)


def _pair_counts(a: BinarySeries, b: BinarySeries):
    common, ia, ib = np.intersect1d(a.years, b.years, assume_unique=True, return_indices=True)
    if common.size == 0:
        raise ValueError(f"{a.label.code} and {b.label.code} share no observed years")
    x, y = a.values[ia] == 1, b.values[ib] == 1
    return int(np.count_nonzero(x & y)), int(np.count_nonzero(x | y))


def jaccard_distance(a: BinarySeries, b: BinarySeries) -> float:
    """1 - |both in crisis| / |either in crisis| over the shared years.

    If neither series has a crisis in the shared years the distance is 0 and
    an :class:`EmptyUnionWarning` is issued.
    """
    both, either = _pair_counts(a, b)
    if either == 0:
        warnings.warn(f"{a.label.code}/{b.label.code}: no crisis years in the overlap; distance set to 0",
                      EmptyUnionWarning, stacklevel=2)
        return 0.0
    return 1.0 - both / either


def dissimilarity_matrix(panel: CrisisPanel) -> DissimilarityMatrix:
    """Jaccard distances between all pairs of countries in ``panel``."""
    if len(panel) < 2:
        raise ValueError("need at least two countries")
    obs = panel.observed().astype(np.float64)
    ones = (panel.cells == 1).astype(np.float64)
    both = ones @ ones.T
    overlap = obs @ obs.T
    either = ones @ obs.T + obs @ ones.T - both
    no_overlap = np.argwhere(np.triu(overlap == 0, 1))
    if no_overlap.size:
        i, j = no_overlap[0]
        raise ValueError(f"{panel.codes[i]} and {panel.codes[j]} share no observed years")
    with np.errstate(invalid="ignore", divide="ignore"):
        d = np.where(either > 0, 1.0 - both / np.where(either > 0, either, 1.0), 0.0)
    np.fill_diagonal(d, 0.0)
    d = np.clip(np.minimum(d, d.T), 0.0, 1.0)
    empty = tuple((panel.codes[i], panel.codes[j]) for i, j in np.argwhere(np.triu(either == 0, 1)))
    return DissimilarityMatrix(panel.codes, d, empty)


def upgma(d: DissimilarityMatrix, method: str = "average") -> Dendrogram:
    """Agglomerate by average linkage.

    ``method="average"`` is UPGMA: the distance between clusters is the mean
    over all cross-cluster leaf pairs. ``method="weighted"`` is WPGMA, which
    averages the two merged clusters' distances with equal weight. Among
    pairs within ``TIE_TOL`` of the minimum, the one whose smallest member
    labels sort first is merged; the cluster holding the smaller label is
    the left child.
    """
    if method not in ("average", "weighted"):
        raise ValueError(f"unknown linkage method {method!r}")
    labels = d.labels
    k = len(labels)
    if k == 0:
        return Dendrogram((), ())
    dist = np.full((2 * k - 1, 2 * k - 1), np.inf)
    dist[:k, :k] = d.d
    key = list(labels) + [""] * (k - 1)
    size = [1] * k + [0] * (k - 1)
    active = list(range(k))
    merges = []
    last = 0.0
    for step in range(k - 1):
        idx = np.array(active)
        sub = dist[np.ix_(idx, idx)]
        iu, ju = np.triu_indices(len(idx), 1)
        vals = sub[iu, ju]
        best = vals.min()
        tied = np.flatnonzero(vals <= best + TIE_TOL)
        pick = min(tied, key=lambda t: tuple(sorted((key[idx[iu[t]]], key[idx[ju[t]]]))))
        a, b = int(idx[iu[pick]]), int(idx[ju[pick]])
        if key[b] < key[a]:
            a, b = b, a
        height = max(float(vals[pick]), last)
        last = height
        new = k + step
        size[new] = size[a] + size[b]
        key[new] = key[a]
        active = [c for c in active if c not in (a, b)]
        for c in active:
            if method == "average":
                v = (size[a] * dist[a, c] + size[b] * dist[b, c]) / size[new]
            else:
                v = 0.5 * (dist[a, c] + dist[b, c])
            dist[new, c] = dist[c, new] = v
        active.append(new)
        merges.append(Merge(a, b, height, size[new]))
    return Dendrogram(tuple(labels), tuple(merges))


def cut(tree: Dendrogram, height: float) -> ClusterCut:
    """Groups left after undoing every merge above ``height``."""
    if height < 0:
        raise ValueError("cut height must be non-negative")
    k = len(tree.leaves)
    parent = list(range(2 * k - 1)) if k else []

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for step, m in enumerate(tree.merges):
        if m.height <= height:
            parent[find(m.left)] = k + step
            parent[find(m.right)] = k + step
    groups: dict[int, list[str]] = {}
    for i, label in enumerate(tree.leaves):
        groups.setdefault(find(i), []).append(label)
    ordered = sorted(tuple(sorted(g)) for g in groups.values())
    return ClusterCut(float(height), tuple(ordered))


def largest_gap_height(tree: Dendrogram) -> float:
    """Midpoint of the widest gap between consecutive merge heights.

    Ties go to the highest gap. With fewer than two merges the root height
    is returned.
    """
    h = tree.heights
    if h.size == 0:
        return 0.0
    if h.size < 2:
        return float(h[-1])
    gaps = np.diff(h)
    i = len(gaps) - 1 - int(np.argmax(gaps[::-1]))
    return float(0.5 * (h[i] + h[i + 1]))


def _fmt_len(x: float) -> str:
    return f"{max(x, 0.0):.12g}"


def to_newick(tree: Dendrogram) -> str:
    """Newick text with ultrametric branch lengths (node depth = height / 2)."""
    k = len(tree.leaves)
    if k == 0:
        return ";"
    if k == 1:
        return f"{tree.leaves[0]};"

    def depth(i):
        return 0.0 if i < k else tree.merges[i - k].height / 2.0

    def render(i):
        if i < k:
            return tree.leaves[i]
        m = tree.merges[i - k]
        here = depth(i)
        return (f"({render(m.left)}:{_fmt_len(here - depth(m.left))},"
                f"{render(m.right)}:{_fmt_len(here - depth(m.right))})")

    return render(2 * k - 2) + ";"


def parse_newick(text: str) -> Dendrogram:
    """Inverse of :func:`to_newick` for binary ultrametric trees."""
    text = text.strip()
    if not text.endswith(";"):
        raise ValueError("Newick text must end with ';'")
    pos = 0
    src = text[:-1]

    def parse_node():
        nonlocal pos
        if src[pos] == "(":
            pos += 1
            left = parse_child()
            if src[pos] != ",":
                raise ValueError(f"expected ',' at {pos}")
            pos += 1
            right = parse_child()
            if src[pos] != ")":
                raise ValueError(f"expected ')' at {pos}")
            pos += 1
            return ("node", left, right)
        start = pos
        while pos < len(src) and src[pos] not in ",():;":
            pos += 1
        return ("leaf", src[start:pos])

    def parse_child():
        nonlocal pos
        node = parse_node()
        length = 0.0
        if pos < len(src) and src[pos] == ":":
            pos += 1
            start = pos
            while pos < len(src) and src[pos] not in ",()":
                pos += 1
            length = float(src[start:pos])
        return node, length

    root = parse_node()
    if pos != len(src):
        raise ValueError(f"trailing text at {pos}")
    if root[0] == "leaf":
        return Dendrogram((root[1],), ())

    leaves: list[str] = []
    internal = []

    def walk(node):
        # returns (depth to leaves, leaf set)
        if node[0] == "leaf":
            leaves.append(node[1])
            return 0.0, (node[1],)
        (lnode, llen), (rnode, rlen) = node[1], node[2]
        ldepth, lset = walk(lnode)
        rdepth, rset = walk(rnode)
        here = ldepth + llen
        internal.append((2.0 * here, lset, rset))
        return here, lset + rset

    walk(root)
    order = sorted(range(len(leaves)), key=lambda i: leaves[i])
    ids = {frozenset([leaves[i]]): n for n, i in enumerate(order)}
    sorted_leaves = tuple(leaves[i] for i in order)
    merges = []
    k = len(leaves)
    for step, (height, lset, rset) in enumerate(sorted(internal, key=lambda t: (t[0], min(t[1] + t[2])))):
        a, b = ids[frozenset(lset)], ids[frozenset(rset)]
        if min(rset) < min(lset):
            a, b = b, a
        merges.append(Merge(a, b, height, len(lset) + len(rset)))
        ids[frozenset(lset + rset)] = k + step
    return Dendrogram(sorted_leaves, tuple(merges))


def merges_csv(tree: Dendrogram) -> str:
    """Merge list as CSV text with columns ``step,left,right,height,size``."""
    k = len(tree.leaves)

    def name(i):
        return tree.leaves[i] if i < k else f"#{i - k + 1}"

    fh = io.StringIO()
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["step", "left", "right", "height", "size"])
    for step, m in enumerate(tree.merges, start=1):
        w.writerow([step, name(m.left), name(m.right), f"{m.height:.6g}", m.size])
    return fh.getvalue()


def cut_to_json(c: ClusterCut, method: str = "user") -> str:
    return json.dumps({"height": c.height, "method": method, "n_groups": len(c.groups),
                       "groups": [list(g) for g in c.groups]}, indent=2) + "\n"


def render_dendrogram(tree: Dendrogram, cutoff: "float | None" = None, title: str = "") -> str:
    """SVG dendrogram: leaves along the bottom, merge height upward.

    With ``cutoff`` a dotted horizontal line marks the threshold and links
    below it are colored by group.
    """
    k = len(tree.leaves)
    order = tree.leaf_order()
    spacing, left_pad, top_pad, plot_h = 14.0, 50.0, 40.0, 320.0
    label_h = 50.0
    width = left_pad + spacing * max(k, 1) + 20.0
    height = top_pad + plot_h + label_h
    svg = Svg(width, height, title)
    if title:
        svg.text(width / 2, 20, title, text_anchor="middle", font_size=13)
    top = max(float(tree.heights.max()) if len(tree.merges) else 0.0, cutoff or 0.0)
    top = 1.05 * top if top > 0 else 1.0

    def y(h):
        return top_pad + plot_h * (1.0 - h / top)

    # axis
    svg.line(left_pad - 5, y(0), left_pad - 5, y(top), stroke="#000000", class_="axis")
    for t in np.linspace(0.0, top, 6):
        svg.line(left_pad - 9, y(t), left_pad - 5, y(t), stroke="#000000")
        svg.text(left_pad - 11, y(t) + 3, f"{t:.2g}", text_anchor="end", font_size=9)

    xpos = {label: left_pad + spacing * (i + 0.5) for i, label in enumerate(order)}
    node_x = {i: xpos[tree.leaves[i]] for i in range(k)}
    node_h = {i: 0.0 for i in range(k)}
    colors = {}
    if cutoff is not None:
        groups = cut(tree, cutoff)
        big = [g for g in groups.groups if len(g) > 1]
        for gi, g in enumerate(sorted(big, key=lambda g: min(order.index(x) for x in g))):
            for label in g:
                colors[label] = PALETTE[gi % len(PALETTE)]

    for step, m in enumerate(tree.merges):
        node = k + step
        node_x[node] = 0.5 * (node_x[m.left] + node_x[m.right])
        node_h[node] = m.height
        color = ABOVE_CUT_COLOR
        if cutoff is not None and m.height <= cutoff:
            color = colors.get(tree.members(node)[0], ABOVE_CUT_COLOR)
        svg.polyline([(node_x[m.left], y(node_h[m.left])), (node_x[m.left], y(m.height)),
                      (node_x[m.right], y(m.height)), (node_x[m.right], y(node_h[m.right]))],
                     stroke=color, stroke_width=1.2, class_="link")

    for label in order:
        x = xpos[label]
        svg.text(x + 3, y(0) + 6, label, transform=f"rotate(90 {num(x + 3)} {num(y(0) + 6)})",
                 font_size=9, fill=colors.get(label, "#000000"), class_="leaf")

    if cutoff is not None:
        svg.line(left_pad - 5, y(cutoff), width - 10, y(cutoff), stroke="#000000",
                 stroke_dasharray="4,3", class_="cutoff")
    return svg.render()
