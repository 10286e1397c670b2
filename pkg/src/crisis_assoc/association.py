"""Pairwise correlation matrices, strength-vs-geography testing and heatmaps."""

from __future__ import annotations

import csv
import hashlib
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from importlib import resources
from typing import Mapping, Sequence

import numpy as np
from scipy.special import gammaincc

from ._svg import Svg, num
from .panel import CrisisPanel, MISSING, YearWindow
from .tetrachoric import (DEFAULT_ALPHAS, DegenerateTableError, classify_strength,
                          estimate, table_from_values)

COLD = (94, 60, 153)
WARM = (230, 97, 1)
DIAGONAL_COLOR = "#ff0000"
UNDEFINED_PATTERN = "undefined-hatch"
STAR_LEGEND = (
    ("*", "* indicates a 10% significance"),
    ("**", "** indicates a 5% significance"),
    ("***", "*** indicates a 1% significance"),
    ("n.s.", 'n.s. stands for "non-significant"'),
)


class ChiSquareError(ValueError):
    """Expected counts are undefined because a margin of the table is zero."""


@dataclass(frozen=True)
class AssociationMatrix:
    """Symmetric pairwise estimates; undefined pairs hold NaN and an empty star string.

    The diagonal carries rho = 1 by convention and is ignored by every
    statistic computed from the matrix.
    """

    labels: tuple[str, ...]
    window: YearWindow
    rho: np.ndarray
    se: np.ndarray
    p_value: np.ndarray
    stars: np.ndarray
    corrected: np.ndarray
    n: np.ndarray
    coefficient: str = "tetrachoric"

    def __len__(self):
        return len(self.labels)

    @property
    def defined(self) -> np.ndarray:
        return ~np.isnan(self.rho)

    def pairs(self):
        """Off-diagonal index pairs ``(i, j)`` with ``i < j``."""
        k = len(self.labels)
        return [(i, j) for i in range(k) for j in range(i + 1, k)]

    def entry(self, a: str, b: str) -> dict:
        i, j = self.labels.index(a), self.labels.index(b)
        return dict(rho=float(self.rho[i, j]), se=float(self.se[i, j]), p_value=float(self.p_value[i, j]),
                    stars=str(self.stars[i, j]), corrected=bool(self.corrected[i, j]), n=float(self.n[i, j]))


def _estimate_row(args):
    i, cells, coefficient, alphas, test = args
    out = []
    a = cells[i]
    for j in range(i + 1, cells.shape[0]):
        b = cells[j]
        both = (a != MISSING) & (b != MISSING)
        if not both.any():
            out.append(None)
            continue
        try:
            res = estimate(table_from_values(a[both] == 1, b[both] == 1), coefficient, alphas, test)
        except DegenerateTableError:
            out.append(None)
            continue
        out.append((res.rho, res.se, res.p_value, res.stars, res.corrected, res.n))
    return i, out


def pairwise_matrix(panel: CrisisPanel, coefficient: str = "tetrachoric", alphas=DEFAULT_ALPHAS,
                    test: str = "wald", n_jobs: int = 1) -> AssociationMatrix:
    """Estimate every unordered pair of countries over their shared observed years.

    Pairs with no shared year or a constant series are left undefined.
    ``n_jobs > 1`` spreads rows over worker processes; the result does not
    depend on it.
    """
    k = len(panel)
    rho = np.full((k, k), np.nan)
    se = np.full((k, k), np.nan)
    pv = np.full((k, k), np.nan)
    nn = np.zeros((k, k))
    corr = np.zeros((k, k), dtype=bool)
    stars = np.full((k, k), "", dtype=object)
    jobs = [(i, panel.cells, coefficient, tuple(alphas), test) for i in range(k - 1)]
    if n_jobs > 1 and k > 2:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            rows = list(pool.map(_estimate_row, jobs))
    else:
        rows = [_estimate_row(j) for j in jobs]
    for i, out in rows:
        for offset, res in enumerate(out):
            j = i + 1 + offset
            if res is None:
                continue
            for arr, val in zip((rho, se, pv, stars, corr, nn), res):
                arr[i, j] = arr[j, i] = val
    for i in range(k):
        rho[i, i], se[i, i] = 1.0, 0.0
        nn[i, i] = np.count_nonzero(panel.cells[i] != MISSING)
    return AssociationMatrix(panel.codes, panel.window, rho, se, pv, stars, corr, nn, coefficient)


@dataclass(frozen=True)
class ContinentMap:
    assignments: Mapping[str, str]
    sha256: str = ""
    source: str = ""

    def __getitem__(self, code):
        return self.assignments[code]

    def missing(self, codes: Sequence[str]) -> list[str]:
        return [c for c in codes if c not in self.assignments]


def load_continent_map(path: "str | os.PathLike | None" = None) -> ContinentMap:
    """Read a ``country_code,continent`` CSV; ``None`` loads the bundled map."""
    if path is None:
        data = resources.files("crisis_assoc").joinpath("data/continents.csv").read_bytes()
        source = "bundled:continents.csv"
    else:
        with open(path, "rb") as fh:
            data = fh.read()
        source = os.fspath(path)
    rows = list(csv.DictReader(io.StringIO(data.decode("utf-8"))))
    if not rows or "country_code" not in rows[0] or "continent" not in rows[0]:
        raise ValueError(f"{source}: expected header country_code,continent")
    assignments = {}
    for lineno, row in enumerate(rows, start=2):
        code = row["country_code"].strip()
        if code in assignments:
            raise ValueError(f"{source} line {lineno}: {code} assigned twice")
        assignments[code] = row["continent"].strip()
    return ContinentMap(assignments, hashlib.sha256(data).hexdigest(), source)


@dataclass(frozen=True)
class CrossTable:
    """Rows: moderate, strong. Columns: same continent, different continent."""

    counts: np.ndarray

    ROWS = ("moderate", "strong")
    COLS = ("same-continent", "different-continent")

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def as_dict(self) -> dict:
        return {r: {c: int(self.counts[i, j]) for j, c in enumerate(self.COLS)}
                for i, r in enumerate(self.ROWS)}


def build_cross_table(matrix: AssociationMatrix, continents: ContinentMap,
                      filter: str = "all", alpha: "float | None" = None) -> CrossTable:
    """Classify each defined pair by strength and by continent proximity.

    ``filter="significant"`` keeps only pairs with ``p_value <= alpha``
    (default: the loosest level, 0.10).
    """
    if filter not in ("all", "significant"):
        raise ValueError(f"unknown filter {filter!r}")
    missing = continents.missing(matrix.labels)
    if missing:
        raise KeyError(f"continent map has no entry for: {', '.join(missing)}")
    alpha = max(DEFAULT_ALPHAS) if alpha is None else alpha
    counts = np.zeros((2, 2), dtype=np.int64)
    for i, j in matrix.pairs():
        r = matrix.rho[i, j]
        if math.isnan(r):
            continue
        if filter == "significant" and not matrix.p_value[i, j] <= alpha:
            continue
        row = 0 if classify_strength(r) == "moderate" else 1
        col = 0 if continents[matrix.labels[i]] == continents[matrix.labels[j]] else 1
        counts[row, col] += 1
    return CrossTable(counts)


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    df: int
    p_value: float
    yates: bool


def chi_square_independence(table: "CrossTable | np.ndarray", yates: bool = False) -> ChiSquareResult:
    """Pearson chi-square test of independence for a 2 x 2 table.

    The p-value is the upper tail of chi-square(1), i.e. the regularized
    upper incomplete gamma Q(1/2, x/2). With ``yates`` each ``|O - E|`` is
    reduced by 1/2 (not below zero).
    """
    obs = np.asarray(table.counts if isinstance(table, CrossTable) else table, dtype=float)
    if obs.shape != (2, 2):
        raise ValueError("expected a 2 x 2 table")
    n = obs.sum()
    if n < 1:
        raise ChiSquareError("table is empty")
    rows, cols = obs.sum(axis=1), obs.sum(axis=0)
    if np.any(rows == 0) or np.any(cols == 0):
        raise ChiSquareError(f"zero margin in table {obs.astype(int).tolist()}: expected counts undefined")
    expected = np.outer(rows, cols) / n
    dev = np.abs(obs - expected)
    if yates:
        dev = np.maximum(dev - 0.5, 0.0)
    stat = float(np.sum(dev * dev / expected))
    return ChiSquareResult(stat, 1, float(gammaincc(0.5, stat / 2.0)), yates)


def heat_color(rho: float) -> str:
    """Hex color for ``rho``: cold hue at -1, white at 0, warm hue at +1, linear between."""
    t = min(1.0, abs(float(rho)))
    end = WARM if rho > 0 else COLD
    rgb = (int(round(255 + t * (c - 255))) for c in end)
    return "#" + "".join(f"{c:02x}" for c in rgb)


def star_label(stars: str) -> str:
    return stars if stars else "n.s."


def render_heatmap(matrix: AssociationMatrix, annotate: str = "none", title: str = "") -> str:
    """SVG heatmap of the correlation matrix.

    ``annotate="stars"`` writes the significance code of each defined cell.
    Undefined cells are hatched and the diagonal is drawn in red.
    """
    if annotate not in ("none", "stars"):
        raise ValueError(f"unknown annotation {annotate!r}")
    k = len(matrix)
    cell = 14.0
    left, top = 40.0, 40.0 + (16.0 if title else 0.0)
    grid = cell * k
    legend_w = 230.0
    width = left + grid + 30.0 + legend_w
    height = max(top + grid + 40.0, top + 260.0)
    svg = Svg(width, height, title)
    svg.raw_def(f'<pattern id="{UNDEFINED_PATTERN}" patternUnits="userSpaceOnUse" width="4" height="4">'
                '<rect width="4" height="4" fill="#ffffff"/>'
                '<path d="M0,4 L4,0" stroke="#808080" stroke-width="0.8"/></pattern>')
    if title:
        svg.text(left, 22, title, font_size=13)

    for i, label in enumerate(matrix.labels):
        y = top + cell * (i + 0.5) + 3
        svg.text(left - 3, y, label, text_anchor="end", font_size=7, class_="row-label")
        x = left + cell * (i + 0.5)
        svg.text(x, top - 3, label, text_anchor="start", font_size=7, class_="col-label",
                 transform=f"rotate(-90 {num(x)} {num(top - 3)})")

    for i in range(k):
        for j in range(k):
            x, y = left + cell * j, top + cell * i
            if i == j:
                fill, cls = DIAGONAL_COLOR, "cell diagonal"
            elif math.isnan(matrix.rho[i, j]):
                fill, cls = f"url(#{UNDEFINED_PATTERN})", "cell undefined"
            else:
                fill, cls = heat_color(matrix.rho[i, j]), "cell"
            svg.rect(x, y, cell, cell, fill=fill, stroke="#ffffff", stroke_width=0.3, class_=cls)
            if annotate == "stars" and i != j and not math.isnan(matrix.rho[i, j]):
                svg.text(x + cell / 2, y + cell / 2 + 2, star_label(matrix.stars[i, j]),
                         text_anchor="middle", font_size=5, class_="annotation")

    # color bar
    lx = left + grid + 30.0
    bar_h = 160.0
    steps = 40
    for s in range(steps):
        r = 1.0 - 2.0 * (s + 0.5) / steps
        svg.rect(lx, top + bar_h * s / steps, 16, bar_h / steps, fill=heat_color(r), class_="colorbar")
    for value, label in ((1.0, "1"), (0.0, "0"), (-1.0, "-1")):
        svg.text(lx + 20, top + bar_h * (1.0 - value) / 2.0 + 3, label, font_size=9, class_="legend")
    svg.text(lx, top + bar_h + 16, f"{matrix.coefficient} correlation", font_size=9, class_="legend")
    if annotate == "stars":
        for n, (_, text) in enumerate(STAR_LEGEND):
            svg.text(lx, top + bar_h + 34 + 12 * n, text, font_size=9, class_="legend")
    return svg.render()


def _matrix_csv(labels, values, fmt) -> str:
    fh = io.StringIO()
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["country_code", *labels])
    for label, row in zip(labels, values):
        w.writerow([label, *(fmt(v) for v in row)])
    return fh.getvalue()


def matrix_csvs(matrix: AssociationMatrix) -> tuple[str, str, str]:
    """CSV text of the rho, p-value and star matrices; undefined entries are blank."""
    from .report import fmt_num

    def blank_nan(v):
        return "" if math.isnan(v) else fmt_num(v)

    k = len(matrix)
    star_rows = [["" if i == j or math.isnan(matrix.rho[i, j]) else star_label(matrix.stars[i, j])
                  for j in range(k)] for i in range(k)]
    return (_matrix_csv(matrix.labels, matrix.rho, blank_nan),
            _matrix_csv(matrix.labels, matrix.p_value, blank_nan),
            _matrix_csv(matrix.labels, star_rows, str))
