"""Pipeline orchestration: run each analysis for a configuration and write its artifacts.

Every artifact is written atomically (temporary file, then rename) and is a
deterministic function of the input bytes and the :class:`RunConfig`.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import os
import tempfile
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import __version__
from .association import (build_cross_table, chi_square_independence, load_continent_map,
                          matrix_csvs, pairwise_matrix, render_heatmap)
from .clustering import (cut, cut_to_json, dissimilarity_matrix, largest_gap_height, merges_csv,
                         render_dendrogram, to_newick, upgma)
from .panel import CrisisPanel, YearWindow, crisis_counts, load_panel, slice_window
from .runs import DEFAULT_CONVENTION, run_test_all, runs_csv
from .tetrachoric import DEFAULT_ALPHAS

logger = logging.getLogger(__name__)

OUT_ENV = "CRISIS_ASSOC_OUT"
ALL_FORMATS = ("csv", "json", "svg", "newick")


def canonical_windows(recession_start: int = 2007) -> tuple[YearWindow, ...]:
    """Full sample, Great Depression, Great Recession, pre- and post-liberalization."""
    return (YearWindow(1800, 2014), YearWindow(1929, 2006), YearWindow(recession_start, 2014),
            YearWindow(1800, 1990), YearWindow(1991, 2014))


def fmt_num(x) -> str:
    """Six significant digits; blank for NaN."""
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    x = float(x)
    if math.isnan(x):
        return ""
    return f"{x:.6g}"


def fmt_p(p) -> str:
    """p-value with six significant digits, or ``<0.0001`` below 1e-4."""
    p = float(p)
    if math.isnan(p):
        return ""
    return "<0.0001" if p < 1e-4 else f"{p:.6g}"


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def write_atomic(path: Path, text: str) -> str:
    """Write ``text`` to ``path`` via a temporary file in the same directory; returns its sha256."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = text.encode("utf-8")
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return sha256_bytes(data)


@dataclass
class RunConfig:
    input: "Path | None" = None
    layout: str = "long"
    window: "YearWindow | None" = None
    continent_map: "Path | None" = None
    convention: str = DEFAULT_CONVENTION
    alphas: tuple = DEFAULT_ALPHAS
    out: Path = field(default_factory=lambda: Path(os.environ.get(OUT_ENV, "crisis_out")))
    formats: tuple = ALL_FORMATS
    seed: int = 0
    coefficient: str = "tetrachoric"
    test: str = "wald"
    yates: bool = False
    cutoff: "str | float | None" = None
    linkage: str = "average"
    continuity: bool = False
    n_jobs: int = 1
    recession_start: int = 2007
    windows: "tuple[YearWindow, ...] | None" = None

    def __post_init__(self):
        alphas = tuple(float(a) for a in self.alphas)
        if any(not 0 < a < 1 for a in alphas) or list(alphas) != sorted(alphas, reverse=True):
            raise ValueError("alpha levels must lie in (0, 1) and be sorted descending")
        self.alphas = alphas
        self.out = Path(self.out)
        unknown = set(self.formats) - set(ALL_FORMATS)
        if unknown:
            raise ValueError(f"unknown output formats: {', '.join(sorted(unknown))}")

    def as_dict(self) -> dict:
        """Settings that determine the artifacts; output location and worker count do not."""
        d = {}
        for key, value in self.__dict__.items():
            if key in ("out", "input", "n_jobs"):
                continue
            if isinstance(value, YearWindow):
                value = str(value)
            elif isinstance(value, Path):
                value = value.name
            elif isinstance(value, tuple):
                value = [str(v) if isinstance(v, YearWindow) else v for v in value]
            d[key] = value
        return d


class Outputs:
    """Collects written artifacts (relative path -> sha256) and warnings."""

    def __init__(self, config: RunConfig):
        self.config = config
        self.artifacts: dict[str, str] = {}
        self.warnings: list[str] = []

    def wants(self, fmt: str) -> bool:
        return fmt in self.config.formats

    def write(self, name: str, text: str, fmt: str) -> None:
        if not self.wants(fmt):
            return
        self.artifacts[name] = write_atomic(self.config.out / name, text)

    def warn(self, message: str) -> None:
        logger.warning(message)
        self.warnings.append(message)


def window_tag(window: YearWindow) -> str:
    return f"{window.start}-{window.end}"


def load_config_panel(config: RunConfig) -> CrisisPanel:
    if config.input is None:
        raise ValueError("no input panel given")
    panel = load_panel(config.input, config.layout)
    if config.window is not None:
        panel = slice_window(panel, config.window)
    return panel


def do_ingest(panel: CrisisPanel, out: Outputs) -> None:
    from .panel import write_panel

    fh = io.StringIO()
    write_panel(panel, fh)
    out.write("panel.csv", fh.getvalue(), "csv")


def do_summary(panel: CrisisPanel, out: Outputs) -> None:
    counts = crisis_counts(panel)
    observed = panel.observed()
    fh = io.StringIO()
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["country_code", "name", "crises", "observed_years"])
    for i, c in enumerate(panel.countries):
        w.writerow([c.code, c.name, int(counts.by_country[i]), int(observed[i].sum())])
    out.write("summary_countries.csv", fh.getvalue(), "csv")
    fh = io.StringIO()
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["year", "crises", "observed_countries"])
    for j, year in enumerate(counts.years):
        w.writerow([int(year), int(counts.by_year[j]), int(observed[:, j].sum())])
    out.write("summary_years.csv", fh.getvalue(), "csv")


def do_runs(panel: CrisisPanel, out: Outputs, name: str = "runs.csv") -> dict:
    results = run_test_all(panel, out.config.convention, out.config.continuity)
    out.write(name, runs_csv(results), "csv")
    return results


def do_corr(panel: CrisisPanel, out: Outputs):
    cfg = out.config
    matrix = pairwise_matrix(panel, cfg.coefficient, cfg.alphas, cfg.test, cfg.n_jobs)
    rho_csv, p_csv, stars_csv = matrix_csvs(matrix)
    out.write("corr_rho.csv", rho_csv, "csv")
    out.write("corr_p.csv", p_csv, "csv")
    out.write("corr_stars.csv", stars_csv, "csv")
    span = f"{panel.window.start}-{panel.window.end}"
    out.write("heatmap.svg", render_heatmap(
        matrix, "none", f"Pairwise {cfg.coefficient} correlation, {span}"), "svg")
    out.write("heatmap_stars.svg", render_heatmap(
        matrix, "stars", f"Significance of pairwise {cfg.coefficient} correlation, {span}"), "svg")
    return matrix


def chi2_document(matrix, continents, yates: bool, alpha: float) -> dict:
    """Cross tables and chi-square results for both pair filters."""
    doc = {
        "window": str(matrix.window),
        "coefficient": matrix.coefficient,
        "continent_map": continents.source,
        "continent_map_sha256": continents.sha256,
        "strength_cutoff": 0.7,
        "significance_alpha": alpha,
        "yates": yates,
        "filters": {},
    }
    for filt in ("all", "significant"):
        table = build_cross_table(matrix, continents, filt, alpha)
        entry = {"table": table.as_dict(), "n_pairs": table.total}
        try:
            plain = chi_square_independence(table, yates=False)
            corrected = chi_square_independence(table, yates=True)
        except ValueError as exc:
            entry["error"] = str(exc)
        else:
            chosen = corrected if yates else plain
            entry.update(statistic=chosen.statistic, df=chosen.df, p_value=chosen.p_value,
                         statistic_uncorrected=plain.statistic, p_value_uncorrected=plain.p_value,
                         statistic_yates=corrected.statistic, p_value_yates=corrected.p_value)
        doc["filters"][filt] = entry
    return doc


def do_chi2(matrix, out: Outputs, strict: bool = True) -> "dict | None":
    cfg = out.config
    try:
        continents = load_continent_map(cfg.continent_map)
    except FileNotFoundError:
        if strict:
            raise
        out.warn(f"continent map {cfg.continent_map} not found; chi-square step skipped")
        return None
    missing = continents.missing(matrix.labels)
    if missing:
        msg = f"continent map has no entry for: {', '.join(missing)}"
        if strict:
            raise ValueError(msg)
        out.warn(msg + "; chi-square step skipped")
        return None
    doc = chi2_document(matrix, continents, cfg.yates, max(cfg.alphas))
    if strict and "error" in doc["filters"]["all"]:
        raise ValueError(doc["filters"]["all"]["error"])
    out.write("chi2.json", json.dumps(doc, indent=2, sort_keys=True) + "\n", "json")
    return doc


def resolve_cutoff(tree, cutoff):
    if cutoff is None:
        return None, None
    if cutoff == "auto":
        return largest_gap_height(tree), "largest-gap"
    return float(cutoff), "user"


def do_cluster(panel: CrisisPanel, out: Outputs, tag: str = ""):
    cfg = out.config
    tree = upgma(dissimilarity_matrix(panel), cfg.linkage)
    stem = f"cluster_{tag}" if tag else "cluster"
    height, how = resolve_cutoff(tree, cfg.cutoff)
    out.write(f"{stem}.newick", to_newick(tree) + "\n", "newick")
    out.write(f"{stem}_merges.csv", merges_csv(tree), "csv")
    span = f"{panel.window.start} to {panel.window.end}"
    out.write(f"{stem}.svg", render_dendrogram(
        tree, height, f"{len(tree.leaves)} banking crises series, {span}; Jaccard, average linkage"), "svg")
    if height is not None:
        out.write(f"{stem}_cut.json", cut_to_json(cut(tree, height), how), "json")
    return tree


def write_manifest(out: Outputs, input_path) -> None:
    import numpy
    import scipy

    doc = {
        "tool": "crisis-assoc",
        "version": __version__,
        "numpy": numpy.__version__,
        "scipy": scipy.__version__,
        "input": {"name": Path(input_path).name, "sha256": sha256_bytes(Path(input_path).read_bytes())},
        "config": out.config.as_dict(),
        "artifacts": dict(sorted(out.artifacts.items())),
        "warnings": out.warnings,
    }
    write_atomic(out.config.out / "manifest.json", json.dumps(doc, indent=2, sort_keys=True) + "\n")


def run_report(config: RunConfig) -> Outputs:
    """Every analysis: summary, runs test, correlation, chi-square, and one tree per window."""
    out = Outputs(config)
    panel = load_panel(config.input, config.layout)
    if config.window is not None:
        panel = slice_window(panel, config.window)
    do_summary(panel, out)
    do_runs(panel, out)
    matrix = do_corr(panel, out)
    do_chi2(matrix, out, strict=False)
    windows = config.windows or canonical_windows(config.recession_start)
    for w in windows:
        sub = panel.window.intersect(w)
        if sub is None:
            out.warn(f"window {w} does not overlap the panel; skipped")
            continue
        sliced = slice_window(panel, w)
        if sliced.dropped:
            out.warn(f"window {w}: dropped countries without observations: {', '.join(sliced.dropped)}")
        if len(sliced) < 2:
            out.warn(f"window {w}: fewer than two countries; no tree")
            continue
        do_cluster(sliced, out, window_tag(w))
    write_manifest(out, config.input)
    return out


def with_window(config: RunConfig, window: YearWindow) -> RunConfig:
    return replace(config, window=window)
