"""Loading, validating, windowing and summarizing binary crisis panels.

A panel is a rectangular country x year grid whose cells are 1 (crisis),
0 (no crisis) or missing. Countries are kept in lexicographic order of
their 3-letter code so that every downstream matrix has a deterministic
row/column order.
"""

from __future__ import annotations

import csv
import io
import logging
import os
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import IO, Iterable, Sequence, Union

import numpy as np

logger = logging.getLogger(__name__)

MISSING = -1
_CODE_RE = re.compile(r"^[A-Z]{3}$")

PathOrStream = Union[str, os.PathLike, IO[str]]


class PanelError(ValueError):
    """Raised when a panel file or panel operation is invalid."""


@dataclass(frozen=True, order=True)
class CountryLabel:
    code: str
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if not _CODE_RE.match(self.code):
            raise PanelError(f"invalid country code {self.code!r}: expected 3 letters A-Z")
        if not self.name:
            object.__setattr__(self, "name", known_names().get(self.code, self.code))

    def __str__(self):
        return self.code


@dataclass(frozen=True)
class YearWindow:
    start: int
    end: int

    def __post_init__(self):
        if self.start > self.end:
            raise PanelError(f"window start {self.start} is after end {self.end}")

    @classmethod
    def parse(cls, text: str) -> "YearWindow":
        """Parse ``"START:END"`` (inclusive on both ends)."""
        try:
            start, end = text.split(":")
            return cls(int(start), int(end))
        except ValueError as exc:
            raise PanelError(f"bad window {text!r}: expected START:END") from exc

    @property
    def years(self) -> np.ndarray:
        return np.arange(self.start, self.end + 1)

    def __len__(self):
        return self.end - self.start + 1

    def intersect(self, other: "YearWindow") -> "YearWindow | None":
        start, end = max(self.start, other.start), min(self.end, other.end)
        return YearWindow(start, end) if start <= end else None

    def __str__(self):
        return f"{self.start}:{self.end}"


@dataclass(frozen=True)
class BinarySeries:
    label: CountryLabel
    years: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        years = np.asarray(self.years, dtype=np.int64)
        values = np.asarray(self.values, dtype=np.int8)
        if years.shape != values.shape or years.ndim != 1:
            raise PanelError("years and values must be 1-d arrays of equal length")
        if years.size > 1 and np.any(np.diff(years) <= 0):
            raise PanelError("years must be strictly increasing")
        if np.any((values != 0) & (values != 1)):
            raise PanelError("series values must be 0 or 1")
        object.__setattr__(self, "years", years)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_values(cls, values: Iterable[int], code: str = "XXX", start: int = 0) -> "BinarySeries":
        """Build a series with consecutive years starting at ``start``."""
        values = np.asarray(list(values), dtype=np.int8)
        return cls(CountryLabel(code), np.arange(start, start + values.size), values)

    def __len__(self):
        return int(self.values.size)


class CrisisPanel:
    """Immutable country x year grid of crisis indicators.

    ``cells`` holds 0, 1 or :data:`MISSING`; rows follow ``countries``
    (sorted by code) and columns follow ``window.years``.
    """

    def __init__(self, countries: Sequence[CountryLabel], window: YearWindow,
                 cells: np.ndarray, dropped: Sequence[str] = ()):
        cells = np.array(cells, dtype=np.int8, copy=True)
        countries = tuple(countries)
        if cells.shape != (len(countries), len(window)):
            raise PanelError(
                f"cells shape {cells.shape} does not match "
                f"{len(countries)} countries x {len(window)} years")
        codes = [c.code for c in countries]
        if len(set(codes)) != len(codes):
            raise PanelError("duplicate country codes in panel")
        if np.any((cells != 0) & (cells != 1) & (cells != MISSING)):
            raise PanelError("cells must be 0, 1 or missing")
        empty = [c for c, row in zip(codes, cells) if np.all(row == MISSING)]
        if empty:
            raise PanelError(f"countries with no observed cells: {', '.join(empty)}")
        order = np.argsort(codes, kind="stable")
        self.countries = tuple(countries[i] for i in order)
        self.cells = cells[order]
        self.cells.setflags(write=False)
        self.window = window
        self.dropped = tuple(dropped)

    @property
    def codes(self) -> tuple[str, ...]:
        return tuple(c.code for c in self.countries)

    @property
    def years(self) -> np.ndarray:
        return self.window.years

    def __len__(self):
        return len(self.countries)

    def __eq__(self, other):
        if not isinstance(other, CrisisPanel):
            return NotImplemented
        return (self.codes == other.codes and self.window == other.window
                and np.array_equal(self.cells, other.cells))

    def __repr__(self):
        return f"CrisisPanel({len(self)} countries, window={self.window})"

    def index(self, country: "str | CountryLabel") -> int:
        code = country.code if isinstance(country, CountryLabel) else country
        try:
            return self.codes.index(code)
        except ValueError:
            raise KeyError(f"unknown country code {code!r}") from None

    def observed(self) -> np.ndarray:
        return self.cells != MISSING


def known_names() -> dict[str, str]:
    """Display names of the 66 countries in the reference dataset."""
    global _NAMES
    if _NAMES is None:
        text = resources.files("crisis_assoc").joinpath("data/countries.csv").read_text("utf-8")
        _NAMES = {r["country_code"]: r["name"] for r in csv.DictReader(io.StringIO(text))}
    return _NAMES


_NAMES: "dict[str, str] | None" = None


def _open_text(source: PathOrStream):
    if isinstance(source, (str, os.PathLike)):
        return open(source, newline="", encoding="utf-8")
    return _NoClose(source)


class _NoClose:
    def __init__(self, stream):
        self.stream = stream

    def __enter__(self):
        return self.stream

    def __exit__(self, *exc):
        return False


def _parse_cell(text: str):
    text = text.strip()
    if text == "":
        return MISSING
    if text in ("0", "1"):
        return int(text)
    try:
        value = float(text)
    except ValueError:
        return None
    return int(value) if value in (0.0, 1.0) else None


def load_panel(source: PathOrStream, layout: str = "long") -> CrisisPanel:
    """Read a crisis panel from CSV.

    ``layout="long"`` expects the header ``country_code,year,crisis``;
    ``layout="wide"`` expects ``country_code,<year>,<year>,...`` with one
    row per country. Empty cells are missing observations. All problems
    found in the file are reported together, with line numbers.
    """
    if layout not in ("long", "wide"):
        raise PanelError(f"unknown layout {layout!r}")
    with _open_text(source) as fh:
        rows = list(csv.reader(fh))
    rows = [(lineno, row) for lineno, row in enumerate(rows, start=1) if any(c.strip() for c in row)]
    if not rows:
        raise PanelError("empty file")
    header = [h.strip() for h in rows[0][1]]
    body = rows[1:]
    if layout == "long":
        data, errors = _read_long(header, body)
    else:
        data, errors = _read_wide(header, body)
    if errors:
        raise PanelError("invalid panel file:\n  " + "\n  ".join(errors))
    if not data:
        raise PanelError("file has a header but no data rows")

    years = [y for (_, y) in data]
    window = YearWindow(min(years), max(years))
    codes = sorted({c for (c, _) in data})
    cells = np.full((len(codes), len(window)), MISSING, dtype=np.int8)
    row_of = {c: i for i, c in enumerate(codes)}
    for (code, year), value in data.items():
        cells[row_of[code], year - window.start] = value
    return CrisisPanel([CountryLabel(c) for c in codes], window, cells)


def _check_code(code, lineno, errors):
    if not _CODE_RE.match(code):
        errors.append(f"line {lineno}: invalid country code {code!r}")
        return False
    return True


def _read_long(header, body):
    if header[:3] != ["country_code", "year", "crisis"]:
        raise PanelError(f"long layout needs header country_code,year,crisis; got {','.join(header)}")
    data, errors = {}, []
    for lineno, row in body:
        if len(row) < 3:
            errors.append(f"line {lineno}: expected 3 fields, got {len(row)}")
            continue
        code, year_text, value_text = (c.strip() for c in row[:3])
        ok = _check_code(code, lineno, errors)
        try:
            year = int(year_text)
        except ValueError:
            errors.append(f"line {lineno}: invalid year {year_text!r}")
            continue
        value = _parse_cell(value_text)
        if value is None:
            errors.append(f"line {lineno}: non-binary crisis value {value_text!r}")
            continue
        if not ok:
            continue
        if (code, year) in data:
            errors.append(f"line {lineno}: duplicate entry for ({code}, {year})")
            continue
        data[(code, year)] = value
    return _drop_unobserved(data), errors


def _read_wide(header, body):
    if not header or header[0] != "country_code":
        raise PanelError("wide layout needs a header starting with country_code")
    try:
        years = [int(h) for h in header[1:]]
    except ValueError as exc:
        raise PanelError(f"wide header has a non-integer year: {exc}") from exc
    if not years:
        raise PanelError("wide header lists no years")
    if any(b != a + 1 for a, b in zip(years, years[1:])):
        raise PanelError("wide header years must be consecutive and ascending")
    data, errors, seen = {}, [], set()
    for lineno, row in body:
        if len(row) != len(header):
            errors.append(f"line {lineno}: expected {len(header)} fields, got {len(row)} "
                          "(inconsistent year coverage)")
            continue
        code = row[0].strip()
        if not _check_code(code, lineno, errors):
            continue
        if code in seen:
            errors.append(f"line {lineno}: duplicate row for {code}")
            continue
        seen.add(code)
        for year, text in zip(years, row[1:]):
            value = _parse_cell(text)
            if value is None:
                errors.append(f"line {lineno}: non-binary crisis value {text.strip()!r} ({code}, {year})")
            else:
                data[(code, year)] = value
    return _drop_unobserved(data), errors


def _drop_unobserved(data):
    # Years are taken from every row, but a country needs at least one observed cell.
    observed = {c for (c, _), v in data.items() if v != MISSING}
    unobserved = {c for (c, _) in data} - observed
    if unobserved:
        raise PanelError(f"countries with no observed cells: {', '.join(sorted(unobserved))}")
    return data


def write_panel(panel: CrisisPanel, dest: PathOrStream) -> None:
    """Write ``panel`` in long layout; missing cells become empty fields."""
    with (open(dest, "w", newline="", encoding="utf-8")
          if isinstance(dest, (str, os.PathLike)) else _NoClose(dest)) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["country_code", "year", "crisis"])
        for code, row in zip(panel.codes, panel.cells):
            for year, value in zip(panel.years, row):
                writer.writerow([code, int(year), "" if value == MISSING else int(value)])


def slice_window(panel: CrisisPanel, window: YearWindow) -> CrisisPanel:
    """Restrict ``panel`` to the years in ``window``.

    Countries left without any observed cell are dropped; their codes are
    available on the result's ``dropped`` attribute.
    """
    common = panel.window.intersect(window)
    if common is None:
        raise PanelError(f"window {window} does not overlap panel window {panel.window}")
    lo = common.start - panel.window.start
    cells = panel.cells[:, lo:lo + len(common)]
    keep = np.any(cells != MISSING, axis=1)
    dropped = [c for c, k in zip(panel.codes, keep) if not k]
    if dropped:
        logger.info("window %s drops countries with no observations: %s", common, ", ".join(dropped))
    countries = [c for c, k in zip(panel.countries, keep) if k]
    return CrisisPanel(countries, common, cells[keep], dropped=dropped)


@dataclass(frozen=True)
class CrisisCounts:
    codes: tuple[str, ...]
    by_country: np.ndarray
    years: np.ndarray
    by_year: np.ndarray

    def country(self, code: str) -> int:
        return int(self.by_country[self.codes.index(code)])

    def year(self, year: int) -> int:
        return int(self.by_year[int(np.searchsorted(self.years, year))])


def crisis_counts(panel: CrisisPanel) -> CrisisCounts:
    ones = panel.cells == 1
    return CrisisCounts(panel.codes, ones.sum(axis=1), panel.years, ones.sum(axis=0))


def series(panel: CrisisPanel, country: "str | CountryLabel") -> BinarySeries:
    """The observed years of one country as a :class:`BinarySeries`."""
    i = panel.index(country)
    row = panel.cells[i]
    keep = row != MISSING
    return BinarySeries(panel.countries[i], panel.years[keep], row[keep])


def empty_panel(window: YearWindow) -> CrisisPanel:
    return CrisisPanel([], window, np.zeros((0, len(window)), dtype=np.int8))
