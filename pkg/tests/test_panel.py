import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from crisis_assoc.panel import (MISSING, BinarySeries, CountryLabel, CrisisPanel, PanelError,
                                YearWindow, crisis_counts, empty_panel, load_panel, series,
                                slice_window, write_panel)


def long_csv(rows):
    return io.StringIO("country_code,year,crisis\n" + "".join(f"{c},{y},{v}\n" for c, y, v in rows))


@pytest.fixture
def small_panel():
    rows = [("USA", y, int(y in (1930, 1931, 2008))) for y in range(1928, 2010)]
    rows += [("SGP", y, int(y == 1982)) for y in range(1928, 2010)]
    rows += [("GBR", y, "" if y < 1950 else int(y in (1974, 2008))) for y in range(1928, 2010)]
    return load_panel(long_csv(rows))


def test_single_row():
    panel = load_panel(long_csv([("SGP", 1982, 1)]))
    assert panel.codes == ("SGP",)
    assert panel.window == YearWindow(1982, 1982)
    assert int(panel.observed().sum()) == 1


def test_non_binary_value_names_line_and_value():
    with pytest.raises(PanelError, match=r"line 2: non-binary crisis value '2'"):
        load_panel(long_csv([("SGP", 1982, 2)]))


def test_all_errors_reported_together():
    src = long_csv([("SGP", 1982, 1), ("SGP", 1982, 0), ("USA", 1990, "x"), ("us", 1991, 1)])
    with pytest.raises(PanelError) as err:
        load_panel(src)
    text = str(err.value)
    assert "line 3: duplicate entry for (SGP, 1982)" in text
    assert "line 4: non-binary crisis value 'x'" in text
    assert "line 5: invalid country code 'us'" in text


@pytest.mark.parametrize("text", ["", "\n\n"])
def test_empty_file(text):
    with pytest.raises(PanelError, match="empty file"):
        load_panel(io.StringIO(text))


def test_whitespace_trimmed_and_missing_cells():
    panel = load_panel(io.StringIO("country_code,year,crisis\n USA , 1900 , 1 \nUSA,1901,\nUSA,1902,0\n"))
    assert panel.cells.tolist() == [[1, MISSING, 0]]


def test_wide_layout():
    text = "country_code,1990,1991,1992\nUSA,0,1,1\nFRA,0,,0\n"
    panel = load_panel(io.StringIO(text), layout="wide")
    assert panel.codes == ("FRA", "USA")  # lexicographic
    assert panel.cells.tolist() == [[0, MISSING, 0], [0, 1, 1]]


def test_wide_inconsistent_coverage():
    with pytest.raises(PanelError, match="inconsistent year coverage"):
        load_panel(io.StringIO("country_code,1990,1991\nUSA,0,1,1\n"), layout="wide")


def test_country_without_observations_rejected():
    with pytest.raises(PanelError, match="no observed cells: FRA"):
        load_panel(long_csv([("USA", 1990, 1), ("FRA", 1990, "")]))


def test_panel_is_immutable(small_panel):
    with pytest.raises(ValueError):
        small_panel.cells[0, 0] = 1


def test_round_trip(small_panel):
    buf = io.StringIO()
    write_panel(small_panel, buf)
    buf.seek(0)
    assert load_panel(buf) == small_panel


def test_slice_identity(small_panel):
    assert slice_window(small_panel, small_panel.window) == small_panel


def test_slice_drops_unobserved(small_panel):
    sliced = slice_window(small_panel, YearWindow(1929, 1940))
    assert sliced.codes == ("SGP", "USA")
    assert sliced.dropped == ("GBR",)
    assert sliced.window == YearWindow(1929, 1940)


def test_slice_clips_to_panel_window(small_panel):
    sliced = slice_window(small_panel, YearWindow(2007, 2014))
    assert sliced.window == YearWindow(2007, 2009)


def test_disjoint_window(small_panel):
    with pytest.raises(PanelError, match="does not overlap"):
        slice_window(small_panel, YearWindow(1700, 1750))


def test_window_validation():
    with pytest.raises(PanelError):
        YearWindow(2000, 1999)
    assert YearWindow.parse("1929:2006") == YearWindow(1929, 2006)


def test_counts(small_panel):
    counts = crisis_counts(small_panel)
    assert counts.country("USA") == 3
    assert counts.country("SGP") == 1
    assert counts.country("GBR") == 2
    assert counts.year(2008) == 2
    assert counts.by_country.sum() == counts.by_year.sum() == int((small_panel.cells == 1).sum())


def test_all_zero_counts():
    panel = load_panel(long_csv([("USA", y, 0) for y in range(1990, 1995)]))
    counts = crisis_counts(panel)
    assert counts.by_country.tolist() == [0]
    assert counts.by_year.tolist() == [0] * 5


def test_series(small_panel):
    sgp = series(small_panel, "SGP")
    assert sgp.values.sum() == 1 and sgp.years[np.argmax(sgp.values)] == 1982
    assert len(series(small_panel, "USA")) == len(small_panel.window)
    gbr = series(small_panel, CountryLabel("GBR"))
    assert gbr.years[0] == 1950 and np.all(np.diff(gbr.years) > 0)
    with pytest.raises(KeyError, match="XXX"):
        series(small_panel, "XXX")


def test_country_label_names():
    assert CountryLabel("GBR").name == "United Kingdom"
    assert CountryLabel("ZZZ").name == "ZZZ"
    with pytest.raises(PanelError):
        CountryLabel("GB")


def test_binary_series_validation():
    with pytest.raises(PanelError):
        BinarySeries(CountryLabel("USA"), [1, 1], [0, 1])
    with pytest.raises(PanelError):
        BinarySeries.from_values([0, 2])


def test_empty_panel():
    panel = empty_panel(YearWindow(1990, 1999))
    assert len(panel) == 0
    assert crisis_counts(panel).by_year.tolist() == [0] * 10


@st.composite
def panels(draw):
    k = draw(st.integers(1, 4))
    start = draw(st.integers(1900, 1910))
    length = draw(st.integers(1, 25))
    cells = np.array(draw(st.lists(st.lists(st.sampled_from([0, 1, MISSING]), min_size=length, max_size=length),
                                   min_size=k, max_size=k)), dtype=np.int8)
    cells[:, 0] = np.where(cells[:, 0] == MISSING, 0, cells[:, 0])
    codes = ["AAA", "BBB", "CCC", "DDD"][:k]
    return CrisisPanel([CountryLabel(c) for c in codes], YearWindow(start, start + length - 1), cells)


@settings(max_examples=60, deadline=None)
@given(panels(), st.integers(1895, 1940), st.integers(0, 20), st.integers(1895, 1940), st.integers(0, 20))
def test_slice_composition(panel, s1, l1, s2, l2):
    w1, w2 = YearWindow(s1, s1 + l1), YearWindow(s2, s2 + l2)
    both = w1.intersect(w2)
    try:
        twice = slice_window(slice_window(panel, w1), w2)
    except PanelError:
        twice = None
    try:
        once = slice_window(panel, both) if both else None
    except PanelError:
        once = None
    assert twice == once


@settings(max_examples=40, deadline=None)
@given(panels())
def test_round_trip_property(panel):
    buf = io.StringIO()
    write_panel(panel, buf)
    buf.seek(0)
    assert load_panel(buf) == panel


@settings(max_examples=40, deadline=None)
@given(panels())
def test_count_totals_agree(panel):
    counts = crisis_counts(panel)
    assert counts.by_country.sum() == counts.by_year.sum() == int((panel.cells == 1).sum())
