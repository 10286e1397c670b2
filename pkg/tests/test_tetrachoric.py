import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from crisis_assoc.panel import BinarySeries, CountryLabel
from crisis_assoc.synth import grid_tetrachoric
from crisis_assoc.tetrachoric import (ContingencyTable, DegenerateTableError, classify_strength,
                                      cross_tabulate, estimate, estimate_phi, estimate_tetrachoric,
                                      significance_stars)


def make(values, code="AAA", start=1900):
    return BinarySeries(CountryLabel(code), np.arange(start, start + len(values)), values)


def test_cross_tabulate_self_and_complement():
    a = make([1, 0, 1, 1, 0])
    t = cross_tabulate(a, a)
    assert (t.n10, t.n01) == (0, 0)
    t = cross_tabulate(a, make([0, 1, 0, 0, 1], "BBB"))
    assert (t.n11, t.n00) == (0, 0)


def test_cross_tabulate_uses_overlap_only():
    a = BinarySeries(CountryLabel("AAA"), [1900, 1901, 1902], [1, 1, 0])
    b = BinarySeries(CountryLabel("BBB"), [1901, 1902, 1903], [1, 1, 1])
    assert cross_tabulate(a, b).cells == (1, 0, 1, 0)
    c = BinarySeries(CountryLabel("CCC"), [1950], [1])
    with pytest.raises(ValueError, match="share no observed years"):
        cross_tabulate(a, c)


def test_half_margin_closed_form():
    res = estimate_tetrachoric(ContingencyTable(400, 200, 200, 400))
    assert res.rho == pytest.approx(math.sin(2 * math.pi * (1 / 3 - 1 / 4)), abs=1e-6)
    assert res.rho == pytest.approx(0.5, abs=1e-6)
    assert res.z1 == 0 and res.z2 == 0 and not res.corrected


@pytest.mark.parametrize("n", [200, 400, 1000])
def test_perfect_agreement(n):
    res = estimate_tetrachoric(ContingencyTable(n // 2, 0, 0, n - n // 2))
    assert res.corrected and res.rho >= 0.99 and res.se > 0


def test_grid_oracle_example():
    table = ContingencyTable(50, 25, 25, 100)
    assert estimate_tetrachoric(table).rho == pytest.approx(grid_tetrachoric(table, 1e-4), abs=2e-4)


def test_zero_cell_correction_flag():
    res = estimate_tetrachoric(ContingencyTable(5, 0, 3, 20))
    assert res.corrected and -1 < res.rho < 1


@pytest.mark.parametrize("cells", [(0, 0, 3, 5), (3, 5, 0, 0), (4, 0, 6, 0), (0, 0, 0, 9)])
def test_degenerate_margin(cells):
    with pytest.raises(DegenerateTableError):
        estimate_tetrachoric(ContingencyTable(*cells))


def test_independent_table_gives_zero():
    res = estimate_tetrachoric(ContingencyTable(10, 30, 20, 60))
    assert res.rho == 0.0 and res.p_value == 1.0 and res.stars == ""


tables = st.tuples(*[st.integers(1, 300)] * 4).map(lambda c: ContingencyTable(*c))


@settings(max_examples=60, deadline=None)
@given(tables)
def test_transpose_and_relabel_symmetry(table):
    rho = estimate_tetrachoric(table).rho
    assert estimate_tetrachoric(table.transposed()).rho == rho
    assert estimate_tetrachoric(table.flip_first()).rho == -rho
    assert estimate_tetrachoric(table.flip_both()).rho == rho


@settings(max_examples=60, deadline=None)
@given(tables)
def test_stars_consistent_with_p(table):
    res = estimate_tetrachoric(table)
    assert -1 <= res.rho <= 1 and res.se >= 0
    assert (res.stars == "***") == (res.p_value <= 0.01)
    assert (len(res.stars) >= 2) == (res.p_value <= 0.05)
    assert (len(res.stars) >= 1) == (res.p_value <= 0.10)


def test_stars_cut_points():
    assert significance_stars(0.01) == "***"
    assert significance_stars(0.0100001) == "**"
    assert significance_stars(0.05) == "**"
    assert significance_stars(0.1) == "*"
    assert significance_stars(0.2) == ""
    assert significance_stars(float("nan")) == ""


@pytest.mark.parametrize("rho,label", [(0.69, "moderate"), (-0.71, "strong"), (0.7, "moderate"),
                                       (-0.7, "moderate"), (0.0, "moderate"), (0.95, "strong")])
def test_classify_strength(rho, label):
    assert classify_strength(rho) == label


def test_likelihood_ratio_test():
    table = ContingencyTable(50, 25, 25, 100)
    wald = estimate_tetrachoric(table)
    lr = estimate_tetrachoric(table, test="lr")
    assert lr.rho == wald.rho
    assert lr.test == "lr" and 0 < lr.p_value < 1e-3


def test_phi_coefficient():
    table = ContingencyTable(50, 25, 25, 100)
    res = estimate_phi(table)
    a, b, c, d = 50, 25, 25, 100
    assert res.rho == pytest.approx((a * d - b * c) / math.sqrt(75 * 125 * 75 * 125))
    assert estimate(table, "phi").rho == res.rho
    with pytest.raises(ValueError):
        estimate(table, "kendall")


def test_threshold_orientation():
    # rare first series: threshold high, so X > z1 happens 10% of the time
    res = estimate_tetrachoric(ContingencyTable(8, 2, 12, 78))
    assert res.z1 == pytest.approx(1.2815515655446004)
    assert res.rho > 0
