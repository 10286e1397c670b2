"""Tetrachoric correlation of two binary series.

The two indicators are modelled as thresholded components of a latent
standard bivariate normal: ``a = 1`` exactly when ``X > z1`` and ``b = 1``
exactly when ``Y > z2``. With the thresholds fixed by the margins, the
correlation is the value at which the upper-orthant probability equals the
observed share of joint 1-1 years.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq
from scipy.special import chdtrc

from .normal import bvn_pdf, bvn_upper, std_normal_cdf, std_normal_quantile
from .panel import BinarySeries

RHO_BOUND = 1.0 - 1e-12
RHO_XTOL = 1e-10
DEFAULT_ALPHAS = (0.10, 0.05, 0.01)
STRENGTH_CUTOFF = 0.7


class DegenerateTableError(ValueError):
    """A margin is 0 or n: one series is constant over the overlap."""


@dataclass(frozen=True)
class ContingencyTable:
    """Joint counts; the first index is the first series' value."""

    n11: float
    n10: float
    n01: float
    n00: float

    def __post_init__(self):
        if min(self.cells) < 0:
            raise ValueError(f"negative count in {self.cells}")
        if self.n <= 0:
            raise ValueError("contingency table is empty")

    @property
    def cells(self) -> tuple:
        return (self.n11, self.n10, self.n01, self.n00)

    @property
    def n(self):
        return self.n11 + self.n10 + self.n01 + self.n00

    @property
    def p_a(self) -> float:
        """Share of observations with the first series equal to 1."""
        return (self.n11 + self.n10) / self.n

    @property
    def p_b(self) -> float:
        return (self.n11 + self.n01) / self.n

    def is_degenerate(self) -> bool:
        row, col = self.n11 + self.n10, self.n11 + self.n01
        return row in (0, self.n) or col in (0, self.n)

    def corrected(self) -> "ContingencyTable":
        """Add 1/2 to every cell when any cell is empty."""
        if min(self.cells) > 0:
            return self
        return ContingencyTable(*(c + 0.5 for c in self.cells))

    def transposed(self) -> "ContingencyTable":
        return ContingencyTable(self.n11, self.n01, self.n10, self.n00)

    def flip_first(self) -> "ContingencyTable":
        """Relabel the first series 0 <-> 1."""
        return ContingencyTable(self.n01, self.n00, self.n11, self.n10)

    def flip_both(self) -> "ContingencyTable":
        return ContingencyTable(self.n00, self.n01, self.n10, self.n11)


@dataclass(frozen=True)
class TetrachoricResult:
    rho: float
    se: float
    z1: float
    z2: float
    p_value: float
    stars: str
    corrected: bool
    n: float
    method: str = "tetrachoric"
    test: str = "wald"


def cross_tabulate(a: BinarySeries, b: BinarySeries) -> ContingencyTable:
    """Joint counts over the years observed in both series."""
    common, ia, ib = np.intersect1d(a.years, b.years, assume_unique=True, return_indices=True)
    if common.size == 0:
        raise ValueError(f"{a.label.code} and {b.label.code} share no observed years")
    return table_from_values(a.values[ia], b.values[ib])


def table_from_values(x: np.ndarray, y: np.ndarray) -> ContingencyTable:
    x = np.asarray(x, dtype=bool)
    y = np.asarray(y, dtype=bool)
    n11 = int(np.count_nonzero(x & y))
    n10 = int(np.count_nonzero(x & ~y))
    n01 = int(np.count_nonzero(~x & y))
    return ContingencyTable(n11, n10, n01, int(x.size) - n11 - n10 - n01)


def significance_stars(p_value: float, alphas=DEFAULT_ALPHAS) -> str:
    """``"*"`` per alpha level met, e.g. ``"***"`` for p <= 0.01 with the default levels."""
    if p_value is None or math.isnan(p_value):
        return ""
    return "*" * sum(p_value <= a for a in sorted(alphas, reverse=True))


def classify_strength(rho: float) -> str:
    return "moderate" if abs(rho) <= STRENGTH_CUTOFF else "strong"


def thresholds(table: ContingencyTable) -> tuple[float, float]:
    """Latent thresholds such that the indicator is 1 exactly above them."""
    return std_normal_quantile(1.0 - table.p_a), std_normal_quantile(1.0 - table.p_b)


def _solve_rho(table: ContingencyTable) -> float:
    z1, z2 = thresholds(table)
    target = table.n11 / table.n
    return brentq(lambda r: bvn_upper(z1, z2, r) - target,
                  -RHO_BOUND, RHO_BOUND, xtol=RHO_XTOL, rtol=4 * np.finfo(float).eps)


def _canonical(table: ContingencyTable) -> tuple[ContingencyTable, float]:
    """Representative of the table's symmetry class plus the sign to apply.

    Transposing and flipping both series leave rho unchanged; flipping one
    series negates it. Solving on a fixed representative makes those
    identities hold bit-for-bit.
    """
    sign = 1.0
    if table.n11 * table.n00 < table.n10 * table.n01:
        table, sign = table.flip_first(), -1.0
    candidates = [table, table.transposed(), table.flip_both(), table.flip_both().transposed()]
    return max(candidates, key=lambda t: t.cells), sign


def estimate_tetrachoric(table: ContingencyTable, alphas=DEFAULT_ALPHAS,
                         test: str = "wald") -> TetrachoricResult:
    """Estimate rho, its standard error, and a two-sided significance test.

    Tables with an empty cell get 1/2 added to every cell first. A table
    whose margins show a constant series raises
    :class:`DegenerateTableError`. ``test`` is ``"wald"`` (delta-method
    standard error) or ``"lr"`` (likelihood ratio against rho = 0 with the
    thresholds held fixed).
    """
    if table.is_degenerate():
        raise DegenerateTableError(f"constant series in table {table.cells}")
    fitted = table.corrected()
    is_corrected = fitted is not table
    z1, z2 = thresholds(fitted)

    canon, sign = _canonical(fitted)
    if canon.n11 * canon.n00 == canon.n10 * canon.n01:
        rho = 0.0
    else:
        rho = sign * _solve_rho(canon)

    n = fitted.n
    p11 = fitted.n11 / n
    se = math.sqrt(p11 * (1.0 - p11) / n) / bvn_pdf(z1, z2, rho)
    if test == "wald":
        p_value = 2.0 * std_normal_cdf(-abs(rho) / se)
    elif test == "lr":
        p_value = _lr_p_value(fitted, z1, z2, rho)
    else:
        raise ValueError(f"unknown test {test!r}")
    return TetrachoricResult(rho, se, z1, z2, p_value, significance_stars(p_value, alphas),
                             is_corrected, n, "tetrachoric", test)


def cell_probabilities(z1: float, z2: float, rho: float) -> tuple[float, float, float, float]:
    """Model probabilities of the (1,1), (1,0), (0,1), (0,0) cells."""
    pa = 1.0 - std_normal_cdf(z1)
    pb = 1.0 - std_normal_cdf(z2)
    p11 = bvn_upper(z1, z2, rho)
    p10 = pa - p11
    p01 = pb - p11
    return p11, p10, p01, 1.0 - pa - pb + p11


def _loglik(table, probs):
    return sum(c * math.log(max(p, 1e-300)) for c, p in zip(table.cells, probs))


def _lr_p_value(table, z1, z2, rho):
    stat = 2.0 * (_loglik(table, cell_probabilities(z1, z2, rho))
                  - _loglik(table, cell_probabilities(z1, z2, 0.0)))
    return float(chdtrc(1, max(stat, 0.0)))


def estimate_phi(table: ContingencyTable, alphas=DEFAULT_ALPHAS) -> TetrachoricResult:
    """Phi coefficient (Pearson correlation of the two indicators).

    Significance uses n * phi^2 ~ chi-square(1); ``se`` is the null
    standard error 1/sqrt(n). No zero-cell correction is applied.
    """
    if table.is_degenerate():
        raise DegenerateTableError(f"constant series in table {table.cells}")
    a, b, c, d = table.cells
    n = table.n
    phi = (a * d - b * c) / math.sqrt((a + b) * (c + d) * (a + c) * (b + d))
    phi = max(-1.0, min(1.0, phi))
    p_value = float(chdtrc(1, n * phi * phi))
    z1, z2 = (std_normal_quantile(1.0 - table.p_a), std_normal_quantile(1.0 - table.p_b))
    return TetrachoricResult(phi, 1.0 / math.sqrt(n), z1, z2, p_value,
                             significance_stars(p_value, alphas), False, n, "phi", "chi2")


def estimate(table: ContingencyTable, coefficient: str = "tetrachoric",
             alphas=DEFAULT_ALPHAS, test: str = "wald") -> TetrachoricResult:
    if coefficient == "tetrachoric":
        return estimate_tetrachoric(table, alphas, test)
    if coefficient == "phi":
        return estimate_phi(table, alphas)
    raise ValueError(f"unknown coefficient {coefficient!r}")


def with_stars(result: TetrachoricResult, alphas) -> TetrachoricResult:
    return replace(result, stars=significance_stars(result.p_value, alphas))
