"""Wald-Wolfowitz runs test for binary series.

Given ``n1`` ones and ``n2`` zeros, every arrangement is equally likely
under randomness and the number of runs ``R`` has a closed-form
distribution. The exact test uses that distribution directly; the
approximate test uses its normal limit.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

import numpy as np
from scipy.special import gammaln, ndtr

from .panel import BinarySeries, CrisisPanel, series as panel_series

CONVENTIONS = ("doubled", "mass", "one-sided-low")
DEFAULT_CONVENTION = "doubled"

# Relative slack when comparing masses under the "mass" convention.
_MASS_RTOL = 1e-9


class DegenerateSeriesError(ValueError):
    """The series contains only one symbol, so the runs test is undefined."""


@dataclass(frozen=True)
class RunsTestResult:
    r_observed: int
    n_ones: int
    n_zeros: int
    mean_runs: float
    var_runs: float
    z_stat: float
    p_exact: float
    p_approx: float
    convention: str
    flag: str = ""

    @property
    def n(self) -> int:
        return self.n_ones + self.n_zeros

    @property
    def degenerate(self) -> bool:
        return self.flag == "degenerate"


def _as_array(series) -> np.ndarray:
    if isinstance(series, BinarySeries):
        return series.values
    if isinstance(series, str):
        series = list(series)
    return np.asarray(series)


def count_runs(series) -> int:
    """Number of maximal blocks of equal consecutive values."""
    values = _as_array(series)
    if values.size == 0:
        raise ValueError("cannot count runs of an empty series")
    return 1 + int(np.count_nonzero(values[1:] != values[:-1]))


def _symbol_counts(values):
    ones = int(np.count_nonzero(values == 1))
    if ones + np.count_nonzero(values == 0) != values.size:
        raise ValueError("runs test expects a 0/1 series")
    return ones, int(values.size - ones)


def _log_comb(n, k):
    n = np.asarray(n, dtype=float)
    k = np.asarray(k, dtype=float)
    valid = (k >= 0) & (k <= n) & (n >= 0)
    out = np.full(np.broadcast(n, k).shape, -np.inf)
    nv, kv = np.broadcast_arrays(n, k)
    out[valid] = gammaln(nv[valid] + 1) - gammaln(kv[valid] + 1) - gammaln(nv[valid] - kv[valid] + 1)
    return out


def runs_pmf(n_ones: int, n_zeros: int) -> np.ndarray:
    """Null distribution of the number of runs.

    Returns an array ``p`` of length ``n_ones + n_zeros + 1`` with
    ``p[r] = P(R = r)``. Masses come from log-gamma differences and are
    renormalized, so large counts do not overflow.
    """
    n1, n2 = int(n_ones), int(n_zeros)
    if n1 < 1 or n2 < 1:
        raise DegenerateSeriesError("runs distribution needs at least one of each symbol")
    # The distribution is symmetric in the two counts; fix the order so it is bitwise symmetric too.
    n1, n2 = min(n1, n2), max(n1, n2)
    n = n1 + n2
    r = np.arange(n + 1)
    log_mass = np.full(n + 1, -np.inf)

    even = r[(r >= 2) & (r % 2 == 0)]
    k = even // 2
    log_mass[even] = np.log(2.0) + _log_comb(n1 - 1, k - 1) + _log_comb(n2 - 1, k - 1)

    odd = r[(r >= 3) & (r % 2 == 1)]
    k = (odd - 1) // 2
    log_mass[odd] = np.logaddexp(_log_comb(n1 - 1, k) + _log_comb(n2 - 1, k - 1),
                                 _log_comb(n1 - 1, k - 1) + _log_comb(n2 - 1, k))

    log_mass -= _log_comb(n, n1)
    finite = np.isfinite(log_mass)
    shift = log_mass[finite].max()
    mass = np.zeros(n + 1)
    mass[finite] = np.exp(log_mass[finite] - shift)
    return mass / mass.sum()


def runs_pmf_exact(n_ones: int, n_zeros: int) -> dict[int, Fraction]:
    """Rational version of :func:`runs_pmf`, keyed by run count (nonzero masses only)."""
    n1, n2 = int(n_ones), int(n_zeros)
    if n1 < 1 or n2 < 1:
        raise DegenerateSeriesError("runs distribution needs at least one of each symbol")
    total = math.comb(n1 + n2, n1)

    def comb(a, b):
        return math.comb(a, b) if 0 <= b <= a else 0

    out = {}
    for r in range(2, n1 + n2 + 1):
        k, odd = divmod(r, 2)
        if odd:
            ways = comb(n1 - 1, k) * comb(n2 - 1, k - 1) + comb(n1 - 1, k - 1) * comb(n2 - 1, k)
        else:
            ways = 2 * comb(n1 - 1, k - 1) * comb(n2 - 1, k - 1)
        if ways:
            out[r] = Fraction(ways, total)
    return out


def runs_moments(n_ones: int, n_zeros: int) -> tuple[float, float]:
    """Mean and variance of the number of runs under randomness."""
    n1, n2 = float(n_ones), float(n_zeros)
    n = n1 + n2
    mean = 2.0 * n1 * n2 / n + 1.0
    var = 2.0 * n1 * n2 * (2.0 * n1 * n2 - n) / (n * n * (n - 1.0))
    return mean, var


def p_from_pmf(pmf: np.ndarray, r_obs: int, convention: str = DEFAULT_CONVENTION) -> float:
    """Two-sided (or one-sided) p-value of ``r_obs`` under ``pmf``.

    ``doubled``: twice the smaller tail, capped at 1.
    ``mass``: total mass of outcomes no more likely than the observed one.
    ``one-sided-low``: P(R <= r_obs), i.e. evidence of too few runs (clustering).
    """
    if convention == "doubled":
        low = pmf[: r_obs + 1].sum()
        high = pmf[r_obs:].sum()
        return float(min(1.0, 2.0 * min(low, high)))
    if convention == "mass":
        return float(min(1.0, pmf[pmf <= pmf[r_obs] * (1 + _MASS_RTOL)].sum()))
    if convention == "one-sided-low":
        return float(min(1.0, pmf[: r_obs + 1].sum()))
    raise ValueError(f"unknown convention {convention!r}; choose from {CONVENTIONS}")


def exact_p(series, convention: str = DEFAULT_CONVENTION) -> float:
    values = _as_array(series)
    n1, n2 = _symbol_counts(values)
    return p_from_pmf(runs_pmf(n1, n2), count_runs(values), convention)


def approx_p(series, continuity: bool = False) -> tuple[float, float]:
    """Normal-approximation ``(z, p)`` for the observed number of runs.

    With ``continuity=True`` the distance to the mean is shrunk by 1/2
    before standardizing.
    """
    values = _as_array(series)
    n1, n2 = _symbol_counts(values)
    if n1 == 0 or n2 == 0:
        raise DegenerateSeriesError("runs test needs at least one of each symbol")
    return _approx(count_runs(values), n1, n2, continuity)[2:]


def _approx(r_obs, n1, n2, continuity):
    mean, var = runs_moments(n1, n2)
    if var <= 0:
        raise DegenerateSeriesError(f"non-positive runs variance for n1={n1}, n2={n2}")
    diff = r_obs - mean
    if continuity:
        diff = math.copysign(max(abs(diff) - 0.5, 0.0), diff)
    z = diff / math.sqrt(var)
    p = float(2.0 * ndtr(-abs(z)))
    return mean, var, z, p


def runs_test(series, convention: str = DEFAULT_CONVENTION, continuity: bool = False) -> RunsTestResult:
    """Exact and approximate runs test of one series.

    A series with a single symbol yields a result flagged ``"degenerate"``
    whose moments and p-values are NaN.
    """
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}; choose from {CONVENTIONS}")
    values = _as_array(series)
    r_obs = count_runs(values)
    n1, n2 = _symbol_counts(values)
    if n1 == 0 or n2 == 0:
        nan = float("nan")
        return RunsTestResult(r_obs, n1, n2, nan, nan, nan, nan, nan, convention, "degenerate")
    try:
        mean, var, z, p_approx = _approx(r_obs, n1, n2, continuity)
    except DegenerateSeriesError:
        # n = 2 with one of each symbol: variance is 0 but the exact test is fine.
        mean, var = runs_moments(n1, n2)
        z, p_approx = float("nan"), float("nan")
    p_exact = p_from_pmf(runs_pmf(n1, n2), r_obs, convention)
    return RunsTestResult(r_obs, n1, n2, mean, var, z, p_exact, p_approx, convention)


def run_test_all(panel: CrisisPanel, convention: str = DEFAULT_CONVENTION,
                 continuity: bool = False) -> dict[str, RunsTestResult]:
    """One runs test per country, keyed by code in panel order."""
    return {code: runs_test(panel_series(panel, code), convention, continuity)
            for code in panel.codes}


RUNS_CSV_COLUMNS = ["country_code", "n", "n_ones", "runs", "mean", "variance", "z",
                    "p_exact", "p_approx", "flag", "convention"]


def runs_csv(results: Mapping[str, RunsTestResult]) -> str:
    """Batch results as CSV text with columns :data:`RUNS_CSV_COLUMNS`."""
    from .report import fmt_num, fmt_p

    fh = io.StringIO()
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(RUNS_CSV_COLUMNS)
    for code, res in results.items():
        writer.writerow([code, res.n, res.n_ones, res.r_observed, fmt_num(res.mean_runs),
                         fmt_num(res.var_runs), fmt_num(res.z_stat), fmt_p(res.p_exact),
                         fmt_p(res.p_approx), res.flag, res.convention])
    return fh.getvalue()
