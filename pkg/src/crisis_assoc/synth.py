"""Seeded synthetic panels and brute-force reference computations.

Random numbers come from the PCG64 generator (PCG-XSL-RR 128/64, as
shipped by numpy) read through ``random_raw``; uniforms take the top 53
bits of each 64-bit word and standard normals use the Box-Muller
transform. The stream is therefore fully determined by the integer seed.

The oracles here deliberately avoid the fast code paths they check:
arrangement enumeration for the runs distribution, shuffling for the
runs p-value, conditional-integral quadrature for orthant probabilities,
and cubic-time recomputation for average linkage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterator, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.special import ndtr, ndtri

from .panel import BinarySeries, CountryLabel, CrisisPanel, YearWindow
from .runs import DEFAULT_CONVENTION, DegenerateSeriesError, count_runs
from .tetrachoric import ContingencyTable, DegenerateTableError

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class LatentModelSpec:
    rho: float
    tau1: float
    tau2: float
    length: int
    seed: int = 0

    def __post_init__(self):
        if self.length < 1:
            raise ValueError("length must be at least 1")
        if not -1.0 < self.rho < 1.0:
            raise ValueError("rho must lie strictly inside (-1, 1)")


def uniforms(seed: int, size: int) -> np.ndarray:
    """``size`` doubles in [0, 1) from the top 53 bits of PCG64 output."""
    raw = np.random.PCG64(seed).random_raw(size)
    return (raw >> np.uint64(11)).astype(np.float64) * 2.0 ** -53


def standard_normals(seed: int, size: int) -> np.ndarray:
    """Box-Muller normals; consecutive uniform pairs give consecutive normal pairs."""
    m = (size + 1) // 2
    u = uniforms(seed, 2 * m).reshape(m, 2)
    radius = np.sqrt(-2.0 * np.log1p(-u[:, 0]))
    angle = _TWO_PI * u[:, 1]
    z = np.empty((m, 2))
    z[:, 0] = radius * np.cos(angle)
    z[:, 1] = radius * np.sin(angle)
    return z.ravel()[:size]


def generate_pair(spec: LatentModelSpec, start_year: int = 0) -> tuple[BinarySeries, BinarySeries]:
    """Two indicator series thresholded from one latent bivariate normal draw per year."""
    z = standard_normals(spec.seed, 2 * spec.length)
    x, e = z[: spec.length], z[spec.length:]
    y = spec.rho * x + math.sqrt(1.0 - spec.rho ** 2) * e
    years = np.arange(start_year, start_year + spec.length)
    return (BinarySeries(CountryLabel("AAA"), years, (x > spec.tau1).astype(np.int8)),
            BinarySeries(CountryLabel("AAB"), years, (y > spec.tau2).astype(np.int8)))


def block_correlation(sizes: Sequence[int], within: "float | Sequence[float]",
                      across: float = 0.0) -> np.ndarray:
    """Correlation matrix constant within each block and across blocks."""
    within = [within] * len(sizes) if np.isscalar(within) else list(within)
    k = sum(sizes)
    corr = np.full((k, k), float(across))
    start = 0
    for size, w in zip(sizes, within):
        corr[start:start + size, start:start + size] = w
        start += size
    np.fill_diagonal(corr, 1.0)
    return corr


def synthetic_codes(k: int) -> list[str]:
    letters = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
    return ["".join(letters[(i // 26 ** p) % 26] for p in (2, 1, 0)) for i in range(k)]


def generate_panel(thresholds: Sequence[float], corr: np.ndarray, length: int, seed: int,
                   start_year: int = 1800, codes: "Sequence[str] | None" = None) -> CrisisPanel:
    """Panel of indicators from a multivariate latent normal with correlation ``corr``.

    Country ``i`` is in crisis in a year when its latent draw exceeds
    ``thresholds[i]``. The standard normal stream is consumed row by row, so a
    one-country panel reproduces the first series of :func:`generate_pair`.
    """
    thresholds = np.asarray(thresholds, dtype=float)
    corr = np.asarray(corr, dtype=float)
    k = thresholds.size
    if corr.shape != (k, k) or not np.allclose(corr, corr.T) or np.any(np.diag(corr) != 1.0):
        raise ValueError("corr must be a symmetric matrix with unit diagonal matching thresholds")
    eig = np.linalg.eigvalsh(corr)
    if eig.min() < -1e-10:
        raise ValueError(f"correlation structure is not positive semidefinite (min eigenvalue {eig.min():.3g})")
    try:
        factor = np.linalg.cholesky(corr)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(corr)
        factor = v * np.sqrt(np.clip(w, 0.0, None))
    z = standard_normals(seed, k * length).reshape(k, length)
    latent = factor @ z
    cells = (latent > thresholds[:, None]).astype(np.int8)
    codes = list(codes) if codes is not None else synthetic_codes(k)
    window = YearWindow(start_year, start_year + length - 1)
    return CrisisPanel([CountryLabel(c) for c in codes], window, cells)


def enumerate_arrangements(n_ones: int, n_zeros: int) -> Iterator[np.ndarray]:
    """Every distinct 0/1 arrangement with the given symbol counts."""
    n = n_ones + n_zeros
    for ones in combinations(range(n), n_ones):
        arr = np.zeros(n, dtype=np.int8)
        arr[list(ones)] = 1
        yield arr


def permutation_runs_p(series, iterations: int = 100_000, seed: int = 0,
                       convention: str = DEFAULT_CONVENTION) -> float:
    """Monte Carlo runs-test p-value from uniformly shuffled copies of ``series``."""
    values = series.values if isinstance(series, BinarySeries) else np.asarray(series)
    if iterations < 1000:
        raise ValueError("use at least 1000 iterations")
    ones = int(values.sum())
    if ones in (0, values.size):
        raise DegenerateSeriesError("series contains a single symbol")
    r_obs = count_runs(values)
    rng = np.random.Generator(np.random.PCG64(seed))
    runs = np.empty(iterations, dtype=np.int64)
    chunk = max(1, 2_000_000 // max(values.size, 1))
    for start in range(0, iterations, chunk):
        m = min(chunk, iterations - start)
        shuffled = rng.permuted(np.broadcast_to(values, (m, values.size)), axis=1)
        runs[start:start + m] = 1 + np.count_nonzero(shuffled[:, 1:] != shuffled[:, :-1], axis=1)
    if convention == "doubled":
        low = np.mean(runs <= r_obs)
        high = np.mean(runs >= r_obs)
        return float(min(1.0, 2.0 * min(low, high)))
    if convention == "one-sided-low":
        return float(np.mean(runs <= r_obs))
    if convention == "mass":
        freq = np.bincount(runs, minlength=values.size + 1) / iterations
        return float(min(1.0, freq[freq <= freq[r_obs]].sum()))
    raise ValueError(f"unknown convention {convention!r}")


def orthant_by_quadrature(h: float, k: float, rho: float) -> float:
    """P(X > h, Y > k) as int_h^inf phi(x) P(Y > k | X = x) dx.

    Integrates the joint density over the orthant with the inner dimension
    done in closed form; shares no code with the single-integral path.
    """
    if not -1.0 < rho < 1.0:
        raise ValueError("|rho| must be < 1")
    s = math.sqrt(1.0 - rho * rho)
    inv_sqrt_2pi = 1.0 / math.sqrt(_TWO_PI)

    def integrand(x):
        return inv_sqrt_2pi * math.exp(-0.5 * x * x) * float(ndtr((rho * x - k) / s))

    upper = max(h, 0.0) + 12.0
    if h >= upper:
        return 0.0
    # Split where the conditional probability turns over, so quad sees the steep part.
    pivot = k / rho if rho != 0 else None
    points = [p for p in (pivot,) if p is not None and h < p < upper]
    val, _ = quad(integrand, h, upper, epsabs=1e-13, epsrel=1e-12, limit=400,
                  points=points or None)
    return val


def grid_tetrachoric(table: ContingencyTable, step: float = 1e-4) -> float:
    """Grid value of rho whose orthant probability is closest to n11/n.

    The orthant probability is increasing in rho, so the closest grid point
    is located by bisection over grid indices followed by a neighbour check.
    """
    if not 0.0 < step <= 0.01:
        raise ValueError("step must lie in (0, 0.01]")
    if table.is_degenerate():
        raise DegenerateTableError(f"constant series in table {table.cells}")
    t = table.corrected()
    z1 = float(ndtri(1.0 - t.p_a))
    z2 = float(ndtri(1.0 - t.p_b))
    target = t.n11 / t.n
    m = int(round(1.0 / step))
    grid = lambda i: -1.0 + i * step  # noqa: E731  i in 1 .. 2m-1
    err = lambda i: orthant_by_quadrature(z1, z2, grid(i)) - target  # noqa: E731
    lo, hi = 1, 2 * m - 1
    if err(lo) >= 0:
        return grid(lo)
    if err(hi) <= 0:
        return grid(hi)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if err(mid) < 0:
            lo = mid
        else:
            hi = mid
    return grid(lo) if abs(err(lo)) <= abs(err(hi)) else grid(hi)


def upgma_reference(d: np.ndarray, labels: Sequence[str], tol: float = 1e-12):
    """Average linkage recomputing every cross-cluster mean from scratch.

    Returns a list of ``(left_leaves, right_leaves, height)`` with leaves as
    sorted label tuples, following the same lexicographic tie-break as
    :func:`crisis_assoc.clustering.upgma`.
    """
    d = np.asarray(d, dtype=float)
    clusters = [(labels[i],) for i in range(len(labels))]
    members = {labels[i]: i for i in range(len(labels))}
    out = []
    while len(clusters) > 1:
        scored = []
        for a, b in combinations(clusters, 2):
            total = sum(d[members[x], members[y]] for x in a for y in b)
            scored.append((total / (len(a) * len(b)), a, b))
        best = min(s for s, _, _ in scored)
        tied = [(s, a, b) for s, a, b in scored if s <= best + tol]
        s, a, b = min(tied, key=lambda t: tuple(sorted((min(t[1]), min(t[2])))))
        left, right = sorted((a, b), key=min)
        out.append((tuple(sorted(left)), tuple(sorted(right)), s))
        clusters = [c for c in clusters if c not in (a, b)] + [tuple(sorted(a + b))]
    return out
