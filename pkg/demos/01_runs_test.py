# %% [markdown]
# # Are crisis years random?
#
# The runs test asks whether 0/1 symbols are arranged in a way consistent
# with chance. Too few runs means crises cluster; too many means they alternate.

# %%
import numpy as np

from crisis_assoc.runs import count_runs, runs_pmf, runs_test

print(count_runs("AABABBBAA"))  # AA B A BBB AA -> 5 runs

# %% [markdown]
# Exact distribution of the run count for 4 ones among 20 symbols.

# %%
pmf = runs_pmf(4, 16)
for r, p in enumerate(pmf):
    if p > 0:
        print(f"R={r:2d}  {p:.5f}  {'#' * int(200 * p)}")

# %% [markdown]
# A long series with a single interior crisis: the exact test has no power,
# and the normal approximation agrees.

# %%
lone = np.zeros(215, dtype=np.int8)
lone[182] = 1
res = runs_test(lone)
print(f"runs={res.r_observed}  exact p={res.p_exact:.4f}  approx p={res.p_approx:.4f}  z={res.z_stat:.4f}")

# %% [markdown]
# Compare a clustered series with a scattered one that has the same number of crises.

# %%
clustered = np.array([0] * 40 + [1] * 6 + [0] * 40 + [1] * 6 + [0] * 40, dtype=np.int8)
rng = np.random.default_rng(1)
scattered = rng.permutation(clustered)
for name, s in (("clustered", clustered), ("scattered", scattered)):
    for conv in ("doubled", "mass", "one-sided-low"):
        r = runs_test(s, convention=conv)
        print(f"{name:10s} {conv:14s} runs={r.r_observed:3d}  exact p={r.p_exact:.4g}  approx p={r.p_approx:.4g}")
