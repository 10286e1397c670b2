"""Randomness, association and clustering analysis of binary banking-crisis panels."""

__version__ = "0.1.0"

from .panel import (BinarySeries, CountryLabel, CrisisPanel, PanelError, YearWindow,  # noqa: E402
                    crisis_counts, load_panel, series, slice_window, write_panel)
from .runs import (RunsTestResult, approx_p, count_runs, exact_p, run_test_all,  # noqa: E402
                   runs_pmf, runs_test)
from .normal import bvn_cdf, std_normal_cdf, std_normal_quantile  # noqa: E402
from .tetrachoric import (ContingencyTable, TetrachoricResult, classify_strength,  # noqa: E402
                          cross_tabulate, estimate_tetrachoric)
from .association import (AssociationMatrix, build_cross_table, chi_square_independence,  # noqa: E402
                          load_continent_map, pairwise_matrix, render_heatmap)
from .clustering import (Dendrogram, cut, dissimilarity_matrix, jaccard_distance,  # noqa: E402
                         render_dendrogram, to_newick, upgma)
