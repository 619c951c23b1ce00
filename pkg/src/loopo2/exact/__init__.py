"""Exhaustive enumeration oracle and structural checks for small domains."""
from .checks import (CheckReport, FlowCapExceeded, HypothesisError, check_bijection, check_crossing_bounds,
                     check_domination, check_fkg_lattice, check_four_arc_bounds, check_monochrome,
                     check_spatial_markov, cylinder_identity, dominates, replay_domination, replay_fkg)
from .enumerate import (CapExceeded, EmptySupport, ExactDist, MeasureSpec, RedTable, bijection_sum,
                        blue_completions, count_heights, distribution, enumerate_heights, enumerate_loops,
                        enumerate_pairs, exact_expectation, exact_prob, loop_weight, red_marginal_weight, red_table,
                        tv_distance)

__all__ = [
    "CapExceeded", "CheckReport", "EmptySupport", "ExactDist", "FlowCapExceeded", "HypothesisError", "MeasureSpec",
    "RedTable", "bijection_sum", "blue_completions", "check_bijection", "check_crossing_bounds", "check_domination",
    "check_fkg_lattice", "check_four_arc_bounds", "check_monochrome", "check_spatial_markov", "count_heights",
    "cylinder_identity", "distribution", "dominates", "enumerate_heights", "enumerate_loops", "enumerate_pairs",
    "exact_expectation", "exact_prob", "loop_weight", "red_marginal_weight", "red_table", "replay_domination",
    "replay_fkg", "tv_distance",
]
