"""Exact and simulated regret of data-driven newsvendor policies."""

from .bernoulli_regret import regret_vs_bernoulli, saa_curve, saa_policy, worst_case_regret
from .bounds import levi_bound, threshold, threshold_table
from .minimax import derandomize, optimal_curve, solve_minimax
from .model import Policy, ProblemParams

__all__ = [
    "Policy", "ProblemParams", "regret_vs_bernoulli", "worst_case_regret", "saa_policy", "saa_curve",
    "solve_minimax", "derandomize", "optimal_curve", "levi_bound", "threshold", "threshold_table",
]
