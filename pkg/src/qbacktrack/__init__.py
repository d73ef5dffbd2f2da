"""Quantum-walk backtracking simulated exactly on classical hardware."""

from .backtrack import BacktrackTree, build_tree, run_backtracking, subtree, truncate
from .csp import KSatInstance, PartialAssignment, RngSpec, Verdict, naive_heuristic, parse_dimacs, random_ksat
from .search import DetectionConfig, detect, find_all, find_marked, unique_find
from .walk import build_walk

__all__ = [
    "BacktrackTree", "DetectionConfig", "KSatInstance", "PartialAssignment", "RngSpec", "Verdict",
    "build_tree", "build_walk", "detect", "find_all", "find_marked", "naive_heuristic", "parse_dimacs",
    "random_ksat", "run_backtracking", "subtree", "truncate", "unique_find",
]
__version__ = "0.1.0"
