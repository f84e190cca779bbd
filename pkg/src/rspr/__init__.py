"""rSPR graphs of rooted phylogenetic trees, random walks on them, and exact curvature."""

from .curvature import CurvatureContext, CurvatureRecord, kappa, kappa_lazy, ric
from .graph import RsprGraph, bfs_distances, build_full_graph, build_graph, diameter, distance_on_the_fly, enumerate_all_trees
from .spr import SprMove, apply_spr, degree, degree_extremes, enumerate_neighbors, select_uniform_neighbor
from .suite import SuiteReport, bound_suite
from .tanglegram import PairClass, canonical_pair, enumerate_classes
from .transport import TransportPlan, w1
from .tree import NewickError, Tree, canonicalize, lca, parse_newick, restrict, to_newick
from .walks import MH, UNIFORM, Measure, WalkKind, mh_step_measure, step_measure, uniform_step_measure

__version__ = "0.1.0"

__all__ = [
    "CurvatureContext",
    "CurvatureRecord",
    "kappa",
    "kappa_lazy",
    "ric",
    "RsprGraph",
    "bfs_distances",
    "build_full_graph",
    "build_graph",
    "diameter",
    "distance_on_the_fly",
    "enumerate_all_trees",
    "SprMove",
    "apply_spr",
    "degree",
    "degree_extremes",
    "enumerate_neighbors",
    "select_uniform_neighbor",
    "SuiteReport",
    "bound_suite",
    "PairClass",
    "canonical_pair",
    "enumerate_classes",
    "TransportPlan",
    "w1",
    "NewickError",
    "Tree",
    "canonicalize",
    "lca",
    "parse_newick",
    "restrict",
    "to_newick",
    "MH",
    "UNIFORM",
    "Measure",
    "WalkKind",
    "mh_step_measure",
    "step_measure",
    "uniform_step_measure",
]
