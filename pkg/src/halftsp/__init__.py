"""Randomized tours for half-integral subtour LP solutions of metric TSP."""
from .cuts import CutHierarchy, build_hierarchy, enumerate_min_cuts
from .generate import generate, library
from .instance import (
    HalfIntegralSolution,
    InstanceError,
    StructureError,
    build_support,
    ensure_unit_edge,
    load_instance,
    parse_instance,
    validate,
)
from .join import min_ojoin, shortcut
from .maxent import MaxEntropyTreeDistribution, fit_lambdas
from .pipeline import HalfIntegralTSP, sample_one_tree

__version__ = "0.1.0"

__all__ = [
    "CutHierarchy",
    "HalfIntegralSolution",
    "HalfIntegralTSP",
    "InstanceError",
    "MaxEntropyTreeDistribution",
    "StructureError",
    "build_hierarchy",
    "build_support",
    "ensure_unit_edge",
    "enumerate_min_cuts",
    "fit_lambdas",
    "generate",
    "library",
    "load_instance",
    "min_ojoin",
    "parse_instance",
    "sample_one_tree",
    "shortcut",
    "validate",
]
