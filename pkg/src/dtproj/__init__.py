"""Exact linear algebra for perverse filtrations, canonical splittings and decomposition projectors."""

from .filtered import FilteredGradedSpace, FilteredMap, FlagRestrictionData, Subquotient, validate_filtration
from .harness import Comparison, DiagramStar, Realization, run_pipeline
from .lefschetz import HLTriple, canonical_splitting, primitive_parts, unique_lift, verify_hl
from .linalg import Matrix, Subspace
from .projectors import ProjectorFamily, build_projectors, four_decompositions, verify_projector_system
from .scenario import ScenarioFile, dumps, load, loads
from .supports import Stratum, SupportScenario, assemble_support_decomposition

__all__ = [
    "Comparison",
    "DiagramStar",
    "FilteredGradedSpace",
    "FilteredMap",
    "FlagRestrictionData",
    "HLTriple",
    "Matrix",
    "ProjectorFamily",
    "Realization",
    "ScenarioFile",
    "Stratum",
    "Subquotient",
    "Subspace",
    "SupportScenario",
    "assemble_support_decomposition",
    "build_projectors",
    "canonical_splitting",
    "dumps",
    "four_decompositions",
    "load",
    "loads",
    "primitive_parts",
    "run_pipeline",
    "unique_lift",
    "validate_filtration",
    "verify_hl",
    "verify_projector_system",
]

__version__ = "0.1.0"
