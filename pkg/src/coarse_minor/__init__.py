"""Fat minor models, layered partitions and K_{2,t} distortion estimates for graphs."""
from .distortion import (DistortionReport, ProfilePolicy, approximate_distortion,
                         star_augment)
from .fatmodel import (FatModel, FatnessReport, ModelError, PatternGraph, subdivide_model,
                       theta_model, verify_fat_model)
from .generators import GeneratorSpec, generate
from .graph import INF, Graph, ball, components, distances_from, near_components
from .merging import MergeProblem, MergeResult, merge_partition
from .minor import MinorQuery, MinorResult, has_minor
from .partition import (ConstantsProfile, LayeredPartition, build_partition, compute_constants,
                        extract_fat_model, quasi_isometry, verify_partition)
from .theta import (Confirmation, DispersionQuery, Witness, audit_attachments, audit_boundary,
                    find_dispersed_tuple, theta_from_dispersion)

__all__ = [
    "ConstantsProfile", "Confirmation", "DispersionQuery", "DistortionReport", "FatModel",
    "FatnessReport", "GeneratorSpec", "Graph", "INF", "LayeredPartition", "MergeProblem",
    "MergeResult", "MinorQuery", "MinorResult", "ModelError", "PatternGraph", "ProfilePolicy",
    "Witness", "approximate_distortion", "audit_attachments", "audit_boundary", "ball",
    "build_partition", "components", "compute_constants", "distances_from", "extract_fat_model",
    "find_dispersed_tuple", "generate", "has_minor", "merge_partition", "near_components",
    "quasi_isometry", "star_augment", "subdivide_model", "theta_from_dispersion",
    "theta_model", "verify_fat_model", "verify_partition",
]
