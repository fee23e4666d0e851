from .brute_force import (
    calibrate_height_convention,
    height_product_observable,
    torus_brute_force,
    torus_height_difference,
    torus_partition_function,
    torus_trace_expectation,
)
from .correlation import (
    CorrelatorValue,
    Method,
    PointQuad,
    chi_discrete,
    cylinder_two_point_direct,
    cylinder_two_point_spectral,
    regularity_families,
)
from .gff import (
    gff_k_point,
    green_function,
    pairings,
    regularity_envelope,
    scale_separation,
    sigma_squared,
)

__all__ = [
    "PointQuad",
    "CorrelatorValue",
    "Method",
    "chi_discrete",
    "cylinder_two_point_spectral",
    "cylinder_two_point_direct",
    "regularity_families",
    "torus_brute_force",
    "torus_partition_function",
    "torus_trace_expectation",
    "torus_height_difference",
    "height_product_observable",
    "calibrate_height_convention",
    "gff_k_point",
    "green_function",
    "pairings",
    "sigma_squared",
    "scale_separation",
    "regularity_envelope",
]
