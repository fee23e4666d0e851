from .geometry import Geometry, GeometryKind, boundary_circuit, even_domain, torus
from .montecarlo import (
    BatchMeans,
    ChainResult,
    FlipDominationReport,
    MCConfig,
    MCEstimate,
    batch_means,
    compare_histograms,
    empirical_marginal,
    estimate_correlator,
    flip_domination_test,
    height_product,
    histogram_check,
    merge_batch_means,
    run_chains,
    sample_heights,
    sample_observable,
)
from .percolation import (
    AlternatingMode,
    Annulus,
    Rectangle,
    arm_frequency,
    count_alternating,
    square_circuit,
)
from .sampler import (
    ExactHeightDistribution,
    HeatBathSampler,
    HeightField,
    exact_height_distribution,
    heat_bath_probability,
    heat_bath_sampler,
)
from .spins import (
    ResampledPair,
    SpinConfig,
    enumerate_odd_resamplings,
    odd_components,
    resample_odd_spins,
    resampled_pair,
    sample_spin_config,
    spins_from_heights,
)
from .tree import (
    BranchingValues,
    LevelLineTree,
    TreeVertex,
    build_level_line_tree,
    conditional_covariance,
)

__all__ = [
    "Geometry",
    "GeometryKind",
    "even_domain",
    "torus",
    "boundary_circuit",
    "HeightField",
    "HeatBathSampler",
    "heat_bath_sampler",
    "heat_bath_probability",
    "ExactHeightDistribution",
    "exact_height_distribution",
    "SpinConfig",
    "spins_from_heights",
    "sample_spin_config",
    "odd_components",
    "resample_odd_spins",
    "enumerate_odd_resamplings",
    "ResampledPair",
    "resampled_pair",
    "TreeVertex",
    "LevelLineTree",
    "BranchingValues",
    "build_level_line_tree",
    "conditional_covariance",
    "AlternatingMode",
    "Rectangle",
    "Annulus",
    "square_circuit",
    "count_alternating",
    "arm_frequency",
    "MCConfig",
    "BatchMeans",
    "batch_means",
    "merge_batch_means",
    "ChainResult",
    "run_chains",
    "MCEstimate",
    "sample_observable",
    "height_product",
    "estimate_correlator",
    "empirical_marginal",
    "sample_heights",
    "compare_histograms",
    "histogram_check",
    "FlipDominationReport",
    "flip_domination_test",
]
