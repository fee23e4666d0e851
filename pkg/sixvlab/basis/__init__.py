from .basis import (
    BasisIndex,
    ColumnConfig,
    Orbit,
    OrbitTable,
    bits_to_signs,
    enumerate_balanced,
    orbit_decomposition,
    rotate_up,
    rotate_up_array,
)

__all__ = [
    "ColumnConfig",
    "BasisIndex",
    "Orbit",
    "OrbitTable",
    "enumerate_balanced",
    "orbit_decomposition",
    "rotate_up",
    "rotate_up_array",
    "bits_to_signs",
]
