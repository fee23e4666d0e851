from .spectral import (
    ClassMReport,
    ComplexAtomMeasure,
    ConcentrationReport,
    F_bound_check,
    F_discrete,
    SpectralAtom,
    SpectralMeasure,
    aggregate_atoms,
    class_m_report,
    observable_measure,
    rescale,
    rescale_and_concentrate,
    spectral_measure,
    symmetrize,
)

__all__ = [
    "SpectralAtom",
    "SpectralMeasure",
    "ComplexAtomMeasure",
    "ClassMReport",
    "ConcentrationReport",
    "aggregate_atoms",
    "symmetrize",
    "spectral_measure",
    "rescale",
    "rescale_and_concentrate",
    "class_m_report",
    "observable_measure",
    "F_discrete",
    "F_bound_check",
]
