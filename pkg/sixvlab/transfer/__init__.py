from .cache import EigenCache, read_eigensystem, write_eigensystem
from .observables import (
    ArrowVar,
    ChainEvaluator,
    HeightConvention,
    Side,
    SlabObservable,
    expand_height_product,
    height_steps,
    slab_embedding,
)
from .params import ModelParams
from .transfer import (
    EigenSystem,
    TransferOperators,
    build_and_codiagonalize,
    build_operators,
    free_energy_per_site,
    shift_matrix,
    transfer_entry,
    transfer_matrix,
    vertical_entry,
    vertical_matrix,
)

__all__ = [
    "ModelParams",
    "EigenSystem",
    "TransferOperators",
    "transfer_entry",
    "vertical_entry",
    "transfer_matrix",
    "vertical_matrix",
    "shift_matrix",
    "build_operators",
    "build_and_codiagonalize",
    "free_energy_per_site",
    "EigenCache",
    "read_eigensystem",
    "write_eigensystem",
    "ArrowVar",
    "ChainEvaluator",
    "HeightConvention",
    "Side",
    "SlabObservable",
    "expand_height_product",
    "height_steps",
    "slab_embedding",
]
