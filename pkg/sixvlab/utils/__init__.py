from .batch import GridResult, GridRunner, GridTask
from .errors import (
    CapExceededError,
    ConfigError,
    ConvergenceError,
    EigenSolverError,
    GammaPoleError,
    InvariantViolationError,
    MethodDisagreementError,
    SixVertexLabError,
)
from .limits import Limits
from .logger import get_logger, setup_logger
from .union_find import UnionFind

__all__ = [
    "setup_logger",
    "get_logger",
    "Limits",
    "UnionFind",
    "GridRunner",
    "GridTask",
    "GridResult",
    "SixVertexLabError",
    "CapExceededError",
    "ConfigError",
    "EigenSolverError",
    "ConvergenceError",
    "MethodDisagreementError",
    "GammaPoleError",
    "InvariantViolationError",
]
