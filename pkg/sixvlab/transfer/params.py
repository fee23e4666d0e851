import math
from dataclasses import dataclass


@dataclass(frozen=True)
class ModelParams:
    """
    Isotropic six-vertex weights a = b = 1 and c > 0.

    Attributes:
        c: Weight of the two c-type vertices
    """

    c: float

    def __post_init__(self):
        if not math.isfinite(self.c) or self.c <= 0:
            raise ValueError(f"Vertex weight c must be positive and finite, got {self.c}")

    @property
    def delta(self) -> float:
        """Δ = (a² + b² − c²)/(2ab) with a = b = 1."""
        return 1.0 - self.c**2 / 2.0

    @property
    def zeta(self) -> float:
        """
        ζ = arccos(−Δ), defined for 0 < c ≤ 2.

        Raises:
            ValueError: If c > 2 (Δ < −1, no real angle)
        """
        if self.c > 2.0:
            raise ValueError(f"ζ is only defined for c <= 2, got c={self.c}")
        return math.acos(min(1.0, max(-1.0, -self.delta)))

    @property
    def in_gff_regime(self) -> bool:
        return 1.0 <= self.c <= 2.0

    @classmethod
    def from_zeta(cls, zeta: float) -> "ModelParams":
        """Inverse of the ``zeta`` property: c = sqrt(2 + 2 cos ζ)."""
        if not 0.0 <= zeta < math.pi:
            raise ValueError(f"ζ must lie in [0, π), got {zeta}")
        return cls(c=math.sqrt(2.0 + 2.0 * math.cos(zeta)))

    def __str__(self) -> str:
        return f"c={self.c:.6g} (Δ={self.delta:.6g})"
