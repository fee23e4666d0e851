"""
Balanced column configurations and their vertical-shift orbits.

A column of L horizontal arrows is encoded as an L-bit mask: bit j is set
when arrow j points right (+1). Row indices are cyclic, so the up-shift
(arrow j moves to row j+1) is a bit rotation.
"""

from dataclasses import dataclass, field
from itertools import combinations
from math import comb

import numpy as np

from ..utils.limits import Limits
from ..utils.logger import get_logger

logger = get_logger("sixvlab.basis")


def rotate_up(bits: int, L: int, steps: int = 1) -> int:
    """
    Shift a column configuration up by ``steps`` rows (cyclically).

    Args:
        bits: Encoded column
        L: Circumference
        steps: Number of rows, may be negative

    Returns:
        Encoded shifted column
    """
    steps %= L
    mask = (1 << L) - 1
    return ((bits << steps) | (bits >> (L - steps))) & mask


def rotate_up_array(bits: np.ndarray, L: int, steps: int = 1) -> np.ndarray:
    """Vectorized ``rotate_up``."""
    steps %= L
    mask = (1 << L) - 1
    bits = np.asarray(bits, dtype=np.int64)
    return ((bits << steps) | (bits >> (L - steps))) & mask


def bits_to_signs(bits: np.ndarray | int, L: int) -> np.ndarray:
    """
    Decode masks into ±1 arrays.

    Args:
        bits: Scalar mask or array of masks
        L: Circumference

    Returns:
        int8 array of shape ``(..., L)``; entry j is +1 when bit j is set
    """
    bits = np.asarray(bits, dtype=np.int64)
    on = (bits[..., None] >> np.arange(L)) & 1
    return (2 * on - 1).astype(np.int8)


def signs_to_bits(signs) -> int:
    """Encode a ±1 sequence as a mask."""
    bits = 0
    for j, s in enumerate(signs):
        if s not in (1, -1):
            raise ValueError(f"Arrow orientation must be +1 or -1, got {s}")
        if s == 1:
            bits |= 1 << j
    return bits


@dataclass(frozen=True)
class ColumnConfig:
    """A balanced column of L horizontal arrows."""

    bits: int
    L: int

    def __post_init__(self):
        if self.L < 2 or self.L % 2:
            raise ValueError(f"L must be even and at least 2, got {self.L}")
        if not 0 <= self.bits < (1 << self.L):
            raise ValueError(f"Mask {self.bits} does not fit in {self.L} bits")
        if self.bits.bit_count() != self.L // 2:
            raise ValueError(
                f"Column {self.bits:0{self.L}b} is not balanced "
                f"({self.bits.bit_count()} right arrows out of {self.L})"
            )

    @classmethod
    def from_signs(cls, signs) -> "ColumnConfig":
        signs = list(signs)
        return cls(bits=signs_to_bits(signs), L=len(signs))

    @classmethod
    def from_string(cls, text: str) -> "ColumnConfig":
        """Parse ``"+-+-"`` style notation (row 0 first)."""
        mapping = {"+": 1, "-": -1}
        try:
            return cls.from_signs(mapping[ch] for ch in text.strip())
        except KeyError as e:
            raise ValueError(f"Invalid arrow symbol {e} in {text!r}") from e

    def signs(self) -> np.ndarray:
        return bits_to_signs(self.bits, self.L)

    def shifted(self, steps: int = 1) -> "ColumnConfig":
        return ColumnConfig(rotate_up(self.bits, self.L, steps), self.L)

    def __str__(self) -> str:
        return "".join("+" if (self.bits >> j) & 1 else "-" for j in range(self.L))


class BasisIndex:
    """
    Sorted enumeration of all balanced columns for a given L, with O(1)
    rank lookup in both directions.
    """

    def __init__(self, L: int, masks: np.ndarray):
        self.L = L
        self.masks = np.asarray(masks, dtype=np.int64)
        if np.any(np.diff(self.masks) <= 0):
            raise ValueError("Basis masks must be strictly increasing")
        self._rank = {int(m): i for i, m in enumerate(self.masks)}
        self._signs: np.ndarray | None = None
        self._up: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.masks)

    def __iter__(self):
        for m in self.masks:
            yield ColumnConfig(int(m), self.L)

    def __contains__(self, config: ColumnConfig | int) -> bool:
        bits = config.bits if isinstance(config, ColumnConfig) else int(config)
        return bits in self._rank

    def __repr__(self) -> str:
        return f"BasisIndex(L={self.L}, size={len(self)})"

    def rank(self, config: ColumnConfig | int) -> int:
        """
        Position of a configuration in the basis.

        Raises:
            KeyError: If the configuration is not in the basis
        """
        bits = config.bits if isinstance(config, ColumnConfig) else int(config)
        return self._rank[bits]

    def rank_array(self, bits: np.ndarray) -> np.ndarray:
        """Vectorized rank lookup (all masks must be in the basis)."""
        bits = np.asarray(bits, dtype=np.int64)
        idx = np.minimum(np.searchsorted(self.masks, bits), len(self.masks) - 1)
        if np.any(self.masks[idx] != bits):
            raise KeyError("Some masks are not balanced configurations")
        return idx

    def unrank(self, i: int) -> ColumnConfig:
        return ColumnConfig(int(self.masks[i]), self.L)

    @property
    def signs(self) -> np.ndarray:
        """(n, L) int8 matrix of arrow orientations, one row per basis element."""
        if self._signs is None:
            self._signs = bits_to_signs(self.masks, self.L)
        return self._signs

    @property
    def up_index(self) -> np.ndarray:
        """``up_index[i]`` is the rank of the up-shift of basis element i."""
        if self._up is None:
            self._up = self.rank_array(rotate_up_array(self.masks, self.L))
        return self._up


def enumerate_balanced(L: int, cap: int | None = None) -> BasisIndex:
    """
    Enumerate all balanced column configurations.

    Args:
        L: Even circumference, at least 2
        cap: Largest admissible L (defaults to ``Limits.MAX_L``)

    Returns:
        BasisIndex of size binomial(L, L/2)

    Raises:
        ValueError: If L is odd or too small
        CapExceededError: If L is above the cap
    """
    L = Limits.validate_L(L, cap)
    masks = sorted(sum(1 << p for p in combo) for combo in combinations(range(L), L // 2))
    basis = BasisIndex(L, np.array(masks, dtype=np.int64))
    logger.debug(f"Enumerated {len(basis)} balanced columns for L={L}")
    return basis


@dataclass(frozen=True)
class Orbit:
    """A cyclic-shift orbit, members listed as r, up(r), up²(r), ..."""

    representative: int
    period: int
    members: tuple[int, ...]


@dataclass
class OrbitTable:
    """Partition of a basis into up-shift orbits."""

    basis: BasisIndex
    orbits: list[Orbit] = field(default_factory=list)
    orbit_of: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.orbits)

    def periods(self) -> list[int]:
        return [o.period for o in self.orbits]

    def orbit_containing(self, config: ColumnConfig | int) -> Orbit:
        return self.orbits[int(self.orbit_of[self.basis.rank(config)])]


def orbit_decomposition(basis: BasisIndex) -> OrbitTable:
    """
    Split a basis into orbits of the cyclic up-shift.

    Representatives are the smallest rank in each orbit; orbits are ordered
    by representative.

    Args:
        basis: Balanced basis

    Returns:
        OrbitTable covering the whole basis
    """
    up = basis.up_index
    orbit_of = np.full(len(basis), -1, dtype=np.int64)
    orbits: list[Orbit] = []
    for start in range(len(basis)):
        if orbit_of[start] >= 0:
            continue
        members = [start]
        nxt = int(up[start])
        while nxt != start:
            members.append(nxt)
            nxt = int(up[nxt])
        orbit_of[members] = len(orbits)
        orbits.append(Orbit(representative=start, period=len(members), members=tuple(members)))

    table = OrbitTable(basis=basis, orbits=orbits, orbit_of=orbit_of)
    assert sum(table.periods()) == comb(basis.L, basis.L // 2)
    logger.debug(f"L={basis.L}: {len(orbits)} shift orbits")
    return table
