"""
Spin representation of a height function.

σ_even = + on even faces with h ∈ 4ℤ, σ_odd = + on odd faces with
h ∈ 1 + 4ℤ, and ω is a random set of even diagonal edges on which σ_even
agrees. The height gradient is recovered from the spins through
h(v) - h(u) = σ_even(u) σ_odd(v) for adjacent u even, v odd.
"""

from collections import deque
from collections.abc import Iterator
from dataclasses import dataclass
from itertools import product

import numpy as np

from ..transfer.params import ModelParams
from ..utils.errors import CapExceededError, InvariantViolationError
from ..utils.limits import Limits
from ..utils.logger import get_logger
from .geometry import OUTER, OUTSIDE, Face, Geometry
from .sampler import HeightField

logger = get_logger("sixvlab.spins")


def spins_from_heights(heights: np.ndarray, is_even: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(σ_even, σ_odd) as ±1 arrays, 0 on faces of the other parity."""
    sigma_even = np.where(is_even, np.where(heights % 4 == 0, 1, -1), 0).astype(np.int8)
    sigma_odd = np.where(is_even, 0, np.where(heights % 4 == 1, 1, -1)).astype(np.int8)
    return sigma_even, sigma_odd


@dataclass
class SpinConfig:
    """
    A sample (σ_even, σ_odd, ω).

    Attributes:
        geometry: Faces and edges
        sigma_even: ±1 on even faces, 0 elsewhere
        sigma_odd: ±1 on odd faces, 0 elsewhere
        omega: (E,) open/closed mask over ``geometry.even_edges``
    """

    geometry: Geometry
    sigma_even: np.ndarray
    sigma_odd: np.ndarray
    omega: np.ndarray

    def edge_sign(self) -> np.ndarray:
        """σ_even at the first endpoint of every even edge."""
        return self.sigma_even[self.geometry.even_edges[:, 0]]

    def agreement(self) -> np.ndarray:
        """A(σ_even) as a mask over even edges."""
        a, b = self.geometry.even_edges.T
        return self.sigma_even[a] == self.sigma_even[b]

    def dual_agreement(self) -> np.ndarray:
        """Mask of even edges whose dual odd edge exists and lies in A(σ_odd)."""
        d = self.geometry.edge_duals
        exists = d[:, 0] != OUTSIDE
        safe = np.where(exists[:, None], d, 0)
        return exists & (self.sigma_odd[safe[:, 0]] == self.sigma_odd[safe[:, 1]])

    @property
    def omega_plus(self) -> np.ndarray:
        """Open edges at heights in 4ℤ."""
        return self.omega & (self.edge_sign() == 1)

    @property
    def omega_minus(self) -> np.ndarray:
        """Open edges at heights in 2 + 4ℤ."""
        return self.omega & (self.edge_sign() == -1)

    def check_constraints(self) -> None:
        """
        Check the support of the joint law.

        Raises:
            InvariantViolationError: If ω leaves A(σ_even), misses a boundary
                edge, the boundary is not +, or a closed edge has a
                disagreeing dual
        """
        geo = self.geometry
        if np.any(self.omega & ~self.agreement()):
            raise InvariantViolationError("ω contains an edge outside A(σ_even)")
        if np.any(geo.boundary_edges & ~self.omega):
            raise InvariantViolationError("A boundary edge is closed")
        if np.any(self.sigma_even[list(geo.circuit)] != 1):
            raise InvariantViolationError("σ_even is not + on the boundary circuit")
        if np.any(~self.omega & ~self.dual_agreement()):
            raise InvariantViolationError("A closed edge has its dual outside A(σ_odd)")

    def heights(self) -> np.ndarray:
        """
        Rebuild h from the spins by integrating the gradient.

        The boundary circuit is anchored at 0; on a torus the first even face
        is anchored at 0 or 2 according to its spin.

        Raises:
            InvariantViolationError: If the gradient is not consistent
        """
        geo = self.geometry
        h = np.zeros(geo.n_faces, dtype=np.int64)
        seen = np.zeros(geo.n_faces, dtype=bool)
        if geo.circuit:
            roots = list(geo.circuit)
        else:
            first = int(np.flatnonzero(geo.is_even)[0])
            h[first] = 0 if self.sigma_even[first] == 1 else 2
            roots = [first]
        seen[roots] = True
        queue = deque(roots)
        while queue:
            i = queue.popleft()
            for j in geo.neighbors[i]:
                if j == OUTSIDE:
                    continue
                if self.sigma_even[i]:
                    value = h[i] + self.sigma_even[i] * self.sigma_odd[j]
                else:
                    value = h[i] - self.sigma_even[j] * self.sigma_odd[i]
                if seen[j]:
                    if h[j] != value:
                        raise InvariantViolationError(
                            f"Spin gradient is inconsistent at face {tuple(geo.faces[j])}"
                        )
                    continue
                h[j] = value
                seen[j] = True
                queue.append(j)
        return h

    def reproduces(self, hf: HeightField) -> bool:
        """Whether the spin gradient matches the gradient of ``hf`` everywhere."""
        h = self.heights()
        offset = hf.heights[0] - h[0]
        return bool(np.all(h + offset == hf.heights))


def sample_spin_config(hf: HeightField, params: ModelParams, rng: np.random.Generator) -> SpinConfig:
    """
    Read the spins off a height function and sample ω given them.

    Boundary edges are open. An agreement edge whose dual is not an odd
    agreement is open. Every other agreement edge is open with
    probability 1/c.

    Raises:
        ValueError: If c < 1 (1/c is not a probability)
    """
    if params.c < 1:
        raise ValueError(f"The spin representation needs c >= 1, got c={params.c}")
    geo = hf.geometry
    sigma_even, sigma_odd = spins_from_heights(hf.heights, geo.is_even)
    spin = SpinConfig(geo, sigma_even, sigma_odd, np.zeros(geo.n_edges, dtype=bool))

    agree = spin.agreement()
    forced = geo.boundary_edges | ~spin.dual_agreement()
    coins = rng.random(geo.n_edges) < 1.0 / params.c
    spin.omega = agree & (forced | coins)
    logger.debug(
        f"Sampled ω: {int(spin.omega.sum())} open of {int(agree.sum())} agreement edges"
    )
    return spin


def odd_components(spin: SpinConfig, blocked: np.ndarray | None = None) -> dict[int, list[int]]:
    """
    Bounded components of the plane minus ω, as lists of odd faces.

    Raises:
        InvariantViolationError: If an odd face is connected to the outside
    """
    uf = spin.geometry.odd_cell_components(spin.omega if blocked is None else blocked)
    groups = uf.components()
    if OUTER in uf:
        outside = groups.pop(uf.find(OUTER))
        if len(outside) > 1:
            raise InvariantViolationError("An odd face is connected to the outside of the domain")
    return groups


def resample_odd_spins(spin: SpinConfig, rng: np.random.Generator) -> SpinConfig:
    """
    Flip a fair coin for σ_odd on each bounded component of the plane minus ω.

    Raises:
        ValueError: On a torus
    """
    if spin.geometry.is_torus:
        raise ValueError("Odd-spin resampling needs an even domain")
    sigma_odd = spin.sigma_odd.copy()
    for members in odd_components(spin).values():
        sigma_odd[members] = 1 if rng.random() < 0.5 else -1
    return SpinConfig(spin.geometry, spin.sigma_even.copy(), sigma_odd, spin.omega.copy())


def enumerate_odd_resamplings(spin: SpinConfig) -> Iterator[np.ndarray]:
    """
    Yield the heights rebuilt from every σ_odd that is constant on each
    bounded component of the plane minus ω, σ_even and ω held fixed.

    Raises:
        ValueError: On a torus
        CapExceededError: Above ``Limits.MAX_COIN_ENUMERATION`` components
    """
    if spin.geometry.is_torus:
        raise ValueError("Odd-spin enumeration needs an even domain")
    components = list(odd_components(spin).values())
    if len(components) > Limits.MAX_COIN_ENUMERATION:
        raise CapExceededError(
            f"{len(components)} odd components exceed the coin enumeration cap "
            f"{Limits.MAX_COIN_ENUMERATION}"
        )
    sigma_odd = spin.sigma_odd.copy()
    for signs in product((1, -1), repeat=len(components)):
        for members, s in zip(components, signs, strict=True):
            sigma_odd[members] = s
        resampled = SpinConfig(spin.geometry, spin.sigma_even, sigma_odd, spin.omega)
        yield resampled.heights()


@dataclass(frozen=True)
class ResampledPair:
    """
    Exact statistics of (h(u), h(v)) under fair odd-spin resampling.

    Attributes:
        covariance: E[h(u) h(v) | σ_even, ω]
        max_u: Largest h(u) over all resamplings
        max_v: Largest h(v) over all resamplings
        n_assignments: Number of σ_odd assignments enumerated
    """

    covariance: float
    max_u: int
    max_v: int
    n_assignments: int


def resampled_pair(spin: SpinConfig, u: Face, v: Face) -> ResampledPair:
    """Enumerate odd-spin resamplings and collect E[h(u) h(v)] and max h."""
    geo = spin.geometry
    i, j = geo.locate(u), geo.locate(v)
    total, count = 0, 0
    max_u = max_v = None
    for h in enumerate_odd_resamplings(spin):
        hu, hv = int(h[i]), int(h[j])
        total += hu * hv
        count += 1
        max_u = hu if max_u is None else max(max_u, hu)
        max_v = hv if max_v is None else max(max_v, hv)
    return ResampledPair(total / count, max_u, max_v, count)
