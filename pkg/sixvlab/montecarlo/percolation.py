"""
Alternating crossings of ω^+ and ω^- in rectangles and annuli.
"""

import math
from collections import deque
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ..utils.logger import get_logger
from ..utils.union_find import UnionFind
from .geometry import OUTSIDE, Face, Geometry
from .spins import SpinConfig

logger = get_logger("sixvlab.percolation")


class AlternatingMode(Enum):
    HORI = "hori"
    VERTI = "verti"
    CIRCUIT = "circuit"
    ARM = "arm"


@dataclass(frozen=True)
class Rectangle:
    """Faces with x0 <= x <= x1 and y0 <= y <= y1."""

    x0: int
    y0: int
    x1: int
    y1: int

    def __post_init__(self):
        if self.x1 - self.x0 < 4 or self.y1 - self.y0 < 4:
            raise ValueError(f"Rectangle sides must be at least 4, got {self}")

    def contains(self, face: Face) -> bool:
        return self.x0 <= face[0] <= self.x1 and self.y0 <= face[1] <= self.y1

    def corners(self) -> list[Face]:
        return [(self.x0, self.y0), (self.x1, self.y0), (self.x0, self.y1), (self.x1, self.y1)]


@dataclass(frozen=True)
class Annulus:
    """Faces at L∞ distance between r and R from a centre face."""

    center: Face
    r: int
    R: int

    def __post_init__(self):
        if self.r < 1 or self.R - self.r < 3:
            raise ValueError(f"Annulus needs 1 <= r and R - r >= 3, got r={self.r}, R={self.R}")

    def distance(self, face: Face) -> int:
        return max(abs(face[0] - self.center[0]), abs(face[1] - self.center[1]))

    def contains(self, face: Face) -> bool:
        return self.r <= self.distance(face) <= self.R

    def corners(self) -> list[Face]:
        cx, cy = self.center
        return [(cx + sx * self.R, cy + sy * self.R) for sx in (-1, 1) for sy in (-1, 1)]


def square_circuit(center: Face, radius: int) -> list[Face]:
    """Faces at L∞ distance ``radius`` from ``center``, walked counter-clockwise."""
    if radius < 1:
        raise ValueError(f"radius must be positive, got {radius}")
    cx, cy = center
    side = range(-radius, radius)
    ring = [(cx + d, cy - radius) for d in side]
    ring += [(cx + radius, cy + d) for d in side]
    ring += [(cx - d, cy + radius) for d in side]
    ring += [(cx - radius, cy - d) for d in side]
    return ring


def _region_faces(geometry: Geometry, region) -> np.ndarray:
    for corner in region.corners():
        if not geometry.contains(corner):
            raise ValueError(f"{region} is not inside the {geometry.kind.value}")
    return np.array([region.contains(tuple(f)) for f in geometry.faces.tolist()], dtype=bool)


def _edge_mask(spin: SpinConfig, inside: np.ndarray, sign: int) -> np.ndarray:
    """Open edges of the given sign with both endpoints inside the region."""
    a, b = spin.geometry.even_edges.T
    base = spin.omega_plus if sign == 1 else spin.omega_minus
    return base & inside[a] & inside[b]


def _clusters(spin: SpinConfig, inside: np.ndarray, sign: int) -> UnionFind:
    geo = spin.geometry
    faces = np.flatnonzero(inside & geo.is_even & (spin.sigma_even == sign)).tolist()
    uf = UnionFind(faces)
    for e in np.flatnonzero(_edge_mask(spin, inside, sign)):
        uf.union(int(geo.even_edges[e, 0]), int(geo.even_edges[e, 1]))
    return uf


def _greedy_alternation(labels: list[int]) -> int:
    """Longest +,-,+,- subsequence starting with +, rounded down to pairs."""
    want, picked = 1, 0
    for s in labels:
        if s == want:
            picked += 1
            want = -want
    return picked - picked % 2


def _crossings(spin: SpinConfig, rect: Rectangle, vertical: bool) -> int:
    geo = spin.geometry
    inside = _region_faces(geo, rect)
    xs, ys = geo.faces[:, 0], geo.faces[:, 1]
    if vertical:
        start, end = ys >= rect.y1 - 1, ys <= rect.y0 + 1
        order = xs  # left to right
    else:
        start, end = xs <= rect.x0 + 1, xs >= rect.x1 - 1
        order = -ys  # top to bottom
    start_faces = np.flatnonzero(inside & start & geo.is_even)
    labels: dict[int, int] = {}
    for sign in (1, -1):
        uf = _clusters(spin, inside, sign)
        reaching = {uf.find(int(i)) for i in np.flatnonzero(inside & end & geo.is_even) if int(i) in uf}
        for i in start_faces.tolist():
            if i in uf and uf.size(i) > 1 and uf.find(i) in reaching:
                labels[i] = sign
    ordered = sorted(labels, key=lambda i: (order[i], i))
    return _greedy_alternation([labels[i] for i in ordered])


def _nested_circuits(spin: SpinConfig, ann: Annulus) -> int:
    geo = spin.geometry
    inside = _region_faces(geo, ann)
    dist = np.array([ann.distance(tuple(f)) for f in geo.faces.tolist()])
    cells = set(np.flatnonzero(inside & ~geo.is_even).tolist())
    links: dict[int, list[tuple[int, int]]] = {c: [] for c in cells}
    for a, b, e in geo.odd_links:
        if b != OUTSIDE and a in cells and b in cells:
            links[a].append((b, e))
            links[b].append((a, e))
    hole = {c for c in cells if dist[c] <= ann.r + 1}
    reached = {c for c in cells if dist[c] >= ann.R - 1}
    if not hole or not reached:
        return 0

    count, sign = 0, 1
    while True:
        blocked = _edge_mask(spin, inside, sign)
        queue = deque(reached)
        seen = set(reached)
        while queue:
            a = queue.popleft()
            for b, e in links[a]:
                if b in seen or (e != OUTSIDE and blocked[e]):
                    continue
                seen.add(b)
                queue.append(b)
        if seen & hole or seen == reached:
            break
        count += 1
        reached = seen
        sign = -sign
    return count - count % 2


def _arms(spin: SpinConfig, ann: Annulus) -> int:
    geo = spin.geometry
    inside = _region_faces(geo, ann)
    dist = np.array([ann.distance(tuple(f)) for f in geo.faces.tolist()])
    arms: list[tuple[float, int]] = []
    for sign in (1, -1):
        uf = _clusters(spin, inside, sign)
        for members in uf.components().values():
            members = np.array(members)
            inner = members[dist[members] <= ann.r + 1]
            if len(inner) == 0 or not np.any(dist[members] >= ann.R - 1):
                continue
            dx = geo.faces[inner, 0] - ann.center[0]
            dy = geo.faces[inner, 1] - ann.center[1]
            arms.append((float(np.median(np.arctan2(dy, dx))), sign))
    if not arms:
        return 0
    signs = [s for _, s in sorted(arms)]
    changes = sum(signs[i] != signs[i - 1] for i in range(len(signs)))
    return changes


def count_alternating(spin: SpinConfig, region: Rectangle | Annulus, mode: AlternatingMode | str) -> int:
    """
    Largest even count 2k for which the alternating event holds.

    hori: vertices on the left side, top to bottom, alternately joined to the
    right side by ω^+ and ω^- paths inside the rectangle, starting with ω^+.
    verti: the same on the top side, left to right, joined to the bottom.
    circuit: nested circuits around the hole, outermost first, alternately
    in ω^+ and ω^-. arm: distinct ω^± clusters joining the inner and outer
    boundaries, counted by sign changes around the annulus; this is a lower
    bound on the number of disjoint alternating arms.

    Raises:
        ValueError: On a mode/region mismatch or a region leaving the geometry
    """
    mode = AlternatingMode(mode)
    if mode in (AlternatingMode.HORI, AlternatingMode.VERTI):
        if not isinstance(region, Rectangle):
            raise ValueError(f"Mode {mode.value} needs a Rectangle")
        result = _crossings(spin, region, vertical=mode is AlternatingMode.VERTI)
    else:
        if not isinstance(region, Annulus):
            raise ValueError(f"Mode {mode.value} needs an Annulus")
        result = _nested_circuits(spin, region) if mode is AlternatingMode.CIRCUIT else _arms(spin, region)
    logger.debug(f"Alternating {mode.value} count in {region}: {result}")
    return result


def arm_frequency(counts: list[int], threshold: int = 2) -> float:
    """Fraction of samples with at least ``threshold`` alternating arms."""
    if not counts:
        return math.nan
    return float(np.mean(np.asarray(counts) >= threshold))
