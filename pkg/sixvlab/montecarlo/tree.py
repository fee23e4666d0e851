"""
Level-line trees and branching functions.

Given (σ_even, ω) on an even domain the level lines of h organize into a
rooted tree. Even vertices group same-sign even faces lying in one component
of the plane minus the open edges of the opposite sign. Odd vertices are the
bounded components of the plane minus ω. Heights are recovered from the tree
by one fair coin per odd vertex.
"""

from dataclasses import dataclass, field

import numpy as np

from ..utils.errors import InvariantViolationError
from ..utils.logger import get_logger
from .geometry import OUTER, Face
from .spins import SpinConfig, odd_components

logger = get_logger("sixvlab.tree")


@dataclass
class TreeVertex:
    """
    One vertex of a level-line tree.

    Attributes:
        key: Position in ``LevelLineTree.vertices``
        odd: Whether this is a component of the plane minus ω
        sign: σ_even of the member faces (0 for odd vertices)
        faces: Member face indices
        parent: Parent key, None at the root
        depth: Distance to the root
    """

    key: int
    odd: bool
    sign: int
    faces: list[int]
    parent: int | None = None
    depth: int = 0
    children: list[int] = field(default_factory=list)


@dataclass(frozen=True)
class BranchingValues:
    """ψ(u, v) and the depths ψ*(u), ψ*(v)."""

    psi: int
    psi_star_u: int
    psi_star_v: int

    @property
    def covariance(self) -> int:
        """E[h(u) h(v) | tree]."""
        k, odd = divmod(self.psi, 2)
        if not odd:
            return 4 * k
        if self.psi_star_u == self.psi_star_v == self.psi:
            return 4 * k + 1
        return 4 * k + 2


@dataclass
class LevelLineTree:
    """
    Rooted tree of level lines.

    Attributes:
        spin: Spin configuration the tree was built from
        vertices: All vertices, the root first
        face_vertex: (N,) key of the vertex housing each face
    """

    spin: SpinConfig
    vertices: list[TreeVertex]
    face_vertex: np.ndarray

    @property
    def root(self) -> TreeVertex:
        return self.vertices[0]

    @property
    def odd_vertices(self) -> list[TreeVertex]:
        return [v for v in self.vertices if v.odd]

    @property
    def even_vertices(self) -> list[TreeVertex]:
        return [v for v in self.vertices if not v.odd]

    def vertex_of(self, face: Face) -> TreeVertex:
        return self.vertices[self.face_vertex[self.spin.geometry.locate(face)]]

    def path_to_root(self, key: int) -> list[int]:
        path = [key]
        while self.vertices[path[-1]].parent is not None:
            path.append(self.vertices[path[-1]].parent)
        return path

    def psi_star(self, u: Face) -> int:
        """Depth of the vertex housing u."""
        return self.vertex_of(u).depth

    def psi(self, u: Face, v: Face) -> int:
        """|p^{u∂D} ∩ p^{v∂D}| - 1, the depth of the last shared vertex."""
        shared = set(self.path_to_root(self.vertex_of(u).key))
        shared &= set(self.path_to_root(self.vertex_of(v).key))
        return len(shared) - 1

    def branching(self, u: Face, v: Face) -> BranchingValues:
        return BranchingValues(self.psi(u, v), self.psi_star(u), self.psi_star(v))

    def vertex_heights(self, coins: dict[int, int]) -> dict[int, int]:
        """
        Heights of all vertices for one coin per odd vertex.

        The root sits at 0, an odd vertex one coin step from its parent, and
        an even vertex repeats the step of its parent.
        """
        heights: dict[int, int] = {0: 0}
        for v in sorted(self.vertices[1:], key=lambda t: t.depth):
            p = self.vertices[v.parent]
            if v.odd:
                heights[v.key] = heights[p.key] + coins[v.key]
            else:
                heights[v.key] = 2 * heights[p.key] - heights[p.parent]
        return heights

    def face_heights(self, coins: dict[int, int]) -> np.ndarray:
        vh = self.vertex_heights(coins)
        return np.array([vh[k] for k in self.face_vertex.tolist()], dtype=np.int64)

    def coins_from_heights(self, heights: np.ndarray) -> dict[int, int]:
        """The coin of every odd vertex as read off a height function."""
        coins = {}
        for v in self.odd_vertices:
            parent = self.vertices[v.parent]
            coins[v.key] = int(heights[v.faces[0]] - heights[parent.faces[0]])
        return coins

    def resample(self, rng: np.random.Generator) -> np.ndarray:
        """Face heights for fresh fair coins on every odd vertex."""
        flips = rng.random(len(self.vertices)) < 0.5
        return self.face_heights({v.key: 1 if flips[v.key] else -1 for v in self.odd_vertices})

    def validate(self, heights: np.ndarray | None = None) -> None:
        """
        Check the structural invariants, and constancy of h on vertices when
        the generating heights are given.

        Raises:
            InvariantViolationError: On any violation
        """
        for v in self.vertices:
            if v.odd and v.depth % 2 != 1:
                raise InvariantViolationError(f"Odd vertex {v.key} at depth {v.depth}")
            if not v.odd and v.depth % 4 != (0 if v.sign == 1 else 2):
                raise InvariantViolationError(
                    f"Even vertex {v.key} of sign {v.sign} at depth {v.depth}"
                )
            if v.odd and len(v.children) > 1:
                raise InvariantViolationError(f"Odd vertex {v.key} has {len(v.children)} children")
            if heights is not None and len(set(heights[v.faces].tolist())) != 1:
                raise InvariantViolationError(f"Height is not constant on vertex {v.key}")


def _even_face_cell(spin: SpinConfig, face: int):
    """An odd face (or OUTER) adjacent to an even face."""
    for j in spin.geometry.neighbors[face]:
        if j >= 0:
            return int(j)
    return OUTER


def build_level_line_tree(spin: SpinConfig, validate: bool = True) -> LevelLineTree:
    """
    Build the level-line tree of a spin configuration on an even domain.

    Args:
        spin: Sample of (σ_even, σ_odd, ω)
        validate: Run ``LevelLineTree.validate`` before returning

    Returns:
        The tree, with depths and per-face membership filled in

    Raises:
        ValueError: On a torus
        InvariantViolationError: If the construction breaks a structural rule
    """
    geo = spin.geometry
    if geo.is_torus:
        raise ValueError("Level-line trees need an even domain")

    try:
        split = {
            1: geo.odd_cell_components(spin.omega_minus),
            -1: geo.odd_cell_components(spin.omega_plus),
        }
        vertices: list[TreeVertex] = []
        face_vertex = np.full(geo.n_faces, -1, dtype=np.int64)

        # even vertices, keyed by (sign, component label)
        even_key: dict[tuple[int, object], int] = {}
        root_label = (1, split[1].find(OUTER))
        even_key[root_label] = 0
        vertices.append(TreeVertex(key=0, odd=False, sign=1, faces=[]))
        for i in np.flatnonzero(geo.is_even):
            s = int(spin.sigma_even[i])
            label = (s, split[s].find(_even_face_cell(spin, i)))
            if label not in even_key:
                even_key[label] = len(vertices)
                vertices.append(TreeVertex(key=len(vertices), odd=False, sign=s, faces=[]))
            vertices[even_key[label]].faces.append(int(i))
            face_vertex[i] = even_key[label]
        if set(face_vertex[list(geo.circuit)].tolist()) != {0}:
            raise InvariantViolationError("Boundary faces are not all in the root")

        for members in odd_components(spin).values():
            key = len(vertices)
            vertices.append(TreeVertex(key=key, odd=True, sign=0, faces=sorted(members)))
            face_vertex[members] = key

        # odd vertex -> even vertex across its leftmost boundary edge
        for v in vertices:
            if not v.odd:
                continue
            xs = geo.faces[v.faces]
            x, y = min(map(tuple, xs.tolist()))
            if not geo.contains((x - 1, y)):
                raise InvariantViolationError(f"Odd vertex {v.key} touches the outside")
            v.parent = int(face_vertex[geo.locate((x - 1, y))])

        # even vertex -> the odd vertex in its component whose parent has the other sign
        claims: dict[tuple[int, object], list[int]] = {}
        for v in vertices:
            if not v.odd:
                continue
            parent_sign = vertices[v.parent].sign
            label = (-parent_sign, split[-parent_sign].find(v.faces[0]))
            claims.setdefault(label, []).append(v.key)
        for label, key in even_key.items():
            if key == 0:
                continue
            found = claims.get(label, [])
            if len(found) != 1:
                raise InvariantViolationError(
                    f"Even vertex {key} has {len(found)} candidate parents"
                )
            vertices[key].parent = found[0]
    except InvariantViolationError as e:
        logger.error(f"Level-line tree construction failed: {e}")
        raise

    for v in vertices[1:]:
        vertices[v.parent].children.append(v.key)
    _assign_depths(vertices)

    tree = LevelLineTree(spin=spin, vertices=vertices, face_vertex=face_vertex)
    if validate:
        tree.validate()
    logger.debug(
        f"Level-line tree: {len(tree.even_vertices)} even and "
        f"{len(tree.odd_vertices)} odd vertices, depth {max(v.depth for v in vertices)}"
    )
    return tree


def _assign_depths(vertices: list[TreeVertex]) -> None:
    stack = [0]
    seen = {0}
    while stack:
        v = vertices[stack.pop()]
        for c in v.children:
            if c in seen:
                raise InvariantViolationError("Level-line tree has a cycle")
            seen.add(c)
            vertices[c].depth = v.depth + 1
            stack.append(c)
    if len(seen) != len(vertices):
        raise InvariantViolationError("Level-line tree is not connected to the root")


def conditional_covariance(tree: LevelLineTree, u: Face, v: Face) -> int:
    """
    E[h(u) h(v) | tree]: 4k when ψ = 2k; 4k + 1 when ψ = 2k + 1 and both
    faces sit on that odd vertex; 4k + 2 when ψ = 2k + 1 and one lies deeper.
    """
    return tree.branching(u, v).covariance
