from collections.abc import Hashable, Iterable


class UnionFind:
    """
    Disjoint-set forest with union by rank and path compression.

    Used to label connected components of faces (spin clusters, complements
    of percolation configurations) when building level-line trees.
    """

    def __init__(self, items: Iterable[Hashable]):
        self._leader = {s: s for s in items}
        self._size = dict.fromkeys(self._leader, 1)
        self._rank = dict.fromkeys(self._leader, 0)
        self.n_clusters = len(self._leader)

    def __repr__(self) -> str:
        return f"UnionFind: contains {self.n_clusters} clusters."

    def __contains__(self, s: Hashable) -> bool:
        return s in self._leader

    def size(self, s: Hashable) -> int:
        """Number of elements in the set containing ``s``."""
        return self._size[self.find(s)]

    def find(self, s: Hashable) -> Hashable:
        """
        Locate the leader of the set containing ``s``.

        Args:
            s: An element of the structure

        Returns:
            The leader of the set containing ``s``
        """
        path = [s]
        parent = self._leader[s]
        while parent != self._leader[parent]:
            path.append(parent)
            parent = self._leader[parent]

        if len(path) > 1:
            for a in path:
                self._leader[a] = parent

        return parent

    def union(self, a: Hashable, b: Hashable) -> None:
        """Merge the sets containing ``a`` and ``b``."""
        s1, s2 = self.find(a), self.find(b)
        if s1 == s2:
            return
        r1, r2 = self._rank[s1], self._rank[s2]
        if r2 > r1:
            r1, r2 = r2, r1
            s1, s2 = s2, s1
        if r1 == r2:
            self._rank[s1] += 1

        self._leader[s2] = s1
        self._size[s1] += self._size[s2]
        self.n_clusters -= 1

    def components(self) -> dict[Hashable, list[Hashable]]:
        """
        Group all elements by leader.

        Returns:
            Mapping leader -> members, members in insertion order
        """
        groups: dict[Hashable, list[Hashable]] = {}
        for s in self._leader:
            groups.setdefault(self.find(s), []).append(s)
        return groups
