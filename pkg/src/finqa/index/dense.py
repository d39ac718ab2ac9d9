"""Dense vector search: exact cosine scan and an HNSW graph index.

Vectors are unit-normalized, so cosine similarity is the dot product. Both
index modes rank by similarity descending with chunk_id ascending tie-break.
"""

from __future__ import annotations

import heapq
import math
import random

import numpy as np

from .sparse import ScoredCandidate


class DimensionMismatch(ValueError):
    pass


def _check_unit(vec: np.ndarray) -> np.ndarray:
    vec = np.asarray(vec, dtype=np.float64)
    norm = np.linalg.norm(vec)
    if norm == 0.0:
        raise ValueError("zero vector")
    return vec / norm


class ExactDenseIndex:
    """Full-scan cosine search; the oracle against which HNSW is measured."""

    def __init__(self, dim: int):
        self.dim = dim
        self._ids: list[str] = []
        self._pos: dict[str, int] = {}
        self._vecs = np.zeros((0, dim), dtype=np.float64)

    def __len__(self) -> int:
        return len(self._ids)

    def __contains__(self, chunk_id: str) -> bool:
        return chunk_id in self._pos

    def add(self, chunk_id: str, vec: np.ndarray) -> None:
        vec = _check_unit(vec)
        if vec.shape != (self.dim,):
            raise DimensionMismatch(f"expected dim {self.dim}, got {vec.shape}")
        if chunk_id in self._pos:
            self._vecs[self._pos[chunk_id]] = vec
            return
        self._pos[chunk_id] = len(self._ids)
        self._ids.append(chunk_id)
        self._vecs = np.vstack([self._vecs, vec[None, :]])

    def remove(self, chunk_id: str) -> bool:
        i = self._pos.pop(chunk_id, None)
        if i is None:
            return False
        last = len(self._ids) - 1
        if i != last:
            self._ids[i] = self._ids[last]
            self._vecs[i] = self._vecs[last]
            self._pos[self._ids[i]] = i
        self._ids.pop()
        self._vecs = self._vecs[:last]
        return True

    def vector(self, chunk_id: str) -> np.ndarray:
        return self._vecs[self._pos[chunk_id]].copy()

    def items(self):
        for cid in self._ids:
            yield cid, self._vecs[self._pos[cid]]

    def search(self, vec: np.ndarray, k: int) -> list[ScoredCandidate]:
        if not self._ids:
            return []
        vec = np.asarray(vec, dtype=np.float64)
        if vec.shape != (self.dim,):
            raise DimensionMismatch(f"expected dim {self.dim}, got {vec.shape}")
        sims = self._vecs @ vec
        order = sorted(range(len(self._ids)), key=lambda i: (-sims[i], self._ids[i]))
        return [ScoredCandidate(self._ids[i], float(sims[i]), "dense") for i in order[:k]]


class HnswIndex:
    """Hierarchical navigable small world graph over unit vectors.

    Removals are soft (tombstones); `compact()` rebuilds once tombstones
    exceed half the live set. Deterministic given insertion order (seeded
    level RNG).
    """

    def __init__(self, dim: int, m: int = 16, ef_construction: int = 200,
                 ef_search: int = 64, seed: int = 0x5EED):
        self.dim = dim
        self.m = m
        self.m0 = 2 * m
        self.ef_construction = ef_construction
        self.ef_search = ef_search
        self._ml = 1.0 / math.log(m)
        self._rng = random.Random(seed)
        self._seed = seed

        self._ids: list[str] = []
        self._pos: dict[str, int] = {}
        self._vecs: list[np.ndarray] = []
        self._levels: list[int] = []
        self._links: list[list[list[int]]] = []  # node -> level -> neighbor list
        self._deleted: set[int] = set()
        self._entry: int | None = None
        self._max_level = -1

    def __len__(self) -> int:
        return len(self._ids) - len(self._deleted)

    def __contains__(self, chunk_id: str) -> bool:
        i = self._pos.get(chunk_id)
        return i is not None and i not in self._deleted

    def _sim(self, i: int, vec: np.ndarray) -> float:
        return float(self._vecs[i] @ vec)

    def _search_layer(self, vec: np.ndarray, entry: int, ef: int, level: int) -> list[tuple[float, int]]:
        """Best-first search at one level; returns up to ef (sim, node) pairs."""
        visited = {entry}
        d0 = self._sim(entry, vec)
        candidates = [(-d0, entry)]  # max-heap on similarity
        results = [(d0, entry)]  # min-heap keeps the worst of the best at [0]
        while candidates:
            neg_sim, node = heapq.heappop(candidates)
            if -neg_sim < results[0][0] and len(results) >= ef:
                break
            for nb in self._links[node][level]:
                if nb in visited:
                    continue
                visited.add(nb)
                s = self._sim(nb, vec)
                if len(results) < ef or s > results[0][0]:
                    heapq.heappush(candidates, (-s, nb))
                    heapq.heappush(results, (s, nb))
                    if len(results) > ef:
                        heapq.heappop(results)
        return sorted(results, reverse=True)

    def _select_neighbors(self, cands: list[tuple[float, int]], m: int) -> list[int]:
        return [node for _, node in sorted(cands, reverse=True)[:m]]

    def add(self, chunk_id: str, vec: np.ndarray) -> None:
        vec = _check_unit(vec)
        if vec.shape != (self.dim,):
            raise DimensionMismatch(f"expected dim {self.dim}, got {vec.shape}")
        if chunk_id in self._pos:
            self.remove(chunk_id)

        level = int(-math.log(max(self._rng.random(), 1e-12)) * self._ml)
        node = len(self._ids)
        self._ids.append(chunk_id)
        self._pos[chunk_id] = node
        self._vecs.append(vec)
        self._levels.append(level)
        self._links.append([[] for _ in range(level + 1)])

        if self._entry is None:
            self._entry = node
            self._max_level = level
            return

        ep = self._entry
        for lv in range(self._max_level, level, -1):
            ep = self._search_layer(vec, ep, 1, lv)[0][1]

        for lv in range(min(level, self._max_level), -1, -1):
            cands = self._search_layer(vec, ep, self.ef_construction, lv)
            m_max = self.m0 if lv == 0 else self.m
            neighbors = self._select_neighbors(cands, self.m)
            self._links[node][lv] = list(neighbors)
            for nb in neighbors:
                links = self._links[nb][lv]
                links.append(node)
                if len(links) > m_max:
                    ranked = sorted(links, key=lambda x: -self._sim(x, self._vecs[nb]))
                    self._links[nb][lv] = ranked[:m_max]
            ep = cands[0][1]

        if level > self._max_level:
            self._max_level = level
            self._entry = node

    def remove(self, chunk_id: str) -> bool:
        i = self._pos.get(chunk_id)
        if i is None or i in self._deleted:
            return False
        self._deleted.add(i)
        if len(self._deleted) > max(8, len(self._ids) // 2):
            self.compact()
        return True

    def compact(self) -> None:
        """Rebuild the graph without tombstoned nodes."""
        live = [(self._ids[i], self._vecs[i]) for i in range(len(self._ids))
                if i not in self._deleted]
        self.__init__(self.dim, self.m, self.ef_construction, self.ef_search, self._seed)
        for cid, vec in live:
            self.add(cid, vec)

    def items(self):
        for i, cid in enumerate(self._ids):
            if i not in self._deleted:
                yield cid, self._vecs[i]

    def search(self, vec: np.ndarray, k: int, ef_search: int | None = None) -> list[ScoredCandidate]:
        if self._entry is None or len(self) == 0:
            return []
        vec = np.asarray(vec, dtype=np.float64)
        if vec.shape != (self.dim,):
            raise DimensionMismatch(f"expected dim {self.dim}, got {vec.shape}")
        ef = max(ef_search or self.ef_search, k)

        ep = self._entry
        for lv in range(self._max_level, 0, -1):
            ep = self._search_layer(vec, ep, 1, lv)[0][1]
        found = self._search_layer(vec, ep, ef + len(self._deleted), 0)
        hits = [(s, i) for s, i in found if i not in self._deleted]
        hits.sort(key=lambda si: (-si[0], self._ids[si[1]]))
        return [ScoredCandidate(self._ids[i], s, "dense") for s, i in hits[:k]]
