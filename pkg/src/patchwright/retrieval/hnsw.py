"""Hierarchical navigable small-world graph for approximate top-k search.

Operates on L2-normalized vectors, so cosine distance reduces to 1 - dot.
Scale target is the in-process store (thousands of records), not sharded
corpora; the structure favors clarity over every micro-optimization.
"""

from __future__ import annotations

import heapq
import math
from typing import Dict, List, Optional, Set, Tuple

import numpy as np


class HnswIndex:
    def __init__(
        self,
        dimension: int,
        m: int = 16,
        ef_construction: int = 200,
        ef_search: int = 96,
        seed: int = 42,
    ):
        self.dimension = dimension
        self.m = m
        self.m0 = 2 * m
        self.ef_construction = ef_construction
        self.ef_search = ef_search
        self._ml = 1.0 / math.log(m)
        self._rng = np.random.default_rng(seed)
        self._vectors: List[np.ndarray] = []
        self._levels: List[int] = []
        self._deleted: Set[int] = set()
        # One adjacency dict per level: node -> list of neighbor nodes.
        self._graph: List[Dict[int, List[int]]] = []
        self._entry: Optional[int] = None

    def __len__(self) -> int:
        return len(self._vectors) - len(self._deleted)

    def _distance(self, query: np.ndarray, node: int) -> float:
        return 1.0 - float(np.dot(query, self._vectors[node]))

    def _distances(self, query: np.ndarray, nodes: List[int]) -> np.ndarray:
        block = np.stack([self._vectors[n] for n in nodes])
        return 1.0 - block @ query

    def add(self, vector: np.ndarray) -> int:
        """Insert a vector; returns the node id (dense, insertion-ordered)."""
        vector = np.asarray(vector, dtype=np.float64)
        node = len(self._vectors)
        self._vectors.append(vector)
        level = int(-math.log(max(self._rng.random(), 1e-12)) * self._ml)
        self._levels.append(level)
        while len(self._graph) <= level:
            self._graph.append({})
        for lc in range(level + 1):
            self._graph[lc][node] = []

        if self._entry is None:
            self._entry = node
            return node

        entry = self._entry
        max_level = self._levels[self._entry]
        # Greedy descent through the layers above the new node's level.
        for lc in range(max_level, level, -1):
            entry = self._greedy_closest(vector, entry, lc)

        for lc in range(min(level, max_level), -1, -1):
            candidates = self._search_layer(vector, [entry], self.ef_construction, lc)
            m_max = self.m0 if lc == 0 else self.m
            neighbors = [n for _, n in heapq.nsmallest(self.m, candidates)]
            self._graph[lc][node] = list(neighbors)
            for neighbor in neighbors:
                links = self._graph[lc][neighbor]
                links.append(node)
                if len(links) > m_max:
                    dists = self._distances(self._vectors[neighbor], links)
                    keep = np.argsort(dists, kind="stable")[:m_max]
                    self._graph[lc][neighbor] = [links[i] for i in keep]
            entry = min(candidates)[1]

        if level > max_level:
            self._entry = node
        return node

    def mark_deleted(self, node: int) -> None:
        """Tombstone: the node keeps routing but is never returned."""
        self._deleted.add(node)

    def _greedy_closest(self, query: np.ndarray, entry: int, level: int) -> int:
        current = entry
        current_dist = self._distance(query, current)
        improved = True
        while improved:
            improved = False
            neighbors = self._graph[level].get(current, [])
            if not neighbors:
                break
            dists = self._distances(query, neighbors)
            best = int(np.argmin(dists))
            if dists[best] < current_dist:
                current = neighbors[best]
                current_dist = float(dists[best])
                improved = True
        return current

    def _search_layer(
        self, query: np.ndarray, entries: List[int], ef: int, level: int
    ) -> List[Tuple[float, int]]:
        visited = set(entries)
        candidates: List[Tuple[float, int]] = []
        results: List[Tuple[float, int]] = []  # max-heap via negated distance
        for e in entries:
            d = self._distance(query, e)
            heapq.heappush(candidates, (d, e))
            heapq.heappush(results, (-d, e))

        while candidates:
            dist, node = heapq.heappop(candidates)
            if dist > -results[0][0]:
                break
            fresh = [n for n in self._graph[level].get(node, []) if n not in visited]
            if not fresh:
                continue
            visited.update(fresh)
            dists = self._distances(query, fresh)
            farthest = -results[0][0]
            for d, n in zip(dists, fresh):
                if d < farthest or len(results) < ef:
                    heapq.heappush(candidates, (float(d), n))
                    heapq.heappush(results, (-float(d), n))
                    if len(results) > ef:
                        heapq.heappop(results)
                    farthest = -results[0][0]
        return [(-negd, n) for negd, n in results]

    def search(self, query: np.ndarray, k: int, ef: Optional[int] = None) -> List[Tuple[int, float]]:
        """Approximate top-k as (node id, cosine similarity), best first."""
        if self._entry is None or k <= 0:
            return []
        query = np.asarray(query, dtype=np.float64)
        ef = max(ef or self.ef_search, k)
        entry = self._entry
        for lc in range(self._levels[self._entry], 0, -1):
            entry = self._greedy_closest(query, entry, lc)
        found = self._search_layer(query, [entry], ef + len(self._deleted), 0)
        found.sort(key=lambda pair: (pair[0], pair[1]))
        out = []
        for dist, node in found:
            if node in self._deleted:
                continue
            out.append((node, 1.0 - dist))
            if len(out) == k:
                break
        return out
