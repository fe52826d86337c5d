"""Chung-Lu random graphs: exact sampling and edge-probability queries.

Every unordered pair ``{u, v}`` is an edge independently with probability
``min(w_u w_v / W, 1)``.  :func:`sample_graph` draws this law in time roughly
proportional to ``n + m`` by walking each row in descending-weight order with
geometric skips under the current (upper-bound) probability and thinning the
landing pair by ``p_true / p_bound``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numba
import numpy as np

from .rng import make_generator
from .weights import WeightSequence


class SelfLoop(ValueError):
    pass


class IndexOutOfRange(IndexError):
    pass


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable undirected simple graph in CSR form (sorted neighbour lists)."""

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    weights: Optional[np.ndarray] = None

    @property
    def m(self) -> int:
        return int(self.indices.shape[0] // 2)

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]: self.indptr[v + 1]]

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def edges(self) -> np.ndarray:
        """``(m, 2)`` array of edges ``u < v``, lexicographically sorted."""
        src = np.repeat(np.arange(self.n), self.degrees())
        keep = src < self.indices
        return np.column_stack((src[keep], self.indices[keep]))

    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(u), int(v)) for u, v in self.edges()}

    def induced(self, vertices: Iterable[int]) -> "Graph":
        """Subgraph on ``vertices``; other vertices keep their index but lose all edges."""
        mask = np.zeros(self.n, dtype=bool)
        mask[np.asarray(list(vertices), dtype=np.int64)] = True
        e = self.edges()
        keep = mask[e[:, 0]] & mask[e[:, 1]]
        return from_edges(self.n, e[keep, 0], e[keep, 1], self.weights)


def from_edges(n: int, us, vs, weights: Optional[np.ndarray] = None) -> Graph:
    """Build a graph from edge endpoint arrays; duplicates and loops are rejected."""
    us = np.asarray(us, dtype=np.int64)
    vs = np.asarray(vs, dtype=np.int64)
    if us.shape != vs.shape:
        raise ValueError("endpoint arrays differ in length")
    if us.size and (min(us.min(), vs.min()) < 0 or max(us.max(), vs.max()) >= n):
        raise IndexOutOfRange("edge endpoint outside [0, n)")
    if np.any(us == vs):
        raise SelfLoop("self-loops are not allowed")
    src = np.concatenate((us, vs))
    dst = np.concatenate((vs, us))
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    if src.size > 1 and np.any((src[1:] == src[:-1]) & (dst[1:] == dst[:-1])):
        raise ValueError("duplicate edge")
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
    indptr.setflags(write=False)
    dst.setflags(write=False)
    if weights is not None and len(weights) != n:
        raise ValueError("weights length differs from n")
    return Graph(n=n, indptr=indptr, indices=dst, weights=weights)


def edge_probability(ws: WeightSequence, u: int, v: int) -> float:
    """``min(w_u w_v / W, 1)`` for distinct vertices ``u, v`` (0-based)."""
    for x in (u, v):
        if not 0 <= x < ws.n:
            raise IndexOutOfRange(f"vertex {x} outside [0, {ws.n})")
    if u == v:
        raise SelfLoop("edge probability is undefined for u == v")
    return min(float(ws.weights[u]) * float(ws.weights[v]) / ws.total_weight, 1.0)


@numba.njit(cache=True)
def _skip_sample(w, total, gen, cap):
    # w sorted descending; returns positions into w of sampled pairs
    n = w.shape[0]
    us = np.empty(cap, dtype=np.int64)
    vs = np.empty(cap, dtype=np.int64)
    m = 0
    for u in range(n - 1):
        v = u + 1
        p = min(w[u] * w[v] / total, 1.0)
        while v < n and p > 0.0:
            if p < 1.0:
                v += int(math.floor(math.log(1.0 - gen.random()) / math.log1p(-p)))
                if v >= n:
                    break
            q = min(w[u] * w[v] / total, 1.0)
            if q >= 1.0 or gen.random() < q / p:
                if m == us.shape[0]:
                    grow = us.shape[0] * 2 + 16
                    us2 = np.empty(grow, dtype=np.int64)
                    vs2 = np.empty(grow, dtype=np.int64)
                    us2[:m] = us[:m]
                    vs2[:m] = vs[:m]
                    us, vs = us2, vs2
                us[m] = u
                vs[m] = v
                m += 1
            p = q
            v += 1
    return us[:m], vs[:m]


def sample_graph(ws: WeightSequence, seed, vertices: Optional[Iterable[int]] = None) -> Graph:
    """Draw ``G ~ CL(w)``; deterministic in ``(ws, seed)``.

    With ``vertices`` given, only pairs inside that set are sampled (the total
    weight stays that of the full sequence), which equals sampling the full
    graph and taking the induced subgraph.  ``seed`` is an int, a
    ``SeedSequence`` or a ``Generator``.
    """
    gen = make_generator(seed)
    ids = np.arange(ws.n) if vertices is None else np.unique(np.asarray(list(vertices), dtype=np.int64))
    # descending weight; ties broken by descending index so order is total
    order = ids[::-1]
    w = np.ascontiguousarray(ws.weights[order], dtype=np.float64)
    if w.size < 2:
        return from_edges(ws.n, [], [], ws.weights)
    cap = int(min(w.sum(), ws.total_weight)) // 2 + 16
    pu, pv = _skip_sample(w, float(ws.total_weight), gen, cap)
    return from_edges(ws.n, order[pu], order[pv], ws.weights)


def sample_graph_naive(ws: WeightSequence, seed) -> Graph:
    """One Bernoulli draw per pair, row by row; the distributional reference."""
    gen = make_generator(seed)
    w = ws.weights
    us, vs = [], []
    for u in range(ws.n - 1):
        p = np.minimum(w[u] * w[u + 1:] / ws.total_weight, 1.0)
        hit = np.nonzero(gen.random(p.shape[0]) < p)[0]
        us.append(np.full(hit.size, u))
        vs.append(hit + u + 1)
    if not us:
        return from_edges(ws.n, [], [], ws.weights)
    return from_edges(ws.n, np.concatenate(us), np.concatenate(vs), ws.weights)


def write_edge_list(g: Graph, path) -> None:
    """Text lines ``u v`` with ``u < v``, 1-indexed."""
    e = g.edges() + 1
    with open(path, "w") as fh:
        for u, v in e:
            fh.write(f"{u} {v}\n")


def read_edge_list(path, n: int) -> Graph:
    data = np.loadtxt(path, dtype=np.int64, ndmin=2)
    if data.size == 0:
        return from_edges(n, [], [])
    return from_edges(n, data[:, 0] - 1, data[:, 1] - 1)
