"""Dyadic lattice graphs on the chart and single-source shortest paths on them."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra
from scipy.spatial import cKDTree

from ..measure import CHART_RADIUS
from ..potential import LogFactorField
from .quadrature import segment_integrals

# One representative of each +-pair of the 16-neighbourhood.
HALF_STENCIL = ((1, 0), (0, 1), (1, 1), (1, -1), (1, 2), (2, 1), (1, -2), (2, -1))


@dataclass
class GridGraph:
    """Lattice of step ``2**-level`` on the chart, with conformal edge lengths.

    Node ``k < n_lattice`` is lattice point ``ij[k]``; in closed mode the
    intersections of lattice lines with the boundary circle follow. Edge
    weights are unscaled (multiply by ``field.scale``). The CSR matrix has one
    spare trailing row/column reserved for a virtual source.
    """

    level: int
    closed: bool
    nodes: np.ndarray
    ij: np.ndarray
    n_lattice: int
    lookup: np.ndarray
    tails: np.ndarray
    heads: np.ndarray
    weights: np.ndarray
    matrix: csr_matrix
    blocked: np.ndarray

    @property
    def step(self) -> float:
        return 2.0 ** -self.level

    @property
    def n_nodes(self) -> int:
        return self.nodes.size

    @property
    def half_width(self) -> int:
        return (self.lookup.shape[0] - 1) // 2

    def node_at(self, i, j):
        """Node index of lattice point ``(i, j)`` or -1."""
        M = self.half_width
        i = np.asarray(i)
        j = np.asarray(j)
        ok = (np.abs(i) <= M) & (np.abs(j) <= M)
        out = np.full(np.broadcast(i, j).shape, -1, dtype=np.int64)
        out[ok] = self.lookup[(i + M)[ok], (j + M)[ok]]
        return out

    def usable(self, idx: np.ndarray) -> np.ndarray:
        return (idx >= 0) & ~self.blocked[np.maximum(idx, 0)]

    @property
    def kdtree(self) -> cKDTree:
        tree = self.__dict__.get("_kdtree")
        if tree is None:
            ok = np.nonzero(~self.blocked)[0]
            tree = (cKDTree(np.column_stack([self.nodes[ok].real, self.nodes[ok].imag])), ok)
            self.__dict__["_kdtree"] = tree
        return tree[0]

    def nearest(self, z: complex, k: int = 4) -> np.ndarray:
        self.kdtree
        ok = self.__dict__["_kdtree"][1]
        k = min(k, ok.size)
        _, idx = self.kdtree.query([z.real, z.imag], k=k)
        return ok[np.atleast_1d(idx)]

    def shortest_from(self, sources: np.ndarray, offsets: np.ndarray, limit: float = np.inf):
        """Dijkstra from a virtual source joined to ``sources`` with unscaled ``offsets``.

        Returns ``(dist, pred)`` over the real nodes; ``pred == n_nodes`` marks
        the virtual source.
        """
        n = self.n_nodes
        base = self.matrix
        indptr = base.indptr.copy()
        indptr[-1] = indptr[-2] + len(sources)
        indices = np.concatenate([base.indices, np.asarray(sources, dtype=base.indices.dtype)])
        data = np.concatenate([base.data, np.asarray(offsets, dtype=float)])
        g = csr_matrix((data, indices, indptr), shape=base.shape)
        dist, pred = dijkstra(g, directed=True, indices=n, return_predecessors=True, limit=limit)
        return dist[:n], pred[:n]

    def path_to(self, pred: np.ndarray, k: int) -> np.ndarray:
        """Node indices from the first real node after the source up to ``k``."""
        out = [k]
        n = self.n_nodes
        while True:
            p = pred[out[-1]]
            if p < 0 or p == n:
                break
            out.append(p)
        return np.array(out[::-1], dtype=np.int64)


def _lattice(level: int, closed: bool):
    M = 2 ** (level - 1)
    h = 2.0 ** -level
    r = np.arange(-M, M + 1)
    I, J = np.meshgrid(r, r, indexing="ij")
    rr = I * I + J * J
    inside = rr <= M * M if closed else rr < M * M
    lookup = np.full(I.shape, -1, dtype=np.int64)
    ij = np.column_stack([I[inside], J[inside]])
    lookup[inside] = np.arange(ij.shape[0])
    nodes = (ij[:, 0] + 1j * ij[:, 1]) * h
    return M, h, lookup, ij, nodes


def _boundary_extras(M: int, h: float) -> np.ndarray:
    """Points where lattice lines meet the boundary circle, lattice points excluded."""
    pts = []
    for i in range(-M + 1, M):
        s = np.sqrt(M * M - i * i)
        if s != int(s):
            pts += [complex(i, s), complex(i, -s), complex(s, i), complex(-s, i)]
    z = np.unique(np.array(pts, dtype=complex)) * h
    # put exactly on the circle
    return z / np.abs(z) * CHART_RADIUS


def build_grid(field: LogFactorField, level: int, closed: bool) -> GridGraph:
    if level < 1:
        raise ValueError("level must be >= 1")
    M, h, lookup, ij, nodes = _lattice(level, closed)
    n_lat = nodes.size
    tails, heads = [], []
    for di, dj in HALF_STENCIL:
        I = ij[:, 0] + di
        J = ij[:, 1] + dj
        ok = (np.abs(I) <= M) & (np.abs(J) <= M)
        nb = np.full(n_lat, -1, dtype=np.int64)
        nb[ok] = lookup[I[ok] + M, J[ok] + M]
        good = nb >= 0
        tails.append(np.nonzero(good)[0])
        heads.append(nb[good])
    if closed:
        extra = _boundary_extras(M, h)
        nodes = np.concatenate([nodes, extra])
        tree = cKDTree(np.column_stack([nodes.real, nodes.imag]))
        radius = np.sqrt(5.0) * h * (1 + 1e-9)
        pairs = tree.query_pairs(radius, output_type="ndarray")
        pairs = pairs[(pairs[:, 0] >= n_lat) | (pairs[:, 1] >= n_lat)]
        tails.append(pairs[:, 0].astype(np.int64))
        heads.append(pairs[:, 1].astype(np.int64))
    tails = np.concatenate(tails)
    heads = np.concatenate(heads)
    w = segment_integrals(field, nodes[tails], nodes[heads])
    finite = np.isfinite(w)
    tails, heads, w = tails[finite], heads[finite], w[finite]
    n = nodes.size
    blocked = np.zeros(n, dtype=bool)
    cusp = field.atom_pos[field.atom_beta <= -1.0]
    if cusp.size:
        blocked = np.any(np.abs(nodes[:, None] - cusp[None, :]) == 0.0, axis=1)
        keep = ~(blocked[tails] | blocked[heads])
        tails, heads, w = tails[keep], heads[keep], w[keep]
    rows = np.concatenate([tails, heads])
    cols = np.concatenate([heads, tails])
    data = np.concatenate([w, w])
    mat = csr_matrix((data, (rows, cols)), shape=(n + 1, n + 1))
    mat.sort_indices()
    return GridGraph(level, closed, nodes, ij, n_lat, lookup, tails, heads, w, mat, blocked)
