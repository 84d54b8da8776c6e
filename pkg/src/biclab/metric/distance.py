"""Intrinsic distances: nested lattice shortest paths followed by polyline shortening."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import DivergenceError
from ..measure import CHART_RADIUS
from .core import SingularMetric
from .grid import GridGraph
from .quadrature import segment_integrals
from .smoothing import shorten, shorten_many

START_LEVEL = 3
OPEN_RADIUS = CHART_RADIUS * (1.0 - 2.0**-40)


@dataclass(frozen=True)
class DistanceEstimate:
    """Upper estimate of an intrinsic distance with its refinement history.

    ``per_level[i]`` is the lattice value at ``levels[i]``; ``value`` is the
    best curve found (lattice or shortened polyline); ``richardson`` assumes
    first-order convergence in the step and is informational only.
    """

    value: float
    levels: tuple
    per_level: tuple
    richardson: float
    graph_value: float
    smoothed_value: float
    path: tuple

    @property
    def bracket(self) -> tuple[float, float]:
        lo = min(self.richardson, self.value)
        return (lo, self.value)


def anchors(grid: GridGraph, z: complex, start_level: int) -> np.ndarray:
    """Cell corners and the 4 nearest usable nodes of ``z`` on every lattice from ``start_level`` up.

    Coarser lattices are sublattices of the finer ones, so the anchor sets
    are nested and the per-level values can only decrease.
    """
    L = grid.level
    idx = set()
    offs = np.arange(-1, 3)
    for l in range(min(start_level, L), L + 1):
        s = 2 ** (L - l)
        hl = 2.0**-l
        fx = math.floor(z.real / hl)
        fy = math.floor(z.imag / hl)
        I, J = np.meshgrid(fx + offs, fy + offs, indexing="ij")
        I, J = I.ravel(), J.ravel()
        k = grid.node_at(I * s, J * s)
        ok = k >= 0
        ok[ok] = ~grid.blocked[k[ok]]
        k, I, J = k[ok], I[ok], J[ok]
        corner = (I >= fx) & (I <= fx + 1) & (J >= fy) & (J <= fy + 1)
        idx.update(int(x) for x in k[corner])
        d = np.abs(grid.nodes[k] - z)
        idx.update(int(x) for x in k[np.argsort(d, kind="stable")[:4]])
    idx.update(int(k) for k in grid.nearest(z, 4))
    return np.array(sorted(idx), dtype=np.int64)


def _connectors(metric: SingularMetric, grid: GridGraph, z: complex, start_level: int):
    nodes = anchors(grid, z, start_level)
    w = segment_integrals(metric.field, np.full(nodes.size, z), grid.nodes[nodes])
    ok = np.isfinite(w)
    return nodes[ok], w[ok]


def _check_endpoints(metric: SingularMetric, z, zp, closed: bool):
    z = metric.check_point(z, closed)
    zp = metric.check_point(zp, closed)
    for p in (z, zp):
        if metric.is_cusp(p):
            raise DivergenceError(f"{p} carries a cusp atom; every other point is at infinite distance")
    return z, zp


def _negative_atom_pins(metric: SingularMetric, path: np.ndarray, tol: float) -> list[int]:
    f = metric.field
    neg = f.atom_pos[f.atom_beta > 0]
    # an atom already at an endpoint needs no pin
    neg = neg[(neg != path[0]) & (neg != path[-1])]
    out = []
    for i in range(1, path.size - 1):
        if neg.size and np.min(np.abs(neg - path[i])) <= tol:
            out.append(i)
    return out


def _snap_pins(metric: SingularMetric, path: np.ndarray, pins: list[int]) -> np.ndarray:
    f = metric.field
    neg = f.atom_pos[f.atom_beta > 0]
    path = path.copy()
    for i in pins:
        path[i] = neg[np.argmin(np.abs(neg - path[i]))]
    return path


def _query(metric: SingularMetric, z, zp, levels: int, closed: bool, start_level: int, smooth: bool):
    z, zp = _check_endpoints(metric, z, zp, closed)
    if z == zp:
        return DistanceEstimate(0.0, (), (), 0.0, 0.0, 0.0, (z,))
    # canonical orientation makes the estimate exactly symmetric
    if (zp.real, zp.imag) < (z.real, z.imag):
        z, zp = zp, z
    f = metric.field
    scale = f.scale
    direct = float(segment_integrals(f, z, zp)[0])
    start_level = max(1, min(start_level, levels))
    lvls, vals = [], []
    best_graph = direct
    best_path = np.array([z, zp])
    for L in range(start_level, levels + 1):
        grid = metric.grid(L, closed)
        s_nodes, s_w = _connectors(metric, grid, z, start_level)
        t_nodes, t_w = _connectors(metric, grid, zp, start_level)
        value = direct
        if s_nodes.size and t_nodes.size:
            limit = direct * (1 + 1e-12) if math.isfinite(direct) else np.inf
            dist, pred = grid.shortest_from(s_nodes, s_w, limit)
            tot = dist[t_nodes] + t_w
            k = int(np.argmin(tot))
            if tot[k] < value:
                value = float(tot[k])
                if L == levels:
                    chain = grid.path_to(pred, int(t_nodes[k]))
                    best_path = np.concatenate(([z], grid.nodes[chain], [zp]))
        lvls.append(L)
        vals.append(value)
        best_graph = min(best_graph, value)
    if not math.isfinite(best_graph):
        raise DivergenceError(f"no finite path between {z} and {zp}")
    smoothed = best_graph
    path = best_path
    if smooth:
        radius = CHART_RADIUS if closed else OPEN_RADIUS
        h = 2.0**-levels
        pins = _negative_atom_pins(metric, best_path, 1.5 * h)
        cand = [shorten(f, best_path, radius)]
        if pins:
            pinned_path = _snap_pins(metric, best_path, pins)
            cand.append(shorten(f, pinned_path, radius, pinned=pins))
        val, verts = min(cand, key=lambda c: c[0])
        smoothed = val
        if val < best_graph:
            path = verts
    value = min(best_graph, smoothed)
    per = tuple(v * scale for v in vals)
    rich = 2 * per[-1] - per[-2] if len(per) > 1 else per[-1]
    return DistanceEstimate(value * scale, tuple(lvls), per, rich, best_graph * scale, smoothed * scale,
                            tuple(complex(p) for p in path))


def distance(metric: SingularMetric, z, zp, levels: int = 9, start_level: int = START_LEVEL,
             smooth: bool = True) -> DistanceEstimate:
    """Distance through curves in the open chart."""
    return _query(metric, z, zp, levels, False, start_level, smooth)


def distance_closure(metric: SingularMetric, z, zp, levels: int = 9, start_level: int = START_LEVEL,
                     smooth: bool = True) -> DistanceEstimate:
    """Distance through curves allowed to run along the boundary circle (``h = 0`` only)."""
    if not metric.closed:
        raise ValueError("distance_closure needs a closed-mode metric")
    return _query(metric, z, zp, levels, True, start_level, smooth)


@dataclass(frozen=True)
class DistanceField:
    """Distances from ``center`` to every node of one lattice (scaled)."""

    grid: GridGraph
    center: complex
    values: np.ndarray
    pred: np.ndarray
    scale: float

    def lattice_array(self, fill: float = np.inf) -> np.ndarray:
        """Values on the full ``(2M+1)^2`` lattice, ``fill`` off the chart."""
        lk = self.grid.lookup
        out = np.full(lk.shape, fill)
        ok = lk >= 0
        out[ok] = self.values[lk[ok]]
        return out


def distance_field(metric: SingularMetric, center, level: int, start_level: int = START_LEVEL,
                   limit: float = np.inf, refine_near: float | None = None,
                   closed: bool = False) -> DistanceField:
    """Lattice distance from ``center`` to every node.

    With ``refine_near=r`` the paths of all nodes that may sit within a cell
    of the sphere of radius ``r`` are shortened, so the level set ``{d = r}``
    is located to quadrature accuracy rather than lattice accuracy.
    """
    c = metric.check_point(center, closed)
    if metric.is_cusp(c):
        raise DivergenceError(f"{c} carries a cusp atom")
    f = metric.field
    grid = metric.grid(level, closed)
    s_nodes, s_w = _connectors(metric, grid, c, start_level)
    lim = limit / f.scale if math.isfinite(limit) else np.inf
    dist, pred = grid.shortest_from(s_nodes, s_w, lim)
    vals = dist * f.scale
    if refine_near is not None:
        r = refine_near
        radius = CHART_RADIUS if closed else OPEN_RADIUS
        h = grid.step
        with np.errstate(over="ignore", invalid="ignore"):
            # bilinear interpolation reads corners within sqrt(2) h of the sphere
            cell = 1.5 * h * f.factor(grid.nodes) * f.scale
        cell = np.where(np.isfinite(cell), cell, np.inf)
        band = np.nonzero((vals >= r - cell) & (vals <= 1.03 * (r + cell)) & np.isfinite(vals))[0]
        vals = vals.copy()
        paths, pinned_jobs = [], []
        for k in band:
            chain = grid.path_to(pred, int(k))
            path = np.concatenate(([c], grid.nodes[chain]))
            keep = np.concatenate(([True], np.abs(np.diff(path)) > 0))
            path = path[keep]
            paths.append(path)
            pins = _negative_atom_pins(metric, path, 1.5 * h)
            if pins:
                pinned_jobs.append((len(paths) - 1, pins))
        # pinned paths are cut at their cone points; the pieces join the batch
        pieces: dict = {}
        pinned_parts = []
        for i, pins in pinned_jobs:
            snapped = _snap_pins(metric, paths[i], pins)
            cuts = [0, *pins, snapped.size - 1]
            keys = []
            for lo, hi in zip(cuts[:-1], cuts[1:]):
                piece = snapped[lo:hi + 1]
                piece = piece[np.concatenate(([True], np.abs(np.diff(piece)) > 0))]
                if piece.size >= 2:
                    keys.append(pieces.setdefault(piece.tobytes(), (len(pieces), piece))[0])
            pinned_parts.append((i, keys))
        ok = [i for i, p in enumerate(paths) if p.size >= 2]
        piece_list = sorted(pieces.values(), key=lambda t: t[0])
        short = shorten_many(f, [paths[i] for i in ok] + [p for _, p in piece_list], radius)
        new = np.full(len(paths), np.inf)
        new[ok] = short[:len(ok)]
        piece_len = short[len(ok):]
        for i, keys in pinned_parts:
            new[i] = min(new[i], float(np.sum(piece_len[keys])))
        direct = segment_integrals(f, np.full(band.size, c), grid.nodes[band])
        vals[band] = np.minimum(vals[band], np.minimum(new, direct) * f.scale)
    return DistanceField(grid, c, vals, pred, f.scale)


def metric_ball(metric: SingularMetric, center, r: float, levels: int = 7, start_level: int = START_LEVEL,
                refine: bool = True) -> tuple[GridGraph, np.ndarray]:
    """Boolean node mask of the closed ball of radius ``r`` on the finest lattice."""
    if r < 0:
        raise ValueError("radius must be non-negative")
    c = metric.check_point(center)
    grid = metric.grid(levels, metric.closed)
    if r == 0:
        mask = np.zeros(grid.n_nodes, dtype=bool)
        hit = np.nonzero(grid.nodes == c)[0]
        if hit.size:
            mask[hit] = True
        else:
            mask[grid.nearest(c, 1)] = True
        return grid, mask
    df = ball_distances(metric, c, r, levels, start_level, refine)
    return grid, df.values <= r


def ball_distances(metric: SingularMetric, center, r: float, level: int, start_level: int = START_LEVEL,
                   refine: bool = True) -> DistanceField:
    """Distance field accurate near the sphere of radius ``r``."""
    if not refine:
        return distance_field(metric, center, level, start_level, closed=metric.closed)
    return distance_field(metric, center, level, start_level, refine_near=r, closed=metric.closed)
