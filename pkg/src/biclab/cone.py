"""Euclidean cones: exact distances by unfolding and a discrete disc test for metric balls."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components, dijkstra

from .errors import BoundaryCaseError, ResolutionError

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ConeSpec:
    """Cone of total angle ``angle``; curvature ``2pi - angle`` sits at the apex."""

    angle: float

    def __post_init__(self):
        if not (self.angle > 0 and math.isfinite(self.angle)):
            raise ValueError("cone angle must be positive and finite")

    @classmethod
    def from_curvature(cls, k: float) -> ConeSpec:
        return cls(TWO_PI - k)

    @classmethod
    def from_beta(cls, beta: float) -> ConeSpec:
        return cls(TWO_PI * (1.0 + beta))

    @property
    def curvature(self) -> float:
        return TWO_PI - self.angle

    @property
    def beta(self) -> float:
        return self.angle / TWO_PI - 1.0


@dataclass(frozen=True)
class ConePoint:
    radius: float
    angle: float = 0.0

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError("radius must be non-negative")


def angular_gap(theta: float, a: float, b: float) -> float:
    """Smallest angle between two directions on a cone of angle ``theta``."""
    d = math.fmod(a - b, theta)
    if d < 0:
        d += theta
    return min(d, theta - d)


def cone_distance(cone: ConeSpec, a: ConePoint, b: ConePoint) -> float:
    phi = angular_gap(cone.angle, a.angle, b.angle)
    if phi < math.pi:
        sq = a.radius**2 + b.radius**2 - 2 * a.radius * b.radius * math.cos(phi)
        return math.sqrt(max(sq, 0.0))
    return a.radius + b.radius


def chart_to_cone(beta: float, z: complex) -> ConePoint:
    """Cone coordinates of the chart point ``z`` for the factor ``|z|**beta``."""
    if beta <= -1:
        raise ValueError("beta must exceed -1")
    z = complex(z)
    if z == 0:
        return ConePoint(0.0, 0.0)
    s = 1.0 + beta
    return ConePoint(abs(z) ** s / s, s * math.atan2(z.imag, z.real))


def cont_radius_cone(theta: float, d: float) -> float:
    """Contractibility radius at distance ``d`` from the apex."""
    if theta <= 0 or d <= 0:
        raise ValueError("theta and d must be positive")
    if theta == math.pi:
        raise BoundaryCaseError("the contractibility radius of the angle-pi cone is left undecided")
    if theta > math.pi:
        return math.inf
    return d * math.sin(theta / 2)


# ---------------------------------------------------------------- disc_check

def _pair_lengths(theta, r1, p1, r2, p2):
    gap = np.abs(np.mod(p1 - p2, theta))
    gap = np.minimum(gap, theta - gap)
    sq = r1 * r1 + r2 * r2 - 2 * r1 * r2 * np.cos(gap)
    return np.where(gap < math.pi, np.sqrt(np.maximum(sq, 0.0)), r1 + r2)


@lru_cache(maxsize=16)
def _cone_mesh(theta: float, d: float, resolution: int, rings: int):
    """Polar mesh and graph distances from the vertex at radius ``d``, angle 0.

    Vertex 0 is the apex; vertex ``1 + (i-1)*n + j`` sits at radius ``i*dr``,
    angle ``j*theta/n``. ``d`` is always a ring radius.
    """
    n = resolution
    per_d = max(1, int(round(d / (d * theta / n))))
    dr = d / per_d
    i_x = per_d
    ii, jj = np.meshgrid(np.arange(1, rings + 1), np.arange(n), indexing="ij")
    rad = np.concatenate(([0.0], (ii * dr).ravel()))
    ang = np.concatenate(([0.0], (jj * theta / n).ravel()))

    def vid(i, j):
        return np.where(i == 0, 0, 1 + (i - 1) * n + np.mod(j, n))

    # graph: index stencil up to 3 steps in each direction
    tails, heads = [], []
    for di in range(0, 4):
        for dj in range(-3, 4):
            if di == 0 and dj <= 0:
                continue
            I2 = ii + di
            ok = I2 <= rings
            tails.append(vid(ii[ok], jj[ok]))
            heads.append(vid(I2[ok], jj[ok] + dj))
    for i in range(1, 4):
        if i <= rings:
            tails.append(np.zeros(n, dtype=np.int64))
            heads.append(vid(np.full(n, i), np.arange(n)))
    t = np.concatenate(tails)
    h = np.concatenate(heads)
    keep = t != h
    t, h = t[keep], h[keep]
    w = _pair_lengths(theta, rad[t], ang[t], rad[h], ang[h])
    nv = rad.size
    g = coo_matrix((np.concatenate([w, w]), (np.concatenate([t, h]), np.concatenate([h, t]))), shape=(nv, nv)).tocsr()
    dist = dijkstra(g, directed=True, indices=int(vid(np.array(i_x), np.array(0))))

    # triangles: fan at the apex, two per quad elsewhere
    tris = [np.column_stack([np.zeros(n, dtype=np.int64), vid(np.ones(n, dtype=np.int64), np.arange(n)),
                             vid(np.ones(n, dtype=np.int64), np.arange(n) + 1)])]
    qi, qj = np.meshgrid(np.arange(1, rings), np.arange(n), indexing="ij")
    qi, qj = qi.ravel(), qj.ravel()
    a, b = vid(qi, qj), vid(qi, qj + 1)
    c, e = vid(qi + 1, qj), vid(qi + 1, qj + 1)
    tris.append(np.column_stack([a, b, e]))
    tris.append(np.column_stack([a, e, c]))
    tris = np.concatenate(tris)
    edges = np.unique(np.sort(np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [0, 2]]]), axis=1), axis=0)
    return dist, tris, edges


def _ball_topology(inside: np.ndarray, tris: np.ndarray, edges: np.ndarray) -> tuple[int, int]:
    """Euler characteristic and boundary-cycle count of the induced subcomplex."""
    V = int(inside.sum())
    T = tris[np.all(inside[tris], axis=1)]
    E = int(np.sum(inside[edges[:, 0]] & inside[edges[:, 1]]))
    chi = V - E + T.shape[0]
    te = np.sort(np.concatenate([T[:, [0, 1]], T[:, [1, 2]], T[:, [0, 2]]]), axis=1)
    uniq, counts = np.unique(te, axis=0, return_counts=True)
    bnd = uniq[counts == 1]
    if bnd.size == 0:
        return chi, 0
    verts, inv = np.unique(bnd.ravel(), return_inverse=True)
    inv = inv.reshape(-1, 2)
    m = coo_matrix((np.ones(len(inv)), (inv[:, 0], inv[:, 1])), shape=(verts.size, verts.size))
    ncomp, _ = connected_components(m, directed=False)
    deg = np.bincount(inv.ravel(), minlength=verts.size)
    if np.any(deg != 2):
        # pinched boundary: not a union of simple cycles
        return chi, -1
    return chi, int(ncomp)


def disc_check(theta: float, d: float, r: float, resolution: int = 256) -> bool:
    """Whether the closed graph-metric ball of radius ``r`` around a point at distance ``d``
    from the apex is a triangulated disc.

    ``resolution`` is the number of angular divisions of the cone; the radial
    step matches the angular spacing at distance ``d``.
    """
    if r <= 0:
        raise ValueError("r must be positive")
    if theta <= 0 or d <= 0:
        raise ValueError("theta and d must be positive")
    if resolution < 8:
        raise ResolutionError("resolution must be at least 8")
    dr = d / max(1, int(round(resolution / theta)))
    if r < 3 * max(dr, theta * d / resolution):
        raise ResolutionError(f"radius {r} is below three mesh steps")
    need = int(math.ceil((d + r) / dr)) + 4
    rings = 1 << max(4, (need - 1).bit_length())
    dist, tris, edges = _cone_mesh(float(theta), float(d), int(resolution), rings)
    inside = dist <= r
    chi, cycles = _ball_topology(inside, tris, edges)
    return chi == 1 and cycles == 1


def transition_radius(theta: float, d: float, resolution: int = 256, steps: int = 20) -> float:
    """Largest radius, found by bisection, at which ``disc_check`` still reports a disc (``theta < pi``)."""
    if not 0 < theta < math.pi:
        raise ValueError("a finite transition needs 0 < theta < pi")
    dr = d / max(1, int(round(resolution / theta)))
    lo = 3.0 * max(dr, theta * d / resolution)
    hi = 0.99 * d
    if not disc_check(theta, d, lo, resolution):
        raise ResolutionError("the smallest resolvable ball is already not a disc")
    if disc_check(theta, d, hi, resolution):
        raise ResolutionError("no transition below the apex distance")
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        if disc_check(theta, d, mid, resolution):
            lo = mid
        else:
            hi = mid
    return lo
