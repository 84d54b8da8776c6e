"""Conformal moduli of plane annuli.

The discrete modulus is the reciprocal Dirichlet energy of the lattice
potential that is 0 on the obstacle and 1 outside the outer boundary. Edges of
the 5-point stencil cut by a boundary get conductance ``1/t``, where ``t`` is
the fraction of the edge inside the domain, which keeps curved and slanted
boundaries second-order accurate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix, diags
from scipy.sparse.linalg import cg

from .errors import DomainError, ResolutionError

TWO_PI = 2.0 * math.pi
MIN_GAP_PIXELS = 8


# ---------------------------------------------------------------- shapes

@dataclass(frozen=True)
class Circle:
    center: complex
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")

    def inside(self, z, closed: bool) -> np.ndarray:
        d = np.abs(np.asarray(z) - self.center)
        return d <= self.radius if closed else d < self.radius

    def boundary_points(self, n: int = 2048) -> np.ndarray:
        return self.center + self.radius * np.exp(2j * np.pi * np.arange(n) / n)

    def signed_distance(self, z) -> np.ndarray:
        """Negative inside."""
        return np.abs(np.asarray(z) - self.center) - self.radius

    def line_hits(self, axis: int, level: float) -> list[tuple[float, float, float]]:
        """Crossings with the line ``x = level`` (axis 0) or ``y = level`` (axis 1) as ``(coord, lo, hi)``."""
        c = self.center
        off = level - (c.real if axis == 0 else c.imag)
        s = self.radius**2 - off**2
        if s < 0:
            return []
        base = c.imag if axis == 0 else c.real
        r = math.sqrt(s)
        return [(base - r, base - r, base - r), (base + r, base + r, base + r)]

    def bbox(self):
        c, R = self.center, self.radius
        return c.real - R, c.real + R, c.imag - R, c.imag + R


def _point_segment_distance(z, a: complex, b: complex) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    d = b - a
    l2 = abs(d) ** 2
    t = np.clip(((z - a) * np.conj(d)).real / l2, 0.0, 1.0) if l2 > 0 else np.zeros(z.shape)
    return np.abs(z - (a + t * d))


def _edge_line_hits(a: complex, b: complex, axis: int, level: float):
    """Where segment ``[a, b]`` meets a grid line; collinear overlaps report their interval."""
    pa = a.real if axis == 0 else a.imag
    pb = b.real if axis == 0 else b.imag
    qa = a.imag if axis == 0 else a.real
    qb = b.imag if axis == 0 else b.real
    if pa == pb:
        if pa == level:
            lo, hi = min(qa, qb), max(qa, qb)
            return [(lo, lo, hi), (hi, lo, hi)]
        return []
    t = (level - pa) / (pb - pa)
    if t < 0 or t > 1:
        return []
    q = qa + t * (qb - qa)
    return [(q, q, q)]


@dataclass(frozen=True)
class Polygon:
    vertices: tuple

    def __post_init__(self):
        v = tuple(complex(x) for x in self.vertices)
        if len(v) < 3:
            raise ValueError("a polygon needs at least 3 vertices")
        object.__setattr__(self, "vertices", v)

    @property
    def edges(self):
        v = self.vertices
        return list(zip(v, v[1:] + v[:1]))

    def inside(self, z, closed: bool) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        x, y = z.real, z.imag
        odd = np.zeros(z.shape, dtype=bool)
        for a, b in self.edges:
            cond = (a.imag > y) != (b.imag > y)
            with np.errstate(divide="ignore", invalid="ignore"):
                xc = a.real + (y - a.imag) * (b.real - a.real) / (b.imag - a.imag)
            odd ^= cond & (x < xc)
        if closed:
            scale = max(abs(a - b) for a, b in self.edges)
            on = np.zeros(z.shape, dtype=bool)
            for a, b in self.edges:
                on |= _point_segment_distance(z, a, b) <= 1e-12 * scale
            odd |= on
        return odd

    def boundary_points(self, n: int = 2048) -> np.ndarray:
        per = max(2, n // len(self.vertices))
        t = np.arange(per) / per
        return np.concatenate([a + (b - a) * t for a, b in self.edges])

    def signed_distance(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        d = np.min([_point_segment_distance(z, a, b) for a, b in self.edges], axis=0)
        return np.where(self.inside(z, False), -d, d)

    def line_hits(self, axis: int, level: float):
        out = []
        for a, b in self.edges:
            out += _edge_line_hits(a, b, axis, level)
        return out

    def bbox(self):
        xs = [v.real for v in self.vertices]
        ys = [v.imag for v in self.vertices]
        return min(xs), max(xs), min(ys), max(ys)


@dataclass(frozen=True)
class Segment:
    a: complex
    b: complex

    def __post_init__(self):
        object.__setattr__(self, "a", complex(self.a))
        object.__setattr__(self, "b", complex(self.b))
        if self.a == self.b:
            raise ValueError("segment obstacle must not reduce to a point")

    def inside(self, z, closed: bool = True) -> np.ndarray:
        tol = 1e-12 * abs(self.b - self.a)
        return _point_segment_distance(z, self.a, self.b) <= tol

    def boundary_points(self, n: int = 2048) -> np.ndarray:
        return self.a + (self.b - self.a) * np.linspace(0, 1, n)

    def line_hits(self, axis: int, level: float):
        return _edge_line_hits(self.a, self.b, axis, level)

    def bbox(self):
        return (min(self.a.real, self.b.real), max(self.a.real, self.b.real),
                min(self.a.imag, self.b.imag), max(self.a.imag, self.b.imag))


def shape_from_spec(spec: dict):
    """``{"circle"|"disc": [cx, cy, R]}``, ``{"segment": [[x0,y0],[x1,y1]]}`` or ``{"polygon": [[x,y], ...]}``."""
    if len(spec) != 1:
        raise ValueError(f"shape spec needs exactly one key, got {sorted(spec)}")
    (kind, data), = spec.items()
    if kind in ("circle", "disc"):
        cx, cy, R = (float(v) for v in data)
        return Circle(complex(cx, cy), R)
    if kind == "segment":
        (x0, y0), (x1, y1) = data
        return Segment(complex(x0, y0), complex(x1, y1))
    if kind == "polygon":
        return Polygon(tuple(complex(float(x), float(y)) for x, y in data))
    raise ValueError(f"unknown shape {kind!r}")


def shape_to_spec(shape, outer: bool) -> dict:
    if isinstance(shape, Circle):
        return {("circle" if outer else "disc"): [shape.center.real, shape.center.imag, shape.radius]}
    if isinstance(shape, Segment):
        return {"segment": [[shape.a.real, shape.a.imag], [shape.b.real, shape.b.imag]]}
    return {"polygon": [[v.real, v.imag] for v in shape.vertices]}


# ---------------------------------------------------------------- region

@dataclass(frozen=True)
class AnnulusRegion:
    """Inside ``outer`` (a circle or polygon) and outside the closed ``obstacle``."""

    outer: Circle | Polygon
    obstacle: Circle | Polygon | Segment

    def __post_init__(self):
        if isinstance(self.outer, Segment):
            raise ValueError("the outer boundary must enclose area")
        pts = self.obstacle.boundary_points()
        if not np.all(self.outer.inside(pts, False)):
            raise DomainError("the obstacle must lie strictly inside the outer boundary")

    @classmethod
    def round(cls, r1: float, r2: float, center: complex = 0j) -> AnnulusRegion:
        if not 0 < r1 < r2:
            raise ValueError("need 0 < r1 < r2")
        return cls(Circle(complex(center), r2), Circle(complex(center), r1))

    @classmethod
    def grotzsch(cls, r: float) -> AnnulusRegion:
        return cls(Circle(0j, 1.0), Segment(0j, complex(r)))

    @classmethod
    def from_spec(cls, spec: dict) -> AnnulusRegion:
        return cls(shape_from_spec(spec["outer"]), shape_from_spec(spec["obstacle"]))

    def to_spec(self) -> dict:
        return {"outer": shape_to_spec(self.outer, True), "obstacle": shape_to_spec(self.obstacle, False)}

    def transformed(self, scale: float, shift: complex) -> AnnulusRegion:
        """Image under ``z -> scale * z + shift``."""
        def tr(s):
            if isinstance(s, Circle):
                return Circle(scale * s.center + shift, scale * s.radius)
            if isinstance(s, Segment):
                return Segment(scale * s.a + shift, scale * s.b + shift)
            return Polygon(tuple(scale * v + shift for v in s.vertices))
        return AnnulusRegion(tr(self.outer), tr(self.obstacle))

    def gap(self) -> float:
        """Smallest distance from the obstacle to the outer boundary."""
        pts = self.obstacle.boundary_points(4096)
        return float(np.min(-self.outer.signed_distance(pts)))

    def in_obstacle(self, z) -> np.ndarray:
        return self.obstacle.inside(z, True)

    def in_domain(self, z) -> np.ndarray:
        return self.outer.inside(z, False) & ~self.obstacle.inside(z, True)

    def lattice(self, grid: int):
        """Node coordinates and per-node state: 1 free, 0 obstacle, 2 outside."""
        x0, x1, y0, y1 = self.outer.bbox()
        h = max(x1 - x0, y1 - y0) / grid
        i0, i1 = math.floor(x0 / h) - 1, math.ceil(x1 / h) + 1
        j0, j1 = math.floor(y0 / h) - 1, math.ceil(y1 / h) + 1
        xs = np.arange(i0, i1 + 1) * h
        ys = np.arange(j0, j1 + 1) * h
        Z = xs[:, None] + 1j * ys[None, :]
        state = np.full(Z.shape, 2, dtype=np.int8)
        inner = self.outer.inside(Z, False)
        state[inner] = 1
        state[inner & self.obstacle.inside(Z, True)] = 0
        return h, (i0, j0), Z, state

    def mask(self, grid: int) -> np.ndarray:
        """Boolean mask of free lattice nodes."""
        return self.lattice(grid)[3] == 1


# ---------------------------------------------------------------- modulus

def modulus_round(r1: float, r2: float) -> float:
    if not (0 < r1 < r2):
        raise ValueError("need 0 < r1 < r2")
    return math.log(r2 / r1) / TWO_PI


def _edge_events(shapes_values, h: float, origin: tuple[int, int], shape: tuple[int, int]):
    """Boundary crossings on lattice edges: ``{(axis, i, j): [(t, value), ...]}``.

    Axis-0 edges join ``(i, j)`` to ``(i+1, j)``; axis-1 edges join ``(i, j)`` to ``(i, j+1)``.
    """
    i0, j0 = origin
    ni, nj = shape
    events: dict = {}
    for shp, val in shapes_values:
        bx0, bx1, by0, by1 = shp.bbox()
        # horizontal lattice lines y = j h cut horizontal edges
        for j in range(max(j0, math.floor(by0 / h)), min(j0 + nj - 1, math.ceil(by1 / h)) + 1):
            for x, lo, hi in shp.line_hits(1, j * h):
                ii = math.floor(x / h)
                for i in {ii, ii - 1} if x == ii * h else {ii}:
                    if i0 <= i < i0 + ni - 1:
                        t = min(max((x - i * h) / h, 0.0), 1.0)
                        events.setdefault((0, i - i0, j - j0), []).append((t, val))
                if hi > lo:
                    # collinear piece: every edge inside it is covered
                    for i in range(math.ceil(lo / h), math.floor(hi / h)):
                        if i0 <= i < i0 + ni - 1:
                            events.setdefault((0, i - i0, j - j0), []).extend([(0.0, val), (1.0, val)])
        for i in range(max(i0, math.floor(bx0 / h)), min(i0 + ni - 1, math.ceil(bx1 / h)) + 1):
            for y, lo, hi in shp.line_hits(0, i * h):
                jj = math.floor(y / h)
                for j in {jj, jj - 1} if y == jj * h else {jj}:
                    if j0 <= j < j0 + nj - 1:
                        t = min(max((y - j * h) / h, 0.0), 1.0)
                        events.setdefault((1, i - i0, j - j0), []).append((t, val))
                if hi > lo:
                    for j in range(math.ceil(lo / h), math.floor(hi / h)):
                        if j0 <= j < j0 + nj - 1:
                            events.setdefault((1, i - i0, j - j0), []).extend([(0.0, val), (1.0, val)])
    return events


_T_FLOOR = 1e-6


@dataclass(frozen=True)
class ModulusResult:
    modulus: float
    energy: float
    grid: int
    step: float
    unknowns: int
    iterations: int


def discrete_modulus_details(region: AnnulusRegion, grid: int = 512, rtol: float = 1e-10) -> ModulusResult:
    if grid < 4:
        raise ResolutionError("grid must be at least 4")
    gap = region.gap()
    if gap <= 0:
        raise DomainError("the obstacle touches the outer boundary")
    h, origin, Z, state = region.lattice(grid)
    if gap < MIN_GAP_PIXELS * h:
        raise ResolutionError(f"gap {gap:.3g} spans fewer than {MIN_GAP_PIXELS} pixels at grid {grid}")
    ni, nj = Z.shape
    free = state == 1
    if not free.any():
        raise ResolutionError("no free lattice nodes")
    idx = np.full(Z.shape, -1, dtype=np.int64)
    idx[free] = np.arange(int(free.sum()))
    value = np.where(state == 2, 1.0, 0.0)
    events = _edge_events([(region.outer, 1.0), (region.obstacle, 0.0)], h, origin, (ni, nj))

    ff_a, ff_b = [], []
    bn_node, bn_cond, bn_val = [], [], []
    for axis in (0, 1):
        if axis == 0:
            A = (slice(0, ni - 1), slice(None))
            B = (slice(1, ni), slice(None))
        else:
            A = (slice(None), slice(0, nj - 1))
            B = (slice(None), slice(1, nj))
        sa, sb = state[A], state[B]
        ia, ib = idx[A], idx[B]
        I, J = np.meshgrid(np.arange(sa.shape[0]), np.arange(sa.shape[1]), indexing="ij")
        has_ev = np.zeros(sa.shape, dtype=bool)
        for (ax, i, j) in events:
            if ax == axis and i < sa.shape[0] and j < sa.shape[1]:
                has_ev[i, j] = True
        plain = (sa == 1) & (sb == 1) & ~has_ev
        ff_a.append(ia[plain])
        ff_b.append(ib[plain])
        mixed = ((sa == 1) | (sb == 1)) & ~plain
        for i, j in zip(I[mixed], J[mixed]):
            ev = events.get((axis, i, j), [])
            fa, fb = sa[i, j] == 1, sb[i, j] == 1
            pa = (i, j)
            pb = (i + 1, j) if axis == 0 else (i, j + 1)
            if fa:
                hits = [e for e in ev if e[0] > 0] or ev
                if hits:
                    t, v = min(hits)
                else:
                    t, v = 1.0, value[pb]
                if not fb and not ev:
                    v = value[pb]
                bn_node.append(idx[pa])
                bn_cond.append(1.0 / max(t, _T_FLOOR))
                bn_val.append(v)
            if fb:
                hits = [e for e in ev if e[0] < 1] or ev
                if hits:
                    t, v = max(hits)
                else:
                    t, v = 0.0, value[pa]
                if not fa and not ev:
                    v = value[pa]
                bn_node.append(idx[pb])
                bn_cond.append(1.0 / max(1.0 - t, _T_FLOOR))
                bn_val.append(v)
        both_fixed = (sa != 1) & (sb != 1) & (value[A] != value[B])
        if np.any(both_fixed):
            raise ResolutionError("obstacle and outside touch on the lattice")
    ff_a = np.concatenate(ff_a)
    ff_b = np.concatenate(ff_b)
    bn_node = np.array(bn_node, dtype=np.int64)
    bn_cond = np.array(bn_cond)
    bn_val = np.array(bn_val)
    n = int(free.sum())
    deg = np.bincount(ff_a, minlength=n) + np.bincount(ff_b, minlength=n) + np.bincount(bn_node, weights=bn_cond, minlength=n)
    off = coo_matrix((-np.ones(2 * ff_a.size), (np.concatenate([ff_a, ff_b]), np.concatenate([ff_b, ff_a]))), shape=(n, n))
    L = (off + diags(deg)).tocsr()
    rhs = np.bincount(bn_node, weights=bn_cond * bn_val, minlength=n)
    its = [0]

    def count(_):
        its[0] += 1

    precond = diags(1.0 / deg)
    u, info = cg(L, rhs, rtol=rtol, atol=0.0, maxiter=20 * n, M=precond, callback=count)
    if info != 0:
        raise ResolutionError(f"conjugate gradients did not converge (info={info})")
    energy = float(np.sum((u[ff_a] - u[ff_b]) ** 2) + np.sum(bn_cond * (u[bn_node] - bn_val) ** 2))
    return ModulusResult(1.0 / energy, energy, grid, h, n, its[0])


def discrete_modulus(region: AnnulusRegion, grid: int = 512) -> float:
    """Reciprocal discrete Dirichlet energy of the region's capacity potential."""
    return discrete_modulus_details(region, grid).modulus


# ---------------------------------------------------------------- Grötzsch

def agm(a: float, b: float) -> float:
    """Arithmetic-geometric mean, stopped once the relative change drops below 1e-15."""
    if a <= 0 or b <= 0:
        raise ValueError("agm needs positive arguments")
    for _ in range(64):
        a, b = 0.5 * (a + b), math.sqrt(a * b)
        if abs(a - b) <= 1e-15 * a:
            break
    return 0.5 * (a + b)


def ellip_k(k: float) -> float:
    """Complete elliptic integral of the first kind, modulus ``k``."""
    if not 0 <= k < 1:
        raise ValueError("need 0 <= k < 1")
    return math.pi / (2.0 * agm(1.0, math.sqrt((1.0 - k) * (1.0 + k))))


def grotzsch_modulus(r: float) -> float:
    """Modulus of the unit disc slit along ``[0, r]``."""
    if not 0 < r < 1:
        raise ValueError("need 0 < r < 1")
    rc = math.sqrt((1.0 - r) * (1.0 + r))
    # (pi/2) K(rc) / K(r) / (2 pi), with both K through the AGM
    return agm(1.0, rc) / (4.0 * agm(1.0, r))


def check_grotzsch_bound(region: AnnulusRegion, r: float, grid: int = 512, rtol: float = 0.02):
    """``discrete_modulus(region) <= grotzsch_modulus(r)`` for regions in the unit disc enclosing 0 and ``r``."""
    from .verify import ValidationReport

    if not 0 < r < 1:
        raise ValueError("need 0 < r < 1")
    pts = region.outer.boundary_points(4096)
    if np.any(np.abs(pts) > 1.0 + 1e-12):
        raise DomainError("the region must lie in the unit disc")
    if not np.all(region.in_obstacle(np.array([0j, complex(r)]))):
        raise DomainError("0 and r must lie in the obstacle (the bounded complementary component)")
    left = discrete_modulus(region, grid)
    right = grotzsch_modulus(r)
    return ValidationReport({"r": r, "grid": grid, "region": region.to_spec()}, left, right, rtol, 1e-12)


# ---------------------------------------------------------------- random configurations

def snake_polygon(r: float, rng: np.random.Generator, turns: int = 3, width: float = 0.04) -> Polygon:
    """Closed polygon around a wiggly arc from 0 to ``r``; contains both ends."""
    n = 24 * turns
    t = np.linspace(0.0, 1.0, n)
    amp = rng.uniform(0.05, 0.2)
    phase = rng.uniform(0, 2 * np.pi)
    spine = t * r + 1j * amp * np.sin(turns * np.pi * t + phase) * np.sin(np.pi * t)
    tang = np.gradient(spine)
    nrm = 1j * tang / np.abs(tang)
    w = width * (1 + 0.5 * rng.uniform(0, 1))
    # round caps so that both ends are inside
    cap0 = spine[0] - tang[0] / abs(tang[0]) * w
    cap1 = spine[-1] + tang[-1] / abs(tang[-1]) * w
    upper = spine + w * nrm
    lower = spine - w * nrm
    verts = np.concatenate([[cap0], upper, [cap1], lower[::-1]])
    return Polygon(tuple(verts.tolist()))


def random_grotzsch_configuration(rng: np.random.Generator) -> tuple[AnnulusRegion, float]:
    """A region in the unit disc whose obstacle holds 0 and ``r``."""
    while True:
        r = float(rng.uniform(0.15, 0.7))
        kind = int(rng.integers(0, 3))
        if kind == 0:
            c = complex(r / 2, rng.uniform(-0.05, 0.05))
            rad = max(abs(c), abs(c - r)) + rng.uniform(0.02, 0.1)
            obstacle = Circle(c, rad)
        elif kind == 1:
            obstacle = snake_polygon(r, rng, turns=int(rng.integers(2, 5)))
        else:
            k = int(rng.integers(5, 11))
            ang = np.sort(rng.uniform(0, 2 * np.pi, k))
            c = r / 2
            base = r / 2 + 0.05
            rad = base + rng.uniform(0.0, 0.15, k)
            obstacle = Polygon(tuple((c + rad * np.exp(1j * ang)).tolist()))
        if not np.all(obstacle.inside(np.array([0j, complex(r)]), True)):
            continue
        pts = obstacle.boundary_points()
        reach = float(np.max(np.abs(pts)))
        if reach > 0.85:
            continue
        oc = complex(*rng.uniform(-0.05, 0.05, 2))
        outer_r = rng.uniform(reach + abs(oc) + 0.08, 1.0 - abs(oc))
        if outer_r <= reach + abs(oc) + 0.05:
            continue
        try:
            region = AnnulusRegion(Circle(oc, outer_r), obstacle)
        except DomainError:
            continue
        return region, r
