"""Signed curvature measures on the closed half-disc.

A measure is a finite sum of three kinds of pieces:

* atoms ``k * delta_p`` (conical points, ``k = 2*pi - theta``),
* circle layers: a linear density on a circle, uniform, piecewise constant
  over equal sectors, or given by a callable,
* a cell density: a piecewise-constant area density on an ``n x n`` grid
  over ``[-1/2, 1/2]^2``, restricted to the disc ``|z| < 1/2``.

All containers are immutable. ``decompose`` splits a measure into its
positive and negative parts piece by piece, so ``plus - minus`` reproduces
every atom mass, sector value and cell value bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Literal, Sequence

import numpy as np
from scipy import integrate

CHART_RADIUS = 0.5
TWO_PI = 2.0 * math.pi
_GEOM_SLACK = 1e-12

Which = Literal["plus", "minus", "signed"]


def _as_complex(z) -> complex:
    if isinstance(z, (tuple, list, np.ndarray)):
        return complex(float(z[0]), float(z[1]))
    return complex(z)


@dataclass(frozen=True)
class Atom:
    """Point mass ``mass * delta_position``."""

    position: complex
    mass: float

    def __post_init__(self):
        object.__setattr__(self, "position", _as_complex(self.position))
        object.__setattr__(self, "mass", float(self.mass))
        if not math.isfinite(self.mass):
            raise ValueError(f"atom mass must be finite, got {self.mass}")
        if abs(self.position) > CHART_RADIUS + _GEOM_SLACK:
            raise ValueError(f"atom at {self.position} lies outside the closed disc D(1/2)")

    @property
    def on_boundary(self) -> bool:
        return abs(abs(self.position) - CHART_RADIUS) <= _GEOM_SLACK


@dataclass(frozen=True)
class CircleLayer:
    """Measure carried by the circle ``|z - center| = radius``.

    ``density`` is the mass per unit arc length. ``None`` means uniform with
    total ``mass``; a sequence gives values on equal sectors starting at
    angle ``phase``; a callable ``f(phi)`` (vectorised over numpy arrays) gives
    the density at angle ``phi``.
    """

    center: complex
    radius: float
    mass: float | None = None
    density: Sequence[float] | Callable | None = None
    phase: float = 0.0
    _total: float = field(init=False, repr=False, compare=False, default=0.0)

    def __post_init__(self):
        object.__setattr__(self, "center", _as_complex(self.center))
        object.__setattr__(self, "radius", float(self.radius))
        object.__setattr__(self, "phase", float(self.phase))
        if not self.radius > 0:
            raise ValueError("layer radius must be positive")
        if abs(self.center) + self.radius > CHART_RADIUS + _GEOM_SLACK:
            raise ValueError("layer circle must lie inside the closed disc D(1/2)")
        if self.density is None:
            if self.mass is None:
                raise ValueError("uniform layer needs a total mass")
            total = float(self.mass)
        elif callable(self.density):
            total = self._callable_total()
        else:
            values = tuple(float(v) for v in self.density)
            if not values:
                raise ValueError("sector density needs at least one value")
            object.__setattr__(self, "density", values)
            arc = TWO_PI * self.radius / len(values)
            total = math.fsum(v * arc for v in values)
        if not math.isfinite(total):
            raise ValueError("layer mass must be finite")
        if self.mass is not None and self.density is not None:
            if not math.isclose(float(self.mass), total, rel_tol=1e-9, abs_tol=1e-12):
                raise ValueError(f"layer mass {self.mass} does not match its density integral {total}")
        object.__setattr__(self, "_total", total)
        if self.mass is None:
            object.__setattr__(self, "mass", total)
        else:
            object.__setattr__(self, "mass", float(self.mass))

    def _callable_total(self) -> float:
        val, _ = integrate.quad(
            lambda t: float(self.density(t)), 0.0, TWO_PI, limit=200, epsabs=1e-13, epsrel=1e-12
        )
        return val * self.radius

    @property
    def total_mass(self) -> float:
        return self._total

    @property
    def is_uniform(self) -> bool:
        return self.density is None

    @property
    def is_sectored(self) -> bool:
        return self.density is not None and not callable(self.density)

    def linear_density(self, phi):
        """Mass per unit arc length at angle ``phi`` (array friendly)."""
        phi = np.asarray(phi, dtype=float)
        if self.density is None:
            return np.full(phi.shape, self._total / (TWO_PI * self.radius))
        if callable(self.density):
            return np.asarray(self.density(phi), dtype=float) * np.ones_like(phi)
        values = np.asarray(self.density)
        n = values.size
        idx = np.floor(np.mod(phi - self.phase, TWO_PI) / (TWO_PI / n)).astype(int)
        return values[np.clip(idx, 0, n - 1)]

    def arc_mass(self, a: float, b: float) -> float:
        """Mass of the arc of angles ``[a, b]`` (``b - a <= 2*pi``)."""
        if b <= a:
            return 0.0
        if self.density is None:
            return self._total * (b - a) / TWO_PI
        if callable(self.density):
            val, _ = integrate.quad(
                lambda t: float(self.density(t)), a, b, limit=200, epsabs=1e-13, epsrel=1e-12
            )
            return val * self.radius
        values = self.density
        n = len(values)
        width = TWO_PI / n
        start = math.floor((a - self.phase) / width)
        stop = math.ceil((b - self.phase) / width)
        parts = []
        for s in range(start, stop):
            lo = max(a, self.phase + s * width)
            hi = min(b, self.phase + (s + 1) * width)
            if hi > lo:
                parts.append(values[s % n] * (hi - lo))
        return math.fsum(parts) * self.radius

    def part(self, sign: int) -> CircleLayer:
        """Positive (``sign=+1``) or negative (``sign=-1``) part."""
        if self.density is None:
            return CircleLayer(self.center, self.radius, mass=max(sign * self._total, 0.0), phase=self.phase)
        if callable(self.density):
            f = self.density
            return CircleLayer(
                self.center, self.radius, density=lambda t: np.maximum(sign * np.asarray(f(t)), 0.0),
                phase=self.phase,
            )
        return CircleLayer(
            self.center, self.radius, density=tuple(max(sign * v, 0.0) for v in self.density),
            phase=self.phase,
        )

    def point(self, phi):
        return self.center + self.radius * np.exp(1j * np.asarray(phi, dtype=float))


@dataclass(frozen=True)
class CellDensity:
    """Area density, constant on each cell of an ``n x n`` grid over ``[-1/2, 1/2]^2``.

    ``values[j, i]`` is the density on cell ``x in [x_i, x_{i+1}], y in [y_j, y_{j+1}]``.
    Only the part of each cell inside ``D(1/2)`` carries mass.
    """

    n: int
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.ndim == 1:
            vals = vals.reshape(self.n, self.n)
        if vals.shape != (self.n, self.n):
            raise ValueError(f"cell density needs {self.n}x{self.n} values, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("cell density values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "values", vals)

    def __eq__(self, other):
        return isinstance(other, CellDensity) and self.n == other.n and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash((self.n, self.values.tobytes()))

    @property
    def step(self) -> float:
        return 1.0 / self.n

    def edges(self) -> np.ndarray:
        return np.linspace(-CHART_RADIUS, CHART_RADIUS, self.n + 1)

    def cell_areas(self) -> np.ndarray:
        """Area of each cell intersected with ``D(1/2)`` (exact)."""
        return self.clipped_areas(())

    def clipped_areas(self, discs: Sequence[tuple[complex, float]]) -> np.ndarray:
        """Exact area of each cell intersected with ``D(1/2)`` and every given disc."""
        e = self.edges()
        allc = [(0j, CHART_RADIUS), *discs]
        out = np.zeros((self.n, self.n))
        for j in range(self.n):
            for i in range(self.n):
                out[j, i] = rect_discs_area(e[i], e[i + 1], e[j], e[j + 1], allc)
        return out

    def part(self, sign: int) -> CellDensity:
        return CellDensity(self.n, np.maximum(sign * self.values, 0.0))

    def cell_kind(self) -> np.ndarray:
        """0: outside the disc, 1: cut by the circle, 2: fully inside."""
        e = self.edges()
        x0, y0 = np.meshgrid(e[:-1], e[:-1])
        x1, y1 = np.meshgrid(e[1:], e[1:])
        far = np.maximum(np.maximum(x0**2, x1**2) + np.maximum(y0**2, y1**2), 0)
        near_x = np.where((x0 <= 0) & (x1 >= 0), 0.0, np.minimum(x0**2, x1**2))
        near_y = np.where((y0 <= 0) & (y1 >= 0), 0.0, np.minimum(y0**2, y1**2))
        near = near_x + near_y
        r2 = CHART_RADIUS**2
        kind = np.ones((self.n, self.n), dtype=int)
        kind[far <= r2] = 2
        kind[near >= r2] = 0
        return kind


def rect_discs_area(x0: float, x1: float, y0: float, y1: float, discs: Iterable[tuple[complex, float]]) -> float:
    """Exact area of the rectangle ``[x0,x1] x [y0,y1]`` intersected with discs.

    The height of the intersection is piecewise one of ``y1``, ``y0`` or a circle
    arc ``cy +- sqrt(R^2 - (x - cx)^2)``. Between the breakpoints collected below
    the active pieces do not change, so each piece integrates in closed form.
    """
    discs = [(_as_complex(c), float(r)) for c, r in discs]
    lo, hi = x0, x1
    for c, r in discs:
        lo = max(lo, c.real - r)
        hi = min(hi, c.real + r)
    if hi <= lo or y1 <= y0:
        return 0.0
    bps = {lo, hi}
    for c, r in discs:
        for y in (y0, y1):
            dy = y - c.imag
            if abs(dy) < r:
                s = math.sqrt(r * r - dy * dy)
                bps.update((c.real - s, c.real + s))
    for a in range(len(discs)):
        for b in range(a + 1, len(discs)):
            bps.update(_circle_intersections_x(*discs[a], *discs[b]))
    xs = sorted(x for x in bps if lo <= x <= hi)

    def s_of(x, c, r):
        return math.sqrt(max(r * r - (x - c.real) ** 2, 0.0))

    def prim(x, c, r):
        # antiderivative of sqrt(r^2 - (x - cx)^2)
        u = min(max(x - c.real, -r), r)
        return 0.5 * (u * math.sqrt(max(r * r - u * u, 0.0)) + r * r * math.asin(u / r))

    total = []
    for a, b in zip(xs[:-1], xs[1:]):
        if b - a <= 0:
            continue
        m = 0.5 * (a + b)
        uppers = [(y1, None, 0)] + [(c.imag + s_of(m, c, r), (c, r), +1) for c, r in discs]
        lowers = [(y0, None, 0)] + [(c.imag - s_of(m, c, r), (c, r), -1) for c, r in discs]
        up = min(uppers, key=lambda t: t[0])
        dn = max(lowers, key=lambda t: t[0])
        if up[0] <= dn[0]:
            continue
        piece = 0.0
        for val, disc, sgn in ((up, up[1], 1.0), (dn, dn[1], -1.0)):
            if disc is None:
                piece += sgn * val[0] * (b - a)
            else:
                c, r = disc
                piece += sgn * (c.imag * (b - a) + val[2] * (prim(b, c, r) - prim(a, c, r)))
        total.append(piece)
    return max(math.fsum(total), 0.0)


def _circle_intersections_x(c1: complex, r1: float, c2: complex, r2: float) -> list[float]:
    d = abs(c2 - c1)
    if d == 0 or d > r1 + r2 or d < abs(r1 - r2):
        return []
    a = (r1 * r1 - r2 * r2 + d * d) / (2 * d)
    h = math.sqrt(max(r1 * r1 - a * a, 0.0))
    u = (c2 - c1) / d
    base = c1 + a * u
    return [(base + h * 1j * u).real, (base - h * 1j * u).real]


@dataclass(frozen=True)
class CurvatureMeasure:
    """Signed Radon measure on the closed disc: atoms + circle layers + cell density."""

    atoms: tuple[Atom, ...] = ()
    layers: tuple[CircleLayer, ...] = ()
    density: CellDensity | None = None

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(self.atoms))
        object.__setattr__(self, "layers", tuple(self.layers))

    @classmethod
    def from_atoms(cls, pairs: Iterable[tuple[complex, float]]) -> CurvatureMeasure:
        return cls(atoms=tuple(Atom(p, k) for p, k in pairs))

    def __add__(self, other: CurvatureMeasure) -> CurvatureMeasure:
        if self.density is not None and other.density is not None:
            if self.density.n != other.density.n:
                raise ValueError("cannot add cell densities on different grids")
            dens = CellDensity(self.density.n, self.density.values + other.density.values)
        else:
            dens = self.density if self.density is not None else other.density
        return CurvatureMeasure(self.atoms + other.atoms, self.layers + other.layers, dens)

    @property
    def is_empty(self) -> bool:
        return not self.atoms and not self.layers and self.density is None

    def total(self, which: Which = "signed") -> float:
        """Total mass of the requested part (componentwise positive/negative split)."""
        if which == "signed":
            return self.total("plus") - self.total("minus")
        if which not in ("plus", "minus"):
            raise ValueError(f"unknown part {which!r}")
        plus, minus = decompose(self)
        part = plus if which == "plus" else minus
        terms = [a.mass for a in part.atoms] + [layer.total_mass for layer in part.layers]
        if part.density is not None:
            terms.append(float(np.sum(part.density.values * part.density.cell_areas())))
        return math.fsum(terms)

    def atom_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        pos = np.array([a.position for a in self.atoms], dtype=complex)
        mass = np.array([a.mass for a in self.atoms], dtype=float)
        return pos, mass

    def boundary_atoms(self) -> tuple[Atom, ...]:
        return tuple(a for a in self.atoms if a.on_boundary)

    def max_point_mass(self) -> float:
        """Largest positive mass concentrated at a single point (0 if none)."""
        acc: dict[complex, list[float]] = {}
        for a in self.atoms:
            if a.mass > 0:
                acc.setdefault(a.position, []).append(a.mass)
        return max((math.fsum(v) for v in acc.values()), default=0.0)

    def cusp_points(self) -> list[complex]:
        acc: dict[complex, list[float]] = {}
        for a in self.atoms:
            if a.mass > 0:
                acc.setdefault(a.position, []).append(a.mass)
        return [p for p, v in acc.items() if math.fsum(v) >= TWO_PI]

    # -- serialisation -------------------------------------------------
    def to_dict(self) -> dict:
        out: dict = {
            "atoms": [{"p": [a.position.real, a.position.imag], "k": a.mass} for a in self.atoms],
            "layers": [],
        }
        for layer in self.layers:
            if callable(layer.density):
                raise ValueError("callable layer densities cannot be serialised")
            item = {"c": [layer.center.real, layer.center.imag], "R": layer.radius, "mass": layer.mass}
            if layer.density is not None:
                item["density"] = list(layer.density)
            if layer.phase:
                item["phase"] = layer.phase
            out["layers"].append(item)
        if self.density is not None:
            out["density"] = {"n": self.density.n, "values": self.density.values.ravel().tolist()}
        return out

    @classmethod
    def from_dict(cls, data: dict) -> CurvatureMeasure:
        atoms = tuple(Atom(complex(*a["p"]), a["k"]) for a in data.get("atoms", ()))
        layers = tuple(
            CircleLayer(
                complex(*item["c"]), item["R"], mass=item.get("mass"),
                density=item.get("density"), phase=item.get("phase", 0.0),
            )
            for item in data.get("layers", ())
        )
        dens = data.get("density")
        density = CellDensity(int(dens["n"]), np.asarray(dens["values"], dtype=float)) if dens else None
        return cls(atoms, layers, density)


def decompose(mu: CurvatureMeasure) -> tuple[CurvatureMeasure, CurvatureMeasure]:
    """Split ``mu`` into ``(plus, minus)``, both non-negative, ``mu = plus - minus``."""
    plus_atoms = tuple(Atom(a.position, max(a.mass, 0.0)) for a in mu.atoms)
    minus_atoms = tuple(Atom(a.position, max(-a.mass, 0.0)) for a in mu.atoms)
    plus_layers = tuple(layer.part(+1) for layer in mu.layers)
    minus_layers = tuple(layer.part(-1) for layer in mu.layers)
    plus_d = mu.density.part(+1) if mu.density is not None else None
    minus_d = mu.density.part(-1) if mu.density is not None else None
    return (
        CurvatureMeasure(plus_atoms, plus_layers, plus_d),
        CurvatureMeasure(minus_atoms, minus_layers, minus_d),
    )


def _layer_ball_mass(layer: CircleLayer, center: complex, radius: float) -> float:
    d = abs(layer.center - center)
    R = layer.radius
    if d + R < radius:
        return layer.total_mass
    if d >= R + radius or R >= d + radius:
        return 0.0
    # arc of the layer circle inside the open ball, by the law of cosines
    cos_half = (R * R + d * d - radius * radius) / (2 * R * d)
    half = math.acos(min(max(cos_half, -1.0), 1.0))
    mid = math.atan2((center - layer.center).imag, (center - layer.center).real)
    a, b = mid - half, mid + half
    return layer.arc_mass(a, b)


def ball_mass(mu: CurvatureMeasure, center, radius: float, which: Which = "signed") -> float:
    """Mass of the open Euclidean disc ``B(center, radius)``.

    Atoms on the boundary circle are excluded; cells count the exact area of
    their intersection with the disc.
    """
    if not radius > 0:
        raise ValueError("ball radius must be positive")
    center = _as_complex(center)
    if which == "signed":
        return ball_mass(mu, center, radius, "plus") - ball_mass(mu, center, radius, "minus")
    if which not in ("plus", "minus"):
        raise ValueError(f"unknown part {which!r}")
    plus, minus = decompose(mu)
    part = plus if which == "plus" else minus
    terms = [a.mass for a in part.atoms if abs(a.position - center) < radius]
    terms += [_layer_ball_mass(layer, center, radius) for layer in part.layers]
    if part.density is not None:
        terms.append(_density_ball_mass(part.density, center, radius))
    return math.fsum(terms)


def _density_ball_mass(dens: CellDensity, center: complex, radius: float) -> float:
    e = dens.edges()
    vals = dens.values
    terms = []
    for j in range(dens.n):
        if e[j + 1] <= center.imag - radius or e[j] >= center.imag + radius:
            continue
        for i in range(dens.n):
            v = vals[j, i]
            if v == 0.0 or e[i + 1] <= center.real - radius or e[i] >= center.real + radius:
                continue
            area = rect_discs_area(e[i], e[i + 1], e[j], e[j + 1], [(0j, CHART_RADIUS), (center, radius)])
            terms.append(v * area)
    return math.fsum(terms)


def no_cusp_check(mu: CurvatureMeasure) -> bool:
    """True iff no point carries positive mass ``>= 2*pi`` (no cusp)."""
    return mu.max_point_mass() < TWO_PI


def discretize_layer(layer: CircleLayer, m: int) -> CurvatureMeasure:
    """Replace a layer by ``m`` atoms at equally spaced angles on its circle.

    Atom ``j`` sits at angle ``phase + 2*pi*j/m`` and carries the mass of the
    arc of width ``2*pi/m`` centred on it (``mass/m`` for a uniform layer).
    The last mass is nudged by ulps so that ``math.fsum`` of the masses equals
    the layer mass exactly.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    total = layer.total_mass
    angles = [layer.phase + TWO_PI * j / m for j in range(m)]
    if layer.is_uniform:
        masses = [total / m] * m
    else:
        half = math.pi / m
        masses = [layer.arc_mass(a - half, a + half) for a in angles]
    for _ in range(64):
        err = total - math.fsum(masses)
        if err == 0.0:
            break
        masses[-1] = masses[-1] + err if abs(err) > abs(masses[-1]) * 1e-15 else math.nextafter(
            masses[-1], math.copysign(math.inf, err)
        )
    pts = [layer.center + layer.radius * complex(math.cos(a), math.sin(a)) for a in angles]
    return CurvatureMeasure(atoms=tuple(Atom(p, k) for p, k in zip(pts, masses)))
