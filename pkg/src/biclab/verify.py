"""Validators for curvature inequalities and the distance-convergence experiment."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import DomainError
from .measure import CHART_RADIUS, TWO_PI, CircleLayer, CurvatureMeasure, decompose, discretize_layer
from .metric import PolyCurve, SingularMetric, curve_length, distance, distance_closure
from .metric.area import ball_area_from_field, disc_integral
from .metric.distance import START_LEVEL, ball_distances
from .metric.grid import HALF_STENCIL


@dataclass(frozen=True)
class ValidationReport:
    """``left <= right`` up to ``rtol * |right| + atol``."""

    instance: dict
    left: float
    right: float
    rtol: float = 0.0
    atol: float = 0.0

    @property
    def tolerance(self) -> float:
        return self.rtol * abs(self.right) + self.atol

    @property
    def margin(self) -> float:
        return self.right - self.left

    @property
    def passed(self) -> bool:
        return self.left <= self.right + self.tolerance

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    def row(self) -> dict:
        return {
            "left": self.left,
            "right": self.right,
            "margin": self.margin,
            "rtol": self.rtol,
            "atol": self.atol,
            "verdict": self.verdict,
        }


def _open_positive_mass(mu: CurvatureMeasure) -> float:
    """Positive mass carried by the open chart (boundary atoms left out)."""
    on_circle = sum(max(a.mass, 0.0) for a in mu.atoms if a.on_boundary)
    return mu.total("plus") - on_circle


def segment_bound(mass_plus: float, length: float) -> float:
    a = mass_plus / TWO_PI
    return 2.0 / (1.0 - a) * length ** (1.0 - a)


def check_segment_bound(mu: CurvatureMeasure, z, zp, rtol: float = 1e-4) -> ValidationReport:
    """Conformal length of ``[z, z']`` (``h = 0``) against the power-law bound."""
    w = _open_positive_mass(mu)
    if w >= TWO_PI:
        raise DomainError("the segment bound needs positive mass below 2*pi")
    z, zp = complex(z), complex(zp)
    inst = {"z": [z.real, z.imag], "zp": [zp.real, zp.imag], "positive_mass": w}
    if z == zp:
        return ValidationReport(inst, 0.0, 0.0, rtol)
    left = curve_length(SingularMetric(mu), PolyCurve.segment(z, zp))
    return ValidationReport(inst, left, segment_bound(w, abs(z - zp)), rtol)


def random_atomic_measure(rng: np.random.Generator, max_atoms: int = 4, budget: float = TWO_PI - 0.1,
                          negative: bool = True) -> CurvatureMeasure:
    """Atoms in the chart with total positive mass at most ``budget``."""
    n = int(rng.integers(1, max_atoms + 1))
    r = 0.49 * np.sqrt(rng.uniform(0, 1, n))
    pos = r * np.exp(2j * np.pi * rng.uniform(0, 1, n))
    signs = np.where(rng.uniform(0, 1, n) < (0.3 if negative else 0.0), -1.0, 1.0)
    raw = rng.uniform(0.05, 1.0, n)
    plus = raw[signs > 0]
    share = budget * rng.uniform(0.2, 1.0)
    masses = np.where(signs > 0, raw / max(plus.sum(), 1e-300) * share, -raw * np.pi)
    return CurvatureMeasure.from_atoms(zip(pos.tolist(), masses.tolist()))


def segment_bound_sweep(seed: int, count: int = 1000, rtol: float = 1e-4) -> list[ValidationReport]:
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        mu = random_atomic_measure(rng)
        r = 0.49 * np.sqrt(rng.uniform(0, 1, 2))
        z, zp = r * np.exp(2j * np.pi * rng.uniform(0, 1, 2))
        out.append(check_segment_bound(mu, z, zp, rtol))
    return out


# ---------------------------------------------------------------- area bounds

def _region_mass(mu: CurvatureMeasure, inside: Callable[[np.ndarray], np.ndarray], samples: int = 4096) -> float:
    """Mass of a non-negative measure inside a region given by a point predicate."""
    total = 0.0
    if mu.atoms:
        pos = np.array([a.position for a in mu.atoms], dtype=complex)
        mass = np.array([a.mass for a in mu.atoms])
        total += float(np.sum(mass[inside(pos)]))
    for layer in mu.layers:
        edges = layer.phase + TWO_PI * np.arange(samples + 1) / samples
        mids = 0.5 * (edges[:-1] + edges[1:])
        if layer.is_uniform:
            w = np.full(samples, layer.total_mass / samples)
        else:
            w = np.array([layer.arc_mass(a, b) for a, b in zip(edges[:-1], edges[1:])])
        total += float(np.sum(w[inside(layer.point(mids))]))
    if mu.density is not None:
        d = mu.density
        k = 4
        e = d.edges()
        h = d.step / k
        off = (np.arange(k) + 0.5) * h
        xs = (e[:-1, None] + off[None, :]).ravel()
        X, Y = np.meshgrid(xs, xs, indexing="xy")
        vals = np.repeat(np.repeat(d.values, k, axis=0), k, axis=1)
        pts = X + 1j * Y
        inside_chart = np.abs(pts) < CHART_RADIUS
        total += float(np.sum(vals * h * h * (inside(pts) & inside_chart)))
    return total


@dataclass(frozen=True)
class AreaBounds:
    upper: ValidationReport
    lower: ValidationReport
    area: float
    mass_plus: float
    mass_minus: float


def check_area_bounds(metric: SingularMetric, x, r: float, level: int = 7, rtol: float = 1e-2,
                      start_level: int = START_LEVEL) -> AreaBounds:
    """Area of the metric ball against ``(2pi + w-) r^2/2`` and ``(2pi - w+) r^2/32``."""
    if r <= 0:
        raise ValueError("r must be positive")
    x = complex(x)
    df = ball_distances(metric, x, r, level, start_level)
    grid = df.grid
    M = grid.half_width
    axis = np.arange(-M, M + 1) * grid.step
    big = 1e3 * (r + 1.0)
    arr = df.lattice_array(fill=big)
    arr = np.where(np.isfinite(arr), arr, big)
    interp = RegularGridInterpolator((axis, axis), arr, method="linear", bounds_error=False, fill_value=big)

    def inside(z):
        z = np.asarray(z, dtype=complex)
        d = interp(np.column_stack([z.real.ravel(), z.imag.ravel()])).reshape(z.shape)
        return (d <= r) | (z == x)

    plus, minus = decompose(metric.measure)
    wp = _region_mass(plus, inside)
    wm = _region_mass(minus, inside)
    a = ball_area_from_field(metric, df, r)
    inst = {"x": [x.real, x.imag], "r": r, "level": level, "mass_plus": wp, "mass_minus": wm}
    upper = ValidationReport({**inst, "bound": "upper"}, a, (TWO_PI + wm) * r * r / 2, rtol)
    lower = ValidationReport({**inst, "bound": "lower"}, (TWO_PI - wp) * r * r / 32, a, rtol)
    return AreaBounds(upper, lower, a, wp, wm)


def ball_inside_chart(metric: SingularMetric, x: complex, r: float, level: int) -> bool:
    """Whether every lattice node within distance ``r`` stays two cells off the boundary."""
    from .metric.distance import distance_field

    df = distance_field(metric, x, level, limit=r * 1.05)
    near = df.grid.nodes[df.values <= r * 1.05]
    return bool(near.size == 0 or np.max(np.abs(near)) < CHART_RADIUS - 2 * df.grid.step)


def random_area_instance(rng: np.random.Generator, level: int = 6,
                         min_nodes: int = 200) -> tuple[SingularMetric, complex, float]:
    """An atomic metric with a ball well inside the chart and covering at least ``min_nodes`` lattice nodes."""
    from .metric.distance import distance_field

    while True:
        mu = random_atomic_measure(rng, max_atoms=3, budget=TWO_PI - 0.5)
        metric = SingularMetric(mu)
        atoms = np.array([a.position for a in mu.atoms])
        if rng.uniform() < 1 / 3:
            # centred on an atom: the cone case, where the upper bound is tight for negative mass
            x = complex(atoms[int(rng.integers(atoms.size))])
        else:
            while True:
                x = complex(0.2 * np.sqrt(rng.uniform()) * np.exp(2j * np.pi * rng.uniform()))
                if np.min(np.abs(atoms - x)) > 0.02:
                    break
        r = float(rng.uniform(0.05, 0.25))
        df = distance_field(metric, x, level, limit=r * 1.05)
        h = df.grid.step
        for _ in range(4):
            near = df.grid.nodes[df.values <= r * 1.05]
            if near.size and np.max(np.abs(near)) < CHART_RADIUS - 2 * h:
                break
            r *= 0.6
        else:
            continue
        if np.count_nonzero(df.values <= r) >= min_nodes:
            return metric, x, r


def area_bound_sweep(seed: int, count: int = 200, level: int = 6, rtol: float = 1e-2) -> list[AreaBounds]:
    """Upper (and lower) area bounds on random atomic instances."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        metric, x, r = random_area_instance(rng, level)
        out.append(check_area_bounds(metric, x, r, level, rtol))
    return out


# ---------------------------------------------------------------- Troyanov

def troyanov_bound(nu_mass: float, p: float) -> float:
    return math.pi / (1.0 - p * nu_mass / TWO_PI)


def check_troyanov(nu: CurvatureMeasure, p: float, rtol: float = 1e-9) -> ValidationReport:
    """``int_chart exp(2p V[nu])`` against ``pi / (1 - p nu / 2pi)``."""
    if p <= 1:
        raise DomainError("p must exceed 1")
    if nu.total("minus") > 0:
        raise DomainError("nu must be non-negative")
    mass = nu.total("plus")
    if p * mass >= TWO_PI:
        raise DomainError("needs p * nu(chart) < 2*pi")
    f = SingularMetric(nu).field
    left = disc_integral(f, 0j, CHART_RADIUS, power=2.0 * p)
    return ValidationReport({"p": p, "mass": mass}, left, troyanov_bound(mass, p), rtol)


# ---------------------------------------------------------------- convergence

@dataclass(frozen=True)
class ConvergenceTable:
    """Distances under ``discretize_layer(layer, m)`` against the layer itself."""

    ms: tuple
    probes: tuple
    estimates: np.ndarray
    limits: np.ndarray

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.ms[:-1], self.ms[1:])):
            raise ValueError("m values must be strictly increasing")

    @property
    def errors(self) -> np.ndarray:
        lim = np.asarray(self.limits)
        with np.errstate(invalid="ignore", divide="ignore"):
            rel = np.abs(self.estimates - lim[None, :]) / np.abs(lim)[None, :]
        return np.where(lim[None, :] == 0, np.abs(self.estimates), rel)

    def max_error(self) -> np.ndarray:
        return self.errors.max(axis=1)

    def rows(self):
        err = self.errors
        for i, m in enumerate(self.ms):
            for j, (z, zp) in enumerate(self.probes):
                yield {"m": m, "probe": j, "z": z, "zp": zp, "estimate": float(self.estimates[i, j]),
                       "limit": float(self.limits[j]), "rel_error": float(err[i, j])}


def convergence_experiment(layer: CircleLayer, ms: Sequence[int], probes: Sequence[tuple], levels: int = 8) -> ConvergenceTable:
    """Closure distances for atomic approximations of a layer, compared with the layer's own."""
    if not (0 <= layer.total_mass < TWO_PI):
        raise DomainError("layer mass must lie in [0, 2*pi)")
    probes = tuple((complex(a), complex(b)) for a, b in probes)
    limit_metric = SingularMetric.closure_of(CurvatureMeasure(layers=(layer,)))
    limits = np.array([distance_closure(limit_metric, a, b, levels).value for a, b in probes])
    est = np.zeros((len(ms), len(probes)))
    for i, m in enumerate(ms):
        mu = discretize_layer(layer, int(m))
        pos = {a.position for a in mu.atoms}
        for a, b in probes:
            if a in pos or b in pos:
                raise DomainError(f"probe {a} or {b} sits on an atom")
        metric = SingularMetric.closure_of(mu)
        est[i] = [distance_closure(metric, a, b, levels).value for a, b in probes]
    return ConvergenceTable(tuple(int(m) for m in ms), probes, est, limits)


# ---------------------------------------------------------------- cusp

@dataclass(frozen=True)
class CuspRun:
    mass: float
    probe: complex
    levels: tuple
    estimates: tuple

    @property
    def increments(self) -> tuple:
        return tuple(b - a for a, b in zip(self.estimates[:-1], self.estimates[1:]))


def _ring_estimate(metric: SingularMetric, probe: complex, level: int, start_level: int) -> float:
    """Lattice distance from the ring of neighbours of the origin to ``probe``."""
    from .metric.distance import _connectors

    grid = metric.grid(level)
    ring = grid.node_at(np.array([d[0] for d in HALF_STENCIL] + [-d[0] for d in HALF_STENCIL]),
                        np.array([d[1] for d in HALF_STENCIL] + [-d[1] for d in HALF_STENCIL]))
    ring = ring[grid.usable(ring)]
    t_nodes, t_w = _connectors(metric, grid, probe, start_level)
    dist, _ = grid.shortest_from(ring, np.zeros(ring.size))
    return float(np.min(dist[t_nodes] + t_w)) * metric.field.scale


def cusp_divergence(probe, levels: Sequence[int] = (5, 6, 7, 8, 9, 10), mass: float = TWO_PI,
                    start_level: int = START_LEVEL) -> CuspRun:
    """Per-level lattice distances from the origin to ``probe`` under ``mass * delta_0``.

    For a cusp the origin is at infinite distance, so the lattice value is
    measured from the ring of its grid neighbours; it grows like ``|ln h|``.
    """
    probe = complex(probe)
    if probe == 0:
        raise DomainError("probe must differ from the origin")
    levels = tuple(int(l) for l in levels)
    mu = CurvatureMeasure.from_atoms([(0j, mass)]) if mass != 0 else CurvatureMeasure()
    metric = SingularMetric(mu)
    if mass >= TWO_PI:
        est = [_ring_estimate(metric, probe, l, min(start_level, l)) for l in levels]
    else:
        run = distance(metric, 0j, probe, levels=max(levels), start_level=min(start_level, min(levels)), smooth=False)
        table = dict(zip(run.levels, run.per_level))
        est = [table[l] for l in levels]
    return CuspRun(mass, probe, levels, tuple(est))
