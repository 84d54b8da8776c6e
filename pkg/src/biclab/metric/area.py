"""Areas: integrals of powers of the conformal factor over discs.

Away from atoms the integrand is smooth, so a polar rule about the disc centre
(adaptive in the radius, periodic trapezoid in the angle) converges fast.
Each atom inside is cut out with a smooth partition of unity and its
neighbourhood integrated in polar coordinates about the atom, where the
substitution ``rho = eps * u**(1/(e+2))`` absorbs the ``rho**e`` singularity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import RegularGridInterpolator

from ..errors import DivergenceError, DomainError, ResolutionError
from ..measure import CHART_RADIUS
from ..potential import LogFactorField, gauss_legendre01
from .core import SingularMetric

# fewer lattice nodes than this cannot place the sphere to better than a cell
MIN_BALL_NODES = 16

Weight = Callable[[np.ndarray], np.ndarray]


def _smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.clip(t, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        b = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return a / (a + b)


def _bump(rho, eps):
    """1 on ``rho <= eps/2``, 0 on ``rho >= eps``."""
    return _smooth_step((eps - rho) / (0.5 * eps))


@dataclass(frozen=True)
class _Cutout:
    index: int
    pos: complex
    eps: float
    expo: float


def _cutouts(field: LogFactorField, center: complex, R: float, power: float) -> list[_Cutout]:
    pos, beta = field.atom_pos, field.atom_beta
    out = []
    for j, (p, b) in enumerate(zip(pos, beta)):
        if b == 0.0:
            continue
        rp = abs(p - center)
        e = power * b
        if rp <= R * (1 + 1e-14) and e <= -2.0:
            raise DivergenceError(f"the atom at {p} makes the area integral diverge")
        if rp >= R:
            continue
        eps = 0.5 * (R - rp)
        for q, bq in zip(pos, beta):
            if q != p and bq != 0.0:
                eps = min(eps, 0.45 * abs(p - q))
        for layer in field.measure.layers:
            gap = abs(abs(p - layer.center) - layer.radius)
            if gap > 0:
                eps = min(eps, 0.9 * gap)
        out.append(_Cutout(j, complex(p), eps, e))
    return out


def _bump_integral(field: LogFactorField, c: _Cutout, power: float, weight: Weight | None, n_phi: int = 64) -> float:
    """``int bump * F**power * weight`` over the disc of radius eps about the atom."""
    q = 1.0 / (c.expo + 2.0)
    t8, w8 = gauss_legendre01(8)
    edges = np.concatenate(([0.0], 2.0 ** -np.arange(40, 4, -1), np.linspace(1 / 16, 1.0, 61)))
    lo, hi = edges[:-1], edges[1:]
    u = (lo[:, None] + (hi - lo)[:, None] * t8[None, :]).ravel()
    wu = ((hi - lo)[:, None] * w8[None, :]).ravel()
    rho = c.eps * u**q

    def ring(nphi):
        phi = 2 * np.pi * np.arange(nphi) / nphi
        z = c.pos + rho[:, None] * np.exp(1j * phi)[None, :]
        g = np.exp(power * field.psi_excluding(z, c.index))
        if weight is not None:
            g = g * weight(z)
        return g.mean(axis=1) * 2 * np.pi

    prev = ring(n_phi)
    for _ in range(6):
        n_phi *= 2
        cur = ring(n_phi)
        done = np.max(np.abs(cur - prev)) <= 1e-12 * np.max(np.abs(cur)) + 1e-300
        prev = cur
        if done or weight is not None:
            break
    return float(c.eps ** (c.expo + 2.0) * q * np.sum(wu * _bump(rho, c.eps) * prev))


def disc_integral(field: LogFactorField, center: complex, R: float, power: float = 2.0,
                  weight: Weight | None = None, rtol: float = 1e-9, n_phi: int | None = None,
                  panels: int = 256) -> float:
    """``int_{|z-center|<R} exp(power * psi) * weight`` (unscaled)."""
    if R <= 0:
        raise ValueError("radius must be positive")
    cuts = _cutouts(field, center, R, power)
    atoms_on = [(p, b) for p, b in zip(field.atom_pos, field.atom_beta) if b != 0.0]
    bumps = sum(_bump_integral(field, c, power, weight) for c in cuts)
    points = set()
    for p, _ in atoms_on:
        points.add(abs(p - center))
    for c in cuts:
        rp = abs(c.pos - center)
        points.update([rp - c.eps, rp - 0.5 * c.eps, rp + 0.5 * c.eps, rp + c.eps])
    for layer in field.measure.layers:
        dc = abs(layer.center - center)
        points.update([abs(dc - layer.radius), dc + layer.radius])
    points = sorted(x for x in points if 0 < x < R)
    fixed = n_phi if n_phi is not None else (2048 if weight is not None else None)

    def ring_values(rho, nphi):
        phi = 2 * np.pi * np.arange(nphi) / nphi
        z = center + rho * np.exp(1j * phi)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            g = np.exp(power * field.psi(z))
        cut = np.ones(z.shape)
        for c in cuts:
            cut -= _bump(np.abs(z - c.pos), c.eps)
        g = np.where(cut > 0, g * cut, 0.0)
        if weight is not None:
            g = g * weight(z)
        return g

    def inner(rho):
        if fixed is not None:
            return rho * 2 * np.pi * float(np.mean(ring_values(rho, fixed)))
        nphi = 128
        prev = np.mean(ring_values(rho, nphi))
        while nphi < 1 << 15:
            nphi *= 2
            cur = np.mean(ring_values(rho, nphi))
            if abs(cur - prev) <= 1e-11 * abs(cur):
                prev = cur
                break
            prev = cur
        return rho * 2 * np.pi * float(prev)

    knots = [0.0, *points, R]
    if weight is not None:
        # discontinuous integrand: fixed product rule, panels no wider than R/panels
        t4, w4 = gauss_legendre01(4)
        nphi = fixed
        total = 0.0
        for a, b in zip(knots[:-1], knots[1:]):
            if b <= a:
                continue
            m = max(1, int(math.ceil(panels * (b - a) / R)))
            e = np.linspace(a, b, m + 1)
            rho = (e[:-1, None] + np.diff(e)[:, None] * t4[None, :]).ravel()
            wr = (np.diff(e)[:, None] * w4[None, :]).ravel()
            for s0 in range(0, rho.size, 256):
                rr = rho[s0:s0 + 256]
                vals = ring_values(rr[:, None], nphi).mean(axis=1)
                total += float(np.sum(wr[s0:s0 + 256] * rr * 2 * np.pi * vals))
        return total + bumps
    total = 0.0
    for a, b in zip(knots[:-1], knots[1:]):
        if b <= a:
            continue
        val, _ = quad(inner, a, b, epsabs=0, epsrel=rtol, limit=200)
        total += val
    return total + bumps


def area(metric: SingularMetric, region=None) -> float:
    """Area of a disc ``(center, radius)`` in the chart, or of the whole chart for ``None``."""
    if region is None:
        center, R = 0j, CHART_RADIUS
    else:
        center, R = complex(region[0]), float(region[1])
        if R <= 0:
            raise ValueError("radius must be positive")
        if abs(center) + R > CHART_RADIUS * (1 + 1e-12):
            raise DomainError("region must lie in the closed chart")
    f = metric.field
    return disc_integral(f, center, R, 2.0) * f.scale**2


def ball_area(metric: SingularMetric, center, r: float, level: int = 7, start_level: int = 3) -> float:
    """Area of the metric ball ``{d(center, .) <= r}`` from an interpolated lattice distance field."""
    from .distance import ball_distances

    if r <= 0:
        return 0.0
    return ball_area_from_field(metric, ball_distances(metric, center, r, level, start_level), r)


def ball_area_from_field(metric: SingularMetric, df, r: float) -> float:
    grid = df.grid
    M = grid.half_width
    h = grid.step
    axis = np.arange(-M, M + 1) * h
    big = 1e3 * (r + 1.0)
    arr = df.lattice_array(fill=big)
    arr = np.where(np.isfinite(arr), arr, big)
    interp = RegularGridInterpolator((axis, axis), arr, method="linear", bounds_error=False, fill_value=big)
    inside = np.nonzero(df.values <= r)[0]
    if inside.size < MIN_BALL_NODES:
        raise ResolutionError(f"ball of radius {r} covers {inside.size} lattice nodes at level {grid.level}; "
                              f"at least {MIN_BALL_NODES} are needed")
    c = complex(df.center)
    reach = float(np.max(np.abs(grid.nodes[inside] - c))) + 2 * h if inside.size else 2 * h
    reach = min(reach, abs(c) + CHART_RADIUS)

    def indicator(z):
        d = interp(np.column_stack([z.real.ravel(), z.imag.ravel()])).reshape(z.shape)
        return ((d <= r) & (np.abs(z) < CHART_RADIUS)).astype(float)

    f = metric.field
    return disc_integral(f, c, reach, 2.0, weight=indicator) * f.scale**2
