"""Adaptive conformal length of polygonal curves."""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad

from ..errors import DivergenceError, DomainError
from ..measure import CHART_RADIUS
from .core import PolyCurve, SingularMetric

_RTOL = 1e-10
_ON_SEGMENT = 1e-14


def _kinks(metric: SingularMetric, a: complex, d: complex) -> list[float]:
    """Parameters where the segment crosses a uniform layer circle."""
    out = []
    for layer in metric.measure.layers:
        if not layer.is_uniform:
            continue
        # |a + t d - c|^2 = R^2
        e = a - layer.center
        A = abs(d) ** 2
        B = 2 * (e.real * d.real + e.imag * d.imag)
        C = abs(e) ** 2 - layer.radius**2
        disc = B * B - 4 * A * C
        if disc > 0:
            s = math.sqrt(disc)
            out += [(-B - s) / (2 * A), (-B + s) / (2 * A)]
    return [t for t in out if 0 < t < 1]


def segment_length(metric: SingularMetric, a: complex, b: complex) -> float:
    """Conformal length of ``[a, b]`` (scaled), adaptive with power-law pieces."""
    f = metric.field
    d = b - a
    ell = abs(d)
    if ell == 0:
        return 0.0
    knots = {0.0, 1.0, *_kinks(metric, a, d)}
    singular: dict[float, int] = {}
    for j, (p, beta) in enumerate(zip(f.atom_pos, f.atom_beta)):
        if beta == 0.0:
            continue
        t = ((p - a) * d.conjugate()).real / ell**2
        t = min(max(t, 0.0), 1.0)
        dist = abs(a + t * d - p)
        if dist >= ell:
            continue
        if dist <= _ON_SEGMENT * ell:
            if beta <= -1.0:
                raise DivergenceError(f"segment [{a}, {b}] runs through a cusp at {p}")
            singular[t] = j
        knots.add(t)
    ts = sorted(knots)

    def regular(t):
        z = np.array([a + t * d])
        return float(f.factor(z)[0])

    total = 0.0
    for lo, hi in zip(ts[:-1], ts[1:]):
        if hi <= lo:
            continue
        pieces = [(lo, hi)]
        if lo in singular and hi in singular:
            mid = 0.5 * (lo + hi)
            pieces = [(lo, mid), (mid, hi)]
        for u, v in pieces:
            if u in singular or v in singular:
                at_lo = u in singular
                j = singular[u] if at_lo else singular[v]
                beta = f.atom_beta[j]

                def g(t, j=j):
                    z = np.array([a + t * d])
                    return float(np.exp(f.psi_excluding(z, j))[0])

                wvar = (beta, 0.0) if at_lo else (0.0, beta)
                val, _ = quad(g, u, v, weight="alg", wvar=wvar, epsabs=0, epsrel=_RTOL, limit=200)
                total += val * ell**beta
            else:
                val, _ = quad(regular, u, v, epsabs=0, epsrel=_RTOL, limit=200)
                total += val
    return total * ell * f.scale


def curve_length(metric: SingularMetric, curve: PolyCurve) -> float:
    """``int exp(V + h) |dz|`` along the polygon."""
    v = curve.array
    closed = metric.closed
    for z in v:
        r = abs(z)
        if (closed and r > CHART_RADIUS * (1 + 1e-12)) or (not closed and r >= CHART_RADIUS):
            raise DomainError(f"vertex {z} outside the chart")
    return float(math.fsum(segment_length(metric, a, b) for a, b in zip(v[:-1], v[1:])))
