"""Logarithmic potential ``V[mu](z) = -(1/2pi) \\int ln|z - xi| dmu(xi)`` and harmonic terms.

Scalar entry points (``eval_potential``, ``eval_harmonic``, ``conformal_factor``)
use closed forms where they exist and adaptive quadrature elsewhere.
``LogFactorField`` is the vectorised evaluator of ``psi = V[omega] + h`` used by
the length, distance and area engines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy import integrate
from scipy.interpolate import RectBivariateSpline

from .errors import DomainError
from .measure import CHART_RADIUS, TWO_PI, CellDensity, CircleLayer, CurvatureMeasure, _as_complex

MAX_DEGREE = 8
_QUAD = dict(limit=200, epsabs=1e-12, epsrel=1e-10)


# ---------------------------------------------------------------------------
# closed-form kernels
# ---------------------------------------------------------------------------

def _rect_log_primitive(u, v):
    """Primitive of ``ln sqrt(u^2 + v^2)`` in both ``u`` and ``v``."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    r2 = u * u + v * v
    with np.errstate(divide="ignore", invalid="ignore"):
        logt = np.where(r2 > 0, u * v * np.log(np.where(r2 > 0, r2, 1.0)), 0.0)
        at1 = np.where(u != 0, u * u * np.arctan(v / np.where(u != 0, u, 1.0)), 0.0)
        at2 = np.where(v != 0, v * v * np.arctan(u / np.where(v != 0, v, 1.0)), 0.0)
    return 0.5 * (logt - 3.0 * u * v + at1 + at2)


def rect_log_integral(z, x0, x1, y0, y1):
    """``\\iint_{[x0,x1]x[y0,y1]} ln|z - xi| dxi`` in closed form (broadcasts)."""
    z = np.asarray(z, dtype=complex)
    a, b = z.real, z.imag
    F = _rect_log_primitive
    return F(x1 - a, y1 - b) - F(x0 - a, y1 - b) - F(x1 - a, y0 - b) + F(x0 - a, y0 - b)


def _segment_log_primitive(c, u):
    """Primitive in ``u`` of ``ln sqrt(c^2 + u^2)``."""
    c = np.abs(np.asarray(c, dtype=float))
    u = np.asarray(u, dtype=float)
    r2 = c * c + u * u
    with np.errstate(divide="ignore", invalid="ignore"):
        lg = np.where(r2 > 0, u * np.log(np.where(r2 > 0, r2, 1.0)), 0.0)
        at = np.where(c > 0, 2.0 * c * np.arctan(u / np.where(c > 0, c, 1.0)), 0.0)
    return 0.5 * (lg - 2.0 * u + at)


def _cut_cell_breaks(x0, x1, y0, y1):
    """x-breakpoints of a cell cut by the chart circle and its clipped x-range."""
    r = CHART_RADIUS
    lo, hi = max(x0, -r), min(x1, r)
    bps = {lo, hi}
    for y in (y0, y1):
        if abs(y) < r:
            s = math.sqrt(r * r - y * y)
            bps.update((-s, s))
    return sorted(x for x in bps if lo <= x <= hi)


def _cut_cell_yrange(x, y0, y1):
    s = np.sqrt(np.maximum(CHART_RADIUS**2 - np.asarray(x) ** 2, 0.0))
    return np.maximum(y0, -s), np.minimum(y1, s)


def _cut_cell_log_integral(z: complex, x0, x1, y0, y1) -> float:
    """Adaptive ``\\iint_{cell \\cap D(1/2)} ln|z - xi| dxi`` for a cell cut by the circle."""
    a, b = z.real, z.imag

    def inner(x):
        ylo, yhi = _cut_cell_yrange(x, y0, y1)
        if yhi <= ylo:
            return 0.0
        c = x - a
        return float(_segment_log_primitive(c, yhi - b) - _segment_log_primitive(c, ylo - b))

    bps = _cut_cell_breaks(x0, x1, y0, y1)
    if len(bps) < 2:
        return 0.0
    pts = [a] if bps[0] < a < bps[-1] else None
    total = 0.0
    for lo, hi in zip(bps[:-1], bps[1:]):
        if hi <= lo:
            continue
        p = [a] if (pts and lo < a < hi) else None
        val, _ = integrate.quad(inner, lo, hi, points=p, **_QUAD)
        total += val
    return total


# ---------------------------------------------------------------------------
# scalar potential
# ---------------------------------------------------------------------------

def _layer_potential(layer: CircleLayer, z: complex) -> float:
    if layer.is_uniform:
        return -(layer.total_mass / TWO_PI) * math.log(max(abs(z - layer.center), layer.radius))
    rel = z - layer.center
    near = math.atan2(rel.imag, rel.real)
    R = layer.radius

    def integrand(phi):
        return math.log(abs(z - layer.center - R * complex(math.cos(phi), math.sin(phi)))) * float(
            layer.linear_density(phi)
        )

    if layer.is_sectored:
        n = len(layer.density)
        width = TWO_PI / n
        total = 0.0
        for s, v in enumerate(layer.density):
            if v == 0.0:
                continue
            lo = layer.phase + s * width
            hi = lo + width
            rep = lo + np.mod(near - lo, TWO_PI)
            p = [rep] if lo < rep < hi else None
            val, _ = integrate.quad(
                lambda t: math.log(abs(z - layer.center - R * complex(math.cos(t), math.sin(t)))),
                lo, hi, points=p, **_QUAD,
            )
            total += v * val
        return -(R / TWO_PI) * total
    lo = near - math.pi
    val, _ = integrate.quad(integrand, lo, lo + TWO_PI, points=[near], **_QUAD)
    return -(R / TWO_PI) * val


def _density_potential(dens: CellDensity, z: complex) -> float:
    e = dens.edges()
    kind = dens.cell_kind()
    x0, y0 = np.meshgrid(e[:-1], e[:-1])
    x1, y1 = np.meshgrid(e[1:], e[1:])
    full = (kind == 2) & (dens.values != 0)
    total = float(np.sum(dens.values[full] * rect_log_integral(z, x0[full], x1[full], y0[full], y1[full])))
    for j, i in zip(*np.nonzero((kind == 1) & (dens.values != 0))):
        total += dens.values[j, i] * _cut_cell_log_integral(z, e[i], e[i + 1], e[j], e[j + 1])
    return -total / TWO_PI


def eval_potential(mu: CurvatureMeasure, z) -> float:
    """``V[mu](z)``; raises ``DomainError`` exactly at an atom."""
    z = _as_complex(z)
    total = 0.0
    for atom in mu.atoms:
        d = abs(z - atom.position)
        if d == 0.0:
            if atom.mass == 0.0:
                continue
            raise DomainError(f"potential is infinite at the atom {atom.position}")
        total += -(atom.mass / TWO_PI) * math.log(d)
    for layer in mu.layers:
        total += _layer_potential(layer, z)
    if mu.density is not None:
        total += _density_potential(mu.density, z)
    return total


# ---------------------------------------------------------------------------
# harmonic terms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FluxRepresentation:
    """``h(z) = base + V[layer](z)`` for ``|z| < layer.radius``; the layer is centred at 0."""

    base: float
    layer: CircleLayer


@dataclass(frozen=True)
class HarmonicTerm:
    """``h(z) = sum_j Re(c_j z^j)``, ``c_j = a_j + i b_j``, degree <= 8.

    ``coefficients`` may be empty when only a flux representation is known.
    """

    coefficients: tuple[complex, ...] = (0j,)
    flux: FluxRepresentation | None = None

    def __post_init__(self):
        coeffs = tuple(complex(c) for c in self.coefficients)
        if len(coeffs) > MAX_DEGREE + 1:
            raise ValueError(f"harmonic polynomials are capped at degree {MAX_DEGREE}")
        object.__setattr__(self, "coefficients", coeffs)
        if not coeffs and self.flux is None:
            raise ValueError("harmonic term needs coefficients or a flux representation")

    @classmethod
    def zero(cls) -> HarmonicTerm:
        return cls((0j,))

    @classmethod
    def constant(cls, c: float) -> HarmonicTerm:
        return cls((complex(c),))

    @classmethod
    def from_pairs(cls, pairs: Sequence[Sequence[float]]) -> HarmonicTerm:
        return cls(tuple(complex(a, b) for a, b in pairs))

    @classmethod
    def flux_only(cls, base: float, layer: CircleLayer) -> HarmonicTerm:
        if abs(layer.center) != 0:
            raise ValueError("flux layers are centred at the origin")
        return cls((), FluxRepresentation(float(base), layer))

    @property
    def has_closed_form(self) -> bool:
        return bool(self.coefficients)

    @property
    def is_zero(self) -> bool:
        return self.has_closed_form and all(c == 0 for c in self.coefficients) and self.flux is None

    @property
    def constant_term(self) -> float:
        return self.coefficients[0].real if self.coefficients else self.flux.base

    def shifted(self, c: float) -> HarmonicTerm:
        """``h + c``."""
        if not self.has_closed_form:
            return HarmonicTerm((), FluxRepresentation(self.flux.base + c, self.flux.layer))
        coeffs = (self.coefficients[0] + c,) + self.coefficients[1:]
        return HarmonicTerm(coeffs)

    def without_constant(self) -> HarmonicTerm:
        return HarmonicTerm((0j,) + self.coefficients[1:])

    def value(self, z):
        """Closed-form value (array friendly)."""
        z = np.asarray(z, dtype=complex)
        acc = np.zeros(z.shape, dtype=complex)
        for c in reversed(self.coefficients):
            acc = acc * z + c
        return acc.real

    def gradient(self, z):
        """``h_x + i h_y`` (array friendly)."""
        z = np.asarray(z, dtype=complex)
        acc = np.zeros(z.shape, dtype=complex)
        for j in range(len(self.coefficients) - 1, 0, -1):
            acc = acc * z + j * self.coefficients[j]
        return np.conj(acc)

    def radial_derivative(self, r: float, phi):
        z = r * np.exp(1j * np.asarray(phi, dtype=float))
        acc = np.zeros(z.shape, dtype=complex)
        for j in range(len(self.coefficients) - 1, 0, -1):
            acc = acc * z + j * self.coefficients[j]
        return (acc * z).real / r

    def with_flux(self, radius: float) -> HarmonicTerm:
        """Attach the circle-flux representation on ``|z| = radius``.

        The layer density is ``2 * dh/dnu``: with the kernel ``-(1/2pi) ln|z - xi|``
        this reproduces ``h(z) - h(0) = -(1/pi) \\int ln|z - xi| dh/dnu |dxi|``.
        """
        if not self.has_closed_form:
            raise ValueError("flux representation needs the closed form")
        if not 0 < radius <= CHART_RADIUS:
            raise ValueError("flux circle must lie in the closed chart")
        coeffs = self.coefficients
        term = HarmonicTerm(coeffs)
        layer = CircleLayer(0j, radius, density=lambda phi: 2.0 * term.radial_derivative(radius, phi))
        return HarmonicTerm(coeffs, FluxRepresentation(self.constant_term, layer))


def eval_harmonic(h: HarmonicTerm, z) -> float:
    z = _as_complex(z)
    if h.has_closed_form:
        return float(h.value(z))
    r = h.flux.layer.radius
    if abs(z) >= r:
        raise DomainError(f"flux representation only valid inside |z| < {r}")
    return h.flux.base + _layer_potential(h.flux.layer, z)


def conformal_factor(metric, z) -> float:
    """``exp(V[omega](z) + h(z))`` for a metric with ``measure`` and ``harmonic`` fields."""
    return math.exp(eval_potential(metric.measure, z) + eval_harmonic(metric.harmonic, z))


# ---------------------------------------------------------------------------
# vectorised field
# ---------------------------------------------------------------------------

_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def gauss_legendre01(n: int) -> tuple[np.ndarray, np.ndarray]:
    if n not in _GL_CACHE:
        x, w = np.polynomial.legendre.leggauss(n)
        _GL_CACHE[n] = (0.5 * (x + 1.0), 0.5 * w)
    return _GL_CACHE[n]


def _sector_layer_field(layer: CircleLayer, z: np.ndarray, panels: int = 256) -> np.ndarray:
    """Composite Gauss-Legendre approximation of a non-uniform layer potential."""
    t, w = gauss_legendre01(8)
    edges = layer.phase + np.linspace(0.0, TWO_PI, panels + 1)
    phi = (edges[:-1, None] + (edges[1:] - edges[:-1])[:, None] * t[None, :]).ravel()
    wt = ((edges[1:] - edges[:-1])[:, None] * w[None, :]).ravel()
    dens = layer.linear_density(phi) * wt * layer.radius
    xi = layer.point(phi)
    out = np.empty(z.shape)
    flat = z.ravel()
    res = out.ravel()
    for s in range(0, flat.size, 4096):
        blk = flat[s:s + 4096]
        d = np.abs(blk[:, None] - xi[None, :])
        res[s:s + 4096] = np.log(np.maximum(d, 1e-300)) @ dens
    return -out / TWO_PI


def _density_field(dens: CellDensity, z: np.ndarray) -> np.ndarray:
    e = dens.edges()
    kind = dens.cell_kind()
    x0, y0 = np.meshgrid(e[:-1], e[:-1])
    x1, y1 = np.meshgrid(e[1:], e[1:])
    flat = z.ravel()
    acc = np.zeros(flat.size)
    full = (kind == 2) & (dens.values != 0)
    vals = dens.values[full]
    fx0, fx1, fy0, fy1 = x0[full], x1[full], y0[full], y1[full]
    for s in range(0, flat.size, 2048):
        blk = flat[s:s + 2048, None]
        acc[s:s + 2048] = rect_log_integral(blk, fx0, fx1, fy0, fy1) @ vals
    t, w = gauss_legendre01(16)
    for j, i in zip(*np.nonzero((kind == 1) & (dens.values != 0))):
        bps = _cut_cell_breaks(e[i], e[i + 1], e[j], e[j + 1])
        for lo, hi in zip(bps[:-1], bps[1:]):
            if hi <= lo:
                continue
            xs = lo + (hi - lo) * t
            ws = (hi - lo) * w
            ylo, yhi = _cut_cell_yrange(xs, e[j], e[j + 1])
            ok = yhi > ylo
            xs, ws, ylo, yhi = xs[ok], ws[ok], ylo[ok], yhi[ok]
            c = xs[None, :] - flat.real[:, None]
            val = _segment_log_primitive(c, yhi[None, :] - flat.imag[:, None]) - _segment_log_primitive(
                c, ylo[None, :] - flat.imag[:, None]
            )
            acc += dens.values[j, i] * (val @ ws)
    return (-acc / TWO_PI).reshape(z.shape)


@dataclass(frozen=True)
class LogFactorField:
    """Vectorised ``psi = V[omega] + h - h(0)`` with gradient; ``scale = exp(h(0))``.

    Atoms and uniform layers are evaluated in closed form. Non-uniform layers
    and cell densities are tabulated once on a ``table_size`` grid over the
    chart square and read back through a bicubic spline.
    """

    measure: CurvatureMeasure
    harmonic: HarmonicTerm = field(default_factory=HarmonicTerm.zero)
    table_size: int = 257

    def __post_init__(self):
        if not self.harmonic.has_closed_form:
            raise DomainError("the engines need a closed-form harmonic term")

    @cached_property
    def _merged_atoms(self):
        pos, mass = self.measure.atom_arrays()
        if pos.size == 0:
            return pos, mass
        uniq, inv = np.unique(pos, return_inverse=True)
        return uniq, np.bincount(inv.ravel(), weights=mass, minlength=uniq.size)

    @cached_property
    def atom_pos(self) -> np.ndarray:
        """Distinct atom positions; coincident atoms are merged."""
        return self._merged_atoms[0]

    @cached_property
    def atom_beta(self) -> np.ndarray:
        """Exponent of ``|z - p|`` in the conformal factor, ``-k / 2pi``."""
        return -self._merged_atoms[1] / TWO_PI

    @cached_property
    def _uniform_layers(self):
        ls = [l for l in self.measure.layers if l.is_uniform]
        return (
            np.array([l.center for l in ls], dtype=complex),
            np.array([l.radius for l in ls]),
            np.array([-l.total_mass / TWO_PI for l in ls]),
        )

    @cached_property
    def _poly(self) -> HarmonicTerm:
        return self.harmonic.without_constant()

    @cached_property
    def shift(self) -> float:
        return self.harmonic.constant_term

    @cached_property
    def scale(self) -> float:
        return math.exp(self.shift)

    @cached_property
    def _table(self) -> RectBivariateSpline | None:
        others = [l for l in self.measure.layers if not l.is_uniform]
        if not others and self.measure.density is None:
            return None
        g = np.linspace(-CHART_RADIUS, CHART_RADIUS, self.table_size)
        X, Y = np.meshgrid(g, g, indexing="ij")
        Z = X + 1j * Y
        vals = np.zeros(Z.shape)
        for layer in others:
            vals += _sector_layer_field(layer, Z)
        if self.measure.density is not None:
            vals += _density_field(self.measure.density, Z)
        return RectBivariateSpline(g, g, vals, kx=3, ky=3)

    @property
    def has_table(self) -> bool:
        return self._table is not None

    def smooth(self, z):
        """Every part of ``psi`` except the atoms."""
        z = np.asarray(z, dtype=complex)
        out = self._poly.value(z) if not self._poly.is_zero else np.zeros(z.shape)
        c, R, coef = self._uniform_layers
        for ci, Ri, ki in zip(c, R, coef):
            out = out + ki * np.log(np.maximum(np.abs(z - ci), Ri))
        if self._table is not None:
            out = out + self._table.ev(z.real, z.imag).reshape(z.shape)
        return out

    def smooth_gradient(self, z):
        z = np.asarray(z, dtype=complex)
        out = self._poly.gradient(z) if not self._poly.is_zero else np.zeros(z.shape, dtype=complex)
        c, R, coef = self._uniform_layers
        for ci, Ri, ki in zip(c, R, coef):
            d = z - ci
            r2 = (d * np.conj(d)).real
            out = out + np.where(r2 > Ri * Ri, ki * d / np.where(r2 > 0, r2, 1.0), 0.0)
        if self._table is not None:
            gx = self._table.ev(z.real, z.imag, dx=1).reshape(z.shape)
            gy = self._table.ev(z.real, z.imag, dy=1).reshape(z.shape)
            out = out + gx + 1j * gy
        return out

    def psi(self, z):
        """``log`` of the conformal factor without the constant ``h(0)``."""
        z = np.asarray(z, dtype=complex)
        out = self.smooth(z)
        for p, b in zip(self.atom_pos, self.atom_beta):
            if b != 0.0:
                with np.errstate(divide="ignore"):
                    out = out + b * np.log(np.abs(z - p))
        return out

    def psi_excluding(self, z, j: int):
        """``psi`` with atom ``j`` left out, finite at that atom."""
        z = np.asarray(z, dtype=complex)
        out = self.smooth(z)
        for i, (p, b) in enumerate(zip(self.atom_pos, self.atom_beta)):
            if b != 0.0 and i != j:
                with np.errstate(divide="ignore"):
                    out = out + b * np.log(np.abs(z - p))
        return out

    def factor(self, z):
        """Conformal factor divided by ``scale``; 0 or inf exactly at atoms."""
        with np.errstate(over="ignore", invalid="ignore"):
            return np.exp(self.psi(z))

    def grad_psi(self, z):
        z = np.asarray(z, dtype=complex)
        out = self.smooth_gradient(z)
        for p, b in zip(self.atom_pos, self.atom_beta):
            if b != 0.0:
                d = z - p
                r2 = (d * np.conj(d)).real
                with np.errstate(divide="ignore", invalid="ignore"):
                    out = out + b * d / r2
        return out
