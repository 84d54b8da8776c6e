"""The singular conformal metric on the chart and polygonal curves in it."""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ..errors import DomainError
from ..measure import CHART_RADIUS, TWO_PI, CurvatureMeasure
from ..potential import HarmonicTerm, LogFactorField

_BOUNDARY_SLACK = 1e-12


@dataclass(frozen=True)
class SingularMetric:
    """``exp(2 V[measure] + 2 h) |dz|^2`` on the chart.

    ``closed=True`` measures curves allowed to touch the boundary circle; it
    requires ``h = 0``. Grids are built lazily and shared between queries.
    """

    measure: CurvatureMeasure
    harmonic: HarmonicTerm = field(default_factory=HarmonicTerm.zero)
    closed: bool = False
    table_size: int = 257

    def __post_init__(self):
        if self.closed and not self.harmonic.is_zero:
            raise ValueError("closed mode requires a zero harmonic term")

    @classmethod
    def closure_of(cls, measure: CurvatureMeasure) -> SingularMetric:
        return cls(measure, HarmonicTerm.zero(), closed=True)

    def with_harmonic(self, harmonic: HarmonicTerm) -> SingularMetric:
        return SingularMetric(self.measure, harmonic, False, self.table_size)

    def shifted(self, c: float) -> SingularMetric:
        """Same metric times ``exp(2c)``."""
        return SingularMetric(self.measure, self.harmonic.shifted(c), self.closed, self.table_size)

    @cached_property
    def field(self) -> LogFactorField:
        return LogFactorField(self.measure, self.harmonic, self.table_size)

    @cached_property
    def no_cusp(self) -> bool:
        return self.measure.max_point_mass() < TWO_PI

    @cached_property
    def cusps(self) -> np.ndarray:
        f = self.field
        return f.atom_pos[f.atom_beta <= -1.0]

    @cached_property
    def boundary_atoms(self) -> tuple:
        """Atoms on the boundary circle; admitted but outside the open chart."""
        return tuple(self.measure.boundary_atoms())

    @cached_property
    def _grid_cache(self) -> dict:
        return {}

    @cached_property
    def _grid_lock(self) -> threading.Lock:
        return threading.Lock()

    def grid(self, level: int, closed: bool = False):
        from .grid import build_grid

        key = (int(level), bool(closed))
        with self._grid_lock:
            g = self._grid_cache.get(key)
            if g is None:
                g = build_grid(self.field, level, closed)
                self._grid_cache[key] = g
        return g

    def check_point(self, z: complex, closed: bool | None = None) -> complex:
        closed = self.closed if closed is None else closed
        z = complex(z)
        r = abs(z)
        if closed:
            if r > CHART_RADIUS * (1 + _BOUNDARY_SLACK):
                raise DomainError(f"{z} lies outside the closed chart")
        elif r >= CHART_RADIUS:
            raise DomainError(f"{z} lies outside the open chart")
        return z

    def is_cusp(self, z: complex) -> bool:
        return bool(np.any(self.cusps == complex(z)))


@dataclass(frozen=True)
class PolyCurve:
    """Polygon through ``vertices``, traversed at constant speed."""

    vertices: tuple

    def __post_init__(self):
        v = tuple(complex(x) for x in self.vertices)
        if len(v) < 1:
            raise ValueError("a curve needs at least one vertex")
        for a, b in zip(v[:-1], v[1:]):
            if a == b:
                raise ValueError("consecutive vertices must be distinct")
        object.__setattr__(self, "vertices", v)

    @classmethod
    def segment(cls, a: complex, b: complex) -> PolyCurve:
        return cls((a, b))

    @property
    def array(self) -> np.ndarray:
        return np.array(self.vertices, dtype=complex)

    def euclidean_length(self) -> float:
        return float(np.sum(np.abs(np.diff(self.array))))
