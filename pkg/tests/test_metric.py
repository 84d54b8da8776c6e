import math

import numpy as np
import pytest

from biclab import CircleLayer, CurvatureMeasure, DivergenceError, DomainError, HarmonicTerm, ResolutionError
from biclab.cone import ConeSpec, chart_to_cone, cone_distance
from biclab.metric import (
    PolyCurve,
    SingularMetric,
    area,
    ball_area,
    curve_length,
    distance,
    distance_closure,
    distance_field,
    metric_ball,
)

PI = math.pi
FLAT = SingularMetric(CurvatureMeasure())


def cone_metric(k):
    return SingularMetric(CurvatureMeasure.from_atoms([(0, k)]))


def cone_oracle(k, z, w):
    beta = -k / (2 * PI)
    return cone_distance(ConeSpec.from_curvature(k), chart_to_cone(beta, z), chart_to_cone(beta, w))


# ------------------------------------------------------------------ curve_length

def test_flat_segment_length():
    assert curve_length(FLAT, PolyCurve.segment(0, 0.3)) == pytest.approx(0.3, rel=1e-14)


def test_cone_radial_segment_length():
    assert curve_length(cone_metric(PI), PolyCurve.segment(0, 0.25)) == pytest.approx(1.0, rel=1e-10)


def test_harmonic_segment_length():
    m = SingularMetric(CurvatureMeasure(), HarmonicTerm.from_pairs([[0, 0], [1, 0]]))
    assert curve_length(m, PolyCurve.segment(0, 0.2)) == pytest.approx(math.exp(0.2) - 1, rel=1e-12)


def test_polyline_length_adds_segments():
    m = SingularMetric(CurvatureMeasure.from_atoms([(0.1j, 2.0), (-0.2, -1.5)]))
    pts = [0.3, 0.1 + 0.1j, -0.25j, -0.3 + 0.2j]
    whole = curve_length(m, PolyCurve(tuple(pts)))
    parts = sum(curve_length(m, PolyCurve.segment(a, b)) for a, b in zip(pts[:-1], pts[1:]))
    assert whole == pytest.approx(parts, rel=1e-12)


def test_segment_through_cone_point_matches_radial_formula():
    # passes straight through the apex: two radial pieces
    got = curve_length(cone_metric(PI / 2), PolyCurve.segment(-0.2, 0.3))
    want = (0.2**0.75 + 0.3**0.75) / 0.75
    assert got == pytest.approx(want, rel=1e-9)


def test_segment_through_cusp_diverges():
    with pytest.raises(DivergenceError):
        curve_length(cone_metric(2 * PI), PolyCurve.segment(-0.1, 0.1))


# ------------------------------------------------------------------ distance

def test_flat_distance():
    assert distance(FLAT, -0.2, 0.2, levels=6).value == pytest.approx(0.4, rel=1e-12)


def test_cone_distance_example():
    e = distance(cone_metric(PI / 2), 0.2, 0.2j, levels=7)
    assert cone_oracle(PI / 2, 0.2, 0.2j) == pytest.approx(0.44307, abs=1e-5)
    assert e.value == pytest.approx(0.44307, rel=1e-3)


@pytest.mark.parametrize("k", [-PI, PI / 2, PI])
def test_distance_matches_cone_oracle(k):
    for z, w in [(0.3, -0.2 + 0.1j), (0.1 + 0.3j, -0.35j), (-0.4, 0.05 - 0.05j)]:
        assert distance(cone_metric(k), z, w, levels=7).value == pytest.approx(cone_oracle(k, z, w), rel=5e-3)


def test_distance_from_cusp_point_is_divergent():
    m = cone_metric(2 * PI)
    with pytest.raises(DivergenceError):
        distance(m, 0, 0.1, levels=6)


def test_distance_outside_chart_is_rejected():
    with pytest.raises(DomainError):
        distance(FLAT, 0.5, 0.1, levels=4)


def test_distance_estimate_fields():
    e = distance(SingularMetric(CurvatureMeasure.from_atoms([(0.05, 1.0)])), -0.3, 0.3, levels=6)
    assert e.levels == (3, 4, 5, 6)
    assert all(b <= a * (1 + 1e-12) for a, b in zip(e.per_level[:-1], e.per_level[1:]))
    assert e.value <= e.graph_value * (1 + 1e-12)
    assert e.path[0] == -0.3 and e.path[-1] == 0.3
    lo, hi = e.bracket
    assert lo <= hi == e.value


def test_same_point_distance_is_zero():
    assert distance(FLAT, 0.1, 0.1).value == 0.0


# ------------------------------------------------------------------ distance_closure

def test_closure_requires_closed_mode():
    with pytest.raises(ValueError):
        distance_closure(FLAT, 0, 0.1)
    with pytest.raises(ValueError):
        SingularMetric(CurvatureMeasure(), HarmonicTerm.constant(1.0), closed=True)


def test_closure_flat_is_euclidean():
    m = SingularMetric.closure_of(CurvatureMeasure())
    assert distance_closure(m, 0.1 + 0.3j, -0.2, levels=6).value == pytest.approx(abs(0.3 + 0.3j), rel=1e-12)


def test_closure_not_longer_than_open():
    mu = CurvatureMeasure.from_atoms([(0.1, 3.0), (-0.1j, -2.0)])
    for z, w in [(0.3, -0.3), (0.2j, -0.2 - 0.1j)]:
        closed = distance_closure(SingularMetric.closure_of(mu), z, w, levels=6).value
        opened = distance(SingularMetric(mu), z, w, levels=6).value
        assert closed <= opened * (1 + 1e-6)


def test_closure_hugs_the_boundary_past_heavy_atoms():
    mu = CurvatureMeasure.from_atoms([(x, 5.0) for x in np.linspace(-0.4, 0.4, 5)])
    opened = distance(SingularMetric(mu), -0.49, 0.49, levels=6)
    closed = distance_closure(SingularMetric.closure_of(mu), -0.49, 0.49, levels=6)
    assert all(c < o for c, o in zip(closed.per_level, opened.per_level))


# ------------------------------------------------------------------ area

def test_flat_disc_area():
    assert area(FLAT, (0, 0.3)) == pytest.approx(PI * 0.09, rel=1e-12)


def test_cone_disc_areas():
    assert area(cone_metric(PI / 2), (0, 0.3)) == pytest.approx(4 * PI / 3 * 0.3**1.5, rel=1e-9)
    assert area(cone_metric(-PI), (0, 0.3)) == pytest.approx(2 * PI * 0.3**3 / 3, rel=1e-9)


def test_off_centre_cone_disc_area():
    # the disc D(0.1, 0.3) contains the apex; compare with polar quadrature around the apex
    from scipy.integrate import dblquad

    f = lambda r, t: r * r**-0.5
    def rmax(t):
        # distance from 0 to the circle |z - 0.1| = 0.3 along direction t
        c = 0.1 * math.cos(t)
        return c + math.sqrt(c * c - 0.01 + 0.09)
    want, _ = dblquad(f, 0, 2 * PI, 0, rmax, epsabs=1e-12, epsrel=1e-11)
    assert area(cone_metric(PI / 2), (0.1, 0.3)) == pytest.approx(want, rel=1e-8)


def test_whole_chart_area_with_harmonic_shift():
    m = SingularMetric(CurvatureMeasure(), HarmonicTerm.constant(0.5))
    assert area(m) == pytest.approx(math.e * PI / 4, rel=1e-12)


def test_area_around_cusp_diverges():
    with pytest.raises(DivergenceError):
        area(cone_metric(2 * PI), (0, 0.2))


def test_area_region_outside_chart():
    with pytest.raises(DomainError):
        area(FLAT, (0.3, 0.3))


def test_flat_ball_area():
    assert ball_area(FLAT, 0.05j, 0.2, level=6) == pytest.approx(PI * 0.04, rel=2e-3)


def test_cone_ball_area_at_apex():
    theta = 1.5 * PI
    assert ball_area(cone_metric(PI / 2), 0, 0.3, level=6) == pytest.approx(theta * 0.09 / 2, rel=1e-2)


def test_tiny_ball_is_a_resolution_error():
    with pytest.raises(ResolutionError):
        ball_area(FLAT, 0, 0.01, level=4)


# ------------------------------------------------------------------ metric_ball

def test_flat_ball_mask_is_euclidean_disc():
    grid, mask = metric_ball(FLAT, 0.1 + 0.05j, 0.2, levels=6)
    want = np.abs(grid.nodes - (0.1 + 0.05j)) <= 0.2
    near = np.abs(np.abs(grid.nodes - (0.1 + 0.05j)) - 0.2) < 1e-9
    assert np.array_equal(mask[~near], want[~near])


def test_zero_radius_ball_is_the_centre_node():
    grid, mask = metric_ball(FLAT, 0.25, 0.0, levels=5)
    assert mask.sum() == 1 and grid.nodes[mask][0] == 0.25
    grid, mask = metric_ball(FLAT, 0.26, 0.0, levels=5)
    assert mask.sum() == 1 and grid.nodes[mask][0] == 0.25


def test_cone_ball_contains_probe_at_oracle_radius():
    m = cone_metric(PI / 2)
    c, near, far = -0.1, 0.25, 0.3125
    r = cone_oracle(PI / 2, c, near)
    assert cone_oracle(PI / 2, c, far) > r * 1.02
    grid, mask = metric_ball(m, c, r * (1 + 1e-3), levels=6)
    assert mask[np.argmin(np.abs(grid.nodes - near))]
    assert not mask[np.argmin(np.abs(grid.nodes - far))]


def test_negative_radius_is_rejected():
    with pytest.raises(ValueError):
        metric_ball(FLAT, 0, -0.1)


# ------------------------------------------------------------------ lattice

def test_lattice_nodes_are_nested_and_weights_positive():
    m = SingularMetric(CurvatureMeasure.from_atoms([(0.1, 1.0), (-0.2j, -2.0)]))
    coarse, fine = m.grid(4), m.grid(5)
    assert set(map(complex, coarse.nodes)) <= set(map(complex, fine.nodes))
    for g in (coarse, fine):
        assert np.all(g.weights > 0) and np.all(np.isfinite(g.weights))


def test_distance_field_flat_values():
    df = distance_field(FLAT, 0, 5)
    assert df.values[np.argmin(np.abs(df.grid.nodes - 0.25))] == pytest.approx(0.25, rel=1e-12)
    # the 16-neighbour lattice is within about 3% of Euclidean in every direction
    ok = np.isfinite(df.values) & (np.abs(df.grid.nodes) > 0.1)
    ratio = df.values[ok] / np.abs(df.grid.nodes[ok])
    assert ratio.min() >= 1 - 1e-12 and ratio.max() < 1.03


def test_layer_metric_distance_is_symmetric():
    m = SingularMetric(CurvatureMeasure(layers=(CircleLayer(0, 0.2, mass=2.0),)))
    assert distance(m, 0.3, -0.1j, levels=5).value == distance(m, -0.1j, 0.3, levels=5).value
