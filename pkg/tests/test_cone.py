import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from biclab import BoundaryCaseError, ResolutionError
from biclab.cone import (
    ConePoint,
    ConeSpec,
    angular_gap,
    chart_to_cone,
    cone_distance,
    cont_radius_cone,
    disc_check,
    transition_radius,
)

PI = math.pi


def test_cone_distance_examples():
    plane = ConeSpec(2 * PI)
    assert cone_distance(plane, ConePoint(1, 0), ConePoint(1, PI / 2)) == pytest.approx(math.sqrt(2))
    c = ConeSpec(1.5 * PI)
    assert cone_distance(c, ConePoint(1, 0), ConePoint(1, 0.75 * PI)) == pytest.approx(1.847759, abs=1e-6)
    wide = ConeSpec(3 * PI)
    assert cone_distance(wide, ConePoint(0.5, 0), ConePoint(0.7, 1.5 * PI)) == pytest.approx(1.2)


def test_cone_spec_conversions():
    c = ConeSpec.from_curvature(PI / 2)
    assert c.angle == pytest.approx(1.5 * PI) and c.beta == pytest.approx(-0.25)
    assert ConeSpec.from_beta(-0.5).curvature == pytest.approx(PI)
    with pytest.raises(ValueError):
        ConeSpec(0.0)
    with pytest.raises(ValueError):
        ConePoint(-1.0)


def test_chart_to_cone_examples():
    p = chart_to_cone(0.0, 0.3 + 0.4j)
    assert p.radius == pytest.approx(0.5) and p.angle == pytest.approx(math.atan2(0.4, 0.3))
    assert chart_to_cone(-0.5, 0.25).radius == pytest.approx(1.0)
    assert chart_to_cone(-0.25, 0.2).radius == pytest.approx(0.398760, abs=1e-6)
    assert chart_to_cone(-0.25, 0.2j).angle == pytest.approx(0.75 * PI / 2)
    with pytest.raises(ValueError):
        chart_to_cone(-1.0, 0.1)


def test_cont_radius_examples():
    assert cont_radius_cone(1.5 * PI, 1.0) == math.inf
    assert cont_radius_cone(PI / 2, 1.0) == pytest.approx(0.707107, abs=1e-6)
    assert cont_radius_cone(PI / 3, 0.5) == pytest.approx(0.25)
    with pytest.raises(BoundaryCaseError):
        cont_radius_cone(PI, 1.0)


def test_disc_check_examples():
    assert disc_check(PI / 2, 1.0, 0.5)
    assert not disc_check(PI / 2, 1.0, 0.9)
    assert disc_check(1.5 * PI, 1.0, 5.0)


def test_disc_check_rejects_unresolved_radius():
    with pytest.raises(ResolutionError):
        disc_check(PI / 2, 1.0, 1e-4)


def test_transition_radius_near_chord_threshold():
    assert transition_radius(PI / 2, 1.0) == pytest.approx(math.sin(PI / 4), rel=0.05)
    with pytest.raises(ValueError):
        transition_radius(1.5 * PI, 1.0)


# ------------------------------------------------------------------ properties

angles = st.floats(0.3, 4 * PI)
cone_points = st.builds(ConePoint, st.floats(0, 2), st.floats(-10, 10))


@given(angles, cone_points, cone_points, cone_points)
def test_cone_distance_is_a_metric(theta, a, b, c):
    cone = ConeSpec(theta)
    ab, ba = cone_distance(cone, a, b), cone_distance(cone, b, a)
    assert ab == ba
    assert ab >= 0
    assert cone_distance(cone, a, c) <= ab + cone_distance(cone, b, c) + 1e-12


@given(cone_points, cone_points)
def test_flat_cone_is_the_plane(a, b):
    za = a.radius * complex(math.cos(a.angle), math.sin(a.angle))
    zb = b.radius * complex(math.cos(b.angle), math.sin(b.angle))
    assert cone_distance(ConeSpec(2 * PI), a, b) == pytest.approx(abs(za - zb), abs=1e-12)


@given(angles, st.floats(-20, 20), st.floats(-20, 20))
def test_angular_gap_bounds(theta, a, b):
    g = angular_gap(theta, a, b)
    assert 0 <= g <= theta / 2 + 1e-12
