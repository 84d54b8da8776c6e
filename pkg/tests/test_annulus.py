import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from biclab import DomainError, ResolutionError
from biclab.annulus import (
    AnnulusRegion,
    Circle,
    Polygon,
    Segment,
    agm,
    check_grotzsch_bound,
    discrete_modulus,
    discrete_modulus_details,
    ellip_k,
    grotzsch_modulus,
    modulus_round,
    random_grotzsch_configuration,
    snake_polygon,
)

LN2_OVER_2PI = math.log(2) / (2 * math.pi)


def test_modulus_round_examples():
    assert modulus_round(1, math.e) == pytest.approx(1 / (2 * math.pi), rel=1e-15)
    assert modulus_round(0.25, 0.5) == pytest.approx(0.110318, abs=1e-6)
    with pytest.raises(ValueError):
        modulus_round(1, 1)


def test_round_annulus_solver_accuracy():
    res = discrete_modulus_details(AnnulusRegion.round(0.25, 0.5), grid=256)
    assert res.modulus == pytest.approx(LN2_OVER_2PI, rel=1e-3)
    assert res.grid == 256 and res.unknowns > 0 and res.iterations > 0


def test_similarity_invariance():
    U = AnnulusRegion.round(0.25, 0.5)
    V = U.transformed(1.7, 0.3 - 0.2j)
    assert discrete_modulus(V, 256) == pytest.approx(discrete_modulus(U, 256), rel=1e-3)


def test_first_order_convergence_on_round_annulus():
    U = AnnulusRegion.round(0.3, 0.6)
    errs = [abs(discrete_modulus(U, g) - modulus_round(0.3, 0.6)) for g in (64, 128)]
    assert errs[1] < errs[0]


def test_nested_annuli_are_monotone():
    inner = AnnulusRegion(Circle(0j, 0.45), Polygon((0.2, 0.2j, -0.2, -0.2j)))
    outer = AnnulusRegion(Circle(0j, 0.5), Polygon((0.15, 0.15j, -0.15, -0.15j)))
    assert discrete_modulus(inner, 192) <= discrete_modulus(outer, 192) * 1.01


def test_thin_gap_is_a_resolution_error():
    with pytest.raises(ResolutionError):
        discrete_modulus(AnnulusRegion.round(0.499, 0.5), grid=64)


def test_obstacle_must_sit_inside():
    with pytest.raises(DomainError):
        AnnulusRegion(Circle(0j, 0.5), Circle(0.3, 0.3))


def test_spec_round_trip():
    for U in (AnnulusRegion.round(0.1, 0.4, 0.05j), AnnulusRegion.grotzsch(0.5),
              AnnulusRegion(Circle(0j, 1.0), Polygon((0.1, 0.2j, -0.1)))):
        assert AnnulusRegion.from_spec(U.to_spec()) == U


def test_masks():
    U = AnnulusRegion.grotzsch(0.5)
    h, _, Z, state = U.lattice(64)
    on_slit = np.unravel_index(np.argmin(np.abs(Z - 0.25)), Z.shape)
    assert state[on_slit] == 0
    assert np.all(U.mask(64) == (state == 1))
    assert not U.in_domain(np.array([0.3, 1.2]))[1]


def test_agm_and_elliptic_integral():
    assert agm(1, math.sqrt(2)) == pytest.approx(1.19814023473559220744, rel=1e-15)
    assert ellip_k(0.0) == pytest.approx(math.pi / 2, rel=1e-15)
    assert ellip_k(math.sqrt(0.5)) == pytest.approx(1.85407467730137191843, rel=1e-14)


def test_grotzsch_symmetric_point():
    assert grotzsch_modulus(1 / math.sqrt(2)) == pytest.approx(0.25, abs=1e-12)


@pytest.mark.parametrize("r", [0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8])
def test_grotzsch_product_identity(r):
    prod = (2 * math.pi) ** 2 * grotzsch_modulus(r) * grotzsch_modulus(math.sqrt(1 - r * r))
    assert prod == pytest.approx(math.pi**2 / 4, rel=1e-10)


def test_grotzsch_decreases_to_zero():
    rs = [0.1, 0.5, 0.9, 0.999, 1 - 1e-6, 1 - 1e-12]
    vals = [grotzsch_modulus(r) for r in rs]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    # logarithmic decay: mod(G(r)) ~ pi / (8 ln(4 / r'))
    rc = math.sqrt(1 - rs[-1] ** 2)
    assert vals[-1] == pytest.approx(math.pi / (8 * math.log(4 / rc)), rel=1e-3)
    assert vals[-1] < 0.04


def test_masked_grotzsch_matches_closed_form():
    rep = check_grotzsch_bound(AnnulusRegion.grotzsch(0.5), 0.5, grid=256)
    assert rep.left == pytest.approx(rep.right, rel=0.02)
    assert rep.passed


def test_round_annulus_below_grotzsch():
    assert check_grotzsch_bound(AnnulusRegion.round(0.6, 0.9), 0.5, grid=192).passed


def test_snake_obstacle_below_grotzsch():
    rng = np.random.default_rng(4)
    snake = snake_polygon(0.5, rng, turns=3)
    rep = check_grotzsch_bound(AnnulusRegion(Circle(0j, 0.95), snake), 0.5, grid=256)
    assert rep.passed and rep.left < rep.right


def test_grotzsch_check_needs_separation():
    with pytest.raises(DomainError):
        check_grotzsch_bound(AnnulusRegion.round(0.1, 0.2, 0.6j), 0.5, grid=64)
    with pytest.raises(DomainError):
        check_grotzsch_bound(AnnulusRegion.round(0.6, 1.2), 0.5, grid=64)


@given(st.integers(0, 2**32 - 1))
def test_random_configurations_satisfy_hypotheses(seed):
    region, r = random_grotzsch_configuration(np.random.default_rng(seed))
    assert 0 < r < 1
    assert np.all(region.in_obstacle(np.array([0j, complex(r)])))
    assert np.all(np.abs(region.outer.boundary_points()) <= 1 + 1e-12)


@given(st.floats(0.05, 0.45), st.floats(0.05, 0.45))
def test_segment_inside(a, b):
    s = Segment(complex(a), complex(b, 0.1))
    mid = 0.5 * (s.a + s.b)
    assert s.inside(np.array([mid]), True)[0]
