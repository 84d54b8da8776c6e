import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from biclab import CircleLayer, CurvatureMeasure, DomainError
from biclab.metric import SingularMetric, distance_closure
from biclab.verify import (
    ConvergenceTable,
    ValidationReport,
    area_bound_sweep,
    check_area_bounds,
    check_segment_bound,
    check_troyanov,
    convergence_experiment,
    cusp_divergence,
    segment_bound_sweep,
)

PI = math.pi


@given(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3), st.floats(0, 1), st.floats(0, 1))
def test_verdict_follows_tolerance(left, right, rtol, atol):
    rep = ValidationReport({}, left, right, rtol, atol)
    assert rep.passed == (left <= right + rtol * abs(right) + atol)
    assert rep.row()["verdict"] == ("pass" if rep.passed else "fail")


def test_segment_bound_cone_example():
    rep = check_segment_bound(CurvatureMeasure.from_atoms([(0, PI)]), 0.25, 0)
    assert rep.left == pytest.approx(1.0, rel=1e-10)
    assert rep.right == pytest.approx(2.0, rel=1e-14)
    assert rep.passed


def test_segment_bound_flat():
    rep = check_segment_bound(CurvatureMeasure(), 0.1, -0.2j)
    d = abs(0.1 + 0.2j)
    assert rep.left == pytest.approx(d, rel=1e-14) and rep.right == pytest.approx(2 * d)
    assert rep.passed


def test_segment_bound_needs_mass_below_two_pi():
    with pytest.raises(DomainError):
        check_segment_bound(CurvatureMeasure.from_atoms([(0, 2 * PI)]), 0.1, 0.2)


def test_segment_sweep_has_no_failures():
    reps = segment_bound_sweep(seed=3, count=100)
    assert len(reps) == 100 and all(r.passed for r in reps)
    assert segment_bound_sweep(seed=3, count=5)[4].left == reps[4].left


def test_area_bounds_flat_is_tight():
    b = check_area_bounds(SingularMetric(CurvatureMeasure()), 0.02, 0.2, level=6)
    assert b.area == pytest.approx(PI * 0.04, rel=2e-3)
    assert b.upper.passed and b.lower.passed


@pytest.mark.parametrize("k", [PI / 2, -PI])
def test_area_bounds_on_cones(k):
    theta, r = 2 * PI - k, 0.2
    b = check_area_bounds(SingularMetric(CurvatureMeasure.from_atoms([(0, k)])), 0, r, level=6)
    assert b.area == pytest.approx(theta * r * r / 2, rel=1e-2)
    assert b.upper.passed and b.lower.passed
    assert b.mass_plus == pytest.approx(max(k, 0)) and b.mass_minus == pytest.approx(max(-k, 0))
    if k < 0:
        assert b.upper.left == pytest.approx(b.upper.right, rel=1e-2)


def test_area_sweep_small():
    bounds = area_bound_sweep(seed=11, count=3)
    assert len(bounds) == 3 and all(b.upper.passed for b in bounds)


@pytest.mark.parametrize("atoms,p,left,right", [
    ([], 2.0, PI / 4, PI),
    ([(0, PI / 2)], 2.0, PI, 2 * PI),
    ([(0, PI)], 1.5, 4 * PI / math.sqrt(2), 4 * PI),
])
def test_troyanov_examples(atoms, p, left, right):
    rep = check_troyanov(CurvatureMeasure.from_atoms(atoms), p)
    assert rep.left == pytest.approx(left, rel=1e-8)
    assert rep.right == pytest.approx(right, rel=1e-12)
    assert rep.passed


def test_troyanov_hypotheses():
    with pytest.raises(DomainError):
        check_troyanov(CurvatureMeasure(), 1.0)
    with pytest.raises(DomainError):
        check_troyanov(CurvatureMeasure.from_atoms([(0, -1.0)]), 2.0)
    with pytest.raises(DomainError):
        check_troyanov(CurvatureMeasure.from_atoms([(0, PI)]), 2.0)


def test_convergence_zero_mass_is_euclidean():
    probes = [(0.3, -0.1j), (0.05 + 0.1j, -0.4)]
    t = convergence_experiment(CircleLayer(0, 0.25, mass=0.0), [1, 4], probes, levels=5)
    assert np.allclose(t.estimates, [[abs(a - b) for a, b in probes]] * 2, rtol=1e-12)
    assert np.all(t.errors < 1e-12)


def test_convergence_single_atom_row():
    layer = CircleLayer(0, 0.25, mass=PI)
    probes = [(0.35 - 0.35j, 0.1 + 0.05j)]
    t = convergence_experiment(layer, [1], probes, levels=5)
    single = SingularMetric.closure_of(CurvatureMeasure.from_atoms([(0.25, PI)]))
    assert t.estimates[0, 0] == distance_closure(single, *probes[0], levels=5).value
    assert len(list(t.rows())) == 1


def test_convergence_table_needs_increasing_m():
    with pytest.raises(ValueError):
        ConvergenceTable((4, 4), (), np.zeros((2, 0)), np.zeros(0))


def test_convergence_rejects_probe_on_atom():
    with pytest.raises(DomainError):
        convergence_experiment(CircleLayer(0, 0.25, mass=1.0), [4], [(0.25, 0.1j)], levels=4)


def test_cusp_estimates_grow():
    run = cusp_divergence(0.1, levels=(5, 6, 7))
    assert all(d >= 0.5 for d in run.increments)


def test_near_cusp_estimates_settle():
    run = cusp_divergence(0.1, levels=(7, 8), mass=2 * PI - 0.2)
    assert abs(run.increments[0]) < 1e-2


def test_flat_probe_is_constant():
    run = cusp_divergence(0.1 + 0.2j, levels=(5, 6), mass=0.0)
    assert run.estimates == pytest.approx((abs(0.1 + 0.2j),) * 2, rel=1e-12)
