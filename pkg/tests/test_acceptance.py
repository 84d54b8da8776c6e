"""Acceptance criteria 1-9, each at its stated tolerance.

Every test prints one line ``criterion N: PASS|FAIL  <detail>``; the lines
are repeated together in an "acceptance criteria" section of the terminal
summary.
"""

import json
import math
import time

import numpy as np

from biclab import CellDensity, CircleLayer, CurvatureMeasure, HarmonicTerm, cli, decompose, eval_potential
from biclab.annulus import (
    AnnulusRegion,
    check_grotzsch_bound,
    discrete_modulus,
    grotzsch_modulus,
    random_grotzsch_configuration,
)
from biclab.cone import ConeSpec, chart_to_cone, cone_distance, disc_check, transition_radius
from biclab.metric import PolyCurve, SingularMetric, curve_length, distance
from biclab.verify import (
    area_bound_sweep,
    check_area_bounds,
    check_troyanov,
    convergence_experiment,
    cusp_divergence,
    segment_bound_sweep,
)

from conftest import ACCEPTANCE_LINES

PI = math.pi


def report(n: int, ok: bool, detail: str):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[n] = line
    print("\n" + line)
    assert ok, line


# ---------------------------------------------------------------- 1

def test_criterion_1_cone_equivalence():
    rng = np.random.default_rng(1)
    worst, start = 0.0, time.perf_counter()
    for k in (-PI, PI / 2, PI, 1.5 * PI):
        beta = -k / (2 * PI)
        cone = ConeSpec.from_curvature(k)
        metric = SingularMetric(CurvatureMeasure.from_atoms([(0, k)]))
        for _ in range(20):
            r = 0.45 * np.sqrt(rng.uniform(0, 1, 2))
            z, w = r * np.exp(2j * PI * rng.uniform(0, 1, 2))
            oracle = cone_distance(cone, chart_to_cone(beta, z), chart_to_cone(beta, w))
            worst = max(worst, abs(distance(metric, z, w, levels=9).value - oracle) / oracle)
    elapsed = time.perf_counter() - start
    report(1, worst <= 0.01 and elapsed < 120, f"max rel error {worst:.2e} (<= 1e-2), runtime {elapsed:.0f} s (< 120 s)")


# ---------------------------------------------------------------- 2

def test_criterion_2_layer_convergence():
    layer = CircleLayer(0, 0.25, mass=PI)
    probes = [(0.35 - 0.35j, 0.1 + 0.05j), (0.3j, 0.1 - 0.3j), (0.05, 0.45j), (-0.4 + 0.1j, 0.15 - 0.3j),
              (-0.1 - 0.2j, 0.2 + 0.3j)]
    ms = [4, 8, 16, 32, 64]
    table = convergence_experiment(layer, ms, probes, levels=8)
    err = table.max_error()
    final = table.errors[-1]
    monotone = bool(np.all(np.diff(err) <= 0))
    ok = bool(np.all(final <= 0.02)) and monotone
    report(2, ok, "max rel error by m " + ", ".join(f"{m}:{e:.2%}" for m, e in zip(ms, err))
           + f"; m=64 worst {final.max():.2%} (<= 2%), monotone={monotone}")


# ---------------------------------------------------------------- 3

def test_criterion_3_segment_bound():
    reps = segment_bound_sweep(seed=2024, count=1000, rtol=1e-4)
    fails = sum(not r.passed for r in reps)
    tight = max(r.left / r.right for r in reps if r.right > 0)
    report(3, len(reps) == 1000 and fails == 0, f"1000 measures, {fails} violations, tightest ratio {tight:.3f}")


# ---------------------------------------------------------------- 4

def test_criterion_4_area_bounds():
    bounds = area_bound_sweep(seed=2024, count=200, level=6, rtol=1e-2)
    upper_fails = sum(not b.upper.passed for b in bounds)
    worst_ratio = max(b.upper.left / b.upper.right for b in bounds)
    cone_err, lower_ok = 0.0, True
    for k in (PI / 2, -PI, PI / 3):
        theta, r = 2 * PI - k, 0.2
        b = check_area_bounds(SingularMetric(CurvatureMeasure.from_atoms([(0, k)])), 0, r, level=7)
        cone_err = max(cone_err, abs(b.area - theta * r * r / 2) / (theta * r * r / 2))
        lower_ok &= b.lower.left <= b.lower.right and b.upper.passed
    ok = len(bounds) == 200 and upper_fails == 0 and cone_err <= 0.01 and lower_ok
    report(4, ok, f"200 instances, {upper_fails} upper-bound failures (max area/bound {worst_ratio:.4f}); "
           f"cone areas within {cone_err:.2e} of theta r^2/2; lower bound holds: {lower_ok}")


# ---------------------------------------------------------------- 5

def test_criterion_5_troyanov():
    cases = [([], 2.0, PI / 4), ([(0, PI / 2)], 2.0, PI), ([(0, PI)], 1.5, 4 * PI / math.sqrt(2))]
    worst, passed = 0.0, True
    for atoms, p, want in cases:
        rep = check_troyanov(CurvatureMeasure.from_atoms(atoms), p)
        worst = max(worst, abs(rep.left - want) / want)
        passed &= rep.passed
    report(5, worst <= 0.005 and passed, f"max rel error {worst:.1e} (<= 5e-3), bounds pass: {passed}")


# ---------------------------------------------------------------- 6

def test_criterion_6_cusp_divergence():
    cusp = cusp_divergence(0.1, levels=(5, 6, 7, 8, 9, 10))
    control = cusp_divergence(0.1, levels=(9, 10), mass=2 * PI - 0.2)
    inc = min(cusp.increments)
    change = abs(control.increments[0])
    report(6, inc >= 0.5 and change < 1e-3,
           f"cusp increments {', '.join(f'{d:.3f}' for d in cusp.increments)} (each >= 0.5); "
           f"control level 9->10 change {change:.1e} (< 1e-3)")


# ---------------------------------------------------------------- 7

def test_criterion_7_annulus_moduli():
    exact = math.log(2) / (2 * PI)
    m = discrete_modulus(AnnulusRegion.round(0.25, 0.5), grid=512)
    round_err = abs(m - exact) / exact
    g = grotzsch_modulus(1 / math.sqrt(2))
    rng = np.random.default_rng(2024)
    reps = [check_grotzsch_bound(U, r, grid=256, rtol=0.02) for U, r in
            (random_grotzsch_configuration(rng) for _ in range(50))]
    fails = sum(not r.passed for r in reps)
    worst = max(r.left / r.right for r in reps)
    ok = round_err <= 0.01 and abs(g - 0.25) <= 1e-6 and fails == 0
    report(7, ok, f"A(0.25,0.5) rel error {round_err:.1e}; G(1/sqrt2) = {g:.12f}; "
           f"50 configurations, {fails} violations, max mod(U)/mod(G(r)) {worst:.3f}")


# ---------------------------------------------------------------- 8

def test_criterion_8_contractibility():
    errs = []
    for theta in (PI / 3, PI / 2, 2 * PI / 3):
        want = math.sin(theta / 2)
        errs.append(abs(transition_radius(theta, 1.0) - want) / want)
    radii = (0.1, 0.5, 0.9, 1.0, 1.5, 3.0, 5.0)
    discs = [disc_check(1.5 * PI, 1.0, r) for r in radii]
    ok = max(errs) <= 0.05 and all(discs)
    report(8, ok, "transition rel errors " + ", ".join(f"{e:.2%}" for e in errs)
           + f" (<= 5%); theta=3pi/2 discs at r in {radii}: {all(discs)}")


# ---------------------------------------------------------------- 9

def _random_metric(rng):
    n = int(rng.integers(0, 3))
    pos = 0.4 * np.sqrt(rng.uniform(0, 1, n)) * np.exp(2j * PI * rng.uniform(0, 1, n))
    mu = CurvatureMeasure.from_atoms(zip(pos.tolist(), rng.uniform(-PI, 1.5 * PI, n).tolist()))
    if rng.uniform() < 0.3:
        mu = mu + CurvatureMeasure(layers=(CircleLayer(0, 0.2, mass=float(rng.uniform(-2, 3))),))
    h = HarmonicTerm.from_pairs([[rng.normal() * 0.3, 0], [rng.normal() * 0.5, rng.normal() * 0.5]])
    return SingularMetric(mu, h)


def _random_point(rng):
    return complex(0.42 * np.sqrt(rng.uniform()) * np.exp(2j * PI * rng.uniform()))


def _random_measure(rng):
    n = int(rng.integers(1, 6))
    pos = 0.49 * np.sqrt(rng.uniform(0, 1, n)) * np.exp(2j * PI * rng.uniform(0, 1, n))
    mu = CurvatureMeasure.from_atoms(zip(pos.tolist(), rng.uniform(-10, 10, n).tolist()))
    layer = CircleLayer(complex(rng.uniform(-0.05, 0.05)), float(rng.uniform(0.05, 0.4)),
                        density=rng.uniform(-4, 4, int(rng.integers(1, 5))).tolist(), phase=float(rng.uniform(0, 6)))
    dens = CellDensity(4, rng.uniform(-3, 3, (4, 4)))
    return mu + CurvatureMeasure(layers=(layer,), density=dens)


def _sweep_distances(rng, count):
    sym = tri = mono = 0
    for _ in range(count):
        metric = _random_metric(rng)
        a, b, c = (_random_point(rng) for _ in range(3))
        ab = distance(metric, a, b, levels=5)
        ba = distance(metric, b, a, levels=5)
        bc = distance(metric, b, c, levels=5)
        ac = distance(metric, a, c, levels=5)
        sym += ab.value != ba.value
        tri += ac.value > (ab.value + bc.value) * (1 + 1e-3)
        for e in (ab, bc, ac):
            per = np.array(e.per_level)
            mono += bool(np.any(per[1:] > per[:-1] * (1 + 1e-9)))
    return sym, tri, mono


def _sweep_shift(rng, count):
    fails = 0
    for _ in range(count):
        metric = _random_metric(rng)
        a, b = _random_point(rng), _random_point(rng)
        c = float(rng.uniform(-2, 2))
        f = math.exp(c)
        e0, e1 = distance(metric, a, b, levels=4), distance(metric.shifted(c), a, b, levels=4)
        l0 = curve_length(metric, PolyCurve.segment(a, b))
        l1 = curve_length(metric.shifted(c), PolyCurve.segment(a, b))
        rel = [abs(e1.value - f * e0.value) / e1.value, abs(l1 - f * l0) / l1]
        rel += [abs(x - f * y) / x for x, y in zip(e1.per_level, e0.per_level)]
        fails += max(rel) > 1e-13
    return fails


def _sweep_sandwich(rng, count):
    fails = 0
    for _ in range(count):
        mu = _random_measure(rng)
        plus, minus = decompose(mu)
        z = _random_point(rng)
        v = eval_potential(mu, z)
        tol = 1e-10 * (1 + abs(v))
        fails += not (-eval_potential(minus, z) <= v + tol and v <= eval_potential(plus, z) + tol)
    return fails


def _sweep_decompose(rng, count):
    fails = 0
    for _ in range(count):
        mu = _random_measure(rng)
        plus, minus = decompose(mu)
        ok = all(p.mass - m.mass == a.mass and p.mass >= 0 and m.mass >= 0
                 for a, p, m in zip(mu.atoms, plus.atoms, minus.atoms))
        ok &= all(np.array_equal(np.subtract(p.density, m.density), np.array(l.density))
                  for l, p, m in zip(mu.layers, plus.layers, minus.layers))
        ok &= np.array_equal(plus.density.values - minus.density.values, mu.density.values)
        fails += not ok
    return fails


def _sweep_cli(rng, count, tmp):
    fails = 0
    for i in range(count):
        sc = tmp / f"s{i}.json"
        sc.write_text(json.dumps({"command": "validate", "seed": int(rng.integers(0, 2**31)),
                                  "checks": [{"type": "segment_sweep", "count": 5}]}))
        codes = cli.run(sc, tmp / "a.csv"), cli.run(sc, tmp / "b.csv")
        same = (tmp / "a.csv").read_bytes() == (tmp / "b.csv").read_bytes()
        same &= (tmp / "a.summary.json").read_bytes() == (tmp / "b.summary.json").read_bytes()
        fails += not (same and codes[0] == codes[1] == 0)
    return fails


def test_criterion_9_property_suites(tmp_path):
    n = 100
    sym, tri, mono = _sweep_distances(np.random.default_rng(91), n)
    shift = _sweep_shift(np.random.default_rng(92), n)
    sandwich = _sweep_sandwich(np.random.default_rng(93), n)
    dec = _sweep_decompose(np.random.default_rng(94), n)
    det = _sweep_cli(np.random.default_rng(95), n, tmp_path)
    counts = {"symmetry": sym, "triangle": tri, "monotonicity": mono, "harmonic shift": shift,
              "potential sandwich": sandwich, "decompose": dec, "cli determinism": det}
    report(9, not any(counts.values()),
           f"{n} instances per suite; failures " + ", ".join(f"{k}={v}" for k, v in counts.items()))
