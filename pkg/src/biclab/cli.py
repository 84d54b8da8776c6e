"""Batch front end: scenario files in, deterministic CSV tables and a JSON summary out.

Usage::

    biclab run --scenario s.json --out results.csv [--seed N] [--levels N] [--grid N] [--jobs N]
    biclab plotdata --results results.csv --out series/

Exit status is 0 when every verdict passes, 2 when any validator fails and 1
on usage, parse or engine errors (no output is written then).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import annulus, cone, verify
from .errors import BoundaryCaseError, DivergenceError, DomainError, ResolutionError
from .measure import CircleLayer, CurvatureMeasure
from .metric import SingularMetric, area, ball_area, distance, distance_closure
from .potential import HarmonicTerm

COMMANDS = ("dist", "area", "validate", "converge", "cont", "modulus")
ENGINE_ERRORS = (DomainError, DivergenceError, ResolutionError, BoundaryCaseError, ValueError)


class ScenarioError(ValueError):
    """Schema violation, with the offending field path."""


# ---------------------------------------------------------------- schema helpers

def _need(d: dict, key: str, where: str):
    if not isinstance(d, dict):
        raise ScenarioError(f"{where}: expected an object")
    if key not in d:
        raise ScenarioError(f"{where}.{key}: required field missing")
    return d[key]


def _num(v, where: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ScenarioError(f"{where}: expected a finite number, got {v!r}")
    return float(v)


def _int(v, where: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ScenarioError(f"{where}: expected an integer, got {v!r}")
    return v


def _point(v, where: str) -> complex:
    if not isinstance(v, list) or len(v) != 2:
        raise ScenarioError(f"{where}: expected [x, y]")
    return complex(_num(v[0], f"{where}[0]"), _num(v[1], f"{where}[1]"))


def _list(v, where: str, nonempty: bool = True) -> list:
    if not isinstance(v, list) or (nonempty and not v):
        raise ScenarioError(f"{where}: expected a {'non-empty ' if nonempty else ''}list")
    return v


def _pairs(v, where: str) -> list[tuple[complex, complex]]:
    out = []
    for i, p in enumerate(_list(v, where)):
        if not isinstance(p, list) or len(p) != 2:
            raise ScenarioError(f"{where}[{i}]: expected [[x, y], [x, y]]")
        out.append((_point(p[0], f"{where}[{i}][0]"), _point(p[1], f"{where}[{i}][1]")))
    return out


def _measure(v, where: str) -> CurvatureMeasure:
    if v is None:
        return CurvatureMeasure()
    if not isinstance(v, dict):
        raise ScenarioError(f"{where}: expected an object")
    unknown = set(v) - {"atoms", "layers", "density"}
    if unknown:
        raise ScenarioError(f"{where}: unknown fields {sorted(unknown)}")
    for i, a in enumerate(v.get("atoms", [])):
        _point(_need(a, "p", f"{where}.atoms[{i}]"), f"{where}.atoms[{i}].p")
        _num(_need(a, "k", f"{where}.atoms[{i}]"), f"{where}.atoms[{i}].k")
    for i, item in enumerate(v.get("layers", [])):
        _point(_need(item, "c", f"{where}.layers[{i}]"), f"{where}.layers[{i}].c")
        _num(_need(item, "R", f"{where}.layers[{i}]"), f"{where}.layers[{i}].R")
    try:
        return CurvatureMeasure.from_dict(v)
    except (TypeError, KeyError, ValueError) as exc:
        raise ScenarioError(f"{where}: {exc}") from None


def _harmonic(v, where: str) -> HarmonicTerm:
    if v is None or v == []:
        return HarmonicTerm.zero()
    for i, c in enumerate(_list(v, where, nonempty=False)):
        if not isinstance(c, list) or len(c) != 2:
            raise ScenarioError(f"{where}[{i}]: expected [re, im]")
        _num(c[0], f"{where}[{i}][0]")
        _num(c[1], f"{where}[{i}][1]")
    try:
        return HarmonicTerm.from_pairs(v)
    except ValueError as exc:
        raise ScenarioError(f"{where}: {exc}") from None


def _region(v, where: str) -> annulus.AnnulusRegion:
    if not isinstance(v, dict):
        raise ScenarioError(f"{where}: expected an object")
    _need(v, "outer", where)
    _need(v, "obstacle", where)
    try:
        return annulus.AnnulusRegion.from_spec(v)
    except (TypeError, ValueError, KeyError) as exc:
        raise ScenarioError(f"{where}: {exc}") from None


def _metric(payload: dict) -> SingularMetric:
    mu = _measure(payload.get("measure"), "measure")
    h = _harmonic(payload.get("harmonic"), "harmonic")
    closed = payload.get("closed", False)
    if not isinstance(closed, bool):
        raise ScenarioError("closed: expected true or false")
    try:
        return SingularMetric(mu, h, closed=closed)
    except ValueError as exc:
        raise ScenarioError(f"measure/harmonic: {exc}") from None


# ---------------------------------------------------------------- scenario

@dataclass(frozen=True)
class Scenario:
    command: str
    payload: dict = field(default_factory=dict)
    seed: int = 0
    levels: int | None = None
    grid: int | None = None

    @classmethod
    def from_dict(cls, data) -> Scenario:
        if not isinstance(data, dict):
            raise ScenarioError("scenario: expected a JSON object")
        command = _need(data, "command", "scenario")
        if command not in COMMANDS:
            raise ScenarioError(f"scenario.command: expected one of {list(COMMANDS)}, got {command!r}")
        seed = _int(data.get("seed", 0), "seed")
        levels = data.get("levels")
        grid = data.get("grid")
        if levels is not None and _int(levels, "levels") < 1:
            raise ScenarioError("levels: must be positive")
        if grid is not None and _int(grid, "grid") < 4:
            raise ScenarioError("grid: must be at least 4")
        payload = {k: v for k, v in data.items() if k not in ("command", "seed", "levels", "grid")}
        sc = cls(command, payload, seed, levels, grid)
        sc.validate()
        return sc

    def to_dict(self) -> dict:
        out = {"command": self.command, "seed": self.seed}
        if self.levels is not None:
            out["levels"] = self.levels
        if self.grid is not None:
            out["grid"] = self.grid
        out.update(self.payload)
        return out

    def with_overrides(self, seed=None, levels=None, grid=None) -> Scenario:
        return Scenario(
            self.command, self.payload,
            self.seed if seed is None else seed,
            self.levels if levels is None else levels,
            self.grid if grid is None else grid,
        )

    def validate(self) -> None:
        """Parse every payload field the command needs; raises ``ScenarioError``."""
        _VALIDATORS[self.command](self.payload)


def _validate_dist(p):
    _metric(p)
    _pairs(_need(p, "probes", "scenario"), "probes")


def _validate_area(p):
    _metric(p)
    for i, reg in enumerate(_list(_need(p, "regions", "scenario"), "regions")):
        where = f"regions[{i}]"
        if not isinstance(reg, dict) or len(reg) != 1:
            raise ScenarioError(f"{where}: expected one of {{'chart': true}}, {{'disc': [x, y, R]}}, {{'ball': [x, y, r]}}")
        (kind, val), = reg.items()
        if kind == "chart":
            continue
        if kind not in ("disc", "ball") or not isinstance(val, list) or len(val) != 3:
            raise ScenarioError(f"{where}: unknown region {kind!r} or malformed [x, y, radius]")
        for j, x in enumerate(val):
            _num(x, f"{where}.{kind}[{j}]")


_CHECKS = ("segment", "segment_sweep", "area_bounds", "area_sweep", "troyanov", "grotzsch", "grotzsch_sweep")


def _validate_validate(p):
    for i, c in enumerate(_list(_need(p, "checks", "scenario"), "checks")):
        where = f"checks[{i}]"
        kind = _need(c, "type", where)
        if kind not in _CHECKS:
            raise ScenarioError(f"{where}.type: expected one of {list(_CHECKS)}, got {kind!r}")
        if kind == "segment":
            _measure(c.get("measure"), f"{where}.measure")
            _point(_need(c, "z", where), f"{where}.z")
            _point(_need(c, "zp", where), f"{where}.zp")
        elif kind == "area_bounds":
            _metric({k: c[k] for k in ("measure", "harmonic") if k in c})
            _point(_need(c, "x", where), f"{where}.x")
            _num(_need(c, "r", where), f"{where}.r")
        elif kind == "troyanov":
            _measure(c.get("measure"), f"{where}.measure")
            _num(_need(c, "p", where), f"{where}.p")
        elif kind == "grotzsch":
            _region(_need(c, "region", where), f"{where}.region")
            _num(_need(c, "r", where), f"{where}.r")
        elif "count" in c and _int(c["count"], f"{where}.count") < 0:
            raise ScenarioError(f"{where}.count: must be non-negative")
        for key in ("rtol",):
            if key in c:
                _num(c[key], f"{where}.{key}")


def _validate_converge(p):
    if "layer" not in p and "cusp" not in p:
        raise ScenarioError("scenario: converge needs a 'layer' or a 'cusp' block")
    if "layer" in p:
        lay = p["layer"]
        _measure({"layers": [lay]}, "layer")
        for i, m in enumerate(_list(_need(p, "ms", "scenario"), "ms")):
            if _int(m, f"ms[{i}]") < 1:
                raise ScenarioError(f"ms[{i}]: must be positive")
        _pairs(_need(p, "probes", "scenario"), "probes")
    if "cusp" in p:
        c = p["cusp"]
        _point(_need(c, "probe", "cusp"), "cusp.probe")
        for i, lv in enumerate(_list(c.get("levels", [5]), "cusp.levels")):
            _int(lv, f"cusp.levels[{i}]")
        for i, m in enumerate(_list(c.get("masses", [2 * math.pi]), "cusp.masses")):
            _num(m, f"cusp.masses[{i}]")


def _validate_cont(p):
    if "cones" not in p and "transitions" not in p:
        raise ScenarioError("scenario: cont needs 'cones' or 'transitions'")
    for i, c in enumerate(_list(p.get("cones", [None]), "cones") if "cones" in p else []):
        where = f"cones[{i}]"
        _num(_need(c, "theta", where), f"{where}.theta")
        _num(_need(c, "d", where), f"{where}.d")
        for j, r in enumerate(_list(_need(c, "radii", where), f"{where}.radii")):
            _num(r, f"{where}.radii[{j}]")
        if "resolution" in c:
            _int(c["resolution"], f"{where}.resolution")
    for i, c in enumerate(_list(p["transitions"], "transitions") if "transitions" in p else []):
        where = f"transitions[{i}]"
        _num(_need(c, "theta", where), f"{where}.theta")
        _num(_need(c, "d", where), f"{where}.d")
        if "resolution" in c:
            _int(c["resolution"], f"{where}.resolution")
        if "rtol" in c:
            _num(c["rtol"], f"{where}.rtol")


def _validate_modulus(p):
    if "regions" not in p and "grotzsch" not in p:
        raise ScenarioError("scenario: modulus needs 'regions' or 'grotzsch'")
    for i, reg in enumerate(_list(p["regions"], "regions") if "regions" in p else []):
        _region(reg, f"regions[{i}]")
    for i, r in enumerate(_list(p["grotzsch"], "grotzsch") if "grotzsch" in p else []):
        _num(r, f"grotzsch[{i}]")


_VALIDATORS = {
    "dist": _validate_dist,
    "area": _validate_area,
    "validate": _validate_validate,
    "converge": _validate_converge,
    "cont": _validate_cont,
    "modulus": _validate_modulus,
}


def load_scenario(path: str | Path) -> Scenario:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return Scenario.from_dict(data)


# ---------------------------------------------------------------- execution

@dataclass
class Result:
    columns: list
    rows: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)

    def verdicts(self) -> dict:
        counts = {"pass": 0, "fail": 0}
        if "verdict" in self.columns:
            for r in self.rows:
                counts[r["verdict"]] += 1
        return counts


def _pmap(fn, items, jobs: int) -> list:
    """Ordered map, over worker processes when ``jobs > 1``."""
    items = list(items)
    if jobs <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items))


def _xy(z: complex) -> tuple[float, float]:
    return z.real, z.imag


def _dist_job(args):
    metric, z, zp, levels = args
    fn = distance_closure if metric.closed else distance
    return fn(metric, z, zp, levels=levels)


def _run_dist(sc: Scenario, jobs: int) -> Result:
    metric = _metric(sc.payload)
    probes = _pairs(sc.payload["probes"], "probes")
    levels = sc.levels or 9
    cols = ["probe", "z_re", "z_im", "zp_re", "zp_im", "estimate", "graph", "smoothed", "richardson"]
    res = Result(cols)
    ests = _pmap(_dist_job, [(metric, z, zp, levels) for z, zp in probes], jobs)
    for i, ((z, zp), e) in enumerate(zip(probes, ests)):
        res.rows.append(dict(zip(cols, (i, *_xy(z), *_xy(zp), e.value, e.graph_value, e.smoothed_value, e.richardson))))
        res.tables[f"probe{i}"] = {"levels": list(e.levels), "estimates": list(e.per_level)}
    return res


def _run_area(sc: Scenario, jobs: int) -> Result:
    metric = _metric(sc.payload)
    level = sc.levels or 7
    cols = ["region", "kind", "x", "y", "radius", "area"]
    res = Result(cols)
    for i, reg in enumerate(sc.payload["regions"]):
        (kind, val), = reg.items()
        if kind == "chart":
            res.rows.append(dict(zip(cols, (i, kind, 0.0, 0.0, 0.5, area(metric)))))
            continue
        x, y, rad = (float(v) for v in val)
        c = complex(x, y)
        a = area(metric, (c, rad)) if kind == "disc" else ball_area(metric, c, rad, level=level)
        res.rows.append(dict(zip(cols, (i, kind, x, y, rad, a))))
    return res


def _area_job(args):
    seed, count, level, rtol = args
    return verify.area_bound_sweep(seed, count, level, rtol)


def _run_validate(sc: Scenario, jobs: int) -> Result:
    cols = ["check", "index", "instance", "left", "right", "margin", "rtol", "atol", "verdict"]
    res = Result(cols)

    def add(name, i, rep):
        res.rows.append({"check": name, "index": i, "instance": json.dumps(rep.instance, sort_keys=True),
                         **{k: v for k, v in rep.row().items()}})

    for ci, c in enumerate(sc.payload["checks"]):
        kind = c["type"]
        name = f"{ci}:{kind}"
        seed = c.get("seed", sc.seed)
        if kind == "segment":
            add(name, 0, verify.check_segment_bound(_measure(c.get("measure"), "measure"), _point(c["z"], "z"),
                                                    _point(c["zp"], "zp"), c.get("rtol", 1e-4)))
        elif kind == "segment_sweep":
            for i, rep in enumerate(verify.segment_bound_sweep(seed, c.get("count", 1000), c.get("rtol", 1e-4))):
                add(name, i, rep)
        elif kind == "area_bounds":
            metric = _metric({k: c[k] for k in ("measure", "harmonic") if k in c})
            b = verify.check_area_bounds(metric, _point(c["x"], "x"), float(c["r"]), c.get("level", sc.levels or 7),
                                         c.get("rtol", 1e-2))
            add(name, 0, b.upper)
            if c.get("lower", True):
                add(name, 1, b.lower)
        elif kind == "area_sweep":
            count = c.get("count", 200)
            level = c.get("level", sc.levels or 6)
            rtol = c.get("rtol", 1e-2)
            # independent sub-streams keep the output identical for every job count
            chunks = [(seed * 1000 + k, min(10, count - 10 * k), level, rtol) for k in range((count + 9) // 10)]
            i = 0
            for part in _pmap(_area_job, chunks, jobs):
                for b in part:
                    add(name, i, b.upper)
                    i += 1
        elif kind == "troyanov":
            add(name, 0, verify.check_troyanov(_measure(c.get("measure"), "measure"), float(c["p"]), c.get("rtol", 1e-9)))
        elif kind == "grotzsch":
            add(name, 0, annulus.check_grotzsch_bound(_region(c["region"], "region"), float(c["r"]),
                                                      c.get("grid", sc.grid or 512), c.get("rtol", 0.02)))
        elif kind == "grotzsch_sweep":
            rng = np.random.default_rng(seed)
            configs = [annulus.random_grotzsch_configuration(rng) for _ in range(c.get("count", 50))]
            grid = c.get("grid", sc.grid or 256)
            reps = _pmap(_grotzsch_job, [(U, r, grid, c.get("rtol", 0.02)) for U, r in configs], jobs)
            for i, rep in enumerate(reps):
                add(name, i, rep)
    return res


def _grotzsch_job(args):
    U, r, grid, rtol = args
    return annulus.check_grotzsch_bound(U, r, grid, rtol)


def _run_converge(sc: Scenario, jobs: int) -> Result:
    p = sc.payload
    if "layer" in p:
        cols = ["m", "probe", "z_re", "z_im", "zp_re", "zp_im", "estimate", "limit", "rel_error"]
        res = Result(cols)
        lay = p["layer"]
        layer = CircleLayer(complex(*lay["c"]), lay["R"], mass=lay.get("mass"), density=lay.get("density"),
                            phase=lay.get("phase", 0.0))
        table = verify.convergence_experiment(layer, p["ms"], _pairs(p["probes"], "probes"), sc.levels or 8)
        for row in table.rows():
            z, zp = row["z"], row["zp"]
            res.rows.append(dict(zip(cols, (row["m"], row["probe"], *_xy(z), *_xy(zp), row["estimate"],
                                            row["limit"], row["rel_error"]))))
        res.tables["max_error"] = {"m": list(table.ms), "max_rel_error": table.max_error().tolist()}
        return res
    cols = ["mass", "level", "estimate", "increment"]
    res = Result(cols)
    c = p["cusp"]
    probe = _point(c["probe"], "cusp.probe")
    levels = tuple(c.get("levels", [5, 6, 7, 8, 9, 10]))
    for mass in c.get("masses", [2 * math.pi]):
        run = verify.cusp_divergence(probe, levels, float(mass))
        inc = (math.nan,) + run.increments
        for lv, e, d in zip(run.levels, run.estimates, inc):
            res.rows.append(dict(zip(cols, (float(mass), lv, e, d))))
    return res


def _run_cont(sc: Scenario, jobs: int) -> Result:
    p = sc.payload
    cols = ["kind", "theta", "d", "r", "disc", "cont_radius", "rel_error", "verdict"]
    res = Result(cols)
    for c in p.get("cones", []):
        th, d = float(c["theta"]), float(c["d"])
        res_n = c.get("resolution", 256)
        try:
            cr = cone.cont_radius_cone(th, d)
        except BoundaryCaseError:
            cr = math.nan
        for r in c["radii"]:
            ok = cone.disc_check(th, d, float(r), res_n)
            res.rows.append(dict(zip(cols, ("disc_check", th, d, float(r), ok, cr, math.nan, "pass"))))
    for c in p.get("transitions", []):
        th, d = float(c["theta"]), float(c["d"])
        rt = cone.transition_radius(th, d, c.get("resolution", 256))
        cr = cone.cont_radius_cone(th, d)
        err = abs(rt / cr - 1.0)
        verdict = "pass" if err <= c.get("rtol", 0.05) else "fail"
        res.rows.append(dict(zip(cols, ("transition", th, d, rt, True, cr, err, verdict))))
    return res


def _modulus_job(args):
    U, grid = args
    return annulus.discrete_modulus(U, grid)


def _reference_modulus(U: annulus.AnnulusRegion) -> float:
    o, b = U.outer, U.obstacle
    if isinstance(o, annulus.Circle) and isinstance(b, annulus.Circle) and o.center == b.center:
        return annulus.modulus_round(b.radius, o.radius)
    if isinstance(o, annulus.Circle) and isinstance(b, annulus.Segment):
        # a similar copy of a slit disc
        a = b.a - o.center
        e = b.b - o.center
        if a == 0 and 0 < abs(e) < o.radius:
            return annulus.grotzsch_modulus(abs(e) / o.radius)
        if e == 0 and 0 < abs(a) < o.radius:
            return annulus.grotzsch_modulus(abs(a) / o.radius)
    return math.nan


def _run_modulus(sc: Scenario, jobs: int) -> Result:
    p = sc.payload
    grid = sc.grid or 512
    cols = ["kind", "index", "grid", "value", "reference", "rel_error"]
    res = Result(cols)
    regions = [_region(r, f"regions[{i}]") for i, r in enumerate(p.get("regions", []))]
    values = _pmap(_modulus_job, [(U, grid) for U in regions], jobs)
    for i, (U, v) in enumerate(zip(regions, values)):
        ref = _reference_modulus(U)
        res.rows.append(dict(zip(cols, ("region", i, grid, v, ref, abs(v / ref - 1) if ref == ref else math.nan))))
    for i, r in enumerate(p.get("grotzsch", [])):
        res.rows.append(dict(zip(cols, ("grotzsch", i, 0, annulus.grotzsch_modulus(float(r)), math.nan, math.nan))))
    return res


_RUNNERS = {
    "dist": _run_dist,
    "area": _run_area,
    "validate": _run_validate,
    "converge": _run_converge,
    "cont": _run_cont,
    "modulus": _run_modulus,
}


def execute(sc: Scenario, jobs: int = 1) -> Result:
    return _RUNNERS[sc.command](sc, jobs)


# ---------------------------------------------------------------- output

def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def to_csv(result: Result) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(result.columns)
    for r in result.rows:
        w.writerow([_cell(r[c]) for c in result.columns])
    return buf.getvalue()


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, np.integer):
        return int(v)
    return v


def summary(sc: Scenario, result: Result) -> dict:
    return {"config": sc.to_dict(), "rows": len(result.rows), "verdicts": result.verdicts(),
            "tables": _jsonable(result.tables)}


def summary_path(out: Path) -> Path:
    return out.with_name(out.stem + ".summary.json")


def _jobs(arg: int | None) -> int:
    if arg is not None:
        return max(1, arg)
    env = os.environ.get("BIC_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ScenarioError(f"BIC_JOBS: expected an integer, got {env!r}") from None
    return 1


def run(scenario: str | Path, out: str | Path, seed: int | None = None, levels: int | None = None,
        grid: int | None = None, jobs: int | None = None) -> int:
    """Run one scenario file and write ``out`` plus its summary; returns the exit status."""
    out = Path(out)
    try:
        sc = load_scenario(scenario).with_overrides(seed, levels, grid)
        sc.validate()
        n_jobs = _jobs(jobs)
    except (ScenarioError, OSError) as exc:
        print(f"error: {scenario}: {exc}", file=sys.stderr)
        return 1
    try:
        result = execute(sc, n_jobs)
    except ENGINE_ERRORS as exc:
        print(f"error: {type(exc).__name__} while running {sc.command}: {exc}", file=sys.stderr)
        return 1
    text = to_csv(result)
    summ = json.dumps(summary(sc, result), indent=2, sort_keys=True) + "\n"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text)
    summary_path(out).write_text(summ)
    return 2 if result.verdicts()["fail"] else 0


# ---------------------------------------------------------------- plot data

# header signature -> (grouping column, x column, y column)
SERIES_LAYOUTS = {
    "converge": (["m", "probe", "rel_error"], "probe", "m", "rel_error"),
    "cusp": (["mass", "level", "estimate"], "mass", "level", "estimate"),
    "dist": (["probe", "estimate"], None, "probe", "estimate"),
    "modulus": (["kind", "index", "value"], "kind", "index", "value"),
    "validate": (["check", "index", "margin"], "check", "index", "margin"),
    "cont": (["kind", "theta", "r", "disc"], "theta", "r", "disc"),
    "area": (["region", "area"], None, "region", "area"),
}


def _safe(s: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in s)


def plotdata(results: str | Path, out_dir: str | Path) -> list[Path]:
    """Write two-column ``x y`` series files, one per group, for the table at ``results``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    text = Path(results).read_text()
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        p = out_dir / "series.dat"
        p.write_text("")
        return [p]
    header = rows[0]
    for name, (need, group, x, y) in SERIES_LAYOUTS.items():
        if all(c in header for c in need):
            break
    else:
        raise ScenarioError(f"{results}: no known series layout matches columns {header}")
    gi = header.index(group) if group else None
    xi, yi = header.index(x), header.index(y)
    series: dict = {}
    for r in rows[1:]:
        key = r[gi] if gi is not None else "all"
        series.setdefault(key, []).append((r[xi], r[yi]))
    paths = []
    if not series:
        p = out_dir / f"{name}.dat"
        p.write_text(f"# {x} {y}\n")
        return [p]
    for key, pts in series.items():
        label = f"{name}_{group}_{_safe(key)}" if group else name
        p = out_dir / f"{label}.dat"
        p.write_text(f"# {x} {y}\n" + "".join(f"{a} {b}\n" for a, b in pts))
        paths.append(p)
    return paths


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="biclab", description="Singular conformal metric laboratory")
    sub = ap.add_subparsers(dest="cmd", required=True)
    r = sub.add_parser("run", help="run a scenario file")
    r.add_argument("--scenario", required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--seed", type=int)
    r.add_argument("--levels", type=int)
    r.add_argument("--grid", type=int)
    r.add_argument("--jobs", type=int, help="worker processes (default: $BIC_JOBS or 1)")
    pd = sub.add_parser("plotdata", help="turn a results table into x-y series files")
    pd.add_argument("--results", required=True)
    pd.add_argument("--out", required=True, help="output directory")
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    if args.cmd == "run":
        return run(args.scenario, args.out, args.seed, args.levels, args.grid, args.jobs)
    try:
        plotdata(args.results, args.out)
    except (ScenarioError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
