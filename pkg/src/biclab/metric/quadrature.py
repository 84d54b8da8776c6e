"""Vectorised line integrals of the conformal factor along straight segments.

Far from atoms a fixed Gauss-Legendre rule is exact to ~1e-10. Segments that
pass within one segment length of an atom are split geometrically towards the
closest point; when the atom sits on the segment the innermost piece is
integrated with the power law ``|z - p|^beta``.
"""

from __future__ import annotations

import math

import numpy as np

from ..potential import LogFactorField, gauss_legendre01

_GRADE_DEPTH = 40


def _point_segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray):
    """Distance from each atom to each segment plus the clipped foot parameter.

    Shapes: ``p`` (A,), ``a``/``b`` (S,) -> (S, A).
    """
    d = b - a
    l2 = (d * np.conj(d)).real
    rel = p[None, :] - a[:, None]
    with np.errstate(invalid="ignore", divide="ignore"):
        t = (rel * np.conj(d)[:, None]).real / np.where(l2 > 0, l2, 1.0)[:, None]
    t = np.clip(t, 0.0, 1.0)
    foot = a[:, None] + t * d[:, None]
    return np.abs(p[None, :] - foot), t


def _gl_sum(field: LogFactorField, a, b, n):
    t, w = gauss_legendre01(n)
    pts = a[:, None] + (b - a)[:, None] * t[None, :]
    f = field.factor(pts)
    return np.abs(b - a) * (f @ w)


def _graded_single(field: LogFactorField, a: complex, b: complex, near: list[tuple[int, float, float]]) -> float:
    """One segment, graded towards each nearby atom ``(index, distance, foot)``."""
    ell = abs(b - a)
    bps = {0.0, 1.0}
    tails = []
    for j, dist, foot in near:
        if dist <= ell * 2.0**-_GRADE_DEPTH:
            depth = _GRADE_DEPTH
            tails.append((j, foot))
        else:
            depth = min(_GRADE_DEPTH, int(math.ceil(math.log2(ell / dist))) + 4)
        steps = 2.0 ** -np.arange(1, depth + 1)
        bps.update(np.clip(foot + steps, 0.0, 1.0).tolist())
        bps.update(np.clip(foot - steps, 0.0, 1.0).tolist())
        bps.add(foot)
    knots = np.array(sorted(bps))
    lo, hi = knots[:-1], knots[1:]
    keep = hi > lo
    lo, hi = lo[keep], hi[keep]
    skip = np.zeros(lo.size, dtype=bool)
    extra = 0.0
    for j, foot in tails:
        beta = field.atom_beta[j]
        if beta <= -1.0:
            return math.inf
        p = field.atom_pos[j]
        g = math.exp(float(field.psi_excluding(np.array([p]), j)[0]))
        for k in np.nonzero((np.isclose(lo, foot, rtol=0, atol=1e-300) | np.isclose(hi, foot, rtol=0, atol=1e-300)))[0]:
            if skip[k]:
                continue
            width = hi[k] - lo[k]
            skip[k] = True
            extra += g * ell ** (1.0 + beta) * width ** (1.0 + beta) / (1.0 + beta)
    t, w = gauss_legendre01(8)
    lo, hi = lo[~skip], hi[~skip]
    tt = lo[:, None] + (hi - lo)[:, None] * t[None, :]
    pts = a + (b - a) * tt
    f = field.factor(pts)
    return float(ell * np.sum((f * w[None, :]) * (hi - lo)[:, None]) + extra)


def _layer_crossings(field: LogFactorField, a: np.ndarray, b: np.ndarray) -> list[tuple[int, list[float]]]:
    """Parameters in (0, 1) where segments cross the circle of a uniform layer (a kink of psi)."""
    centers, radii, coef = field._uniform_layers
    hits: dict[int, set] = {}
    d = b - a
    qa = (d * np.conj(d)).real
    for c, R, k in zip(centers, radii, coef):
        if k == 0.0:
            continue
        e = a - c
        qb = 2.0 * (e * np.conj(d)).real
        qc = (e * np.conj(e)).real - R * R
        disc = qb * qb - 4.0 * qa * qc
        cand = np.nonzero((disc > 0) & (qa > 0))[0]
        if cand.size == 0:
            continue
        sq = np.sqrt(disc[cand])
        for t in ((-qb[cand] - sq) / (2 * qa[cand]), (-qb[cand] + sq) / (2 * qa[cand])):
            inside = (t > 1e-12) & (t < 1 - 1e-12)
            for i, ti in zip(cand[inside], t[inside]):
                hits.setdefault(int(i), set()).add(float(ti))
    return [(i, sorted(ts)) for i, ts in sorted(hits.items())]


def segment_integrals(field: LogFactorField, a, b) -> np.ndarray:
    """``\\int_[a,b] exp(psi) |dz|`` for arrays of segments (unscaled by ``field.scale``)."""
    a = np.atleast_1d(np.asarray(a, dtype=complex))
    b = np.atleast_1d(np.asarray(b, dtype=complex))
    cuts = _layer_crossings(field, a, b) if field._uniform_layers[0].size else []
    if not cuts:
        return _segment_integrals(field, a, b)
    # segments crossing a layer circle are split there, so every rule sees a smooth integrand
    cut_idx = np.array([i for i, _ in cuts])
    plain = np.ones(a.size, dtype=bool)
    plain[cut_idx] = False
    out = np.zeros(a.size)
    out[plain] = _segment_integrals(field, a[plain], b[plain])
    owner, pa, pb = [], [], []
    for i, ts in cuts:
        knots = [0.0, *ts, 1.0]
        for lo, hi in zip(knots[:-1], knots[1:]):
            owner.append(i)
            pa.append(a[i] + (b[i] - a[i]) * lo)
            pb.append(a[i] + (b[i] - a[i]) * hi)
    pieces = _segment_integrals(field, np.array(pa), np.array(pb))
    out += np.bincount(np.array(owner), weights=pieces, minlength=a.size)
    return out


def _segment_integrals(field: LogFactorField, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.zeros(a.size)
    ell = np.abs(b - a)
    live = ell > 0
    active = field.atom_beta != 0.0
    pos = field.atom_pos[active]
    idx_map = np.nonzero(active)[0]
    if pos.size == 0:
        sel = np.nonzero(live)[0]
        for s in range(0, sel.size, 200_000):
            blk = sel[s:s + 200_000]
            out[blk] = _gl_sum(field, a[blk], b[blk], 6)
        return out
    far4 = np.zeros(a.size, dtype=bool)
    mid8 = np.zeros(a.size, dtype=bool)
    near_list: list[int] = []
    near_info: dict[int, list] = {}
    chunk = max(1, 4_000_000 // max(pos.size, 1))
    for s in range(0, a.size, chunk):
        sl = slice(s, s + chunk)
        dist, foot = _point_segment_distance(pos, a[sl], b[sl])
        dmin = dist.min(axis=1)
        L = ell[sl]
        f4 = (dmin >= 4 * L) & (L > 0)
        m8 = (dmin >= L) & ~f4 & (L > 0)
        nr = (dmin < L) & (L > 0)
        far4[sl] = f4
        mid8[sl] = m8
        for k in np.nonzero(nr)[0]:
            cols = np.nonzero(dist[k] < L[k])[0]
            near_list.append(s + k)
            near_info[s + k] = [(int(idx_map[c]), float(dist[k, c]), float(foot[k, c])) for c in cols]
    for mask, n in ((far4, 4), (mid8, 8)):
        sel = np.nonzero(mask)[0]
        for s in range(0, sel.size, 200_000):
            blk = sel[s:s + 200_000]
            out[blk] = _gl_sum(field, a[blk], b[blk], n)
    for k in near_list:
        out[k] = _graded_single(field, a[k], b[k], near_info[k])
    return out


def polyline_length(field: LogFactorField, verts) -> float:
    v = np.asarray(verts, dtype=complex)
    if v.size < 2:
        return 0.0
    return float(np.sum(segment_integrals(field, v[:-1], v[1:])))


def subdivisions(field: LogFactorField, a: np.ndarray, b: np.ndarray, cap: int = 64, per: float = 4.0) -> np.ndarray:
    """Composite panel count per segment so that GL nodes resolve nearby atoms."""
    ell = np.abs(b - a)
    active = field.atom_beta != 0.0
    if not np.any(active):
        return np.ones(a.size, dtype=int)
    dist, _ = _point_segment_distance(field.atom_pos[active], a, b)
    dmin = np.maximum(dist.min(axis=1), 1e-300)
    return np.clip(np.ceil(per * ell / dmin), 1, cap).astype(int)


def segments_value_and_gradient(field: LogFactorField, a: np.ndarray, b: np.ndarray, nsub: np.ndarray):
    """Composite-GL lengths of independent segments and their gradients w.r.t. both ends.

    Gradients are complex (``gx + i gy``). Returns ``(lengths, grad_a, grad_b)``;
    ``lengths`` is None when the factor overflows somewhere.
    """
    t8, w8 = gauss_legendre01(8)
    seg = np.repeat(np.arange(a.size), nsub)
    first = np.concatenate(([0], np.cumsum(nsub)[:-1]))
    k = np.arange(seg.size) - first[seg]
    width = 1.0 / nsub[seg]
    tau = (k * width)[:, None] + width[:, None] * t8[None, :]
    wts = width[:, None] * w8[None, :]
    A = a[seg][:, None]
    B = b[seg][:, None]
    x = A + (B - A) * tau
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        F = np.exp(field.psi(x))
        gF = F * field.grad_psi(x)
    if not (np.all(np.isfinite(F)) and np.all(np.isfinite(gF))):
        return None, None, None
    d = b - a
    ell = np.abs(d)
    S = np.bincount(seg, weights=np.sum(F * wts, axis=1), minlength=a.size)
    ga_w = np.sum(gF * wts * (1.0 - tau), axis=1)
    gb_w = np.sum(gF * wts * tau, axis=1)
    Ga = np.bincount(seg, weights=ga_w.real, minlength=a.size) + 1j * np.bincount(seg, weights=ga_w.imag, minlength=a.size)
    Gb = np.bincount(seg, weights=gb_w.real, minlength=a.size) + 1j * np.bincount(seg, weights=gb_w.imag, minlength=a.size)
    unit = np.where(ell > 0, d / np.where(ell > 0, ell, 1.0), 0.0)
    return ell * S, -unit * S + ell * Ga, unit * S + ell * Gb


def polyline_value_and_gradient(field: LogFactorField, verts: np.ndarray, nsub: np.ndarray):
    """Composite-GL polyline length and its gradient w.r.t. every vertex (complex ``gx + i gy``)."""
    vals, ga, gb = segments_value_and_gradient(field, verts[:-1], verts[1:], nsub)
    if vals is None:
        return math.inf, None
    grad = np.zeros(verts.size, dtype=complex)
    grad[:-1] += ga
    grad[1:] += gb
    return float(np.sum(vals)), grad
