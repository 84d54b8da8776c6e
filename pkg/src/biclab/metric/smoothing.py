"""Local polyline shortening of graph paths.

Vertices are moved by L-BFGS on a composite Gauss-Legendre estimate of the
conformal length. Vertices leaving the admissible disc are radially projected
back; vertices pinned at cone points of angle > 2*pi stay put, since geodesics
may legitimately pass through those.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import minimize

from ..potential import LogFactorField
from .quadrature import (
    polyline_length,
    polyline_value_and_gradient,
    segment_integrals,
    segments_value_and_gradient,
    subdivisions,
)


def resample(path: np.ndarray, k: int, pinned: np.ndarray | None = None) -> np.ndarray:
    """About ``k`` segments evenly spaced in arc length, keeping ``pinned`` vertex indices."""
    path = np.asarray(path, dtype=complex)
    cuts = sorted({0, path.size - 1, *([] if pinned is None else [int(i) for i in pinned])})
    seglen = np.abs(np.diff(path))
    total = float(seglen.sum())
    if total == 0:
        return path[[0, -1]]
    out = [path[0]]
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        piece = path[lo:hi + 1]
        s = np.concatenate(([0.0], np.cumsum(np.abs(np.diff(piece)))))
        if s[-1] == 0:
            continue
        n = max(1, int(round(k * s[-1] / total)))
        targets = np.linspace(0.0, s[-1], n + 1)[1:]
        xr = np.interp(targets, s, piece.real)
        xi = np.interp(targets, s, piece.imag)
        pts = xr + 1j * xi
        pts[-1] = piece[-1]
        out.extend(pts.tolist())
    out = np.array(out, dtype=complex)
    keep = np.concatenate(([True], np.abs(np.diff(out)) > 0))
    return out[keep]


def refine(verts: np.ndarray) -> np.ndarray:
    mids = 0.5 * (verts[:-1] + verts[1:])
    out = np.empty(2 * verts.size - 1, dtype=complex)
    out[0::2] = verts
    out[1::2] = mids
    return out


def _optimise(field: LogFactorField, verts: np.ndarray, free: np.ndarray, radius: float, nsub: np.ndarray):
    idx = np.nonzero(free)[0]
    if idx.size == 0:
        return verts

    def unpack(x):
        v = verts.copy()
        v[idx] = x[0::2] + 1j * x[1::2]
        return v

    def fun(x):
        v = unpack(x)
        r = np.abs(v)
        over = r > radius
        vp = np.where(over, v * (radius / np.where(over, r, 1.0)), v)
        val, g = polyline_value_and_gradient(field, vp, nsub)
        if not math.isfinite(val):
            return 1e300, np.zeros_like(x)
        # chain rule through the radial projection
        u = np.where(over, v / np.where(over, r, 1.0), 0.0)
        tang = g - u * (g * np.conj(u)).real
        g = np.where(over, tang * (radius / np.where(over, r, 1.0)), g)
        gi = g[idx]
        out = np.empty(x.size)
        out[0::2] = gi.real
        out[1::2] = gi.imag
        return val, out

    x0 = np.empty(2 * idx.size)
    x0[0::2] = verts[idx].real
    x0[1::2] = verts[idx].imag
    res = minimize(fun, x0, jac=True, method="L-BFGS-B", options={"maxiter": 400, "ftol": 1e-14, "gtol": 1e-12})
    v = unpack(res.x)
    r = np.abs(v)
    over = r > radius
    v[over] *= radius / r[over]
    return v


def shorten(field: LogFactorField, path: np.ndarray, radius: float, pinned=None,
            sizes=(16, 32, 64)) -> tuple[float, np.ndarray]:
    """Shortest polyline found from ``path``; returns its accurate (unscaled) length and vertices."""
    pin_pts = set() if pinned is None else {complex(path[i]) for i in pinned}
    verts = resample(path, sizes[0], pinned)
    best_val = polyline_length(field, path)
    best = np.asarray(path, dtype=complex)
    for r_i, k in enumerate(sizes):
        if r_i:
            verts = refine(verts)
        free = np.ones(verts.size, dtype=bool)
        free[[0, -1]] = False
        for i, z in enumerate(verts):
            if complex(z) in pin_pts:
                free[i] = False
        for _ in range(3):
            nsub = subdivisions(field, verts[:-1], verts[1:])
            verts = _optimise(field, verts, free, radius, nsub)
            if np.array_equal(nsub, subdivisions(field, verts[:-1], verts[1:])):
                break
        keep = np.concatenate(([True], np.abs(np.diff(verts)) > 0))
        verts = verts[keep]
        val = polyline_length(field, verts)
        if val < best_val:
            best_val, best = val, verts.copy()
    return best_val, best


def _even_vertices(path: np.ndarray, k: int) -> np.ndarray:
    """Exactly ``k`` segments of equal Euclidean length along ``path``."""
    s = np.concatenate(([0.0], np.cumsum(np.abs(np.diff(path)))))
    t = np.linspace(0.0, s[-1], k + 1)
    v = np.interp(t, s, path.real) + 1j * np.interp(t, s, path.imag)
    v[0], v[-1] = path[0], path[-1]
    return v


def shorten_many(field: LogFactorField, paths: list, radius: float, sizes=(8, 16)) -> np.ndarray:
    """Shorten many paths at once (one separable L-BFGS problem); unscaled lengths.

    Each result is the accurate length of a real polyline, never above the
    length of the input path.
    """
    if not paths:
        return np.zeros(0)
    best = np.array([polyline_length(field, p) for p in paths])
    V = np.array([_even_vertices(np.asarray(p, dtype=complex), sizes[0]) for p in paths])
    P = V.shape[0]
    for r_i, k in enumerate(sizes):
        if r_i:
            W = np.empty((P, 2 * V.shape[1] - 1), dtype=complex)
            W[:, 0::2] = V
            W[:, 1::2] = 0.5 * (V[:, :-1] + V[:, 1:])
            V = W
        n = V.shape[1] - 1
        for _ in range(1):
            nsub = subdivisions(field, V[:, :-1].ravel(), V[:, 1:].ravel(), cap=16, per=2.0)

            def fun(x, V=V, nsub=nsub):
                W = V.copy()
                W[:, 1:-1] = (x[0::2] + 1j * x[1::2]).reshape(P, n - 1)
                r = np.abs(W)
                over = r > radius
                Wp = np.where(over, W * (radius / np.where(over, r, 1.0)), W)
                vals, ga, gb = segments_value_and_gradient(field, Wp[:, :-1].ravel(), Wp[:, 1:].ravel(), nsub)
                if vals is None:
                    return 1e300, np.zeros_like(x)
                G = np.zeros(W.shape, dtype=complex)
                G[:, :-1] += ga.reshape(P, n)
                G[:, 1:] += gb.reshape(P, n)
                u = np.where(over, W / np.where(over, r, 1.0), 0.0)
                tang = G - u * (G * np.conj(u)).real
                G = np.where(over, tang * (radius / np.where(over, r, 1.0)), G)
                g = G[:, 1:-1].ravel()
                out = np.empty(x.size)
                out[0::2] = g.real
                out[1::2] = g.imag
                return float(np.sum(vals)), out

            inner = V[:, 1:-1].ravel()
            x0 = np.empty(2 * inner.size)
            x0[0::2] = inner.real
            x0[1::2] = inner.imag
            res = minimize(fun, x0, jac=True, method="L-BFGS-B",
                           options={"maxiter": 1000, "ftol": 1e-9, "gtol": 1e-7, "maxcor": 20})
            V = V.copy()
            V[:, 1:-1] = (res.x[0::2] + 1j * res.x[1::2]).reshape(P, n - 1)
            r = np.abs(V)
            over = r > radius
            V[over] *= radius / r[over]
        a, b = V[:, :-1].ravel(), V[:, 1:].ravel()
        lengths = segment_integrals(field, a, b).reshape(P, n).sum(axis=1)
        best = np.minimum(best, lengths)
    return best
