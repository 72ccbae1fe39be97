"""Independent degree oracles that only look at boundary values.

winding_oracle       dim 2, accumulated argument along boundary loops
sign_change_oracle   dim 1, endpoint signs
simplicial_boundary_oracle
                     dim <= 3, signed count of boundary simplices whose
                     image under f/|f| covers a fixed generic direction
"""

from __future__ import annotations

import math
from dataclasses import replace
from functools import lru_cache

import numpy as np

from .brouwer import FiniteMap
from .errors import GapFailure, MeshBudgetExceeded, UnsupportedRegion
from .regions import Annulus

GENERIC_2D = np.array([math.cos(0.7137), math.sin(0.7137)])
GENERIC_3D = np.array([0.4236, -0.7139, 0.5573])
GENERIC_3D = GENERIC_3D / np.linalg.norm(GENERIC_3D)


def _check_plain(fm: FiniteMap):
    if fm.frame is not None:
        raise UnsupportedRegion("oracles work in the standard frame only")
    if len(fm.region.shapes) > 1 and not fm.region.disjoint():
        raise UnsupportedRegion("oracles need pairwise disjoint shapes")


def _gap_check(values: np.ndarray, gap: float | None):
    norms = np.linalg.norm(values, axis=1)
    floor = 0.5 * gap if gap else 0.0
    if np.any(norms <= floor) or not np.all(np.isfinite(norms)):
        raise GapFailure(f"|f| = {norms.min():.3g} on the boundary, below {floor:.3g}")


def _circle(t):
    return np.column_stack([np.cos(2 * np.pi * t), np.sin(2 * np.pi * t)])


def boundary_loops(fm: FiniteMap):
    """Positively oriented loops t in [0,1) -> R^2, each with weight +1 or -1."""
    reg = fm.region
    loops = []
    for s in reg.shapes:
        if isinstance(s, Annulus):
            c = np.array(s.center)
            loops.append((lambda t, c=c, r=s.outer: c + r * _circle(t), 1))
            loops.append((lambda t, c=c, r=s.inner: c + r * _circle(t), -1))
    convex = tuple(s for s in reg.shapes if s.convex)
    if convex:
        for piece in replace(reg, shapes=convex).convex_pieces(2):
            loops.append((lambda t, piece=piece: piece.boundary_points(_circle(t)), 1))
    return loops


def winding_oracle(fm: FiniteMap, gap: float | None = None, max_samples: int = 1 << 20) -> int:
    """Total winding of f along the boundary: outer loops minus inner loops."""
    if fm.dim != 2:
        raise ValueError("winding oracle needs dim = 2")
    _check_plain(fm)
    gap = gap if gap is not None else fm.gap
    total = 0
    for loop, weight in boundary_loops(fm):
        t = np.linspace(0.0, 1.0, 65)[:-1]
        while True:
            V = fm(loop(t))
            _gap_check(V, gap)
            ang = np.arctan2(V[:, 1], V[:, 0])
            d = np.diff(np.append(ang, ang[0]))
            d = (d + np.pi) % (2 * np.pi) - np.pi
            bad = np.abs(d) >= np.pi / 4
            if not bad.any():
                break
            if len(t) > max_samples:
                raise MeshBudgetExceeded("winding refinement exceeded sample budget")
            nxt = np.append(t[1:], 1.0)
            t = np.sort(np.concatenate([t, 0.5 * (t[bad] + nxt[bad])]))
        w = d.sum() / (2 * np.pi)
        total += weight * int(round(w))
    return total


def sign_change_oracle(fm: FiniteMap, gap: float | None = None) -> int:
    """Sum over the connected components (a, b) of (sign f(b) - sign f(a)) / 2."""
    if fm.dim != 1:
        raise ValueError("sign-change oracle needs dim = 1")
    if fm.frame is not None:
        raise UnsupportedRegion("oracles work in the standard frame only")
    gap = gap if gap is not None else fm.gap
    ivals = sorted((float(s.bbox()[0][0]), float(s.bbox()[1][0])) for s in fm.region.shapes)
    merged: list[list[float]] = []
    for a, b in ivals:
        if merged and a < merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    pts = np.array([[v] for ab in merged for v in ab])
    V = fm(pts)
    _gap_check(V, gap)
    sg = np.sign(V[:, 0]).reshape(-1, 2)
    return int(round(float(np.sum(sg[:, 1] - sg[:, 0]) / 2)))


# -- simplicial --------------------------------------------------------------


@lru_cache(maxsize=None)
def icosphere(level: int):
    """Unit-sphere triangulation with outward-oriented faces."""
    p = (1 + math.sqrt(5)) / 2
    V = [(-1, p, 0), (1, p, 0), (-1, -p, 0), (1, -p, 0), (0, -1, p), (0, 1, p),
         (0, -1, -p), (0, 1, -p), (p, 0, -1), (p, 0, 1), (-p, 0, -1), (-p, 0, 1)]
    F = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11), (1, 5, 9), (5, 11, 4),
         (11, 10, 2), (10, 7, 6), (7, 1, 8), (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8),
         (3, 8, 9), (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    verts = [np.array(v, dtype=float) / np.linalg.norm(v) for v in V]
    faces = list(F)
    for _ in range(level):
        cache: dict = {}

        def mid(a, b):
            key = (min(a, b), max(a, b))
            if key not in cache:
                m = verts[a] + verts[b]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        new = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new
    Vt = np.array(verts)
    Ft = np.array(faces)
    normal = np.cross(Vt[Ft[:, 1]] - Vt[Ft[:, 0]], Vt[Ft[:, 2]] - Vt[Ft[:, 0]])
    flip = np.einsum("ij,ij->i", normal, Vt[Ft].mean(axis=1)) < 0
    Ft[flip] = Ft[flip][:, [0, 2, 1]]
    return Vt, Ft


def _count_2d(fm, loops, m, gap):
    total = 0
    for loop, weight in loops:
        t = np.arange(m) / m
        V = fm(loop(t))
        _gap_check(V, gap)
        A = V / np.linalg.norm(V, axis=1, keepdims=True)
        B = np.roll(A, -1, axis=0)
        M = np.stack([A, B], axis=2)
        det = np.linalg.det(M)
        with np.errstate(all="ignore"):
            lam = np.linalg.solve(M, np.broadcast_to(GENERIC_2D, A.shape)[:, :, None])[:, :, 0]
        hit = np.all(lam > 0, axis=1) & (np.abs(det) > 0)
        total += weight * int(np.sum(np.sign(det[hit])))
    return total


def _count_mesh(fm, P, F, gap):
    V = fm(P)
    _gap_check(V, gap)
    A = V / np.linalg.norm(V, axis=1, keepdims=True)
    M = np.stack([A[F[:, 0]], A[F[:, 1]], A[F[:, 2]]], axis=2)
    det = np.linalg.det(M)
    ok = np.abs(det) > 1e-14
    lam = np.zeros((len(F), 3))
    lam[ok] = np.linalg.solve(M[ok], np.broadcast_to(GENERIC_3D, (int(ok.sum()), 3))[:, :, None])[:, :, 0]
    hit = ok & np.all(lam > 0, axis=1)
    return int(np.sum(np.sign(det[hit])))


def annulus_shell(s: Annulus, r: float, level: int):
    """Outward triangulation of the boundary of annulus x (-r, r), a torus.

    The cross-section rectangle [inner, outer] x [-r, r] is walked
    counterclockwise, with its corners as nodes, and swept around the axis.
    """
    k = 2 ** level
    a, b = s.inner, s.outer
    corners = [(a, -r), (b, -r), (b, r), (a, r)]
    section = []
    for (p0, q0), (p1, q1) in zip(corners, corners[1:] + corners[:1]):
        for j in range(k):
            w = j / k
            section.append(((1 - w) * p0 + w * p1, (1 - w) * q0 + w * q1))
    section = np.array(section)
    m = 8 * k
    th = 2 * np.pi * np.arange(m) / m
    cx, cy = s.center
    rho, z = section[:, 0], section[:, 1]
    P = np.stack([
        (cx + rho[None, :] * np.cos(th)[:, None]).ravel(),
        (cy + rho[None, :] * np.sin(th)[:, None]).ravel(),
        np.broadcast_to(z, (m, len(z))).ravel(),
    ], axis=1)
    ns = len(section)
    idx = lambda i, j: (i % m) * ns + (j % ns)
    F = []
    for i in range(m):
        for j in range(ns):
            F.append((idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)))
            F.append((idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)))
    F = np.array(F)
    # orient each face by the outward normal of the rectangle side it sits on
    cen = P[F].mean(axis=1)
    crho = np.hypot(cen[:, 0] - cx, cen[:, 1] - cy)
    radial = np.column_stack([(cen[:, 0] - cx) / crho, (cen[:, 1] - cy) / crho, np.zeros(len(F))])
    dist = np.column_stack([crho - a, b - crho, cen[:, 2] + r, r - cen[:, 2]])
    side = np.argmin(dist, axis=1)
    out = np.where(side[:, None] == 0, -radial, radial)
    out[side == 2] = (0.0, 0.0, -1.0)
    out[side == 3] = (0.0, 0.0, 1.0)
    normal = np.cross(P[F[:, 1]] - P[F[:, 0]], P[F[:, 2]] - P[F[:, 0]])
    flip = np.einsum("ij,ij->i", normal, out) < 0
    F[flip] = F[flip][:, [0, 2, 1]]
    return P, F


def _count_3d(fm, pieces, level, gap, shells=()):
    U, F = icosphere(level)
    total = 0
    for piece in pieces:
        total += _count_mesh(fm, piece.boundary_points(U), F, gap)
    for s, r in shells:
        total += _count_mesh(fm, *annulus_shell(s, r, level + 1), gap)
    return total


def simplicial_boundary_oracle(fm: FiniteMap, gap: float | None = None, max_level: int = 6) -> int:
    """Degree of f/|f| on a triangulated boundary, refined until stable twice."""
    gap = gap if gap is not None else fm.gap
    n = fm.dim
    if n == 1:
        return sign_change_oracle(fm, gap)
    _check_plain(fm)
    if n == 2:
        loops = boundary_loops(fm)
        count = lambda lvl: _count_2d(fm, loops, 32 * 2**lvl, gap)
    elif n == 3:
        reg = fm.region
        rings = [s for s in reg.shapes if isinstance(s, Annulus)]
        if any(not (s.convex or isinstance(s, Annulus)) for s in reg.shapes):
            raise UnsupportedRegion("3-d simplicial oracle needs convex shapes or planar annuli")
        if rings and reg.slice_dim != 2:
            raise UnsupportedRegion("annulus shells need a planar slice")
        convex = tuple(s for s in reg.shapes if s.convex)
        pieces = replace(reg, shapes=convex).convex_pieces(3) if convex else []
        shells = [(s, reg.tail_faces_in(3)[0][2]) for s in rings]
        count = lambda lvl: _count_3d(fm, pieces, lvl, gap, shells)
    else:
        raise ValueError("simplicial oracle supports dim <= 3")
    history = []
    for lvl in range(1, max_level + 1):
        history.append(count(lvl))
        if len(history) >= 3 and history[-1] == history[-2] == history[-3]:
            return history[-1]
    raise MeshBudgetExceeded(f"simplicial counts did not stabilize: {history}")
