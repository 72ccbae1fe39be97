"""Bounded open regions of the form (finite-dimensional shape) x (tail balls).

A :class:`Region` with ``slice_dim = k`` is the set of x in l2 whose first
k coordinates lie in a finite union of open balls, boxes or annuli, and
whose remaining coordinates are split into consecutive blocks, each
confined to an open ball centred at the origin.  The final block is
infinite.  Slicing by V_n keeps the same description with the blocks
truncated at n.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np

from .errors import UnsupportedRegion
from .hilbert import HilbertVector, fit


def ball_volume(d: int, r: float) -> float:
    if d == 0:
        return 1.0
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1) * r**d


def uniform_ball(rng: np.random.Generator, m: int, d: int, r: float) -> np.ndarray:
    if d == 0:
        return np.zeros((m, 0))
    g = rng.standard_normal((m, d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g * (r * rng.random(m) ** (1.0 / d))[:, None]


def _sphere_cover(k: int, h: float) -> np.ndarray:
    """Points on the unit sphere S^{k-1} with covering radius <= h."""
    if k == 1:
        return np.array([[-1.0], [1.0]])
    if k == 2:
        n = max(8, math.ceil(2 * math.pi / (2 * h)))
        th = 2 * math.pi * np.arange(n) / n
        return np.column_stack([np.cos(th), np.sin(th)])
    # grid on the cube surface, radially projected (1-Lipschitz outside the ball)
    g = 2 * h / math.sqrt(k - 1)
    t = np.linspace(-1.0, 1.0, max(2, math.ceil(2.0 / g) + 1))
    faces = []
    for axis in range(k):
        grid = np.array(list(itertools.product(t, repeat=k - 1)))
        for sign in (-1.0, 1.0):
            P = np.insert(grid, axis, sign, axis=1)
            faces.append(P)
    P = np.unique(np.vstack(faces), axis=0)
    return P / np.linalg.norm(P, axis=1, keepdims=True)


@dataclass(frozen=True)
class Ball:
    center: tuple[float, ...]
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if self.radius <= 0:
            raise ValueError("ball radius must be positive")

    @property
    def dim(self):
        return len(self.center)

    @property
    def convex(self):
        return True

    def contains(self, S, closed=False, tol=0.0):
        d = np.linalg.norm(S - np.array(self.center), axis=1)
        return d <= self.radius + tol if closed else d < self.radius - tol

    def inner_distance(self, S):
        return self.radius - np.linalg.norm(S - np.array(self.center), axis=1)

    def bounding_radius(self):
        return float(np.linalg.norm(self.center)) + self.radius

    def bbox(self):
        c = np.array(self.center)
        return c - self.radius, c + self.radius

    def volume(self):
        return ball_volume(self.dim, self.radius)

    def boundary_samples(self, h):
        return np.array(self.center) + self.radius * _sphere_cover(self.dim, h / self.radius)

    def random_points(self, rng, m):
        return np.array(self.center) + uniform_ball(rng, m, self.dim, self.radius)

    def restrict(self, m):
        """Intersection with span{e_1..e_m}, m < dim; None when empty."""
        c = np.array(self.center)
        rest = float(np.sum(c[m:] ** 2))
        if rest >= self.radius**2:
            return None
        return Ball(tuple(c[:m]), math.sqrt(self.radius**2 - rest))

    def radial(self, U):
        # distance from the centre along unit directions U (rows)
        return np.full(len(U), self.radius)

    def star_center(self):
        return np.array(self.center)

    def to_dict(self):
        return {"ball": {"center": list(self.center), "radius": self.radius}}


@dataclass(frozen=True)
class Box:
    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "lo", tuple(float(c) for c in self.lo))
        object.__setattr__(self, "hi", tuple(float(c) for c in self.hi))
        if len(self.lo) != len(self.hi) or any(a >= b for a, b in zip(self.lo, self.hi)):
            raise ValueError("box needs lo < hi componentwise")

    @property
    def dim(self):
        return len(self.lo)

    @property
    def convex(self):
        return True

    def contains(self, S, closed=False, tol=0.0):
        lo, hi = np.array(self.lo), np.array(self.hi)
        if closed:
            return np.all((S >= lo - tol) & (S <= hi + tol), axis=1)
        return np.all((S > lo + tol) & (S < hi - tol), axis=1)

    def inner_distance(self, S):
        lo, hi = np.array(self.lo), np.array(self.hi)
        return np.min(np.minimum(S - lo, hi - S), axis=1)

    def bounding_radius(self):
        corner = np.maximum(np.abs(self.lo), np.abs(self.hi))
        return float(np.linalg.norm(corner))

    def bbox(self):
        return np.array(self.lo), np.array(self.hi)

    def volume(self):
        return float(np.prod(np.array(self.hi) - np.array(self.lo)))

    def boundary_samples(self, h):
        k = self.dim
        lo, hi = np.array(self.lo), np.array(self.hi)
        if k == 1:
            return np.array([[lo[0]], [hi[0]]])
        g = 2 * h / math.sqrt(k - 1)
        axes = [np.linspace(a, b, max(2, math.ceil((b - a) / g) + 1)) for a, b in zip(lo, hi)]
        pts = []
        for axis in range(k):
            others = [axes[j] for j in range(k) if j != axis]
            grid = np.array(list(itertools.product(*others)))
            for v in (lo[axis], hi[axis]):
                pts.append(np.insert(grid, axis, v, axis=1))
        return np.unique(np.vstack(pts), axis=0)

    def random_points(self, rng, m):
        lo, hi = np.array(self.lo), np.array(self.hi)
        return lo + (hi - lo) * rng.random((m, self.dim))

    def restrict(self, m):
        lo, hi = np.array(self.lo), np.array(self.hi)
        if np.any(lo[m:] >= 0) or np.any(hi[m:] <= 0):
            return None
        return Box(tuple(lo[:m]), tuple(hi[:m]))

    def star_center(self):
        return (np.array(self.lo) + np.array(self.hi)) / 2

    def radial(self, U):
        c = self.star_center()
        half = (np.array(self.hi) - np.array(self.lo)) / 2
        with np.errstate(divide="ignore"):
            t = np.where(np.abs(U) > 0, half / np.abs(U), np.inf)
        return np.min(t, axis=1)

    def to_dict(self):
        return {"box": {"lo": list(self.lo), "hi": list(self.hi)}}


@dataclass(frozen=True)
class Annulus:
    """Planar open annulus inner < |z - center| < outer."""

    center: tuple[float, float]
    inner: float
    outer: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if len(self.center) != 2:
            raise ValueError("annulus is planar")
        if not 0 < self.inner < self.outer:
            raise ValueError("annulus needs 0 < inner < outer")

    @property
    def dim(self):
        return 2

    @property
    def convex(self):
        return False

    def _rho(self, S):
        return np.linalg.norm(S - np.array(self.center), axis=1)

    def contains(self, S, closed=False, tol=0.0):
        r = self._rho(S)
        if closed:
            return (r >= self.inner - tol) & (r <= self.outer + tol)
        return (r > self.inner + tol) & (r < self.outer - tol)

    def inner_distance(self, S):
        r = self._rho(S)
        return np.minimum(self.outer - r, r - self.inner)

    def bounding_radius(self):
        return float(np.linalg.norm(self.center)) + self.outer

    def bbox(self):
        c = np.array(self.center)
        return c - self.outer, c + self.outer

    def volume(self):
        return math.pi * (self.outer**2 - self.inner**2)

    def boundary_samples(self, h):
        # arc-length spacing <= 2h on both circles: geodesic covering radius h
        c = np.array(self.center)
        return np.vstack(
            [c + r * _sphere_cover(2, h / r) for r in (self.inner, self.outer)]
        )

    def random_points(self, rng, m):
        c = np.array(self.center)
        out = np.empty((0, 2))
        while len(out) < m:
            P = c + uniform_ball(rng, 2 * m, 2, self.outer)
            out = np.vstack([out, P[self.contains(P)]])
        return out[:m]

    def restrict(self, m):
        # the trace on the e_1 axis: one or two open intervals
        a, b = self.center
        if b * b >= self.outer**2:
            return None
        hi = math.sqrt(self.outer**2 - b * b)
        if b * b >= self.inner**2:
            return [Box((a - hi,), (a + hi,))]
        lo = math.sqrt(self.inner**2 - b * b)
        return [Box((a - hi,), (a - lo,)), Box((a + lo,), (a + hi,))]

    def to_dict(self):
        return {"annulus": {"center": list(self.center), "inner": self.inner, "outer": self.outer}}


Shape = Union[Ball, Box, Annulus]


def shapes_intersect(a: Shape, b: Shape) -> bool:
    """Do two open shapes of the same dimension overlap?"""
    if isinstance(a, Ball) and isinstance(b, Ball):
        return float(np.linalg.norm(np.subtract(a.center, b.center))) < a.radius + b.radius
    if isinstance(a, Box) and isinstance(b, Box):
        return all(l1 < h2 and l2 < h1 for l1, h1, l2, h2 in zip(a.lo, a.hi, b.lo, b.hi))
    if isinstance(a, Box) and isinstance(b, Ball):
        a, b = b, a
    if isinstance(a, Ball) and isinstance(b, Box):
        c = np.array(a.center)
        nearest = np.clip(c, b.lo, b.hi)
        return float(np.linalg.norm(c - nearest)) < a.radius
    if isinstance(b, Annulus):
        a, b = b, a
    if isinstance(a, Annulus):
        # annulus vs ball/box/annulus: decided on a fine sample of b
        rng = np.random.default_rng(0)
        P = b.random_points(rng, 4000)
        if np.any(a.contains(P)):
            return True
        return bool(np.any(a.contains(b.boundary_samples(1e-3), tol=-1e-12)))
    raise TypeError(f"unknown shapes {a!r}, {b!r}")


def shape_from_dict(d: dict) -> Shape:
    (kind, p), = d.items()
    if kind == "ball":
        return Ball(tuple(p["center"]), float(p["radius"]))
    if kind == "box":
        return Box(tuple(p["lo"]), tuple(p["hi"]))
    if kind == "annulus":
        return Annulus(tuple(p["center"]), float(p["inner"]), float(p["outer"]))
    raise ValueError(f"unknown shape kind {kind!r}")


@dataclass(frozen=True)
class ConvexPiece:
    """A convex component of a region slice in V_n, star-shaped about ``center``.

    ``factors`` lists (start, stop, shape) constraints on coordinate ranges;
    every shape is centred at the corresponding part of ``center``.
    """

    center: np.ndarray
    factors: tuple

    @property
    def dim(self):
        return len(self.center)

    def radial(self, U: np.ndarray) -> np.ndarray:
        t = np.full(len(U), np.inf)
        for start, stop, shape in self.factors:
            V = U[:, start:stop]
            nv = np.linalg.norm(V, axis=1)
            if isinstance(shape, Ball):
                with np.errstate(divide="ignore"):
                    t = np.minimum(t, np.where(nv > 0, shape.radius / np.where(nv > 0, nv, 1), np.inf))
            else:
                t = np.minimum(t, shape.radial(V))
        return t

    def boundary_points(self, U: np.ndarray) -> np.ndarray:
        """Boundary point hit by the ray from the centre along each unit row of U."""
        return self.center + self.radial(U)[:, None] * U


@dataclass(frozen=True)
class Region:
    slice_dim: int
    shapes: tuple
    tail_radius: float
    blocks: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "shapes", tuple(self.shapes))
        object.__setattr__(self, "blocks", tuple((int(s), float(r)) for s, r in self.blocks))
        if self.slice_dim < 1:
            raise ValueError("slice_dim must be >= 1")
        if not self.shapes:
            raise ValueError("region needs at least one shape")
        for s in self.shapes:
            if s.dim != self.slice_dim:
                raise ValueError(f"shape {s!r} has dimension {s.dim}, expected {self.slice_dim}")
        if self.tail_radius <= 0:
            raise ValueError("tail_radius must be positive")
        prev = self.slice_dim
        for stop, r in self.blocks:
            if stop <= prev or r <= 0:
                raise ValueError("blocks need increasing stops beyond slice_dim and positive radii")
            prev = stop

    @classmethod
    def ball(cls, center, radius, tail_radius=1.0):
        center = tuple(center)
        return cls(len(center), (Ball(center, radius),), tail_radius)

    # -- structure -----------------------------------------------------

    def tail_faces(self) -> list[tuple[int, int | None, float]]:
        """(start, stop, radius) for each tail block; stop None = infinite."""
        faces, start = [], self.slice_dim
        for stop, r in self.blocks:
            faces.append((start, stop, r))
            start = stop
        faces.append((start, None, self.tail_radius))
        return faces

    def tail_faces_in(self, n: int) -> list[tuple[int, int, float]]:
        out = []
        for start, stop, r in self.tail_faces():
            stop = n if stop is None else min(stop, n)
            if stop > start:
                out.append((start, stop, r))
        return out

    @property
    def all_convex(self) -> bool:
        return all(s.convex for s in self.shapes)

    @property
    def ball_only(self) -> bool:
        return all(isinstance(s, Ball) for s in self.shapes)

    def bounding_radius(self) -> float:
        rs = max(s.bounding_radius() for s in self.shapes)
        tails = sum(r * r for _, _, r in self.tail_faces())
        return math.sqrt(rs * rs + tails)

    def tail_radius_total(self) -> float:
        return math.sqrt(sum(r * r for _, _, r in self.tail_faces()))

    # -- membership -----------------------------------------------------

    def slice_contains(self, S, closed=False, tol=0.0):
        S = fit(S, self.slice_dim)
        mask = np.zeros(len(S), dtype=bool)
        for s in self.shapes:
            mask |= s.contains(S, closed=closed, tol=tol)
        return mask

    def contains(self, X, closed=False, tol=0.0) -> np.ndarray:
        """Membership of the rows of X (points of l2 by leading coordinates)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        mask = self.slice_contains(X[:, : self.slice_dim], closed, tol)
        for start, stop, r in self.tail_faces():
            block = X[:, start:stop] if stop is not None else X[:, start:]
            nb = np.linalg.norm(block, axis=1) if block.shape[1] else np.zeros(len(X))
            mask &= (nb <= r + tol) if closed else (nb < r - tol)
        return mask

    def contains_vector(self, x: HilbertVector, closed=False) -> bool:
        d = max(x.support_max, self.slice_dim)
        return bool(self.contains(x.to_dense(d)[None, :], closed=closed)[0])

    def inner_distance(self, X) -> np.ndarray:
        """Lower bound on the distance from each row of X to the complement."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        S = fit(X, self.slice_dim)
        d = np.full(len(X), -np.inf)
        for s in self.shapes:
            d = np.maximum(d, s.inner_distance(S))
        for start, stop, r in self.tail_faces():
            block = X[:, start:stop] if stop is not None else X[:, start:]
            nb = np.linalg.norm(block, axis=1) if block.shape[1] else np.zeros(len(X))
            d = np.minimum(d, r - nb)
        return d

    # -- sampling -------------------------------------------------------

    def slice_volume(self) -> float:
        return sum(s.volume() for s in self.shapes)

    def boundary_samples(self, h: float) -> np.ndarray:
        """Points of the boundary of the slice union with covering radius <= h.

        Every boundary point of every shape lies within h (measured along
        the shape's boundary for annuli) of some returned point, so the
        union's boundary is covered as well.
        """
        return np.vstack([s.boundary_samples(h) for s in self.shapes])

    def _tail_random(self, rng, m, n, scale=1.0):
        cols = [np.zeros((m, 0))]
        for start, stop, r in self.tail_faces_in(n):
            cols.append(uniform_ball(rng, m, stop - start, r * scale))
        return np.hstack(cols)

    def random_points(self, n: int, m: int, rng: np.random.Generator) -> np.ndarray:
        """m uniform points of the slice U_n (n >= slice_dim)."""
        vols = np.array([s.volume() for s in self.shapes])
        counts = rng.multinomial(m, vols / vols.sum())
        S = np.vstack([s.random_points(rng, c) for s, c in zip(self.shapes, counts) if c] or [np.zeros((0, self.slice_dim))])
        S = S[rng.permutation(len(S))]
        # overlapping shapes over-sample their intersection; harmless for audits
        return np.hstack([S, self._tail_random(rng, len(S), n)])

    def seed_points(self, n: int, density: float, rng: np.random.Generator, min_per_shape: int = 16) -> np.ndarray:
        """Starting points for multi-start Newton in U_n.

        A randomly shifted lattice in each slice shape with ``density``
        points per unit slice volume (topped up with uniform points to at
        least ``min_per_shape``).  Even-indexed seeds have zero tail, odd
        ones a tail drawn from the half-radius tail balls.
        """
        k = self.slice_dim
        spacing = (1.0 / density) ** (1.0 / k)
        chunks = []
        for s in self.shapes:
            lo, hi = s.bbox()
            shift = rng.random(k) * spacing
            axes = [np.arange(a + sh, b, spacing) for a, b, sh in zip(lo, hi, shift)]
            if all(len(a) for a in axes):
                grid = np.array(np.meshgrid(*axes, indexing="ij")).reshape(k, -1).T
                grid = grid[s.contains(grid)]
            else:
                grid = np.zeros((0, k))
            if len(grid) < min_per_shape:
                grid = np.vstack([grid, s.random_points(rng, min_per_shape - len(grid))])
            chunks.append(grid)
        S = np.vstack(chunks)
        T = self._tail_random(rng, len(S), n, scale=0.5)
        T[::2] = 0.0
        return np.hstack([S, T])

    # -- pieces for the boundary oracles ---------------------------------

    def convex_pieces(self, n: int) -> list[ConvexPiece]:
        if not self.all_convex:
            raise UnsupportedRegion("region has non-convex shapes")
        pieces = []
        for s in self.shapes:
            c = np.zeros(n)
            c[: self.slice_dim] = s.star_center()
            factors = [(0, self.slice_dim, s)]
            for start, stop, r in self.tail_faces_in(n):
                factors.append((start, stop, Ball((0.0,) * (stop - start), r)))
            pieces.append(ConvexPiece(c, tuple(factors)))
        return pieces

    def disjoint(self) -> bool:
        return not any(shapes_intersect(a, b) for a, b in itertools.combinations(self.shapes, 2))

    # -- derived regions --------------------------------------------------

    def with_tail(self, tail_radius: float) -> Region:
        return replace(self, tail_radius=tail_radius)

    def suspended(self, n: int, outer_radius: float | None = None) -> Region:
        """P_n^{-1}(U_n) cut down by a ball of ``outer_radius`` beyond n."""
        if n < self.slice_dim:
            raise ValueError("n must be >= slice_dim")
        blocks = [(s, r) for s, r in self.blocks if s < n]
        faces = self.tail_faces_in(n)
        if faces and faces[-1][1] == n and (not blocks or blocks[-1][0] != n):
            blocks.append((n, faces[-1][2]))
        return Region(self.slice_dim, self.shapes, outer_radius or self.tail_radius, tuple(blocks))

    def to_dict(self) -> dict:
        d = {
            "slice_dim": self.slice_dim,
            "shapes": [s.to_dict() for s in self.shapes],
            "tail_radius": self.tail_radius,
        }
        if self.blocks:
            d["blocks"] = [list(b) for b in self.blocks]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> Region:
        return cls(
            int(d["slice_dim"]),
            tuple(shape_from_dict(s) for s in d["shapes"]),
            float(d.get("tail_radius", 1.0)),
            tuple(tuple(b) for b in d.get("blocks", ())),
        )
