"""Neighbourhoods of finite sets that survive projection, and components of slices.

For x in an open set Omega let R_x be its distance to the complement and
N_x the least n with |x - P_n x| < R_x / 2.  The union U of the balls
B(x, R_x / 2) then satisfies P_n(cl U) in Omega for all n >= max N_x:
|P_n z - x| <= |z - x| + |P_n x - x| < R_x.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import NotInterior
from .hilbert import HilbertVector, fit
from .regions import Region, shapes_intersect, uniform_ball

CHECK_EXTRA = 5


@dataclass(frozen=True)
class BallUnion:
    """A finite union of open balls in l2 with finitely supported centres."""

    centers: tuple
    radii: tuple

    @property
    def width(self) -> int:
        return max((c.support_max for c in self.centers), default=1)

    def dense_centers(self, d: int) -> np.ndarray:
        return np.array([c.to_dense(d) for c in self.centers]).reshape(len(self.centers), d)

    def contains(self, X, closed=False) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        d = max(X.shape[1], self.width)
        X = fit(X, d)
        C = self.dense_centers(d)
        D = np.linalg.norm(X[:, None, :] - C[None], axis=2)
        r = np.array(self.radii)[None]
        return np.any(D <= r if closed else D < r, axis=1)

    def sample_closure(self, d: int, m: int, rng) -> np.ndarray:
        """Points of cl U in V_d: interior points and boundary points of each ball."""
        C = self.dense_centers(d)
        out = []
        for c, r in zip(C, self.radii):
            inner = c + uniform_ball(rng, m, d, r)
            g = rng.standard_normal((m, d))
            sphere = c + r * g / np.linalg.norm(g, axis=1, keepdims=True)
            out += [c[None], inner, sphere]
        return np.vstack(out)


def _inner_distance(omega: Optional[Region], x: HilbertVector) -> float:
    if omega is None:
        return np.inf
    d = max(x.support_max, omega.slice_dim)
    return float(omega.inner_distance(x.to_dense(d)[None, :])[0])


def _tail_norm(x: HilbertVector, n: int) -> float:
    return float(np.sqrt(sum(v * v for i, v in zip(x.indices, x.values) if i > n)))


def safe_neighborhood(K: Sequence[HilbertVector], omega: Optional[Region] = None, radius: float = 1.0,
                      seed: int = 0, samples: int = 200) -> tuple[BallUnion, int]:
    """(U, N) with K in U, cl U in Omega and P_n(cl U) in Omega for n >= N.

    ``omega = None`` means all of E; then every ball gets ``radius`` and N = 1.
    The inclusion is re-checked for n = N .. N+5, exactly on the centres
    and by sampling on cl U.
    """
    if not K:
        raise ValueError("K must be nonempty")
    radii, Ns = [], []
    for x in K:
        Rx = _inner_distance(omega, x)
        if not Rx > 0:
            raise NotInterior(f"{x!r} is not an interior point of Omega (distance {Rx:.3g})")
        if np.isinf(Rx):
            radii.append(radius)
            Ns.append(1)
            continue
        radii.append(Rx / 2)
        n = 1
        while not _tail_norm(x, n) < Rx / 2:
            n += 1
        Ns.append(n)
    U = BallUnion(tuple(K), tuple(radii))
    N = max(Ns)
    if omega is not None:
        verify_projection(U, omega, N, seed=seed, samples=samples)
    return U, N


def verify_projection(U: BallUnion, omega: Region, N: int, extra: int = CHECK_EXTRA, seed: int = 0,
                      samples: int = 200) -> None:
    """Check P_n(cl U) in Omega for n = N .. N+extra; raises AssertionError otherwise."""
    rng = np.random.default_rng(seed)
    d = max(U.width, omega.slice_dim, N + extra) + 2
    P = U.sample_closure(d, samples, rng)
    for n in range(N, N + extra + 1):
        for c, r in zip(U.centers, U.radii):
            # |P_n z - c| <= r + |c - P_n c| must stay below the distance 2r
            if not r + _tail_norm(c, n) < 2 * r:
                raise AssertionError(f"centre {c!r}: projection bound fails at n = {n}")
        inside = omega.contains(fit(fit(P, n), d))
        if not inside.all():
            raise AssertionError(f"P_{n}(cl U) leaves Omega")


# -- components of slices Omega_m = Omega ∩ V_m ----------------------------------


def _slice_shapes(omega: Region, m: int) -> list:
    if m >= omega.slice_dim:
        return list(omega.shapes)
    out = []
    for s in omega.shapes:
        r = s.restrict(m)
        if r is None:
            continue
        out.extend(r if isinstance(r, list) else [r])
    return out


class _DSU:
    def __init__(self, n):
        self.p = list(range(n))

    def find(self, a):
        while self.p[a] != a:
            self.p[a] = self.p[self.p[a]]
            a = self.p[a]
        return a

    def union(self, a, b):
        self.p[self.find(a)] = self.find(b)


def components(omega: Region, m: int) -> tuple[list, list[int]]:
    """Shapes of the slice Omega_m and a component label for each.

    The tail ball factor is connected, so components are those of the
    shape-overlap graph.
    """
    shapes = _slice_shapes(omega, m)
    dsu = _DSU(len(shapes))
    for i, j in itertools.combinations(range(len(shapes)), 2):
        if shapes_intersect(shapes[i], shapes[j]):
            dsu.union(i, j)
    roots = [dsu.find(i) for i in range(len(shapes))]
    relabel = {r: k for k, r in enumerate(dict.fromkeys(roots))}
    return shapes, [relabel[r] for r in roots]


def component_labels(omega: Region, m: int, X) -> np.ndarray:
    """Component of Omega_m containing each row of X (projected to V_m); -1 outside."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = fit(X, m)
    shapes, labels = components(omega, m)
    k = min(m, omega.slice_dim)
    inside = np.ones(len(Y), dtype=bool)
    for start, stop, r in omega.tail_faces_in(m):
        inside &= np.linalg.norm(Y[:, start:stop], axis=1) < r
    out = np.full(len(Y), -1)
    for s, lab in zip(shapes, labels):
        hit = inside & s.contains(Y[:, :k]) & (out < 0)
        out[hit] = lab
    return out


def connecting_dimension(omega: Region, path: np.ndarray, start: int = 1, cap: int = 64,
                         extra: int = CHECK_EXTRA) -> int:
    """Least M such that P_m(path) lies in one component of Omega_m for M <= m <= M + extra."""
    for M in range(start, cap + 1):
        good = True
        for m in range(M, M + extra + 1):
            lab = component_labels(omega, m, path)
            if np.any(lab < 0) or len(set(lab.tolist())) != 1:
                good = False
                break
        if good:
            return M
    raise ValueError(f"path does not settle into one component below m = {cap}")

