"""Brouwer degree of a finite-dimensional map by regular-value preimage counting.

The primary method draws a small regular value y, finds every solution of
f(x) = y in the region by damped Newton from a lattice of starts, and sums
the signs of the Jacobian determinants.  Lattice density is doubled until
two consecutive densities agree; a disagreement after three doublings is
an error, never an answer.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .errors import BoundaryGapMissing, DegenerateValue, NewtonBudgetExceeded
from .hilbert import BlockRotation, fit
from .regions import Ball, Box, Region, uniform_ball


@dataclass(frozen=True)
class EngineConfig:
    density: float = 8.0
    min_per_shape: int = 16
    cluster_radius: float = 1e-6
    det_threshold: float = 1e-8
    residual_tol: float = 1e-9
    fd_step: float = 1e-6
    newton_iters: int = 60
    max_draws: int = 10
    max_doublings: int = 3
    max_starts: int = 200_000
    workers: int = 1


DEFAULT_ENGINE = EngineConfig()


@dataclass
class FiniteMap:
    """f: cl(U_n) -> V_n, evaluated on batches of rows.

    ``frame`` (optional) means the region is Q(region): membership is
    tested on Q^T x and seeds are rotated by Q.
    """

    dim: int
    func: Callable[[np.ndarray], np.ndarray]
    region: Region
    jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    gap: Optional[float] = None
    frame: Optional[BlockRotation] = None
    label: str = ""

    def __call__(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return fit(self.func(X), self.dim)

    def contains(self, X, closed=False):
        X = np.atleast_2d(X)
        if self.frame is not None:
            X = self.frame.T.apply_dense(X)
        return self.region.contains(X, closed=closed)

    def seeds(self, density, rng, min_per_shape):
        S = self.region.seed_points(self.dim, density, rng, min_per_shape)
        if self.frame is not None:
            S = fit(self.frame.apply_dense(S), self.dim)
        return S

    def jac(self, X, h=1e-6):
        """Batched Jacobian, shape (m, n, n); forward differences unless symbolic."""
        X = np.atleast_2d(X)
        if self.jacobian is not None:
            return self.jacobian(X)
        m, n = X.shape
        E = np.eye(n) * h
        P = (X[:, None, :] + np.concatenate([np.zeros((1, n)), E])[None]).reshape(-1, n)
        V = self(P).reshape(m, n + 1, n)
        return np.transpose((V[:, 1:, :] - V[:, :1, :]) / h, (0, 2, 1))


@dataclass
class DegreeCertificate:
    value: Optional[int]
    method: str
    regular_value_used: Optional[np.ndarray] = None
    zeros_found: list = field(default_factory=list)  # [(point, sign)]
    residuals: list = field(default_factory=list)
    seed: Optional[int] = None
    starts: int = 0
    density: float = 0.0
    draws: int = 0
    dim: int = 0

    def to_dict(self):
        return {
            "value": self.value,
            "method": self.method,
            "dim": self.dim,
            "seed": self.seed,
            "regular_value": None if self.regular_value_used is None else [round(float(v), 12) for v in self.regular_value_used],
            "zeros": [
                {"point": [round(float(v), 10) for v in p], "sign": int(s)} for p, s in self.zeros_found
            ],
            "max_residual": max(self.residuals) if self.residuals else 0.0,
            "starts": self.starts,
            "density": self.density,
            "draws": self.draws,
        }


# -- Newton ----------------------------------------------------------------


def _newton_batch(fm: FiniteMap, X: np.ndarray, y: np.ndarray, cfg: EngineConfig, bound: float):
    """Damped Newton on f(x) = y for every row of X independently."""
    X = X.copy()
    R = fm(X) - y
    res = np.linalg.norm(R, axis=1)
    alive = np.isfinite(res)
    tol = cfg.residual_tol * 1e-3
    for _ in range(cfg.newton_iters):
        act = alive & (res > tol)
        if not act.any():
            break
        idx = np.flatnonzero(act)
        J = fm.jac(X[idx], cfg.fd_step)
        try:
            step = np.linalg.solve(J, R[idx][:, :, None])[:, :, 0]
        except np.linalg.LinAlgError:
            step = np.einsum("mij,mj->mi", np.linalg.pinv(J), R[idx])
        pending = np.ones(len(idx), dtype=bool)
        alpha = 1.0
        newX, newR, newres = X[idx].copy(), R[idx].copy(), res[idx].copy()
        for _ in range(16):
            p = np.flatnonzero(pending)
            if not len(p):
                break
            T = X[idx[p]] - alpha * step[p]
            RT = fm(T) - y
            rt = np.linalg.norm(RT, axis=1)
            ok = np.isfinite(rt) & (rt < res[idx[p]])
            q = p[ok]
            newX[q], newR[q], newres[q] = T[ok], RT[ok], rt[ok]
            pending[q] = False
            alpha *= 0.5
        stuck = idx[pending]
        alive[stuck] = False
        moved = idx[~pending]
        X[moved], R[moved], res[moved] = newX[~pending], newR[~pending], newres[~pending]
        alive &= np.linalg.norm(X, axis=1) < bound
    conv = alive & (res <= cfg.residual_tol)
    return X, res, conv


def _solve_chunked(fm, starts, y, cfg, bound):
    workers = max(1, int(cfg.workers))
    chunks = np.array_split(np.arange(len(starts)), workers) if workers > 1 else [np.arange(len(starts))]
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(lambda c: _newton_batch(fm, starts[c], y, cfg, bound), chunks))
    else:
        parts = [_newton_batch(fm, starts, y, cfg, bound)]
    X = np.vstack([p[0] for p in parts])
    res = np.concatenate([p[1] for p in parts])
    conv = np.concatenate([p[2] for p in parts])
    return X, res, conv


def cluster(points: np.ndarray, radius: float) -> list[int]:
    """Indices of cluster representatives (first member in input order)."""
    reps: list[int] = []
    for i, p in enumerate(points):
        if not reps or np.min(np.linalg.norm(points[reps] - p, axis=1)) > radius:
            reps.append(i)
    return reps


def solve_all(fm: FiniteMap, y, starts, cfg: EngineConfig = DEFAULT_ENGINE):
    """Distinct solutions of f(x) = y inside the open region, sorted lexicographically.

    Returns (points, residuals).
    """
    y = np.asarray(y, dtype=float)
    bound = 10.0 * fm.region.bounding_radius() + 10.0
    X, res, conv = _solve_chunked(fm, starts, y, cfg, bound)
    X, res = X[conv], res[conv]
    inside = fm.contains(X)
    X, res = X[inside], res[inside]
    reps = cluster(X, cfg.cluster_radius)
    X, res = X[reps], res[reps]
    order = np.lexsort(X.T[::-1]) if len(X) else np.array([], dtype=int)
    return X[order], res[order]


def sweep_gap(fm: FiniteMap, samples: int = 4000, seed: int = 0) -> float:
    """Uncertified min |f| over sampled boundary points (convex pieces only)."""
    rng = np.random.default_rng(seed)
    n = fm.dim
    U = rng.standard_normal((samples, n))
    U /= np.linalg.norm(U, axis=1, keepdims=True)
    vals = []
    for piece in fm.region.convex_pieces(n):
        P = piece.boundary_points(U)
        if fm.frame is not None:
            P = fit(fm.frame.apply_dense(P), n)
        vals.append(np.min(np.linalg.norm(fm(P), axis=1)))
    return float(min(vals))


def derive_seed(*parts: int) -> int:
    return int(np.random.SeedSequence([int(p) & 0xFFFFFFFFFFFFFFFF for p in parts]).generate_state(1, np.uint64)[0] >> 1)


def brouwer_degree(
    fm: FiniteMap,
    gap: float | None = None,
    seed: int = 0,
    cfg: EngineConfig = DEFAULT_ENGINE,
) -> DegreeCertificate:
    """deg(f, U) by counting signed preimages of a random small regular value."""
    eps = gap if gap is not None else fm.gap
    if eps is None:
        eps = sweep_gap(fm)
    if not eps > 0:
        raise BoundaryGapMissing(f"boundary gap {eps} is not positive")
    rng = np.random.default_rng(seed)
    n = fm.dim
    last = None
    for draw in range(1, cfg.max_draws + 1):
        y = uniform_ball(rng, 1, n, 0.5 * eps)[0]
        density = cfg.density
        prev = None
        degenerate = False
        for level in range(cfg.max_doublings + 1):
            starts = fm.seeds(density, rng, cfg.min_per_shape)
            if len(starts) > cfg.max_starts:
                raise NewtonBudgetExceeded(
                    f"{len(starts)} starts exceed budget {cfg.max_starts}", partial=last
                )
            X, res = solve_all(fm, y, starts, cfg)
            dets = np.linalg.det(fm.jac(X, cfg.fd_step)) if len(X) else np.zeros(0)
            if np.any(np.abs(dets) < cfg.det_threshold):
                degenerate = True
                break
            signs = np.sign(dets).astype(int)
            cert = DegreeCertificate(
                value=int(signs.sum()),
                method="preimage_count",
                regular_value_used=y,
                zeros_found=[(X[i].copy(), int(signs[i])) for i in range(len(X))],
                residuals=[float(r) for r in res],
                seed=seed,
                starts=len(starts),
                density=density,
                draws=draw,
                dim=n,
            )
            last = cert
            key = (cert.value, len(X))
            if prev == key:
                return cert
            prev = key
            density *= 2
        if not degenerate:
            raise NewtonBudgetExceeded(
                f"preimage counts did not settle after {cfg.max_doublings} doublings", partial=last
            )
    raise DegenerateValue(f"all {cfg.max_draws} regular-value draws hit |det J| < {cfg.det_threshold}")


def rescaled(fm: FiniteMap, factor: float) -> FiniteMap:
    """Same map on the region scaled about its shapes' centres (for excision checks)."""
    shapes = []
    for s in fm.region.shapes:
        if isinstance(s, Ball):
            shapes.append(Ball(s.center, s.radius * factor))
        elif isinstance(s, Box):
            c = (np.array(s.lo) + np.array(s.hi)) / 2
            half = (np.array(s.hi) - np.array(s.lo)) / 2 * factor
            shapes.append(Box(tuple(c - half), tuple(c + half)))
        else:
            raise ValueError("only balls and boxes rescale")
    reg = replace(fm.region, shapes=tuple(shapes))
    return replace(fm, region=reg, gap=None)


def finite_suspension(fm: FiniteMap, delta: float) -> FiniteMap:
    """g(x, t) = (f(x), t) on region x (-delta, delta)."""
    n = fm.dim
    reg = fm.region
    if n != reg.slice_dim:
        raise ValueError("suspension expects a map whose slice fills V_n")
    new = Region(n, reg.shapes, delta)

    def g(X):
        return np.hstack([fit(fm.func(X[:, :n]), n), X[:, n : n + 1]])

    gap = None if fm.gap is None else min(fm.gap, delta)
    return FiniteMap(n + 1, g, new, gap=gap, label=f"suspension of {fm.label}")
