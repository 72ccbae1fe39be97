"""Compact maps F, local maps f = id - F, their Galerkin approximations,
suspensions and straight-line homotopies.

Every map is evaluated on batches: a callable taking an array of shape
(m, d), whose rows are points of l2 given by their first d coordinates,
and returning (m, d_out).  Callables must accept any d and treat missing
coordinates as zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .brouwer import FiniteMap
from .errors import AuditFailure, DimensionTooSmall, GapFailure, OutOfDomain, RegionMismatch
from .hilbert import BlockRotation, HilbertVector, fit
from .regions import Region

TailBound = Callable[[float, int], float]

FD_STEP = 1e-5
FD_TOL = 1e-4


def zero_tail(cap: int, bound: float) -> TailBound:
    """Tail modulus of a map with range in V_cap and |F| <= bound."""
    return lambda R, n: 0.0 if n >= cap else float(bound)


@dataclass(frozen=True)
class CompactMapSpec:
    """A compact map F given by a batched evaluator and a tail modulus.

    ``tail_bound(R, n)`` bounds |F(x) - P_n F(x)| over domain points with
    |x| <= R.  ``lipschitz`` bounds the modulus of F on each convex piece
    of the domain.  ``tail_coupling = (d, c)`` says that points agreeing in
    their first d coordinates have |F(x) - F(x')| <= c |x - x'|; c = 0
    means F only reads the first d coordinates.
    """

    func: Callable[[np.ndarray], np.ndarray]
    tail_bound: TailBound
    lipschitz: float
    output_dim_cap: Optional[int] = None
    tail_coupling: Optional[tuple[int, float]] = None
    jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    label: str = ""

    def __call__(self, X):
        return np.asarray(self.func(np.atleast_2d(np.asarray(X, dtype=float))), dtype=float)

    def evaluate(self, x: HilbertVector) -> HilbertVector:
        d = max(x.support_max, 1)
        return HilbertVector.from_dense(self(x.to_dense(d)[None, :])[0])

    def coupling_for(self, k: int) -> float:
        """Lipschitz modulus in the coordinates beyond k."""
        if self.tail_coupling is not None and self.tail_coupling[0] <= k:
            return float(self.tail_coupling[1])
        return float(self.lipschitz)


@dataclass(frozen=True)
class LocalMap:
    """f(x) = x - F(x) on a bounded region (optionally viewed in a rotated frame).

    With ``rotation = Q`` the map is x -> Q f(Q^T x) on Q(domain); F and
    domain stay in the base frame.
    """

    F: CompactMapSpec
    domain: Region
    ambient: Optional[Region] = None
    rotation: Optional[BlockRotation] = None
    label: str = ""
    audit: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        if self.audit and self.rotation is None:
            audit_compact(self.F, self.domain)

    @property
    def slice_dim(self) -> int:
        k = self.domain.slice_dim
        return max(k, self.rotation.dim) if self.rotation is not None else k

    @property
    def tail_bound(self) -> TailBound:
        if self.rotation is None:
            return self.F.tail_bound
        q = self.rotation.dim
        tb = self.F.tail_bound
        return lambda R, n: tb(R, n) if n >= q else float("inf")

    def bounding_radius(self) -> float:
        return self.domain.bounding_radius()

    def compact_dense(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.rotation is None:
            return self.F(X)
        Q = self.rotation
        return Q.apply_dense(self.F(Q.T.apply_dense(X)))

    def f_dense(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        FX = self.compact_dense(X)
        d = max(X.shape[1], FX.shape[1])
        return fit(X, d) - fit(FX, d)

    def contains(self, X, closed=False) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.rotation is not None:
            X = self.rotation.T.apply_dense(X)
        return self.domain.contains(X, closed=closed)

    def random_points(self, n: int, m: int, rng) -> np.ndarray:
        P = self.domain.random_points(n, m, rng)
        if self.rotation is not None:
            P = fit(self.rotation.apply_dense(P), max(n, self.rotation.dim))
        return P

    def restricted(self, region: Region) -> LocalMap:
        return replace(self, domain=region, audit=False)


@dataclass(frozen=True)
class GradientLocalMap(LocalMap):
    """A local map with f = grad(potential); potential is batched (m, d) -> (m,)."""

    potential: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def potential_dense(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.rotation is not None:
            X = self.rotation.T.apply_dense(X)
        return np.asarray(self.potential(X), dtype=float)


# -- operations ------------------------------------------------------------


def evaluate_f(f: LocalMap, x: HilbertVector) -> HilbertVector:
    d = max(x.support_max, f.slice_dim)
    X = x.to_dense(d)[None, :]
    if not f.contains(X, closed=True)[0]:
        raise OutOfDomain(f"{x!r} is outside the closed domain")
    return HilbertVector.from_dense(f.f_dense(X)[0])


def galerkin(f: LocalMap, n: int, gap: float | None = None) -> FiniteMap:
    """f_n(x) = x - P_n F(x) on U_n, as a FiniteMap on V_n."""
    if n < f.slice_dim:
        raise DimensionTooSmall(f"n = {n} is below the slice dimension {f.slice_dim}")

    def fn(X, f=f, n=n):
        X = fit(X, n)
        return X - fit(f.compact_dense(X), n)

    jac = None
    if f.F.jacobian is not None and f.rotation is None:
        def jac(X, f=f, n=n):
            X = fit(X, n)
            J = f.F.jacobian(X)
            Jn = np.zeros((len(X), n, n))
            r, c = min(J.shape[1], n), min(J.shape[2], n)
            Jn[:, :r, :c] = J[:, :r, :c]
            return np.eye(n)[None] - Jn

    return FiniteMap(n, fn, f.domain, jacobian=jac, gap=gap, frame=f.rotation, label=f"{f.label}_{n}")


def rotate(f: LocalMap, Q: BlockRotation) -> LocalMap:
    """x -> Q f(Q^T x) on Q(domain)."""
    if f.rotation is not None:
        d = max(Q.dim, f.rotation.dim)
        M = np.eye(d)
        M[: Q.dim, : Q.dim] = Q.matrix
        N = np.eye(d)
        N[: f.rotation.dim, : f.rotation.dim] = f.rotation.matrix
        Q = BlockRotation(d, M @ N)
    return replace(f, rotation=Q, audit=False, label=f"rot({f.label})")


def suspend(f: LocalMap, n: int, check_gap: bool = True) -> LocalMap:
    """Sigma f_n(x) = x - P_n F(P_n x) on P_n^{-1}(U_n) cut by a tail ball."""
    if f.rotation is not None:
        raise ValueError("suspend works on base-frame maps")
    if n < f.domain.slice_dim:
        raise DimensionTooSmall(f"n = {n} is below the slice dimension {f.domain.slice_dim}")
    if check_gap:
        from .pipeline import estimate_gap

        cert = estimate_gap(f)
        margin = 2 * cert.epsilon - f.F.tail_bound(f.bounding_radius(), n)
        if not margin > 0:
            raise GapFailure(f"f_{n} has no certified boundary gap (2 eps - tau = {margin:.3g})")
    F = f.F
    tb = F.tail_bound

    def func(X, F=F, n=n):
        return fit(F(fit(X, n)), n)

    coupling = F.tail_coupling if F.tail_coupling is not None and F.tail_coupling[0] <= n else (n, 0.0)
    jac = None
    if F.jacobian is not None:
        def jac(X, F=F, n=n):
            J = F.jacobian(fit(X, n))
            out = np.zeros((len(X), n, X.shape[1]))
            r, c = min(J.shape[1], n), min(J.shape[2], n, X.shape[1])
            out[:, :r, :c] = J[:, :r, :c]
            return out

    S = CompactMapSpec(
        func,
        lambda R, m, tb=tb, n=n: 0.0 if m >= n else tb(R, m),
        F.lipschitz,
        output_dim_cap=n,
        tail_coupling=coupling,
        jacobian=jac,
        label=f"susp{n}({F.label})",
    )
    region = f.domain.suspended(n)
    label = f"Sigma_{n}({f.label})"
    if isinstance(f, GradientLocalMap):
        phi = f.potential

        def pot(X, phi=phi, n=n):
            X = np.atleast_2d(X)
            return phi(fit(X, n)) + 0.5 * np.sum(X[:, n:] ** 2, axis=1)

        return GradientLocalMap(S, region, f.ambient, None, label, False, potential=pot)
    return LocalMap(S, region, f.ambient, None, label, False)


# -- otopies -----------------------------------------------------------------


@dataclass(frozen=True)
class Otopy:
    """h(t, x) = x - F(t, x), t in [0, 1], on piecewise-constant-in-t regions.

    ``pieces`` is a tuple of (t0, t1, Region) covering [0, 1].  ``affine``
    marks families that are affine in t (straight lines), for which the
    boundary certificate is exact in t.
    """

    func: Callable[[float, np.ndarray], np.ndarray]
    tail_bound: TailBound
    lipschitz_x: float
    lipschitz_t: float
    pieces: tuple
    tail_coupling: Optional[tuple[int, float]] = None
    output_dim_cap: Optional[int] = None
    affine: bool = False
    label: str = ""

    def compact(self, t: float) -> CompactMapSpec:
        return CompactMapSpec(
            lambda X, t=t: self.func(t, X),
            self.tail_bound,
            self.lipschitz_x,
            self.output_dim_cap,
            self.tail_coupling,
            label=f"{self.label}@{t:g}",
        )

    def region_at(self, t: float) -> Region:
        for t0, t1, reg in self.pieces:
            if t0 <= t <= t1:
                return reg
        raise ValueError(f"t = {t} not covered by the otopy pieces")

    def h_dense(self, t: float, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        FX = np.asarray(self.func(t, X), dtype=float)
        d = max(X.shape[1], FX.shape[1])
        return fit(X, d) - fit(FX, d)

    def at(self, t: float) -> LocalMap:
        return LocalMap(self.compact(t), self.region_at(t), label=f"{self.label}@{t:g}", audit=False)


@dataclass(frozen=True)
class GradientOtopy(Otopy):
    """Otopy with h(t, .) = grad_x potential(t, .)."""

    potential: Optional[Callable[[float, np.ndarray], np.ndarray]] = None

    def at(self, t: float) -> GradientLocalMap:
        return GradientLocalMap(
            self.compact(t), self.region_at(t), label=f"{self.label}@{t:g}", audit=False,
            potential=lambda X, t=t: self.potential(t, X),
        )


def _same_region(f: LocalMap, g: LocalMap) -> bool:
    return f.domain == g.domain and f.rotation is None and g.rotation is None


def straight_line_homotopy(f: LocalMap, g: LocalMap, lipschitz_t: float | None = None) -> Otopy:
    """h(t, x) = (1 - t) f(x) + t g(x) on the shared region."""
    if not _same_region(f, g):
        raise RegionMismatch("straight-line homotopy needs maps on the same region")
    Ff, Fg = f.F, g.F

    def func(t, X):
        A, B = Ff(X), Fg(X)
        d = max(A.shape[1], B.shape[1])
        return (1 - t) * fit(A, d) + t * fit(B, d)

    def tail(R, n):
        return max(Ff.tail_bound(R, n), Fg.tail_bound(R, n))

    coupling = None
    if Ff.tail_coupling and Fg.tail_coupling:
        coupling = (max(Ff.tail_coupling[0], Fg.tail_coupling[0]), max(Ff.tail_coupling[1], Fg.tail_coupling[1]))
    cap = None
    if Ff.output_dim_cap and Fg.output_dim_cap:
        cap = max(Ff.output_dim_cap, Fg.output_dim_cap)
    if lipschitz_t is None:
        lipschitz_t = float("inf")  # unused: affine families are certified exactly in t
    kw = dict(
        func=func,
        tail_bound=tail,
        lipschitz_x=max(Ff.lipschitz, Fg.lipschitz),
        lipschitz_t=lipschitz_t,
        pieces=((0.0, 1.0, f.domain),),
        tail_coupling=coupling,
        output_dim_cap=cap,
        affine=True,
        label=f"line({f.label}->{g.label})",
    )
    if isinstance(f, GradientLocalMap) and isinstance(g, GradientLocalMap):
        pf, pg = f.potential, g.potential
        return GradientOtopy(**kw, potential=lambda t, X: (1 - t) * pf(X) + t * pg(X))
    return Otopy(**kw)


# -- audits --------------------------------------------------------------------


def _pairs_within_shapes(region: Region, rng, m: int, n: int):
    X = region.random_points(n, m, rng)
    scale = 0.05 * region.bounding_radius()
    D = rng.standard_normal(X.shape)
    D *= (scale * rng.random(m) / np.linalg.norm(D, axis=1))[:, None]
    Y = X + D
    same = np.zeros(m, dtype=bool)
    for s in region.shapes:
        same |= s.contains(X[:, : region.slice_dim]) & s.contains(Y[:, : region.slice_dim])
    same &= region.contains(Y)
    return X[same], Y[same]


def audit_compact(F: CompactMapSpec, region: Region, samples: int = 48, seed: int = 12345):
    """Sampled checks of the tail modulus and the Lipschitz modulus; raises AuditFailure."""
    rng = np.random.default_rng(seed)
    R = region.bounding_radius()
    taus = [F.tail_bound(R, n) for n in range(1, 65)]
    if any(b > a * (1 + 1e-12) + 1e-15 for a, b in zip(taus, taus[1:])):
        raise AuditFailure(f"{F.label}: tail bound is not nonincreasing in n")
    far = F.tail_bound(R, 1024)
    if not (far == 0 or far <= 0.5 * F.tail_bound(R, 32)):
        raise AuditFailure(f"{F.label}: tail bound does not decay")
    if F.output_dim_cap is not None and F.tail_bound(R, F.output_dim_cap) != 0:
        raise AuditFailure(f"{F.label}: finite-rank map with nonzero tail bound at its cap")
    n = region.slice_dim + 3
    X = region.random_points(n, samples, rng)
    FX = F(X)
    norms = np.linalg.norm(X, axis=1)
    for m in range(1, FX.shape[1] + 1):
        tail = np.linalg.norm(FX[:, m:], axis=1)
        bound = np.array([F.tail_bound(r, m) for r in norms])
        if np.any(tail > bound * (1 + 1e-9) + 1e-12):
            raise AuditFailure(f"{F.label}: |F - P_{m}F| exceeds tail_bound")
    A, B = _pairs_within_shapes(region, rng, samples, n)
    if len(A):
        num = np.linalg.norm(F(A) - F(B), axis=1)
        den = np.linalg.norm(A - B, axis=1)
        if np.any(num > F.lipschitz * den * (1 + 1e-6) + 1e-12):
            raise AuditFailure(f"{F.label}: Lipschitz modulus {F.lipschitz} violated")


def fd_gradient(potential, X, h=FD_STEP):
    """Central differences of a batched potential in every coordinate of X."""
    m, d = X.shape
    G = np.empty((m, d))
    for j in range(d):
        E = np.zeros(d)
        E[j] = h
        G[:, j] = (potential(X + E) - potential(X - E)) / (2 * h)
    return G


def gradient_audit(f: GradientLocalMap, samples: int = 100, seed: int = 0, h: float = FD_STEP, tol: float = FD_TOL) -> float:
    """Max deviation between the finite-difference gradient of the potential and f."""
    rng = np.random.default_rng(seed)
    n = f.slice_dim + 3
    X = f.random_points(n, samples, rng)
    G = fd_gradient(f.potential_dense, X, h)
    err = float(np.max(np.abs(G - fit(f.f_dense(X), X.shape[1]))))
    if not err <= tol:
        raise AuditFailure(f"{f.label}: gradient mismatch {err:.3g} > {tol}")
    return err
