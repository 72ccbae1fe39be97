"""Otopies h(t, x) = x - F(t, x): boundary certification, invariance audits,
suspension of finite-dimensional families, and the chain

    f|_U  ~  Sigma f_n|_U  ~  Sigma f_n on P_n^{-1}(U_n) (cut by a tail ball)

whose middle link is a certified straight line and whose last link is a
restriction (both domains contain the zero set of Sigma f_n, which lies in U_n).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .brouwer import DEFAULT_ENGINE, EngineConfig
from .errors import AuditFailure, GapFailure, InvarianceFailure, NoGap, PieceMismatch, Unbounded
from .hilbert import fit
from .maps import (
    GradientLocalMap,
    GradientOtopy,
    LocalMap,
    Otopy,
    fd_gradient,
    gradient_audit,
    straight_line_homotopy,
    suspend,
)
from .pipeline import (
    MAX_HALVINGS,
    MAX_SAMPLES,
    N_CAP,
    TIGHT,
    DegreeReport,
    GapCertificate,
    _shape_scale,
    compute_Deg,
    estimate_gap,
    select_N,
    slice_face_samples,
    tail_face_bound,
)
from .regions import Ball, Region


def _check_pieces(h: Otopy):
    pieces = sorted(h.pieces, key=lambda p: p[0])
    if not pieces or pieces[0][0] != 0.0 or pieces[-1][1] != 1.0:
        raise PieceMismatch("otopy pieces must start at t = 0 and end at t = 1")
    for (a0, a1, _), (b0, b1, _) in zip(pieces, pieces[1:]):
        if a1 != b0:
            raise PieceMismatch(f"gap or overlap between pieces at t = {a1} / {b0}")
    for t0, t1, _ in pieces:
        if not t0 < t1:
            raise PieceMismatch(f"empty piece [{t0}, {t1}]")
    return pieces


def _segment_min(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """min over s in [0, 1] of |(1 - s) A + s B|, row by row."""
    D = B - A
    dd = np.einsum("ij,ij->i", D, D)
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.clip(np.where(dd > 0, -np.einsum("ij,ij->i", A, D) / dd, 0.0), 0.0, 1.0)
    return np.linalg.norm(A + s[:, None] * D, axis=1)


def _piece_minimum(h: Otopy, t0, t1, reg: Region, hx: float, nt: int):
    """Sampled min of |P_k h(t, s, 0)| over the slice face and t in [t0, t1]."""
    k = reg.slice_dim
    S = slice_face_samples(reg, hx)

    def Pk(t):
        return S - fit(h.func(t, S), k)[:, :k]

    if h.affine:
        return float(_segment_min(Pk(t0), Pk(t1)).min()), len(S), [t0, t1]
    ts = np.linspace(t0, t1, nt + 1)
    m = min(float(np.linalg.norm(Pk(t), axis=1).min()) for t in ts)
    return m, len(S) * len(ts), ts.tolist()


def certify_otopy(h: Otopy, hx0: float | None = None, nt0: int = 8, max_halvings: int = MAX_HALVINGS) -> GapCertificate:
    """Certified epsilon with |h(t, x)| >= 2 epsilon on the t-fibred boundary.

    Straight-line families are treated exactly in t (the minimum of |h| over
    a segment is computed in closed form); other families are sampled on a
    t-grid of spacing ht and pay L_t ht on top of (1 + L) hx.
    """
    pieces = _check_pieces(h)
    L, Lt = h.lipschitz_x, h.lipschitz_t
    results = []
    for t0, t1, reg in pieces:
        k = reg.slice_dim
        Ly = float(h.tail_coupling[1]) if h.tail_coupling and h.tail_coupling[0] <= k else L
        R = reg.bounding_radius()
        tail_min = tail_face_bound(reg, h.tail_bound, R)
        tail_loss = Ly * reg.tail_radius_total()
        hx = hx0 if hx0 is not None else 0.1 * min(_shape_scale(s) for s in reg.shapes)
        nt = nt0
        best = None
        for _ in range(max_halvings + 1):
            bmin, count, tgrid = _piece_minimum(h, t0, t1, reg, hx, nt)
            ht = 0.0 if h.affine else (t1 - t0) / nt
            pad = (1 + L) * hx + (Lt * ht if ht else 0.0)
            if bmin > 0 and pad <= bmin / 3:
                best = (bmin, count, tgrid, hx, pad)
                if pad <= TIGHT * bmin:
                    break
            # refine whichever of space and time dominates the padding
            refine_t = bool(ht) and Lt * ht > (1 + L) * hx
            if count * (2 if refine_t else 2 ** max(k - 1, 1)) > MAX_SAMPLES:
                break
            if refine_t:
                nt *= 2
            else:
                hx /= 2
        if best is not None:
            bmin, count, tgrid, hx, pad = best
        else:
            raise NoGap(
                f"{h.label}: |h| sampled down to {bmin:.3g} on the boundary of piece [{t0}, {t1}] "
                f"(padding {pad:.3g})"
            )
        eps = 0.5 * min(bmin - pad - tail_loss, tail_min)
        if not eps > 0:
            raise NoGap(f"{h.label}: no positive gap on piece [{t0}, {t1}]")
        results.append((eps, hx, bmin, count, tgrid, Ly, tail_min))
    eps, hx, bmin, count, tgrid, Ly, tail_min = min(results, key=lambda r: r[0])
    grid = sorted({round(float(t), 12) for r in results for t in r[4]})
    return GapCertificate(eps, hx, bmin, L, True, Ly, tail_min, sum(r[3] for r in results), t_grid=grid)


def constant_otopy(f: LocalMap) -> Otopy:
    F = f.F
    kw = dict(
        func=lambda t, X: F(X), tail_bound=F.tail_bound, lipschitz_x=F.lipschitz, lipschitz_t=0.0,
        pieces=((0.0, 1.0, f.domain),), tail_coupling=F.tail_coupling,
        output_dim_cap=F.output_dim_cap, affine=True, label=f"const({f.label})",
    )
    if isinstance(f, GradientLocalMap):
        return GradientOtopy(**kw, potential=lambda t, X: f.potential(X))
    return Otopy(**kw)


@dataclass
class OtopyAudit:
    certificate: GapCertificate
    start: DegreeReport
    end: DegreeReport

    @property
    def equal(self) -> bool:
        return self.start.value == self.end.value

    def to_dict(self):
        return {
            "certificate": self.certificate.to_dict(),
            "t_grid": self.certificate.t_grid,
            "start": self.start.to_dict(),
            "end": self.end.to_dict(),
            "equal": self.equal,
        }


def invariance_audit(h: Otopy, seed: int = 0, window: int = 3, engine: EngineConfig = DEFAULT_ENGINE,
                     certificate: GapCertificate | None = None) -> tuple[DegreeReport, DegreeReport]:
    """Certify h, then compare Deg h_0 with Deg h_1."""
    cert = certificate or certify_otopy(h)
    a = compute_Deg(h.at(0.0), window, seed, engine)
    b = compute_Deg(h.at(1.0), window, seed, engine)
    if a.value != b.value:
        raise InvarianceFailure(f"{h.label}: Deg h_0 = {a.value} but Deg h_1 = {b.value} (certificate eps {cert.epsilon:.3g})")
    return a, b


def audit_otopy(h: Otopy, seed: int = 0, window: int = 3, engine: EngineConfig = DEFAULT_ENGINE) -> OtopyAudit:
    cert = certify_otopy(h)
    a, b = invariance_audit(h, seed, window, engine, cert)
    return OtopyAudit(cert, a, b)


def gradient_otopy_audit(h: GradientOtopy, samples: int = 100, seed: int = 0, step: float = 1e-5, tol: float = 1e-4) -> float:
    """x-gradient of the potential against h(t, x) at random (t, x)."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    ts = rng.random(samples)
    for t in ts:
        reg = h.region_at(float(t))
        n = reg.slice_dim + 3
        X = reg.random_points(n, 1, rng)
        G = fd_gradient(lambda Y: h.potential(float(t), Y), X, step)
        H = fit(h.h_dense(float(t), X), X.shape[1])
        worst = max(worst, float(np.max(np.abs(G - H))))
    if not worst <= tol:
        raise AuditFailure(f"{h.label}: gradient mismatch {worst:.3g} > {tol}")
    return worst


# -- finite-dimensional otopies and their suspension -------------------------------


@dataclass(frozen=True)
class FiniteOtopy:
    """k: I x Gamma -> V_n given on batches, Gamma a region in V_n (slice_dim = n)."""

    dim: int
    func: Callable[[float, np.ndarray], np.ndarray]
    region: Region
    lipschitz_x: float
    lipschitz_t: float
    potential: Optional[Callable[[float, np.ndarray], np.ndarray]] = None
    affine: bool = False
    label: str = ""


def suspend_finite_otopy(k: FiniteOtopy, bound: float, tail_radius: float = 1.0, samples: int = 2000,
                         seed: int = 0) -> Otopy:
    """h(t, (x, y)) = (k(t, x), y) on Gamma x (tail ball)."""
    n = k.dim
    if k.region.slice_dim != n:
        raise ValueError("finite otopy region must live in V_n")
    rng = np.random.default_rng(seed)
    ts = np.concatenate([[0.0, 1.0], rng.random(samples // 50)])
    X = k.region.random_points(n, samples, rng)
    B = k.region.boundary_samples(0.05 * min(_shape_scale(s) for s in k.region.shapes))
    top = max(float(np.max(np.linalg.norm(k.func(float(t), np.vstack([X, B])), axis=1))) for t in ts)
    if top > bound:
        raise Unbounded(f"{k.label}: |k| reaches {top:.3g} > {bound}")
    R = k.region.bounding_radius()
    sup = R + bound

    def func(t, Y):
        Z = fit(Y, n)
        return Z - fit(k.func(t, Z), n)

    region = Region(n, k.region.shapes, tail_radius)
    kw = dict(
        func=func, tail_bound=lambda R_, m: 0.0 if m >= n else sup, lipschitz_x=1.0 + k.lipschitz_x,
        lipschitz_t=k.lipschitz_t, pieces=((0.0, 1.0, region),), tail_coupling=(n, 0.0),
        output_dim_cap=n, affine=k.affine, label=f"susp({k.label})",
    )
    if k.potential is not None:
        psi = k.potential

        def pot(t, Y):
            Y = np.atleast_2d(Y)
            return psi(t, fit(Y, n)) + 0.5 * np.sum(Y[:, n:] ** 2, axis=1)

        return GradientOtopy(**kw, potential=pot)
    return Otopy(**kw)


def rotation_family(dim: int = 2, turns: float = 1.0, radius: float = 1.0) -> FiniteOtopy:
    """k(t, x) = Rot(2 pi turns t) x on the disc: identity at both ends for whole turns."""
    def func(t, X):
        c, s = math.cos(2 * math.pi * turns * t), math.sin(2 * math.pi * turns * t)
        Y = X.copy()
        Y[:, 0] = c * X[:, 0] - s * X[:, 1]
        Y[:, 1] = s * X[:, 0] + c * X[:, 1]
        return Y

    region = Region(dim, (Ball((0.0,) * dim, radius),), 1.0)
    return FiniteOtopy(dim, func, region, 1.0, 2 * math.pi * abs(turns) * radius, label=f"rotation({turns})")


def identity_family(dim: int = 2, radius: float = 1.0) -> FiniteOtopy:
    region = Region(dim, (Ball((0.0,) * dim, radius),), 1.0)
    return FiniteOtopy(
        dim, lambda t, X: X.copy(), region, 1.0, 0.0,
        potential=lambda t, X: 0.5 * np.sum(np.atleast_2d(X) ** 2, axis=1), affine=True, label="identity",
    )


# -- relation chain -------------------------------------------------------------------


@dataclass
class ChainLink:
    relation: str  # "restriction" or "straight_line"
    source: LocalMap
    target: LocalMap
    otopy: Optional[Otopy] = None
    certificate: Optional[GapCertificate] = None


@dataclass
class SuspensionChain:
    n: int
    N: int
    links: list = field(default_factory=list)
    terminal: Optional[LocalMap] = None

    @property
    def otopies(self):
        return [l.otopy for l in self.links if l.otopy is not None]


def approximate_by_suspension(f: LocalMap, n: int | None = None, n_max: int | None = None) -> SuspensionChain:
    """f|_U ~ Sigma f_n|_U ~ Sigma f_n on P_n^{-1}(U_n) cut by the tail ball.

    With ``n`` unset, the first n >= N whose straight line certifies is used.
    """
    if f.rotation is not None:
        raise ValueError("approximate_by_suspension works on base-frame maps")
    gap = estimate_gap(f)
    N = select_N(f.F, gap.epsilon, f.bounding_radius(), f.domain.slice_dim)
    candidates = [n] if n is not None else range(N, (n_max or min(N + 16, N_CAP)) + 1)
    last = None
    for m in candidates:
        if m < N:
            raise GapFailure(f"n = {m} is below N = {N}")
        sigma = suspend(f, m)
        on_U = sigma.restricted(f.domain)
        line = straight_line_homotopy(f, on_U)
        try:
            cert = certify_otopy(line)
        except NoGap as err:
            last = err
            continue
        links = [
            ChainLink("restriction", f, f),
            ChainLink("straight_line", f, on_U, line, cert),
            ChainLink("restriction", on_U, sigma, _restriction_otopy(on_U, sigma)),
        ]
        return SuspensionChain(m, N, links, sigma)
    raise GapFailure(f"{f.label}: straight line to the suspension not certified ({last})")


def _restriction_otopy(small: LocalMap, big: LocalMap) -> Otopy:
    """The same map on small over [0, 1/2] and on big over [1/2, 1].

    Zeros of a suspension lie in U_n, inside both domains, so this is the
    restriction relation written as a piecewise-constant family.
    """
    F = big.F
    kw = dict(
        func=lambda t, X: F(X), tail_bound=F.tail_bound, lipschitz_x=F.lipschitz, lipschitz_t=0.0,
        pieces=((0.0, 0.5, small.domain), (0.5, 1.0, big.domain)), tail_coupling=F.tail_coupling,
        output_dim_cap=F.output_dim_cap, affine=True, label=f"restrict({big.label})",
    )
    if isinstance(big, GradientLocalMap):
        return GradientOtopy(**kw, potential=lambda t, X: big.potential(X))
    return Otopy(**kw)


def chain_gradient_audit(chain: SuspensionChain, samples: int = 100, seed: int = 0) -> float:
    """Finite-difference audit of every map and otopy in a gradient chain."""
    worst = 0.0
    for link in chain.links:
        for g in (link.source, link.target):
            if isinstance(g, GradientLocalMap):
                worst = max(worst, gradient_audit(g, samples, seed))
        if isinstance(link.otopy, GradientOtopy):
            worst = max(worst, gradient_otopy_audit(link.otopy, samples, seed))
    return worst
