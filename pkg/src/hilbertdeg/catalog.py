"""Ready-made local maps with known degrees.

Planar blocks live in span{e_1, e_2} on unit discs.  A block of kind 0 is
the bowl f(z) = z - c (degree +1); kind k >= 1 is f(z) = conj((z - c)^k),
the gradient of Re((z - c)^(k+1))/(k+1), of degree -k.  Every map here is
the identity on the coordinates beyond the slice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .expr import PotentialExpr
from .hilbert import fit
from .maps import CompactMapSpec, GradientLocalMap, LocalMap, fd_gradient
from .regions import Annulus, Ball, Box, Region

BLOCK_RADIUS = 1.0
BLOCK_SPACING = 4.0  # disc gap = 2 radii, centres 4 radii apart


# -- planar blocks -------------------------------------------------------------


def _conj_power(W, k):
    z = W[:, 0] + 1j * W[:, 1]
    v = np.conj(z**k)
    return np.column_stack([v.real, v.imag])


def _block_potential(W, k):
    if k == 0:
        return 0.5 * np.sum(W**2, axis=1)
    z = W[:, 0] + 1j * W[:, 1]
    return np.real(z ** (k + 1)) / (k + 1)


def _block_field(W, k):
    return W.copy() if k == 0 else _conj_power(W, k)


def _nearest(Z, centers):
    d = np.linalg.norm(Z[:, None, :] - centers[None, :, :], axis=2)
    return np.argmin(d, axis=1)


def gradient_blocks(blocks, tail_radius: float = 1.0, label: str = "") -> GradientLocalMap:
    """Disjoint union of planar blocks [(center, kind), ...] on unit discs."""
    centers = np.array([c for c, _ in blocks], dtype=float).reshape(-1, 2)
    kinds = [int(k) for _, k in blocks]
    region = Region(2, tuple(Ball(tuple(c), BLOCK_RADIUS) for c in centers), tail_radius)

    def field_of(Z):
        idx = _nearest(Z, centers)
        out = np.empty_like(Z)
        for b, k in enumerate(kinds):
            sel = idx == b
            if sel.any():
                out[sel] = _block_field(Z[sel] - centers[b], k)
        return out

    def func(X):
        Z = fit(X, 2)
        return Z - field_of(Z)

    def potential(X):
        X = np.atleast_2d(X)
        Z = fit(X, 2)
        idx = _nearest(Z, centers)
        out = np.empty(len(X))
        for b, k in enumerate(kinds):
            sel = idx == b
            if sel.any():
                out[sel] = _block_potential(Z[sel] - centers[b], k)
        return out + 0.5 * np.sum(X[:, 2:] ** 2, axis=1)

    # |F| <= |c| + |w| + |w|^k <= |c| + 2 on a unit disc
    sup = float(np.max(np.linalg.norm(centers, axis=1))) + 2.0
    lip = max((0.0 if k == 0 else 1.0 + k) for k in kinds)
    F = CompactMapSpec(
        func,
        lambda R, n: 0.0 if n >= 2 else sup,
        lip,
        output_dim_cap=2,
        tail_coupling=(2, 0.0),
        label=label,
    )
    return GradientLocalMap(F, region, label=label, potential=potential)


def block_degree(kind: int) -> int:
    return 1 if kind == 0 else -kind


def _row(kinds):
    n = len(kinds)
    xs = BLOCK_SPACING * (np.arange(n) - (n - 1) / 2)
    return [((float(x), 0.0), k) for x, k in zip(xs, kinds)]


def standard_gradient_map(m: int, tail_radius: float = 1.0) -> GradientLocalMap:
    """Gradient local map with Deg = m.

    m > 0: m bowls; m < 0: a single conj((z)^|m|) disc; m = 0: a bowl
    next to a saddle.
    """
    m = int(m)
    if m > 0:
        kinds = [0] * m
    elif m < 0:
        kinds = [-m]
    else:
        kinds = [0, 1]
    return gradient_blocks(_row(kinds), tail_radius, label=f"standard_gradient_map({m})")


# -- the annulus pair ---------------------------------------------------------------


def annulus_example(i: int, tail_radius: float = 1.0) -> GradientLocalMap:
    """phi_i(z) = (|z|-1)^2 outside the unit circle, (1-2i)(|z|-1)^2 inside,
    on 1/2 < |z| < 3/2, times the identity on the remaining coordinates."""
    if i not in (0, 1):
        raise ValueError("annulus example index must be 0 or 1")
    sign_in = 1.0 - 2.0 * i

    def grad_phi(Z):
        rho = np.linalg.norm(Z, axis=1)
        safe = np.where(rho > 0, rho, 1.0)
        s = np.where(rho >= 1.0, 1.0, sign_in)
        return (2.0 * s * (rho - 1.0) / safe)[:, None] * Z

    def func(X):
        Z = fit(X, 2)
        return Z - grad_phi(Z)

    def potential(X):
        X = np.atleast_2d(X)
        rho = np.linalg.norm(fit(X, 2), axis=1)
        s = np.where(rho >= 1.0, 1.0, sign_in)
        return s * (rho - 1.0) ** 2 + 0.5 * np.sum(X[:, 2:] ** 2, axis=1)

    region = Region(2, (Annulus((0.0, 0.0), 0.5, 1.5),), tail_radius)
    # F_0 = zhat (2 - rho), F_1 = zhat (3 rho - 2) inside: both 3-Lipschitz, |F| <= 1.5
    F = CompactMapSpec(
        func, lambda R, n: 0.0 if n >= 2 else 1.5, 3.0,
        output_dim_cap=2, tail_coupling=(2, 0.0), label=f"annulus({i})",
    )
    return GradientLocalMap(F, region, label=f"annulus({i})", potential=potential)


# -- finite-rank cubic test maps --------------------------------------------------------


def finite_rank_test(dim: int = 2, flips: tuple = ()) -> GradientLocalMap:
    """f_i = s_i (x_i^3 - x_i/4) on (-1, 1)^dim, s_i = -1 for i in flips (1-based).

    3^dim zeros; Deg = prod s_i.
    """
    s = np.ones(dim)
    for i in flips:
        s[int(i) - 1] = -1.0

    def func(X):
        Z = fit(X, dim)
        return Z - s * (Z**3 - Z / 4)

    def potential(X):
        X = np.atleast_2d(X)
        Z = fit(X, dim)
        return np.sum(s * (Z**4 / 4 - Z**2 / 8), axis=1) + 0.5 * np.sum(X[:, dim:] ** 2, axis=1)

    def jac(X):
        Z = fit(X, dim)
        return np.eye(dim)[None] * (1 - s * (3 * Z**2 - 0.25))[:, None, :]

    region = Region(dim, (Box((-1.0,) * dim, (1.0,) * dim),), 1.0)
    lip = 3.75 if np.any(s < 0) else 1.75
    sup = math.sqrt(dim) * 1.75
    label = f"finite_rank_test({dim},{tuple(flips)})"
    F = CompactMapSpec(
        func, lambda R, n: 0.0 if n >= dim else sup, lip,
        output_dim_cap=dim, tail_coupling=(dim, 0.0), jacobian=jac, label=label,
    )
    return GradientLocalMap(F, region, label=label, potential=potential)


# -- finite rank plus a decaying tail --------------------------------------------------

TAIL_TERMS = 48


def random_tail_map(seed: int, kind: Optional[int] = None) -> LocalMap:
    """A planar block plus T_j(x) = 2^-j w_j sin(<a, x>) in coordinates j >= 3.

    |w_j| <= 1 and |a| <= 1 give |(I - P_n) T(x)| <= |x| 2^-n, so the tail
    modulus R 2^-n is exact up to a constant below one.
    """
    rng = np.random.default_rng(seed)
    if kind is None:
        kind = int(rng.integers(0, 4))
    c = tuple(0.2 * (2 * rng.random(2) - 1))
    a = rng.standard_normal(4)
    a *= rng.uniform(0.2, 1.0) / np.linalg.norm(a)
    w = rng.uniform(-1.0, 1.0, TAIL_TERMS)
    scale = 2.0 ** -np.arange(3, 3 + TAIL_TERMS)
    coef = w * scale
    cen = np.array(c)
    d_out = 2 + TAIL_TERMS

    def func(X):
        Z = fit(X, 2)
        base = Z - _block_field(Z - cen, kind)
        phase = np.sin(fit(X, 4) @ a)
        out = np.zeros((len(X), d_out))
        out[:, :2] = base
        out[:, 2:] = phase[:, None] * coef[None, :]
        return out

    sup = float(np.linalg.norm(cen)) + 2.0
    lip_base = 0.0 if kind == 0 else 1.0 + kind
    tail_norm = float(np.linalg.norm(coef))
    label = f"random_tail({seed})"
    F = CompactMapSpec(
        func,
        lambda R, n: R * 2.0**-n + (sup if n < 2 else 0.0),
        lip_base + np.linalg.norm(a) * tail_norm,
        tail_coupling=(2, float(np.linalg.norm(a[2:]) * tail_norm)),
        label=label,
    )
    region = Region(2, (Ball(c, BLOCK_RADIUS),), 1.0)
    return LocalMap(F, region, label=label)


def random_tail_expected(seed: int, kind: Optional[int] = None) -> int:
    rng = np.random.default_rng(seed)
    if kind is None:
        kind = int(rng.integers(0, 4))
    return block_degree(kind)


# -- user potentials ---------------------------------------------------------------


def potential_map(source: str, region: Region, lipschitz: float | None = None, seed: int = 0) -> GradientLocalMap:
    """Gradient local map f = (grad phi(z), y) from a potential over the slice.

    Without ``lipschitz`` the modulus of z - grad phi(z) is estimated from
    sampled Jacobian norms and inflated by 1.5; the estimate is not a proof.
    """
    expr = PotentialExpr.parse(source)
    k = region.slice_dim
    if expr.dim > k:
        raise ValueError(f"potential uses x{expr.dim} but the region slice has dimension {k}")

    def func(X):
        Z = fit(X, k)
        return Z - fit(expr.gradient(Z), k)

    def potential(X):
        X = np.atleast_2d(X)
        return expr(fit(X, k)) + 0.5 * np.sum(X[:, k:] ** 2, axis=1)

    if lipschitz is None:
        rng = np.random.default_rng(seed)
        P = region.random_points(k, 400, rng)
        J = np.stack([fd_gradient(lambda Y, j=j: func(Y)[:, j], P, 1e-6) for j in range(k)], axis=1)
        lipschitz = 1.5 * float(np.max(np.linalg.norm(J, ord=2, axis=(1, 2))))
    R = region.bounding_radius()
    P = region.random_points(k, 400, np.random.default_rng(seed + 1))
    sup = 2.0 * float(np.max(np.linalg.norm(func(P), axis=1))) + lipschitz * R
    F = CompactMapSpec(
        func, lambda R_, n: 0.0 if n >= k else sup, float(lipschitz),
        output_dim_cap=k, tail_coupling=(k, 0.0), label=f"potential({source})",
    )
    return GradientLocalMap(F, region, label=f"potential({source})", potential=potential)


# -- registry ---------------------------------------------------------------------


@dataclass(frozen=True)
class CatalogEntry:
    """One concrete map: a family name plus parameters."""

    name: str
    params: dict
    expected_degree: int
    build: Callable[[], LocalMap] = field(compare=False, repr=False)
    gradient: bool = True

    def describe(self) -> str:
        args = ", ".join(f"{k}={v!r}" for k, v in self.params.items())
        return f"{self.name}({args})  expected_degree={self.expected_degree}"


@dataclass(frozen=True)
class CatalogFamily:
    name: str
    signature: str
    note: str
    variants: tuple
    gradient: bool = True

    def describe(self) -> str:
        kind = "gradient" if self.gradient else "local"
        degs = ", ".join(f"{_short(v.params)} -> {v.expected_degree}" for v in self.variants)
        return f"{self.name}{self.signature}  [{kind}]  {self.note}\n    expected degrees: {degs}"


def _short(params):
    return ",".join(f"{k}={v}" for k, v in params.items())


def _families():
    std = tuple(CatalogEntry("standard_gradient_map", {"m": m}, m, lambda m=m: standard_gradient_map(m))
                for m in range(-3, 4))
    ann = tuple(CatalogEntry("annulus", {"i": i}, 0, lambda i=i: annulus_example(i)) for i in (0, 1))
    frt = tuple(
        CatalogEntry("finite_rank_test", {"dim": dim, "flips": list(flips)}, -1 if flips else 1,
                     lambda dim=dim, flips=flips: finite_rank_test(dim, flips))
        for dim in (1, 2, 3) for flips in ((), (1,))
    )
    rnd = tuple(
        CatalogEntry("random_tail", {"seed": seed}, random_tail_expected(seed),
                     lambda seed=seed: random_tail_map(seed), gradient=False)
        for seed in range(3)
    )
    return (
        CatalogFamily("standard_gradient_map", "(m, tail_radius=1)", "gradient blocks with degree sum m", std),
        CatalogFamily("annulus", "(i, tail_radius=1)", "f_i of the annulus pair, both of degree 0", ann),
        CatalogFamily("finite_rank_test", "(dim=2, flips=())", "identity minus a finite-rank map on a box", frt),
        CatalogFamily("random_tail", "(seed, kind=None)", "finite-rank part plus a decaying tail", rnd,
                      gradient=False),
    )


FAMILIES = _families()
CATALOG = tuple(v for fam in FAMILIES for v in fam.variants)


def list_catalog(filter: str = "") -> list[CatalogFamily]:
    """Catalog families whose name contains ``filter``."""
    return [f for f in FAMILIES if filter in f.name]


def catalog_maps(filter: str = "") -> list[CatalogEntry]:
    return [e for e in CATALOG if filter in e.name]


def build(name: str, **params) -> LocalMap:
    """Construct a catalog map by name."""
    if name == "standard_gradient_map":
        return standard_gradient_map(int(params.get("m", 1)), float(params.get("tail_radius", 1.0)))
    if name == "annulus":
        return annulus_example(int(params.get("i", 0)), float(params.get("tail_radius", 1.0)))
    if name == "finite_rank_test":
        return finite_rank_test(int(params.get("dim", 2)), tuple(params.get("flips", ())))
    if name == "random_tail":
        return random_tail_map(int(params.get("seed", 0)), params.get("kind"))
    raise KeyError(f"unknown catalog map {name!r}")


def expected_degree(name: str, **params) -> int:
    if name == "standard_gradient_map":
        return int(params.get("m", 1))
    if name == "annulus":
        return 0
    if name == "finite_rank_test":
        return -1 if len(params.get("flips", ())) % 2 else 1
    if name == "random_tail":
        return random_tail_expected(int(params.get("seed", 0)), params.get("kind"))
    raise KeyError(name)

