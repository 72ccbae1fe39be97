"""Deg f = deg(f_N, U_N): boundary gap, choice of N, window audit, independence checks."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .brouwer import DEFAULT_ENGINE, DegreeCertificate, EngineConfig, brouwer_degree, derive_seed, solve_all
from .errors import EnclosureFailure, NoGap, ShapeNotRotatable, StabilizationFailure, TailBoundStalls
from .hilbert import BlockRotation
from .maps import LocalMap, galerkin, rotate
from .regions import Region

N_CAP = 64
MAX_HALVINGS = 10
MAX_SAMPLES = 400_000
TIGHT = 0.1  # preferred padding as a fraction of the sampled minimum


@dataclass
class GapCertificate:
    """|f| >= 2 epsilon on the boundary.

    The slice face is sampled at ``mesh``; each sample loses (1 + L) mesh
    for the gaps between samples and ``coupling * tail_radius`` for the
    tail coordinates.  Tail faces are bounded analytically by r - tau.
    """

    epsilon: float
    mesh: float
    boundary_min_sampled: float
    lipschitz_used: float
    sound: bool
    coupling_used: float = 0.0
    tail_face_min: float = math.inf
    samples: int = 0
    t_grid: Optional[list] = None

    @property
    def slice_bound(self) -> float:
        return self.boundary_min_sampled - self.padding

    @property
    def padding(self) -> float:
        return (1 + self.lipschitz_used) * self.mesh

    def to_dict(self):
        d = {
            "epsilon": self.epsilon,
            "mesh": self.mesh,
            "boundary_min_sampled": self.boundary_min_sampled,
            "lipschitz_used": self.lipschitz_used,
            "coupling_used": self.coupling_used,
            "tail_face_min": None if math.isinf(self.tail_face_min) else self.tail_face_min,
            "samples": self.samples,
            "sound": self.sound,
        }
        if self.t_grid is not None:
            d["t_grid"] = self.t_grid
        return d


def slice_face_samples(region: Region, h: float) -> np.ndarray:
    """Boundary samples of the slice union, minus those deep inside another shape.

    A sample more than h inside another open shape has no point of the
    union's boundary within h, so dropping it keeps the covering property.
    """
    chunks = []
    for i, s in enumerate(region.shapes):
        S = s.boundary_samples(h)
        keep = np.ones(len(S), dtype=bool)
        for j, o in enumerate(region.shapes):
            if j != i:
                keep &= o.inner_distance(S) <= h
        chunks.append(S[keep])
    return np.vstack(chunks)


def tail_face_bound(region: Region, tail_bound, R: float) -> float:
    return min(r - tail_bound(R, start) for start, _, r in region.tail_faces())


def _base(f: LocalMap) -> LocalMap:
    return replace(f, rotation=None, audit=False) if f.rotation is not None else f


def estimate_gap(f: LocalMap, h0: float | None = None, max_halvings: int = MAX_HALVINGS) -> GapCertificate:
    """Certified epsilon with |f| >= 2 epsilon on the boundary of the domain.

    For rotated maps the certificate of the base map is returned: the
    rotation is an isometry carrying boundary to boundary.
    """
    f = _base(f)
    reg = f.domain
    k = reg.slice_dim
    F = f.F
    L = F.lipschitz
    Ly = F.coupling_for(k)
    R = reg.bounding_radius()
    tail_min = tail_face_bound(reg, F.tail_bound, R)
    tail_loss = Ly * reg.tail_radius_total()
    h = h0 if h0 is not None else 0.1 * min(_shape_scale(s) for s in reg.shapes)
    best = None
    for _ in range(max_halvings + 1):
        S = slice_face_samples(reg, h)
        bmin = float(np.linalg.norm(S - F(S)[:, :k], axis=1).min())
        count = len(S)
        if bmin > 0 and (1 + L) * h <= bmin / 3:
            best = (bmin, h, count)
            if (1 + L) * h <= TIGHT * bmin:
                break
        if len(S) * 2 ** max(k - 1, 1) > MAX_SAMPLES:
            break
        h /= 2
    settled = best is not None
    if settled:
        bmin, h, count = best
    # unsettled at the finest budgeted mesh means bmin < 3(1+L)h
    if not settled:
        raise NoGap(f"{f.label}: sampled boundary minimum {bmin:.3g} below 3(1+L)h = {3 * (1 + L) * h:.3g}")
    eps = 0.5 * min(bmin - (1 + L) * h - tail_loss, tail_min)
    if not eps > 0:
        raise NoGap(f"{f.label}: no positive gap (slice {bmin - (1 + L) * h - tail_loss:.3g}, tail faces {tail_min:.3g})")
    return GapCertificate(eps, h, bmin, L, True, Ly, tail_min, count)


def _shape_scale(s) -> float:
    lo, hi = s.bbox()
    return float(np.min(np.asarray(hi) - np.asarray(lo))) / 2


def select_N(F, epsilon: float, R: float, slice_dim: int, cap: int = N_CAP) -> int:
    """Smallest n >= slice_dim with tail_bound(R, n) < epsilon."""
    tail = F.tail_bound if hasattr(F, "tail_bound") else F
    for n in range(max(1, slice_dim), cap + 1):
        if tail(R, n) < epsilon:
            return n
    raise TailBoundStalls(f"tail bound stays >= {epsilon:.3g} up to n = {cap}")


@dataclass
class DegreeReport:
    epsilon: GapCertificate
    N: int
    window: list
    value: int
    certificates: dict
    seed: int = 0
    label: str = ""
    tail_bounds: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "label": self.label,
            "value": self.value,
            "N": self.N,
            "seed": self.seed,
            "gap": self.epsilon.to_dict(),
            "window": [{"n": n, "deg": d, "tail_bound": self.tail_bounds.get(n)} for n, d in self.window],
            "certificates": {str(n): c.to_dict() for n, c in sorted(self.certificates.items())},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def csv_rows(self):
        for n, d in self.window:
            c = self.certificates[n]
            yield [n, d, repr(self.epsilon.epsilon), repr(float(self.tail_bounds.get(n, 0.0))), c.method, c.seed]

    def to_csv(self, header=True) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if header:
            w.writerow(CSV_COLUMNS)
        w.writerows(self.csv_rows())
        return buf.getvalue()

    def summary(self) -> str:
        degs = ", ".join(f"n={n}: {d}" for n, d in self.window)
        return (
            f"{self.label or 'map'}: Deg = {self.value}  (epsilon = {self.epsilon.epsilon:.4g}, "
            f"N = {self.N}; {degs})"
        )


CSV_COLUMNS = ["n", "deg", "epsilon", "tail_bound", "method", "seed"]


def compute_Deg(
    f: LocalMap,
    window: int = 3,
    seed: int = 0,
    engine: EngineConfig = DEFAULT_ENGINE,
    gap: GapCertificate | None = None,
    cap: int = N_CAP,
    N: int | None = None,
) -> DegreeReport:
    """Deg f from the Galerkin degrees deg(f_n, U_n), n = N..N+window."""
    cert = gap or estimate_gap(f)
    R = f.bounding_radius()
    if N is None:
        N = select_N(f.tail_bound, cert.epsilon, R, f.slice_dim, cap)
    degs, certs, taus = [], {}, {}
    for n in range(N, N + window + 1):
        fm = galerkin(f, n, gap=cert.epsilon)
        c = brouwer_degree(fm, cert.epsilon, seed=derive_seed(seed, n), cfg=engine)
        degs.append((n, c.value))
        certs[n] = c
        taus[n] = float(f.tail_bound(R, n))
    values = {d for _, d in degs}
    if len(values) != 1:
        raise StabilizationFailure(f"{f.label}: window degrees disagree: {degs}")
    return DegreeReport(cert, N, degs, degs[0][1], certs, seed, f.label, taus)


def galerkin_degree(f: LocalMap, n: int, seed: int = 0, engine: EngineConfig = DEFAULT_ENGINE, gap=None) -> DegreeCertificate:
    cert = gap or estimate_gap(f)
    return brouwer_degree(galerkin(f, n, gap=cert.epsilon), cert.epsilon, seed=derive_seed(seed, n), cfg=engine)


# -- independence checks ----------------------------------------------------------


def zero_sweep(f: LocalMap, n: int, seed: int = 0, engine: EngineConfig = DEFAULT_ENGINE) -> np.ndarray:
    """Zeros of f_n found by multi-start Newton for y = 0."""
    fm = galerkin(f, n)
    rng = np.random.default_rng(derive_seed(seed, n, 7))
    starts = fm.seeds(2 * engine.density, rng, 2 * engine.min_per_shape)
    X, _ = solve_all(fm, np.zeros(n), starts, engine)
    return X


def region_reports(
    f: LocalMap, other: Region, window: int = 3, seed: int = 0, engine: EngineConfig = DEFAULT_ENGINE
) -> tuple[DegreeReport, DegreeReport]:
    """Deg f on its own domain and on ``other``; every zero must lie in both regions."""
    g = f.restricted(other)
    base = compute_Deg(f, window, seed, engine)
    for n, _ in base.window:
        for h in (f, g):
            Z = zero_sweep(h, n, seed, engine)
            if len(Z) == 0:
                continue
            inside = f.contains(Z, closed=False) & g.contains(Z, closed=False)
            if not inside.all():
                bad = Z[~inside][0]
                raise EnclosureFailure(
                    f"zero of f_{n} at {np.round(bad, 6).tolist()} is not enclosed by both regions"
                )
    return base, compute_Deg(g, window, seed, engine)


def check_region_independence(
    f: LocalMap, other: Region, window: int = 3, seed: int = 0, engine: EngineConfig = DEFAULT_ENGINE
) -> bool:
    """Recompute Deg on ``other`` and compare."""
    a, b = region_reports(f, other, window, seed, engine)
    return a.value == b.value


def check_basis_independence(
    f: LocalMap, Q: BlockRotation, window: int = 3, seed: int = 0, engine: EngineConfig = DEFAULT_ENGINE
) -> bool:
    """Deg of x -> Q f(Q^T x) on Q(U) equals Deg f."""
    if not f.domain.ball_only:
        raise ShapeNotRotatable("only ball-union regions are closed under rotations")
    a = compute_Deg(f, window, seed, engine)
    b = compute_Deg(rotate(f, Q), window, seed, engine)
    return a.value == b.value
