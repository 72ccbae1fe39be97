"""Finite-support vectors in l2, coordinate projections and block rotations."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .errors import NotOrthogonal

ATOL = 1e-10
ORTHO_TOL = 1e-12


@dataclass(frozen=True)
class HilbertVector:
    """A point of l2 with finitely many nonzero coordinates.

    Indices are 1-based and strictly increasing; zero values are never
    stored, so two vectors are equal iff their coordinate tuples are.
    """

    indices: tuple[int, ...] = ()
    values: tuple[float, ...] = ()

    def __post_init__(self):
        if len(self.indices) != len(self.values):
            raise ValueError("indices and values differ in length")
        pairs = sorted(zip(self.indices, self.values))
        idx, vals = [], []
        for i, v in pairs:
            i = int(i)
            v = float(v)
            if i < 1:
                raise ValueError(f"index {i} is not positive")
            if idx and idx[-1] == i:
                raise ValueError(f"duplicate index {i}")
            if not math.isfinite(v):
                raise ValueError(f"non-finite value at index {i}")
            if v != 0.0:
                idx.append(i)
                vals.append(v)
        object.__setattr__(self, "indices", tuple(idx))
        object.__setattr__(self, "values", tuple(vals))

    @classmethod
    def from_dict(cls, coords: Mapping[int, float]) -> HilbertVector:
        return cls(tuple(coords), tuple(coords.values()))

    @classmethod
    def from_dense(cls, arr: Iterable[float]) -> HilbertVector:
        arr = np.asarray(arr, dtype=float).ravel()
        nz = np.flatnonzero(arr)
        return cls(tuple(int(i) + 1 for i in nz), tuple(arr[nz].tolist()))

    @classmethod
    def basis(cls, i: int) -> HilbertVector:
        return cls((i,), (1.0,))

    @property
    def support_max(self) -> int:
        return self.indices[-1] if self.indices else 0

    def as_dict(self) -> dict[int, float]:
        return dict(zip(self.indices, self.values))

    def to_dense(self, n: int | None = None) -> np.ndarray:
        """Coordinates 1..n as an array (default n = support_max).

        Coordinates beyond ``n`` are dropped, so this doubles as P_n.
        """
        if n is None:
            n = self.support_max
        out = np.zeros(n)
        for i, v in zip(self.indices, self.values):
            if i <= n:
                out[i - 1] = v
        return out

    def __getitem__(self, i: int) -> float:
        return self.as_dict().get(i, 0.0)

    def __add__(self, other: HilbertVector) -> HilbertVector:
        d = self.as_dict()
        for i, v in zip(other.indices, other.values):
            d[i] = d.get(i, 0.0) + v
        return HilbertVector.from_dict(d)

    def __neg__(self) -> HilbertVector:
        return HilbertVector(self.indices, tuple(-v for v in self.values))

    def __sub__(self, other: HilbertVector) -> HilbertVector:
        return self + (-other)

    def __mul__(self, c: float) -> HilbertVector:
        return HilbertVector(self.indices, tuple(c * v for v in self.values))

    __rmul__ = __mul__

    def dot(self, other: HilbertVector) -> float:
        b = other.as_dict()
        return math.fsum(v * b.get(i, 0.0) for i, v in zip(self.indices, self.values))

    def norm(self) -> float:
        return math.sqrt(math.fsum(v * v for v in self.values))

    def __repr__(self):
        body = ", ".join(f"{i}:{v:g}" for i, v in zip(self.indices, self.values))
        return f"HilbertVector({body})"


def project(x: HilbertVector, n: int) -> HilbertVector:
    """Orthogonal projection P_n onto span{e_1, ..., e_n}."""
    if n < 1:
        raise ValueError("projection dimension must be >= 1")
    keep = [(i, v) for i, v in zip(x.indices, x.values) if i <= n]
    return HilbertVector(tuple(i for i, _ in keep), tuple(v for _, v in keep))


def fit(X: np.ndarray, d: int) -> np.ndarray:
    """Pad with zero columns or truncate so that X has exactly d columns.

    Rows of X are points of l2 given by their leading coordinates, so
    truncation is the batched form of P_d.
    """
    X = np.asarray(X, dtype=float)
    m, k = X.shape
    if k == d:
        return X
    if k > d:
        return X[:, :d]
    out = np.zeros((m, d))
    out[:, :k] = X
    return out


@dataclass(frozen=True)
class BlockRotation:
    """Orthogonal map acting on span{e_1..e_dim} and as identity beyond."""

    dim: int
    matrix: np.ndarray

    def __post_init__(self):
        M = np.array(self.matrix, dtype=float)
        if M.shape != (self.dim, self.dim):
            raise NotOrthogonal(f"matrix shape {M.shape} does not match dim {self.dim}")
        err = np.max(np.abs(M.T @ M - np.eye(self.dim)))
        if err > ORTHO_TOL:
            raise NotOrthogonal(f"|Q^T Q - I| = {err:.3g} exceeds {ORTHO_TOL}")
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)

    @classmethod
    def identity(cls, dim: int) -> BlockRotation:
        return cls(dim, np.eye(dim))

    @classmethod
    def plane(cls, i: int, j: int, angle: float, dim: int | None = None) -> BlockRotation:
        """Rotation by ``angle`` in the (e_i, e_j) plane (1-based)."""
        dim = dim or max(i, j)
        M = np.eye(dim)
        c, s = math.cos(angle), math.sin(angle)
        # snap so quarter turns are exact permutations
        c = 0.0 if abs(c) < 1e-15 else c
        s = 0.0 if abs(s) < 1e-15 else s
        M[i - 1, i - 1] = c
        M[j - 1, j - 1] = c
        M[j - 1, i - 1] = s
        M[i - 1, j - 1] = -s
        return cls(dim, M)

    @classmethod
    def random(cls, dim: int, rng: np.random.Generator) -> BlockRotation:
        """Haar-random element of SO(dim)."""
        A = rng.standard_normal((dim, dim))
        Q, R = np.linalg.qr(A)
        Q = Q * np.sign(np.diag(R))
        if np.linalg.det(Q) < 0:
            Q[:, 0] = -Q[:, 0]
        # re-orthonormalize so the 1e-12 gate never trips on rounding
        Q, _ = np.linalg.qr(Q)
        if np.linalg.det(Q) < 0:
            Q[:, 0] = -Q[:, 0]
        return cls(dim, Q)

    @property
    def T(self) -> BlockRotation:
        return BlockRotation(self.dim, self.matrix.T.copy())

    def apply_dense(self, X: np.ndarray) -> np.ndarray:
        """Apply to rows of X (shape (m, d)); d is widened to at least dim."""
        X = np.asarray(X, dtype=float)
        d = max(X.shape[1], self.dim)
        Y = fit(X, d).copy()
        Y[:, : self.dim] = Y[:, : self.dim] @ self.matrix.T
        return Y


def apply_rotation(Q: BlockRotation, x: HilbertVector) -> HilbertVector:
    d = max(x.support_max, Q.dim)
    return HilbertVector.from_dense(Q.apply_dense(x.to_dense(d)[None, :])[0])
