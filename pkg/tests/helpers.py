"""Small hand-built maps used across the tests."""

import numpy as np

from hilbertdeg.hilbert import fit
from hilbertdeg.maps import CompactMapSpec, GradientLocalMap, LocalMap, zero_tail
from hilbertdeg.regions import Ball, Box, Region


def ball_region(dim=2, radius=1.0, center=None, tail=1.0):
    center = (0.0,) * dim if center is None else center
    return Region(dim, (Ball(center, radius),), tail)


def slice_map(k, fk, lipschitz, region, bound=None, label="", potential=None):
    """F reading and writing only the first k coordinates: F(x) = fk(P_k x)."""
    R = region.bounding_radius()
    bound = bound if bound is not None else lipschitz * R + float(np.linalg.norm(fk(np.zeros((1, k)))))
    F = CompactMapSpec(
        func=lambda X: fk(fit(X, k)), tail_bound=zero_tail(k, bound), lipschitz=lipschitz,
        output_dim_cap=k, tail_coupling=(k, 0.0), label=label,
    )
    if potential is not None:
        return GradientLocalMap(F, region, label=label, potential=potential)
    return LocalMap(F, region, label=label)


def identity_map(dim=2, radius=1.0):
    """F = 0, so f is the identity."""
    return slice_map(
        dim, lambda Y: np.zeros_like(Y), 0.0, ball_region(dim, radius), bound=0.0, label="identity",
        potential=lambda X: 0.5 * np.sum(np.atleast_2d(X) ** 2, axis=1),
    )


def flip_map(radius=1.0):
    """f(x) = (x1, -x2), so F = (0, 2 x2)."""
    def fk(Y):
        out = np.zeros_like(Y)
        out[:, 1] = 2 * Y[:, 1]
        return out

    return slice_map(2, fk, 2.0, ball_region(2, radius), label="flip")


def boundary_zero_map():
    """f(x) = x - e1 on the unit disc: vanishes at the boundary point e1."""
    def fk(Y):
        out = np.zeros_like(Y)
        out[:, 0] = 1.0
        return out

    return LocalMap(
        CompactMapSpec(lambda X: fk(fit(X, 2)), zero_tail(2, 1.0), 0.0, 2, (2, 0.0)),
        ball_region(2), label="boundary_zero",
    )


def box_region(dim, half=1.0, tail=1.0):
    return Region(dim, (Box((-half,) * dim, (half,) * dim),), tail)
