import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import ball_region, flip_map, identity_map, slice_map
from hilbertdeg.catalog import random_tail_map, standard_gradient_map
from hilbertdeg.errors import AuditFailure, DimensionTooSmall, OutOfDomain, RegionMismatch
from hilbertdeg.hilbert import HilbertVector, fit
from hilbertdeg.maps import (
    CompactMapSpec,
    GradientLocalMap,
    LocalMap,
    evaluate_f,
    galerkin,
    gradient_audit,
    straight_line_homotopy,
    suspend,
    zero_tail,
)
from hilbertdeg.pipeline import compute_Deg
from hilbertdeg.regions import Ball, Region


def diagonal_map():
    """F(x)_i = x_i / 2^i, tail modulus R 2^-(n+1)."""
    def func(X):
        return X / 2.0 ** np.arange(1, X.shape[1] + 1)

    F = CompactMapSpec(func, lambda R, n: R * 2.0 ** -(n + 1), 0.5, label="diag")
    return LocalMap(F, ball_region(2, 2.0), label="diag")


def test_evaluate_identity():
    f = identity_map(2)
    x = HilbertVector((1, 2, 5), (0.1, 0.2, 0.3))
    assert evaluate_f(f, x) == x


def test_evaluate_forced_cancellation():
    f = slice_map(1, lambda Y: Y.copy(), 1.0, ball_region(1))
    assert evaluate_f(f, HilbertVector((1,), (0.5,))) == HilbertVector()


def test_evaluate_double_first_coordinate():
    f = slice_map(1, lambda Y: 2 * Y, 2.0, ball_region(2))
    out = evaluate_f(f, HilbertVector((1, 2), (0.3, 0.4)))
    assert np.allclose(out.to_dense(2), [-0.3, 0.4])


def test_evaluate_out_of_domain():
    with pytest.raises(OutOfDomain):
        evaluate_f(identity_map(2), HilbertVector((1,), (1.5,)))


def test_galerkin_examples():
    f = diagonal_map()
    f2 = galerkin(f, 2)
    assert np.allclose(f2(np.array([[1.0, 1.0]])), [[0.5, 0.75]])
    # constant F = c e_3 is killed by P_2
    c = np.array([0.0, 0.0, 0.7])
    g = LocalMap(CompactMapSpec(lambda X: np.tile(c, (len(X), 1)), zero_tail(3, 0.7), 0.0, 3, (2, 0.0)),
                 ball_region(2))
    X = np.random.default_rng(0).random((10, 2)) * 0.5
    assert np.allclose(galerkin(g, 2)(X), X)
    # finite rank into V_3: f_5 is f on U_5
    h = slice_map(3, lambda Y: 0.3 * np.roll(Y, 1, axis=1), 0.3, ball_region(3))
    X5 = fit(h.random_points(5, 20, np.random.default_rng(1)), 5)
    assert np.allclose(galerkin(h, 5)(X5), h.f_dense(X5))
    with pytest.raises(DimensionTooSmall):
        galerkin(h, 2)


def test_suspend_identity_and_structure():
    f = identity_map(2)
    s = suspend(f, 4)
    X = s.random_points(6, 20, np.random.default_rng(0))
    assert np.allclose(s.f_dense(X), X)
    g = standard_gradient_map(-2)
    sg = suspend(g, 3)
    assert sg.F.output_dim_cap == 3
    assert all(sg.tail_bound(5.0, m) == 0 for m in range(3, 10))


def test_suspend_degree_matches_galerkin():
    f = standard_gradient_map(-2)
    assert compute_Deg(suspend(f, 2)).value == -2


@pytest.mark.parametrize("m", [-2, 0, 3])
def test_suspended_potential_gradient(m):
    s = suspend(standard_gradient_map(m), 3)
    assert isinstance(s, GradientLocalMap)
    assert gradient_audit(s, samples=100) <= 1e-4


def test_straight_line_endpoints():
    f, g = flip_map(), identity_map(2)
    g = g.restricted(f.domain)
    h = straight_line_homotopy(f, g)
    X = f.random_points(3, 30, np.random.default_rng(2))
    assert np.array_equal(h.h_dense(0.0, X), f.f_dense(X))
    assert np.array_equal(h.h_dense(1.0, X), g.f_dense(X))
    c = straight_line_homotopy(f, f)
    assert np.allclose(c.h_dense(0.3, X), c.h_dense(0.9, X))
    with pytest.raises(RegionMismatch):
        straight_line_homotopy(f, identity_map(2, radius=2.0))


def test_audit_rejects_wrong_lipschitz():
    with pytest.raises(AuditFailure):
        slice_map(2, lambda Y: 3 * Y, 1.0, ball_region(2))


def test_audit_rejects_wrong_tail():
    F = CompactMapSpec(lambda X: 0.5 * X, lambda R, n: R * 2.0 ** -(n + 3), 0.5)
    with pytest.raises(AuditFailure):
        LocalMap(F, ball_region(2))
    G = CompactMapSpec(lambda X: 0.5 * X, lambda R, n: 1.0, 0.5)
    with pytest.raises(AuditFailure):
        LocalMap(G, ball_region(2))


def test_gradient_audit_catches_bad_potential():
    F = CompactMapSpec(lambda X: np.zeros_like(X), zero_tail(2, 0.0), 0.0, 2, (2, 0.0))
    bad = GradientLocalMap(F, ball_region(2), potential=lambda X: np.sum(np.atleast_2d(X) ** 2, axis=1))
    with pytest.raises(AuditFailure):
        gradient_audit(bad)


@given(st.integers(0, 50), st.integers(1, 12), st.integers(0, 10_000))
def test_tail_bound_holds_on_random_maps(seed, n, draw):
    f = random_tail_map(seed)
    rng = np.random.default_rng(draw)
    X = f.random_points(f.slice_dim + 4, 30, rng)
    FX = f.F(X)
    tail = np.linalg.norm(FX[:, n:], axis=1)
    for r, t in zip(np.linalg.norm(X, axis=1), tail):
        assert t <= f.F.tail_bound(r, n) + 1e-12


@given(st.integers(0, 50), st.integers(0, 10_000))
def test_tail_bound_nonincreasing_and_decaying(seed, r):
    F = random_tail_map(seed).F
    R = 0.1 + r / 1000
    taus = [F.tail_bound(R, n) for n in range(1, 80)]
    assert all(a >= b for a, b in zip(taus, taus[1:]))
    assert taus[-1] < 1e-20


def test_region_of_suspension():
    f = standard_gradient_map(1)
    s = suspend(f, 4)
    assert s.domain == Region(2, (Ball((0.0, 0.0), 1.0),), 1.0, ((4, 1.0),))
