import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import ball_region, identity_map
from hilbertdeg.catalog import annulus_example, random_tail_map, standard_gradient_map
from hilbertdeg.errors import NoGap, PieceMismatch, Unbounded
from hilbertdeg.hilbert import fit
from hilbertdeg.maps import GradientOtopy, Otopy, gradient_audit, straight_line_homotopy, suspend, zero_tail
from hilbertdeg.otopy import (
    FiniteOtopy,
    approximate_by_suspension,
    audit_otopy,
    certify_otopy,
    chain_gradient_audit,
    constant_otopy,
    gradient_otopy_audit,
    identity_family,
    invariance_audit,
    rotation_family,
    suspend_finite_otopy,
)
from hilbertdeg.pipeline import compute_Deg, estimate_gap, select_N
from hilbertdeg.regions import Ball, Region


def moving_shift(affine):
    """h(t, x) = x - (2t, 0): the zero crosses the unit circle at t = 1/2."""
    def func(t, X):
        out = np.zeros((len(X), 2))
        out[:, 0] = 2 * t
        return out

    return Otopy(func, zero_tail(2, 2.0), 0.0, 2.0, ((0.0, 1.0, ball_region(2)),), (2, 0.0), 2, affine, "shift")


def test_constant_family_matches_gap():
    f = standard_gradient_map(-2)
    assert certify_otopy(constant_otopy(f)).epsilon == pytest.approx(estimate_gap(f).epsilon)
    a, b = invariance_audit(constant_otopy(f))
    assert a.value == b.value == -2


def test_line_to_suspension_certified():
    f = standard_gradient_map(-2)
    g = estimate_gap(f)
    N = select_N(f.F, g.epsilon, f.bounding_radius(), f.slice_dim)
    for n in (N, N + 2):
        line = straight_line_homotopy(f, suspend(f, n).restricted(f.domain))
        cert = certify_otopy(line)
        assert cert.sound and cert.epsilon > 0


@pytest.mark.parametrize("affine", [True, False])
def test_zero_through_boundary(affine):
    with pytest.raises(NoGap):
        certify_otopy(moving_shift(affine))


def test_pieces_must_cover():
    bad = Otopy(lambda t, X: np.zeros_like(X), zero_tail(2, 0.0), 0.0, 0.0,
                ((0.0, 0.4, ball_region(2)), (0.5, 1.0, ball_region(2))))
    with pytest.raises(PieceMismatch):
        certify_otopy(bad)
    with pytest.raises(PieceMismatch):
        certify_otopy(Otopy(lambda t, X: X, zero_tail(2, 0.0), 0.0, 0.0, ((0.0, 0.9, ball_region(2)),)))


def test_degree_three_line():
    f = standard_gradient_map(3)
    line = straight_line_homotopy(f, suspend(f, 3).restricted(f.domain))
    a, b = invariance_audit(line)
    assert (a.value, b.value) == (3, 3)


def test_annulus_line_not_certified():
    # the straight line vanishes on the ring 1/2 < |z| <= 1 at t = 1/2
    f0, f1 = annulus_example(0), annulus_example(1)
    h = straight_line_homotopy(f0, f1)
    Z = np.column_stack([np.linspace(0.5, 1.0, 11), np.zeros(11)])
    assert np.abs(h.h_dense(0.5, Z)).max() < 1e-15
    with pytest.raises(NoGap):
        certify_otopy(h)


def test_suspend_identity_family():
    h = suspend_finite_otopy(identity_family(2), bound=2.0)
    assert isinstance(h, GradientOtopy)
    a, b = invariance_audit(h)
    assert a.value == b.value == 1
    assert gradient_otopy_audit(h) <= 1e-4


@pytest.mark.parametrize("turns", [0.5, 1.0])
def test_suspend_rotation_family(turns):
    h = suspend_finite_otopy(rotation_family(2, turns), bound=2.0)
    audit = audit_otopy(h)
    assert audit.certificate.sound and audit.equal
    assert audit.start.value == 1


def test_suspend_escaping_family():
    big = FiniteOtopy(2, lambda t, X: (1 + 3 * t) * X, ball_region(2), 4.0, 3.0)
    with pytest.raises(Unbounded):
        suspend_finite_otopy(big, bound=2.0)


def test_suspended_endpoints_match_finite_degrees():
    def func(t, X):
        Y = X.copy()
        Y[:, 1] = -Y[:, 1]
        return Y

    k = FiniteOtopy(2, func, ball_region(2), 1.0, 0.0, affine=True, label="flip")
    a, b = invariance_audit(suspend_finite_otopy(k, bound=2.0))
    assert a.value == b.value == -1


def test_chain_of_identities():
    f = identity_map(2)
    chain = approximate_by_suspension(f)
    rng = np.random.default_rng(0)
    for link in chain.links:
        for g in (link.source, link.target):
            X = g.random_points(5, 20, rng)
            assert np.allclose(g.f_dense(X), X)


@settings(max_examples=8)
@given(st.integers(0, 1000))
def test_chain_for_tail_map(seed):
    f = random_tail_map(seed, kind=1)
    chain = approximate_by_suspension(f)
    assert chain.n >= chain.N
    assert chain.terminal.F.output_dim_cap == chain.n
    audit = audit_otopy(chain.links[1].otopy)
    assert audit.start.value == audit.end.value == -1
    assert compute_Deg(chain.terminal).value == -1


@pytest.mark.parametrize("m", [-2, 0, 3])
def test_chain_gradient_audit(m):
    chain = approximate_by_suspension(standard_gradient_map(m))
    assert chain_gradient_audit(chain) <= 1e-4
    assert compute_Deg(chain.terminal).value == m


def test_restriction_link_pieces():
    f = standard_gradient_map(2)
    chain = approximate_by_suspension(f)
    last = chain.links[-1].otopy
    assert last.region_at(0.25) == f.domain
    assert last.region_at(0.75) == chain.terminal.domain
    a, b = invariance_audit(last)
    assert a.value == b.value == 2
