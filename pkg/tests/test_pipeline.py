import csv
import io
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import ball_region, boundary_zero_map, identity_map, slice_map
from hilbertdeg.catalog import annulus_example, finite_rank_test, random_tail_map, standard_gradient_map
from hilbertdeg.errors import EnclosureFailure, NoGap, ShapeNotRotatable, StabilizationFailure, TailBoundStalls
from hilbertdeg.hilbert import BlockRotation, fit
from hilbertdeg.maps import CompactMapSpec, LocalMap, rotate, suspend
from hilbertdeg.pipeline import (
    CSV_COLUMNS,
    check_basis_independence,
    check_region_independence,
    compute_Deg,
    estimate_gap,
    select_N,
    slice_face_samples,
)
from hilbertdeg.regions import Annulus, Ball, Box, Region


def test_gap_identity():
    cert = estimate_gap(identity_map(2))
    assert cert.sound
    assert cert.boundary_min_sampled == pytest.approx(1.0)
    assert 0.45 <= cert.epsilon <= 0.5


def test_gap_annulus():
    cert = estimate_gap(annulus_example(0))
    assert cert.boundary_min_sampled == pytest.approx(1.0)
    assert 0.45 <= cert.epsilon <= 0.5


def test_gap_soundness_inequality():
    cert = estimate_gap(standard_gradient_map(-2))
    assert 2 * cert.epsilon <= cert.boundary_min_sampled - (1 + cert.lipschitz_used) * cert.mesh + 1e-15
    assert 2 * cert.epsilon <= cert.tail_face_min


def test_gap_boundary_zero():
    with pytest.raises(NoGap):
        estimate_gap(boundary_zero_map())


@settings(max_examples=20)
@given(st.integers(0, 10_000), st.sampled_from([-3, -1, 0, 2]))
def test_gap_is_a_lower_bound(seed, m):
    # random boundary points never beat the certificate
    f = standard_gradient_map(m)
    cert = estimate_gap(f)
    rng = np.random.default_rng(seed)
    th = rng.uniform(0, 2 * np.pi, 400)
    P = np.vstack([np.array(s.center) + np.column_stack([np.cos(th), np.sin(th)]) for s in f.domain.shapes])
    assert np.linalg.norm(f.f_dense(P), axis=1).min() >= 2 * cert.epsilon


def test_slice_samples_drop_interior_points():
    reg = Region(2, (Ball((0.0, 0.0), 1.0), Ball((1.0, 0.0), 1.0)), 1.0)
    S = slice_face_samples(reg, 0.05)
    assert np.all(reg.inner_distance(S) <= 0.05 + 1e-12)


def test_select_N_examples():
    finite = CompactMapSpec(lambda X: X, lambda R, n: 0.0 if n >= 3 else 1.0, 1.0, 3)
    assert select_N(finite, 0.01, 1.0, 2) == 3
    assert select_N(finite, 0.01, 1.0, 5) == 5
    assert select_N(lambda R, n: R / 2**n, 0.01, 1.0, 1) == 7
    assert select_N(lambda R, n: R / (n + 1), 0.1, 2.0, 1) == 20
    with pytest.raises(TailBoundStalls):
        select_N(lambda R, n: R / (n + 1), 1e-3, 1.0, 1)


def test_identity_degree():
    assert compute_Deg(identity_map(3)).value == 1


@pytest.mark.parametrize("m", range(-3, 4))
def test_standard_degrees(m):
    rep = compute_Deg(standard_gradient_map(m))
    assert rep.value == m
    assert len(rep.window) == 4 and {d for _, d in rep.window} == {m}


def test_annulus_window_constant():
    rep = compute_Deg(annulus_example(0), window=3)
    assert [d for _, d in rep.window] == [0, 0, 0, 0]


def test_empty_zero_set():
    f = slice_map(2, lambda Y: np.tile([3.0, 0.0], (len(Y), 1)), 0.0, ball_region(2))
    assert compute_Deg(f).value == 0


def test_stabilization_failure_detected():
    # a lying tail modulus: F pushes coordinate 3 out of the tail ball
    def func(X):
        out = np.zeros((len(X), 3))
        out[:, 2] = 2.0
        return out

    F = CompactMapSpec(func, lambda R, n: 0.0 if n >= 2 else 2.0, 0.0, 2, (2, 0.0))
    f = LocalMap(F, ball_region(2), audit=False)
    with pytest.raises(StabilizationFailure):
        compute_Deg(f, window=3)


@settings(max_examples=10)
@given(st.integers(0, 10_000))
def test_random_tail_stabilizes(seed):
    f = random_tail_map(seed)
    rep = compute_Deg(f, window=5, seed=seed)
    assert len({d for _, d in rep.window}) == 1


def test_report_serialization():
    rep = compute_Deg(standard_gradient_map(2), seed=5)
    doc = json.loads(rep.to_json())
    assert doc["value"] == 2 and doc["N"] == rep.N and doc["seed"] == 5
    rows = list(csv.reader(io.StringIO(rep.to_csv())))
    assert rows[0] == CSV_COLUMNS
    assert [int(r[0]) for r in rows[1:]] == [n for n, _ in rep.window]
    assert all(r[4] == "preimage_count" for r in rows[1:])
    again = compute_Deg(standard_gradient_map(2), seed=5)
    assert again.to_csv() == rep.to_csv() and again.to_json() == rep.to_json()


def test_region_shrink():
    f = standard_gradient_map(1)
    small = Region(2, (Ball((0.0, 0.0), 0.8),), 1.0)
    assert check_region_independence(f, small)


def test_region_expand():
    f = standard_gradient_map(-2)
    big = Region(2, (Ball((0.0, 0.0), 1.5),), 1.5)
    assert check_region_independence(f, big)


def test_annulus_thinned():
    f = annulus_example(0)
    thin = Region(2, (Annulus((0.0, 0.0), 0.8, 1.2),), 1.0)
    assert check_region_independence(f, thin)
    assert compute_Deg(f.restricted(thin)).value == 0


def test_excluding_a_zero():
    f = standard_gradient_map(3)
    two = Region(2, f.domain.shapes[:2], 1.0)
    with pytest.raises(EnclosureFailure):
        check_region_independence(f, two)


def test_basis_identity():
    assert check_basis_independence(standard_gradient_map(-1), BlockRotation.identity(2))


def test_basis_random_in_span4():
    f = standard_gradient_map(-1)
    Q = BlockRotation.random(4, np.random.default_rng(3))
    assert compute_Deg(rotate(f, Q)).value == -1


def test_basis_mixing_tail_dim6():
    f = standard_gradient_map(2)
    Q = BlockRotation.random(6, np.random.default_rng(8))
    rep = compute_Deg(rotate(f, Q))
    assert rep.value == 2 and rep.N >= 6
    assert check_basis_independence(f, Q)


def test_basis_rejects_boxes():
    with pytest.raises(ShapeNotRotatable):
        check_basis_independence(finite_rank_test(2), BlockRotation.identity(2))


@given(st.integers(0, 10_000))
def test_rotated_map_zeros_are_rotated(seed):
    f = standard_gradient_map(1)
    Q = BlockRotation.random(3, np.random.default_rng(seed))
    g = rotate(f, Q)
    X = f.random_points(3, 20, np.random.default_rng(seed + 1))
    assert np.allclose(g.f_dense(Q.apply_dense(X)), Q.apply_dense(f.f_dense(X)), atol=1e-12)
