import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hilbertdeg.brouwer import (
    EngineConfig,
    FiniteMap,
    brouwer_degree,
    cluster,
    finite_suspension,
    rescaled,
    solve_all,
)
from hilbertdeg.catalog import annulus_example
from hilbertdeg.errors import BoundaryGapMissing, GapFailure, NewtonBudgetExceeded, UnsupportedRegion
from hilbertdeg.maps import galerkin
from hilbertdeg.oracles import sign_change_oracle, simplicial_boundary_oracle, winding_oracle
from hilbertdeg.regions import Annulus, Ball, Box, Region


def disc(n=2, r=1.0, center=None):
    return Region(n, (Ball(center or (0.0,) * n, r),), 1.0)


def fmap(n, func, region=None, gap=None):
    return FiniteMap(n, func, region or disc(n), gap=gap)


def flip(X):
    Y = X.copy()
    Y[:, 1] = -Y[:, 1]
    return Y


def conj_square(X):
    # gradient of Re(z^3)/3
    x, y = X[:, 0], X[:, 1]
    return np.column_stack([x * x - y * y, -2 * x * y])


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_identity_degree_one(n):
    assert brouwer_degree(fmap(n, lambda X: X.copy()), gap=0.5).value == 1


def test_flip_and_conj_square():
    assert brouwer_degree(fmap(2, flip), gap=0.5).value == -1
    c = brouwer_degree(fmap(2, conj_square), gap=0.25, seed=3)
    assert c.value == -2
    assert winding_oracle(fmap(2, conj_square), gap=0.25) == -2
    # two preimages of the small regular value, both orientation reversing
    assert sorted(s for _, s in c.zeros_found) == [-1, -1]


def test_winding_examples():
    assert winding_oracle(fmap(2, lambda X: X.copy()), 0.5) == 1
    assert winding_oracle(fmap(2, flip), 0.5) == -1
    f0 = annulus_example(0)
    assert winding_oracle(galerkin(f0, 2), 0.5) == 0


def test_sign_change_examples():
    box = Region(1, (Box((-1.0,), (1.0,)),), 1.0)
    assert sign_change_oracle(fmap(1, lambda X: X.copy(), box), 0.1) == 1
    assert sign_change_oracle(fmap(1, lambda X: -X, box), 0.1) == -1
    assert sign_change_oracle(fmap(1, lambda X: X**2 - 0.25, box), 0.1) == 0
    assert brouwer_degree(fmap(1, lambda X: X**2 - 0.25, box), gap=0.25).value == 0


def test_simplicial_examples():
    assert simplicial_boundary_oracle(fmap(3, lambda X: X.copy()), 0.5) == 1
    assert simplicial_boundary_oracle(fmap(3, lambda X: -X), 0.5) == -1
    s = finite_suspension(fmap(2, flip, gap=0.5), 0.5)
    assert simplicial_boundary_oracle(s, 0.25) == -1
    assert brouwer_degree(s, gap=0.25).value == -1


def test_annulus_shell_oracle():
    # translation x - c with c inside an annulus x interval: one zero, degree 1
    reg = Region(2, (Annulus((0.0, 0.0), 0.5, 1.5),), 1.0)
    c = np.array([1.0, 0.0, 0.0])
    fm = FiniteMap(3, lambda X: X - c, reg)
    assert simplicial_boundary_oracle(fm, 0.25) == 1
    fm_out = FiniteMap(3, lambda X: X, reg)
    assert simplicial_boundary_oracle(fm_out, 0.25) == 0


def test_oracle_gap_check():
    with pytest.raises(GapFailure):
        winding_oracle(fmap(2, lambda X: X - np.array([1.0, 0.0])), 0.1)


def test_overlapping_shapes_rejected():
    reg = Region(2, (Ball((0.0, 0.0), 1.0), Ball((1.0, 0.0), 1.0)), 1.0)
    with pytest.raises(UnsupportedRegion):
        winding_oracle(FiniteMap(2, lambda X: X.copy(), reg), 0.1)


def test_gap_must_be_positive():
    with pytest.raises(BoundaryGapMissing):
        brouwer_degree(fmap(2, lambda X: X.copy()), gap=0.0)


def test_budget_reported():
    cfg = EngineConfig(max_starts=3)
    with pytest.raises(NewtonBudgetExceeded):
        brouwer_degree(fmap(2, lambda X: X.copy()), gap=0.5, cfg=cfg)


def test_seeded_reproducibility_and_workers():
    fm = fmap(2, conj_square)
    a = brouwer_degree(fm, 0.25, seed=11).to_dict()
    b = brouwer_degree(fm, 0.25, seed=11).to_dict()
    c = brouwer_degree(fm, 0.25, seed=11, cfg=EngineConfig(workers=4)).to_dict()
    assert a == b == c


def test_cluster_keeps_first():
    P = np.array([[0.0, 0.0], [1e-8, 0.0], [1.0, 0.0], [1.0, 1e-9]])
    assert cluster(P, 1e-6) == [0, 2]


def test_solve_all_sorted_and_inside():
    fm = fmap(1, lambda X: X**2 - 0.25, Region(1, (Box((-1.0,), (1.0,)),), 1.0))
    X, res = solve_all(fm, np.zeros(1), np.linspace(-0.9, 0.9, 20)[:, None])
    assert np.allclose(X[:, 0], [-0.5, 0.5])
    assert np.all(res < 1e-9)


def test_excision_shrinks_region():
    fm = fmap(2, conj_square, disc(2, 1.0))
    # the zero set is the origin; shrinking the disc keeps the degree
    assert brouwer_degree(rescaled(fm, 0.5), gap=0.05).value == -2


@given(st.integers(2, 3), st.integers(0, 2**31 - 1))
def test_linear_maps_degree_is_sign_det(n, seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n))
    s = np.linalg.svd(A, compute_uv=False)
    if s.min() < 0.2:
        A = A + np.sign(np.linalg.det(A) or 1.0) * 0.5 * np.eye(n)
        s = np.linalg.svd(A, compute_uv=False)
    if s.min() < 0.2:
        return
    fm = fmap(n, lambda X: X @ A.T)
    gap = 0.5 * s.min()
    expected = int(np.sign(np.linalg.det(A)))
    assert brouwer_degree(fm, gap, seed=seed).value == expected
    oracle = winding_oracle(fm, gap) if n == 2 else simplicial_boundary_oracle(fm, gap)
    assert oracle == expected


@given(st.integers(-4, 4), st.floats(0.0, 2 * math.pi))
def test_complex_powers(k, phase):
    # z -> e^{i phase} z^k  (or conj(z)^|k|) has degree k on the unit disc
    def func(X):
        z = X[:, 0] + 1j * X[:, 1]
        w = np.exp(1j * phase) * (z ** k if k >= 0 else np.conj(z) ** -k)
        return np.column_stack([w.real, w.imag])

    if k == 0:
        return
    fm = fmap(2, func)
    assert winding_oracle(fm, 0.5) == k
    assert brouwer_degree(fm, 0.5, seed=abs(k)).value == k
