import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hilbertdeg.errors import NotInterior
from hilbertdeg.hilbert import HilbertVector, fit
from hilbertdeg.neighborhoods import (
    BallUnion,
    component_labels,
    components,
    connecting_dimension,
    safe_neighborhood,
    verify_projection,
)
from hilbertdeg.regions import Ball, Box, Region


def test_whole_space():
    K = [HilbertVector((1, 7), (1.0, 2.0))]
    U, N = safe_neighborhood(K, None, radius=0.3)
    assert N == 1 and U.radii == (0.3,)
    assert U.contains(np.array([[1.0, 0, 0, 0, 0, 0, 2.1]]))[0]


def test_ball_example():
    omega = Region(1, (Ball((0.0,), 2.0),), 2.0)
    U, N = safe_neighborhood([HilbertVector((1,), (1.0,))], omega)
    assert N == 1
    assert U.radii[0] <= 0.5


def test_offset_in_coordinate_five():
    omega = Region(5, (Ball((0.0, 0.0, 0.0, 0.0, 3.0), 2.0),), 1.0)
    x = HilbertVector(tuple(range(1, 7)), (0.1, 0.1, 0.1, 0.1, 3.0, 0.5))
    U, N = safe_neighborhood([x], omega)
    assert N >= 5
    verify_projection(U, omega, N, seed=99)


def test_not_interior():
    omega = Region(2, (Ball((0.0, 0.0), 1.0),), 1.0)
    with pytest.raises(NotInterior):
        safe_neighborhood([HilbertVector((1,), (1.0,))], omega)
    with pytest.raises(ValueError):
        safe_neighborhood([], omega)


def test_verify_projection_catches_bad_cover():
    omega = Region(2, (Ball((0.0, 0.0), 1.0),), 1.0)
    U = BallUnion((HilbertVector((1,), (0.5,)),), (0.9,))
    with pytest.raises(AssertionError):
        verify_projection(U, omega, 2)


@st.composite
def interior_points(draw):
    vals = draw(st.lists(st.floats(-0.3, 0.3), min_size=2, max_size=9))
    return HilbertVector(tuple(range(1, len(vals) + 1)), tuple(vals))


@settings(max_examples=25)
@given(st.lists(interior_points(), min_size=1, max_size=4), st.integers(0, 1000))
def test_projection_stays_inside(K, seed):
    omega = Region(2, (Ball((0.0, 0.0), 1.0), Box((0.5, -0.5), (2.0, 0.5))), 1.0)
    U, N = safe_neighborhood(K, omega, seed=seed)
    assert U.contains(np.array([x.to_dense(10) for x in K])).all()
    rng = np.random.default_rng(seed + 7)
    d = max(U.width, N + 6) + 2
    P = U.sample_closure(d, 50, rng)
    for n in range(N, N + 6):
        assert omega.contains(fit(fit(P, n), d)).all()


def test_components():
    omega = Region(2, (Ball((0.0, 0.0), 1.0), Ball((1.5, 0.0), 1.0), Ball((5.0, 0.0), 1.0)), 1.0)
    shapes, labels = components(omega, 2)
    assert labels == [0, 0, 1]
    X = np.array([[0.0, 0.0], [1.5, 0.5], [5.0, 0.0], [3.2, 0.0]])
    assert component_labels(omega, 2, X).tolist() == [0, 0, 1, -1]


def test_components_of_lower_slices():
    omega = Region(3, (Ball((0.0, 0.0, 0.0), 1.0), Ball((0.0, 0.0, 1.5), 1.0), Ball((3.0, 0.0, 0.0), 1.0)), 1.0)
    shapes, labels = components(omega, 2)
    # the middle ball misses V_2 entirely
    assert len(shapes) == 2 and labels == [0, 1]


def test_connecting_dimension():
    # the balls overlap only away from V_2, so P_2 of the path leaves Omega
    omega = Region(3, (Ball((0.0, 0.0, 0.9), 1.0), Ball((1.6, 0.0, 0.9), 1.0)), 1.0)
    path = np.array([[1.6 * s, 0.0, 0.9] for s in np.linspace(0, 1, 33)])
    assert np.any(component_labels(omega, 2, path) < 0)
    M = connecting_dimension(omega, path)
    assert M == 3
    for m in range(M, M + 6):
        assert set(component_labels(omega, m, path).tolist()) == {0}
    far = np.array([[0.0, 0.0, 0.9], [5.0, 0.0, 0.9]])
    with pytest.raises(ValueError):
        connecting_dimension(omega, far, cap=10)
