from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phaseless.errors import DimError, SingularLattice, TooFewPoints
from phaseless.geometry import (
    CompactBox,
    CountableSet,
    Lattice,
    ball_volume,
    cell_slack,
    cube_density,
    density_estimate,
    fundamental_domain_contains,
    primes_upto,
    reciprocal,
    separation,
)


def _sieve_oracle(n):
    return [p for p in range(2, n + 1) if all(p % q for q in range(2, int(p**0.5) + 1))]


def test_singular_generator_rejected():
    with pytest.raises(SingularLattice):
        Lattice(np.array([[1.0, 2.0], [2.0, 4.0]]))


def test_volume_and_density():
    lat = Lattice(np.array([[2.0, 1.0], [0.0, 3.0]]))
    assert lat.volume == pytest.approx(6.0)
    assert lat.density == pytest.approx(1 / 6)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.1, 5.0), min_size=1, max_size=3))
def test_reciprocal_pairing_is_integral(spacings):
    lat = Lattice.diagonal(spacings)
    dual = reciprocal(lat)
    assert np.allclose(lat.generator.T @ dual.generator, np.eye(lat.dim))
    assert dual.volume * lat.volume == pytest.approx(1.0)


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0.5, 3), st.floats(0.5, 3))
def test_reciprocal_general_basis(a, b, c, d):
    G = np.array([[c, a], [b * 0.1, d]])
    if abs(np.linalg.det(G)) < 0.1:
        return
    dual = reciprocal(Lattice(G))
    assert np.allclose(G.T @ dual.generator, np.eye(2), atol=1e-9)


def test_reciprocal_is_involution():
    lat = Lattice(np.array([[1.0, 0.3], [0.2, 0.7]]))
    assert np.allclose(reciprocal(reciprocal(lat)).generator, lat.generator)


def test_points_coords_roundtrip():
    lat = Lattice(np.array([[1.0, 0.5], [0.0, 2.0]]))
    idx = np.array([[1, -2], [0, 3], [4, 4]])
    assert np.allclose(lat.coords(lat.points(idx)), idx)


def test_indices_in_box_half_open():
    lat = Lattice.scaled_integer(0.5)
    idx = lat.indices_in_box([-1.0], [1.0], half_open=True)
    assert sorted(idx[:, 0].tolist()) == [-2, -1, 0, 1]
    idx = lat.indices_in_box([-1.0], [1.0], half_open=False)
    assert sorted(idx[:, 0].tolist()) == [-2, -1, 0, 1, 2]


def test_lattice_json_roundtrip():
    lat = Lattice(np.array([[1.0, 0.5], [0.0, 2.0]]))
    assert np.array_equal(Lattice.from_json(lat.to_json()).generator, lat.generator)


def test_box_basics():
    K = CompactBox(np.array([-1.0, 0.0]), np.array([1.0, 3.0]))
    assert K.volume == pytest.approx(6.0)
    assert K.diam_inf() == pytest.approx(3.0)
    D = K.difference()
    assert np.allclose(D.lo, [-2, -3]) and np.allclose(D.hi, [2, 3])
    assert len(K.corners()) == 4
    assert K.contains_box(CompactBox(np.array([0.0, 1.0]), np.array([0.5, 2.0])))
    back = CompactBox.from_json(K.to_json())
    assert np.array_equal(back.lo, K.lo) and np.array_equal(back.hi, K.hi)


def test_box_rejects_inverted():
    with pytest.raises(ValueError):
        CompactBox(np.array([1.0]), np.array([0.0]))


def test_cell_slack_threshold():
    # K=[-1,1]: K-K=[-2,2] fits the reciprocal cell of cZ iff c < 1/4
    K = CompactBox.symmetric(1.0)
    for c, ok in ((0.2, True), (0.24, True), (0.26, False), (0.3, False)):
        dual = reciprocal(Lattice.scaled_integer(c))
        assert fundamental_domain_contains(dual, K.difference()) is ok
        assert cell_slack(dual, K.difference()) == pytest.approx(0.5 - 2 * c)


def test_primes_against_trial_division():
    assert primes_upto(500).tolist() == _sieve_oracle(500)
    assert primes_upto(1).tolist() == []


def test_lattice_enumeration_shells():
    s = CountableSet.from_lattice(Lattice.scaled_integer(0.25))
    pts = s.enumerate(17)[:, 0]
    assert sorted(pts.tolist()) == [0.25 * k for k in range(-8, 9)]
    # l-infinity shells: norms non-decreasing
    norms = np.abs(pts)
    assert np.all(np.diff(norms) >= -1e-12)


def test_lattice_enumeration_2d_prefix_is_box():
    s = CountableSet.from_lattice(Lattice.scaled_integer(1.0, 2))
    pts = s.enumerate(25)
    assert np.max(np.abs(pts)) == 2.0
    assert len({tuple(p) for p in pts}) == 25


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 60))
def test_enumeration_prefix_stable(n):
    s = CountableSet.from_lattice(Lattice.scaled_integer(0.5, 2))
    assert np.array_equal(s.enumerate(n), s.enumerate(n + 7)[:n])


def test_other_families():
    assert CountableSet.arithmetic(1.0, 2.0).enumerate(4)[:, 0].tolist() == [1.0, 3.0, 5.0, 7.0]
    assert CountableSet.geometric(2.0).enumerate(4)[:, 0].tolist() == [1.0, 2.0, 4.0, 8.0]
    assert CountableSet.primes().enumerate(5)[:, 0].tolist() == [2, 3, 5, 7, 11]
    e = CountableSet.explicit([[0.0], [1.5]])
    assert e.is_finite


def test_countable_set_json_roundtrip():
    for s in (
        CountableSet.from_lattice(Lattice.scaled_integer(0.25)),
        CountableSet.arithmetic(2.0, 1.0),
        CountableSet.geometric(3.0, 0.5),
        CountableSet.primes(),
        CountableSet.explicit([[0.0], [2.0]]),
    ):
        back = CountableSet.from_json(s.to_json())
        assert np.allclose(back.enumerate(5 if not s.is_finite else 2), s.enumerate(5 if not s.is_finite else 2))


def test_density_of_lattice():
    s = CountableSet.from_lattice(Lattice.scaled_integer(0.5))
    assert cube_density(s, 50.0) == pytest.approx(2.0, rel=2e-2)
    assert density_estimate(s, 50.0) == pytest.approx(2.0, rel=2e-2)


def test_ball_volume():
    assert ball_volume(1.0, 2) == pytest.approx(math.pi)
    assert ball_volume(2.0, 3) == pytest.approx(4 / 3 * math.pi * 8)


def test_separation():
    s = CountableSet.from_lattice(Lattice.scaled_integer(0.3))
    assert separation(s, 20) == pytest.approx(0.3)
    with pytest.raises(TooFewPoints):
        separation(CountableSet.explicit([[1.0]]), 5)


def test_dim_mismatch_in_slack():
    with pytest.raises(DimError):
        cell_slack(Lattice.scaled_integer(1.0, 2), CompactBox.symmetric(1.0))
