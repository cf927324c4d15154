from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phaseless.errors import DimError
from phaseless.geometry import CompactBox
from phaseless.grid import Grid, GridField, aligned_error, inner


def test_covering_stays_on_box():
    K = CompactBox.symmetric(1.0)
    g = Grid.covering(K, 2.0**-6)
    assert g.shape == (129,)
    assert g.origin[0] == -1.0
    assert g.axes()[0][-1] == pytest.approx(1.0)


def test_covering_non_aligned_box():
    g = Grid.covering(CompactBox(np.array([-0.3]), np.array([0.7])), 0.25)
    ax = g.axes()[0]
    assert ax[0] <= -0.3 and ax[-1] >= 0.7
    assert ax[0] > -0.3 - 0.25 and ax[-1] < 0.7 + 0.25


def test_nodes_row_major():
    g = Grid(np.zeros(2), np.ones(2), (2, 3))
    assert g.nodes().tolist() == [[0, 0], [0, 1], [0, 2], [1, 0], [1, 1], [1, 2]]


def test_nearest_index():
    g = Grid.centered(1.0, 0.25)
    assert g.nearest_index([[0.5]]).tolist() == [[6]]
    assert g.nearest_index([[0.51]]) is None


def test_padded_and_shifted():
    g = Grid.centered(1.0, 0.5)
    p = g.padded(2)
    assert p.shape == (9,) and p.origin[0] == -2.0
    assert g.shifted(0.25).origin[0] == -0.75


def test_field_shape_checked():
    g = Grid.centered(1.0, 0.5)
    with pytest.raises(DimError):
        GridField(g, np.zeros(4))


def test_field_is_read_only():
    g = Grid.centered(1.0, 0.5)
    f = GridField(g, np.ones(5))
    with pytest.raises(ValueError):
        f.values[0] = 2


def test_gfld_roundtrip(tmp_path):
    g = Grid(np.array([-1.0, 0.5]), np.array([0.25, 0.125]), (3, 4))
    rng = np.random.default_rng(3)
    f = GridField(g, rng.standard_normal(12) + 1j * rng.standard_normal(12))
    f.write(tmp_path / "f.gfld")
    back = GridField.read(tmp_path / "f.gfld")
    assert back.grid.to_json() == g.to_json()
    assert np.array_equal(back.values, f.values)


def test_gfld_rejects_garbage(tmp_path):
    p = tmp_path / "x.gfld"
    p.write_bytes(b'{"magic": "NOPE"}\n')
    with pytest.raises(ValueError):
        GridField.read(p)


def test_inner_and_energy():
    g = Grid.centered(2.0, 0.5)
    f = GridField(g, np.arange(9) + 1j)
    assert inner(f, f).real == pytest.approx(f.energy())


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 2 * np.pi), st.integers(0, 2**16))
def test_aligned_error_phase_invariant(theta, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(20) + 1j * rng.standard_normal(20)
    assert aligned_error(np.exp(1j * theta) * x, x) == pytest.approx(0.0, abs=1e-12)


def test_aligned_error_detects_conjugate():
    x = np.array([1.0, 1j, 2.0 + 1j])
    assert aligned_error(np.conj(x), x) > 0.1


def test_aligned_error_zero_reference():
    with pytest.raises(ValueError):
        aligned_error(np.ones(3), np.zeros(3))
