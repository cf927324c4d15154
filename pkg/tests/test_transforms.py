from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from phaseless.errors import DimError, SupportError
from phaseless.geometry import CompactBox, CountableSet, Lattice
from phaseless.grid import Grid, GridField
from phaseless.transforms import (
    SpectrogramSamples,
    cft,
    check_support,
    dense_slice,
    fiot_residual,
    outside_energy_fraction,
    period_gamma_indices,
    sample_spectrogram,
    stft_eval,
    stft_matrix,
    zero_pad,
)
from phaseless.windows import WindowSpec, hermite_function


def _gauss_field(grid):
    t = grid.nodes()[:, 0]
    return GridField(grid, np.exp(-np.pi * t**2))


def test_cft_of_gaussian_is_gaussian():
    f = _gauss_field(Grid.centered(8.0, 1 / 16))
    F = cft(f)
    xi = F.grid.nodes()[:, 0]
    assert np.max(np.abs(F.flat() - np.exp(-np.pi * xi**2))) < 1e-12


def test_cft_shift_and_modulation():
    g = Grid.centered(8.0, 1 / 16)
    t = g.nodes()[:, 0]
    f = GridField(g, np.exp(-np.pi * (t - 0.5) ** 2))
    F = cft(f)
    xi = F.grid.nodes()[:, 0]
    assert np.max(np.abs(F.flat() - np.exp(-2j * np.pi * 0.5 * xi) * np.exp(-np.pi * xi**2))) < 1e-12


def test_cft_roundtrip_exact():
    rng = np.random.default_rng(1)
    g = Grid(np.array([-1.3, 0.2]), np.array([0.1, 0.05]), (12, 17))
    f = GridField(g, rng.standard_normal(g.size) + 1j * rng.standard_normal(g.size))
    back = cft(cft(f, -1), +1, out_origin=g.origin)
    assert np.max(np.abs(back.values - f.values)) < 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(4, 40), st.floats(0.01, 1.0), st.integers(0, 10**6))
def test_parseval(n, h, seed):
    rng = np.random.default_rng(seed)
    g = Grid(np.array([-n * h / 2]), np.array([h]), (n,))
    f = GridField(g, rng.standard_normal(n) + 1j * rng.standard_normal(n))
    assert cft(f).energy() == pytest.approx(f.energy(), rel=1e-12)


def test_cft_rejects_bad_sign():
    with pytest.raises(ValueError):
        cft(_gauss_field(Grid.centered(1.0, 0.5)), 0)


def test_zero_pad():
    f = GridField(Grid.centered(1.0, 0.5), np.arange(5.0))
    p = zero_pad(f, (8,))
    assert p.flat()[:5].tolist() == list(range(5)) and not np.any(p.flat()[5:])
    with pytest.raises(ValueError):
        zero_pad(f, (3,))


def test_stft_gaussian_self():
    g = Grid.centered(6.0, 1 / 32)
    f = _gauss_field(g)
    w = WindowSpec.standard_gaussian()
    assert abs(stft_eval(f, w, 0.0, [0.0])[0]) == pytest.approx(1 / math.sqrt(2), abs=1e-12)
    # |V_g g(x, w)| = exp(-pi (x^2 + w^2) / 2) / sqrt(2)
    x, om = 0.7, -0.4
    assert abs(stft_eval(f, w, x, [om])[0]) == pytest.approx(math.exp(-math.pi * (x * x + om * om) / 2) / math.sqrt(2), abs=1e-12)


def test_stft_matrix_matches_eval():
    g = Grid.centered(2.0, 1 / 16)
    f = _gauss_field(g).scaled(1 + 1j)
    w = WindowSpec.hermite(1)
    xs = np.array([[-0.5], [0.25]])
    om = np.array([0.0, 0.3, -1.2])
    M = stft_matrix(f, w, xs, om)
    for i, x in enumerate(xs):
        assert np.allclose(M[i], stft_eval(f, w, x, om))


def test_stft_dim_mismatch():
    with pytest.raises(DimError):
        stft_eval(_gauss_field(Grid.centered(1.0, 0.5)), WindowSpec.standard_gaussian(2), [0.0], [0.0])


def _smooth_bump(t):
    return (1 + 0.3j) * np.exp(-8 * np.pi * (t - 0.1) ** 2) * np.exp(2j * np.pi * 0.7 * t)


def _m_oracle(lam, om):
    # int f(t - w) conj f(t) conj(g(t - w - lam) conj g(t - lam)) dt over the overlap of supports
    def integrand(t):
        g1 = math.exp(-math.pi * (t - om - lam) ** 2)
        g2 = math.exp(-math.pi * (t - lam) ** 2)
        return _smooth_bump(t - om) * np.conj(_smooth_bump(t)) * g1 * g2

    lo, hi = max(-1.0, -1.0 + om), min(1.0, 1.0 + om)
    re = quad(lambda t: integrand(t).real, lo, hi, epsabs=1e-15, epsrel=1e-12, limit=200)[0]
    im = quad(lambda t: integrand(t).imag, lo, hi, epsabs=1e-15, epsrel=1e-12, limit=200)[0]
    return re + 1j * im


@pytest.mark.parametrize("lam", [-1.0, 0.25, 0.75])
def test_slice_transform_is_translate_measurement(lam):
    g = Grid.covering(CompactBox.symmetric(1.0), 2.0**-6)
    f = GridField(g, _smooth_bump(g.nodes()[:, 0]))
    M = cft(dense_slice(f, WindowSpec.standard_gaussian(), lam))
    om = M.grid.nodes()[:, 0]
    sel = np.nonzero(np.abs(om) <= 2 + 1e-9)[0][::16]
    ref = np.array([_m_oracle(lam, o) for o in om[sel]])
    assert np.max(np.abs(M.flat()[sel] - ref)) / np.max(np.abs(ref)) < 1e-8


def test_slice_band_limited_to_difference_set():
    g = Grid.covering(CompactBox.symmetric(1.0), 2.0**-6)
    f = GridField(g, _smooth_bump(g.nodes()[:, 0]))
    for lam in (-2.0, 0.0, 1.5):
        M = cft(dense_slice(f, WindowSpec.hermite(2), lam))
        om = M.grid.nodes()[:, 0]
        E = np.abs(M.flat()) ** 2
        assert E[np.abs(om) > 2 + 1e-9].sum() / E.sum() <= 1e-12


def test_support_check():
    K = CompactBox.symmetric(1.0)
    g = Grid.covering(CompactBox.symmetric(2.0), 1 / 16)
    t = g.nodes()[:, 0]
    inside = GridField(g, np.where(np.abs(t) <= 1, 1.0, 0.0))
    check_support(inside, K)
    leaky = GridField(g, np.exp(-np.pi * t**2))
    assert outside_energy_fraction(leaky, K) > 1e-4
    with pytest.raises(SupportError):
        check_support(leaky, K)


def test_period_gamma_indices():
    g = Grid.covering(CompactBox.symmetric(1.0), 2.0**-6)
    gi = period_gamma_indices(Lattice.scaled_integer(0.2), g)
    pts = 0.2 * gi[:, 0]
    assert pts.min() >= -32 and pts.max() < 32
    assert len(gi) == 320


def _headline_samples():
    K = CompactBox.symmetric(1.0)
    g = Grid.covering(K, 2.0**-6)
    t = g.nodes()[:, 0]
    f = GridField(g, (1 + 0.3j) * np.exp(-1.5 * np.pi * (t - 0.1) ** 2))
    lam = CountableSet.from_lattice(Lattice.scaled_integer(0.25))
    return f, sample_spectrogram(f, WindowSpec.standard_gaussian(), lam, Lattice.scaled_integer(0.2), 17, K)


def test_sample_spectrogram_shape_and_values():
    f, s = _headline_samples()
    assert s.values.shape == (17, 320)
    direct = np.abs(stft_eval(f, s.window, s.lambda_points[3], s.gamma_points)) ** 2
    assert np.allclose(s.values[3], direct, rtol=0, atol=1e-15)
    assert np.all(s.values >= 0)


def test_samples_roundtrip(tmp_path):
    _, s = _headline_samples()
    s.write(tmp_path / "s.csv")
    back = SpectrogramSamples.read(tmp_path / "s.csv")
    assert np.array_equal(back.values, s.values)
    assert np.array_equal(back.gamma_indices, s.gamma_indices)
    assert back.horizon == s.horizon
    assert back.signal_grid.to_json() == s.signal_grid.to_json()


def test_samples_write_deterministic(tmp_path):
    _, s = _headline_samples()
    s.write(tmp_path / "a.csv")
    s.write(tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


@pytest.mark.parametrize("tau", [-1.0, 1j, -1j])
def test_exact_phase_gives_identical_samples(tau):
    f, s = _headline_samples()
    s2 = sample_spectrogram(f.scaled(tau), s.window, s.time_set, s.freq_lattice, 17, s.signal_support)
    assert np.array_equal(s.values, s2.values)


@settings(max_examples=10, deadline=None)
@given(st.floats(0, 2 * math.pi))
def test_generic_phase_samples_agree(theta):
    f, s = _headline_samples()
    s2 = sample_spectrogram(f.scaled(np.exp(1j * theta)), s.window, s.time_set, s.freq_lattice, 17, s.signal_support)
    assert np.max(np.abs(s.values - s2.values)) <= 1e-14 * np.max(s.values)


@pytest.mark.parametrize("n", [0, 1, 2, 3])
def test_fundamental_identity_hermite(n):
    g = Grid.centered(6.0, 1 / 16)
    f = GridField(g, hermite_function(n, g.nodes()[:, 0]))
    assert fiot_residual(f, WindowSpec.hermite(n), trials=30, seed=n) <= 1e-6


def test_fundamental_identity_mixed_pair():
    g = Grid.centered(6.0, 1 / 16)
    t = g.nodes()[:, 0]
    f = GridField(g, (1 + 0.5j) * np.exp(-2 * np.pi * (t - 0.3) ** 2))
    assert fiot_residual(f, WindowSpec.hermite(1), trials=30) <= 1e-6
