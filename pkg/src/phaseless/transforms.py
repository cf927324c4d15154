"""Continuous Fourier transform and STFT on regular grids.

Convention: ``F f(w) = int f(t) exp(-2 pi i w.t) dt`` (no prefactor) and
``V_g f(x, w) = int f(t) conj(g(t - x)) exp(-2 pi i w.t) dt``.  Integrals
are Riemann sums over grid nodes, so in ``w`` the discrete STFT is
periodic with period ``1 / spacing``.

SPEC1 file layout: one JSON header line describing the window, the time
set and its horizon, the frequency lattice, the declared support and the
signal grid; then a CSV table ``lambda_index..., gamma_index..., value``.
"""
from __future__ import annotations

import io
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimError, SupportError
from .geometry import CompactBox, CountableSet, Lattice
from .grid import Grid, GridField
from .windows import WindowSpec, eval_window

SUPPORT_TOL = 1e-10
MAGIC = "SPEC1"


# --------------------------------------------------------------------------
# continuous Fourier transform


def default_freq_origin(n: int, spacing: float) -> float:
    return float(np.fft.fftshift(np.fft.fftfreq(n, spacing))[0])


def _cft_axis(vals: np.ndarray, axis: int, t0: float, dt: float, w0: float, sign: int) -> np.ndarray:
    n = vals.shape[axis]
    dw = 1.0 / (n * dt)
    k = np.arange(n)
    shape = [1] * vals.ndim
    shape[axis] = n
    pre = np.exp(sign * 2j * np.pi * w0 * dt * k).reshape(shape)
    post = (dt * np.exp(sign * 2j * np.pi * (w0 * t0 + k * dw * t0))).reshape(shape)
    if sign < 0:
        core = np.fft.fft(vals * pre, axis=axis)
    else:
        core = np.fft.ifft(vals * pre, axis=axis) * n
    return core * post


def cft(field: GridField, sign: int = -1, out_origin=None) -> GridField:
    """Riemann-sum Fourier transform onto the reciprocal grid.

    ``sign=-1`` is the forward transform and ``sign=+1`` the inverse.  The
    output grid has spacing ``1 / (N * spacing)`` per axis and, by default,
    spans ``[-1/(2 spacing), 1/(2 spacing))``.  Passing the input origin back
    as ``out_origin`` inverts a transform exactly.
    """
    if sign not in (-1, 1):
        raise ValueError("sign must be +1 or -1")
    g = field.grid
    if out_origin is None:
        w0 = np.array([default_freq_origin(n, h) for n, h in zip(g.shape, g.spacing)])
    else:
        w0 = np.broadcast_to(np.asarray(out_origin, dtype=float), (g.dim,))
    vals = np.asarray(field.values, dtype=complex)
    for ax in range(g.dim):
        vals = _cft_axis(vals, ax, g.origin[ax], g.spacing[ax], w0[ax], sign)
    spacing = 1.0 / (np.asarray(g.shape) * g.spacing)
    return GridField(Grid(w0, spacing, g.shape), vals)


def zero_pad(field: GridField, shape) -> GridField:
    """Embed ``field`` in a larger grid with the same origin, padding at the high end."""
    shape = tuple(int(n) for n in shape)
    if any(a < b for a, b in zip(shape, field.grid.shape)):
        raise ValueError("padded shape must not be smaller than the field")
    out = np.zeros(shape, dtype=complex)
    out[tuple(slice(0, n) for n in field.grid.shape)] = field.values
    return GridField(Grid(field.grid.origin, field.grid.spacing, shape), out)


# --------------------------------------------------------------------------
# STFT


def _omegas(omegas, dim: int) -> np.ndarray:
    om = np.asarray(omegas, dtype=float)
    if om.ndim <= 1 and dim == 1:
        om = om.reshape(-1, 1)
    om = np.atleast_2d(om)
    if om.shape[1] != dim:
        raise DimError("frequency points have the wrong dimension")
    return om


def windowed(f: GridField, w: WindowSpec, x) -> np.ndarray:
    """Flat samples of ``f(t) conj(g(t - x)) * cell`` over the grid."""
    t = f.grid.nodes()
    xv = np.broadcast_to(np.asarray(x, dtype=float), (f.dim,))
    return f.flat() * np.conj(eval_window(w, t - xv)) * f.grid.cell_volume


def stft_eval(f: GridField, w: WindowSpec, x, omegas, chunk: int = 1024) -> np.ndarray:
    """``V_g f(x, w)`` at arbitrary frequencies by direct summation."""
    if w.dim != f.dim:
        raise DimError("window and signal dimensions differ")
    om = _omegas(omegas, f.dim)
    u = windowed(f, w, x)
    t = f.grid.nodes()
    out = np.empty(len(om), dtype=complex)
    for s in range(0, len(om), chunk):
        out[s : s + chunk] = np.exp(-2j * np.pi * (om[s : s + chunk] @ t.T)) @ u
    return out


def stft_matrix(f: GridField, w: WindowSpec, xs, omegas) -> np.ndarray:
    """``V_g f`` on the product ``xs x omegas``, shape (len(xs), len(omegas))."""
    om = _omegas(omegas, f.dim)
    t = f.grid.nodes()
    E = np.exp(-2j * np.pi * (om @ t.T))
    U = np.stack([windowed(f, w, x) for x in np.atleast_2d(np.asarray(xs, dtype=float).reshape(len(xs), -1))])
    return U @ E.T


def dense_slice(f: GridField, w: WindowSpec, x, n_fft=None) -> GridField:
    """Spectrogram slice ``|V_g f(x, .)|^2`` on a dense reciprocal grid.

    ``n_fft`` (per axis) defaults to twice the grid size, which keeps the
    autocorrelation band of the slice free of wrap-around.
    """
    u = GridField(f.grid, windowed(f, w, x).reshape(f.grid.shape) / f.grid.cell_volume)
    shape = tuple(2 * n for n in f.grid.shape) if n_fft is None else tuple(np.broadcast_to(n_fft, (f.dim,)))
    V = cft(zero_pad(u, shape), -1)
    return V.with_values(np.abs(V.values) ** 2)


# --------------------------------------------------------------------------
# spectrogram samples


@dataclass(frozen=True)
class SpectrogramSamples:
    """``|V_g f(lambda, gamma)|^2`` on a finite window of ``Lambda x Gamma``.

    ``values[i, j]`` belongs to ``lambda_points[i]`` and ``gamma_points[j]``.
    """

    time_set: CountableSet
    horizon: int
    freq_lattice: Lattice
    gamma_indices: np.ndarray
    values: np.ndarray
    signal_support: CompactBox
    window: WindowSpec
    signal_grid: Grid

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (len(self.lambda_points), len(self.gamma_indices)):
            raise DimError(f"values shape {v.shape} does not match the index windows")
        if np.any(v < 0):
            raise ValueError("spectrogram values must be non-negative")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        gi = np.array(self.gamma_indices, dtype=np.int64)
        gi.setflags(write=False)
        object.__setattr__(self, "gamma_indices", gi)

    @property
    def dim(self) -> int:
        return self.freq_lattice.dim

    @property
    def lambda_points(self) -> np.ndarray:
        return self.time_set.enumerate(self.horizon)

    @property
    def lambda_labels(self) -> np.ndarray:
        return self.time_set.index_labels(self.horizon)

    @property
    def gamma_points(self) -> np.ndarray:
        return self.freq_lattice.points(self.gamma_indices)

    def slice_at(self, i: int) -> np.ndarray:
        return np.array(self.values[i])

    def write(self, path) -> None:
        header = {
            "magic": MAGIC,
            "window": self.window.to_json(),
            "lambda": {"set": self.time_set.to_json(), "horizon": self.horizon},
            "gamma": self.freq_lattice.to_json(),
            "K": self.signal_support.to_json(),
            "signal_grid": self.signal_grid.to_json(),
            "n_lambda": int(self.values.shape[0]),
            "n_gamma": int(self.values.shape[1]),
        }
        lab = self.lambda_labels
        L, G = self.values.shape
        rows = np.concatenate(
            [
                np.repeat(lab, G, axis=0).astype(float),
                np.tile(self.gamma_indices, (L, 1)).astype(float),
                self.values.reshape(-1, 1),
            ],
            axis=1,
        )
        d = self.dim
        buf = io.StringIO()
        fmt = ["%d"] * (lab.shape[1] + d) + ["%.17g"]
        cols = [f"lambda{j}" for j in range(lab.shape[1])] + [f"gamma{j}" for j in range(d)] + ["value"]
        np.savetxt(buf, rows, fmt=fmt, delimiter=",", header=",".join(cols), comments="")
        with open(path, "w", newline="\n") as fh:
            fh.write(json.dumps(header, sort_keys=True) + "\n")
            fh.write(buf.getvalue())

    @classmethod
    def read(cls, path) -> "SpectrogramSamples":
        text = Path(path).read_text()
        first, rest = text.split("\n", 1)
        header = json.loads(first)
        if header.get("magic") != MAGIC:
            raise ValueError(f"{path}: not a SPEC1 file")
        time_set = CountableSet.from_json(header["lambda"]["set"])
        horizon = int(header["lambda"]["horizon"])
        gamma = Lattice.from_json(header["gamma"])
        L, G = header["n_lambda"], header["n_gamma"]
        table = np.loadtxt(io.StringIO(rest), delimiter=",", skiprows=1, ndmin=2)
        d = gamma.dim
        lab_cols = table.shape[1] - d - 1
        if table.shape[0] != L * G:
            raise ValueError(f"{path}: expected {L * G} rows, found {table.shape[0]}")
        gamma_idx = table[:G, lab_cols : lab_cols + d].astype(np.int64)
        values = table[:, -1].reshape(L, G)
        return cls(
            time_set=time_set,
            horizon=horizon,
            freq_lattice=gamma,
            gamma_indices=gamma_idx,
            values=values,
            signal_support=CompactBox.from_json(header["K"]),
            window=WindowSpec.from_json(header["window"]),
            signal_grid=Grid.from_json(header["signal_grid"]),
        )


def period_gamma_indices(gamma: Lattice, grid: Grid) -> np.ndarray:
    """Indices of Gamma inside one period ``[-1/(2h), 1/(2h))^d`` of the discrete STFT."""
    half = 0.5 / grid.spacing
    return gamma.indices_in_box(-half, half, half_open=True)


def outside_energy_fraction(f: GridField, K: CompactBox, tol: float = 1e-9) -> float:
    total = f.energy()
    if total == 0:
        return 0.0
    outside = ~K.contains_points(f.grid.nodes(), tol=tol)
    return float(np.sum(np.abs(f.flat()[outside]) ** 2) * f.grid.cell_volume / total)


def check_support(f: GridField, K: CompactBox) -> None:
    frac = outside_energy_fraction(f, K)
    if frac > SUPPORT_TOL:
        raise SupportError(f"relative energy {frac:.3e} of the signal lies outside the declared support")


def sample_spectrogram(
    f: GridField,
    w: WindowSpec,
    lam: CountableSet,
    gamma: Lattice,
    lambda_horizon: int,
    K: CompactBox,
    gamma_indices=None,
) -> SpectrogramSamples:
    """Sample the spectrogram of ``f`` on the first ``lambda_horizon`` points of
    ``lam`` times one STFT period of ``gamma``."""
    if not (f.dim == w.dim == lam.dim == gamma.dim == K.dim):
        raise DimError("signal, window, sets and support must share one dimension")
    check_support(f, K)
    gi = period_gamma_indices(gamma, f.grid) if gamma_indices is None else np.atleast_2d(gamma_indices)
    lp = lam.enumerate(lambda_horizon)
    V = stft_matrix(f, w, lp, gamma.points(gi))
    return SpectrogramSamples(
        time_set=lam,
        horizon=int(lambda_horizon),
        freq_lattice=gamma,
        gamma_indices=gi,
        values=np.abs(V) ** 2,
        signal_support=K,
        window=w,
        signal_grid=f.grid,
    )


# --------------------------------------------------------------------------
# fundamental identity of time-frequency analysis


def _shift_index(arr: np.ndarray, k) -> np.ndarray:
    """``out[n] = arr[n - k]`` with zeros where ``n - k`` leaves the array."""
    out = np.zeros_like(arr)
    src, dst = [], []
    for n, kk in zip(arr.shape, k):
        kk = int(kk)
        if abs(kk) >= n:
            return out
        if kk >= 0:
            dst.append(slice(kk, n))
            src.append(slice(0, n - kk))
        else:
            dst.append(slice(0, n + kk))
            src.append(slice(-kk, n))
    out[tuple(dst)] = arr[tuple(src)]
    return out


def fiot_pair(f: GridField, w: WindowSpec, x_index, w_index):
    """Both sides of ``V_g f(x, w) = exp(-2 pi i x.w) V_{G} F(w, -x)``.

    ``G`` and ``F`` are the forward transforms of ``g`` and ``f``.  ``x`` is the
    grid node ``x_index`` and ``w`` the frequency node ``w_index`` of the
    reciprocal grid.
    """
    grid = f.grid
    x = grid.origin + np.asarray(x_index) * grid.spacing
    Fi = cft(f, -1)
    Gi = cft(GridField(grid, eval_window(w, grid.nodes())), -1)
    om = Fi.grid.origin + np.asarray(w_index) * Fi.grid.spacing
    lhs = stft_eval(f, w, x, om[None, :])[0]
    # V_G F(w, -x) = sum_xi F(xi) conj G(xi - w) exp(2 pi i x.xi) dxi
    shift = np.rint(om / Fi.grid.spacing).astype(int)
    Gs = _shift_index(Gi.values, shift)
    xi = Fi.grid.nodes()
    kern = np.exp(2j * np.pi * (xi @ x)).reshape(grid.shape)
    rhs = np.sum(Fi.values * np.conj(Gs) * kern) * Fi.grid.cell_volume
    rhs *= np.exp(-2j * np.pi * (x @ om))
    return complex(lhs), complex(rhs)


def fiot_residual(
    f: GridField,
    w: WindowSpec,
    trials: int = 50,
    seed: int = 0,
    x_range: float = 2.0,
    omega_range: float = 2.0,
) -> float:
    """Max relative mismatch of the two sides of the fundamental identity.

    Trial points are grid nodes with ``|x| <= x_range`` and reciprocal-grid
    nodes with ``|w| <= omega_range`` (sup norm), drawn from a seeded
    generator.
    """
    rng = np.random.default_rng(seed)
    grid = f.grid
    wgrid = cft(f.with_values(np.zeros(grid.shape)), -1).grid
    x_ok = [np.nonzero(np.abs(a) <= x_range + 1e-12)[0] for a in grid.axes()]
    w_ok = [np.nonzero(np.abs(a) <= omega_range + 1e-12)[0] for a in wgrid.axes()]
    worst = 0.0
    for _ in range(trials):
        xi = [int(rng.choice(c)) for c in x_ok]
        wi = [int(rng.choice(c)) for c in w_ok]
        lhs, rhs = fiot_pair(f, w, xi, wi)
        worst = max(worst, abs(lhs - rhs) / (abs(lhs) + 1e-14))
    return worst
