"""Phase retrieval from lattice spectrogram samples of a compactly supported signal.

Pipeline
--------
1. Each spectrogram slice ``w -> |V_g f(lambda, w)|^2`` is band-limited to
   ``K - K``.  Shannon interpolation over ``Gamma`` followed by a Fourier
   transform yields, for every lag ``w`` in ``K - K``,
   ``m(lambda, w) = int f_w(t) conj(g_w(t - lambda)) dt`` with
   ``f_w = f(. - w) conj(f)`` and ``g_w = g(. - w) conj(g)``.
   The transform of the interpolant is evaluated in closed form:
   ``m(lambda, w) = vol(Gamma) * sum_gamma S(lambda, gamma) exp(-2 pi i gamma.w)``.
2. For each lag ``w`` the translate system ``m = M f_w`` is solved by
   truncated SVD (minimum-norm solution).
3. ``f`` is assembled from the row of the anchor node ``t*`` where
   ``|f|^2`` is largest: ``f(s) = f_{t* - s}(t*) / conj f(t*)``.

Lags live on the difference grid of the signal grid, so no interpolation in
``w`` is needed during assembly.
"""
from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DegenerateSystem, GateError, NoCounterexample, ZeroSignal
from .geometry import CompactBox, CountableSet, Lattice, reciprocal
from .grid import Grid, GridField, aligned_error
from .paley_wiener import shannon_interpolate, shannon_kernel
from .transforms import SpectrogramSamples, check_support, sample_spectrogram
from .uniqueness import GateReport, gamma_gate, lambda_gate, periodic_multiplier_base
from .windows import WindowSpec, eval_window

POLICIES = ("enforce", "warn")
MEASUREMENTS = ("closed_form", "dense")


@dataclass(frozen=True)
class RecoveryConfig:
    """Numerical settings of the pipeline.

    ``shannon_radius`` is a distance; None means 40 lattice cells of Gamma.
    ``measurement`` selects the closed-form transform of the Shannon
    interpolant or the dense route (interpolate on a fine lag grid, then
    integrate numerically).
    """

    signal_grid: Grid
    svd_tol: float = 1e-8
    shannon_radius: float | None = None
    gate_policy: str = "enforce"
    measurement: str = "closed_form"
    restrict_support: bool = True
    dense_oversample: int = 2
    threads: int = 1
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.svd_tol < 1:
            raise ValueError("svd_tol must lie in (0, 1)")
        if self.gate_policy not in POLICIES:
            raise ValueError(f"gate_policy must be one of {POLICIES}")
        if self.measurement not in MEASUREMENTS:
            raise ValueError(f"measurement must be one of {MEASUREMENTS}")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")

    def omega_indices(self) -> np.ndarray:
        """Lag offsets ``m`` (signal-grid index differences), row-major."""
        axes = [np.arange(-(n - 1), n) for n in self.signal_grid.shape]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.signal_grid.dim)

    def omega_points(self) -> np.ndarray:
        return self.omega_indices() * self.signal_grid.spacing

    def to_json(self) -> dict:
        return {
            "signal_grid": self.signal_grid.to_json(),
            "svd_tol": self.svd_tol,
            "shannon_radius": self.shannon_radius,
            "gate_policy": self.gate_policy,
            "measurement": self.measurement,
            "restrict_support": self.restrict_support,
            "threads": self.threads,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class TranslateMeasurements:
    """``m(lambda, omega)`` for all lambda at one lag ``omega`` (grid offset ``omega_index``)."""

    omega: np.ndarray
    omega_index: tuple[int, ...]
    values: np.ndarray


@dataclass(frozen=True)
class TranslateSolution:
    field: GridField
    residual: float
    rank: int


class Assembly(NamedTuple):
    estimate: GridField
    residual: float
    anchor: tuple[int, ...]
    clipped_mass: float


@dataclass
class RecoveryReport:
    estimate: GridField
    phase_anchor: tuple[int, ...]
    residuals: dict
    gates: list[GateReport]
    aligned_error: float | None = None
    diagnostics: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "phase_anchor": list(self.phase_anchor),
            "residuals": {k: float(v) for k, v in self.residuals.items()},
            "gates": [g.to_json() for g in self.gates],
            "aligned_error": self.aligned_error,
            "diagnostics": self.diagnostics,
            "grid": self.estimate.grid.to_json(),
        }


# --------------------------------------------------------------------------
# gates


def run_gates(samples: SpectrogramSamples, w: WindowSpec, policy: str) -> list[GateReport]:
    K = samples.signal_support
    reports = [lambda_gate(w, K, samples.time_set), gamma_gate(K, samples.freq_lattice)]
    failed = [r for r in reports if not r.passed]
    if failed and policy == "enforce":
        names = ", ".join(r.gate for r in failed)
        raise GateError(f"uniqueness gate(s) failed: {names}", reports)
    return reports


# --------------------------------------------------------------------------
# stage 1: translate measurements


def _cell_indicator(gamma: Lattice, omegas: np.ndarray) -> np.ndarray:
    """Indicator of the centred cell of the reciprocal lattice at the lags."""
    c = reciprocal(gamma).coords(omegas)
    return np.all((c >= -0.5) & (c < 0.5), axis=1)


def _closed_form(samples: SpectrogramSamples, omegas: np.ndarray) -> np.ndarray:
    gam = samples.freq_lattice
    S = samples.values
    gi = samples.gamma_indices
    d = gam.dim
    out = None
    # separable fast path for diagonal lattices sampled on a full index box
    if gam.is_diagonal():
        axes = [np.unique(gi[:, j]) for j in range(d)]
        if np.prod([len(a) for a in axes]) == len(gi):
            full = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
            if np.array_equal(full, gi):
                out = _closed_form_separable(S, axes, np.diag(gam.generator), omegas)
    if out is None:
        E = np.exp(-2j * np.pi * (gam.points(gi) @ omegas.T))
        out = S @ E
    out = gam.volume * out
    out[:, ~_cell_indicator(gam, omegas)] = 0.0
    return out


def _closed_form_separable(S, axes, spacing, omegas) -> np.ndarray:
    d = len(axes)
    L = S.shape[0]
    T = S.reshape((L,) + tuple(len(a) for a in axes)).astype(complex)
    # collapse one gamma axis at a time onto the unique lag coordinates of that axis
    lag_axes = [np.unique(omegas[:, j]) for j in range(d)]
    for j in range(d):
        E = np.exp(-2j * np.pi * np.outer(spacing[j] * axes[j], lag_axes[j]))
        T = np.moveaxis(np.tensordot(T, E, axes=([1 + j], [0])), -1, 1 + j)
    pos = [np.searchsorted(lag_axes[j], omegas[:, j]) for j in range(d)]
    return T[(slice(None),) + tuple(pos)]


def _dense(samples: SpectrogramSamples, omegas: np.ndarray, cfg: RecoveryConfig) -> np.ndarray:
    gam = samples.freq_lattice
    kernel = shannon_kernel(gam)
    radius = cfg.shannon_radius if cfg.shannon_radius is not None else 40.0 * float(np.min(np.abs(np.diag(gam.generator))))
    gp = samples.gamma_points
    lo = gp.min(axis=0) + radius
    hi = gp.max(axis=0) - radius
    if np.any(hi <= lo):
        raise ValueError("frequency window too small for the Shannon truncation radius")
    step = np.abs(np.diag(gam.generator)) / cfg.dense_oversample
    dense_axes = [np.arange(math.ceil(a / s), math.floor(b / s) + 1) * s for a, b, s in zip(lo, hi, step)]
    targets = np.stack(np.meshgrid(*dense_axes, indexing="ij"), axis=-1).reshape(-1, gam.dim)
    E = np.exp(-2j * np.pi * (targets @ omegas.T)) * float(np.prod(step))
    out = np.empty((samples.values.shape[0], len(omegas)), dtype=complex)
    for i in range(samples.values.shape[0]):
        P = shannon_interpolate(gp, samples.values[i], kernel, targets, radius, check_coverage=(i == 0))
        out[i] = P @ E
    return out


def measurement_matrix(samples: SpectrogramSamples, cfg: RecoveryConfig, omegas=None) -> np.ndarray:
    """``m(lambda, omega)`` for all lambdas (rows) and lags (columns)."""
    om = cfg.omega_points() if omegas is None else np.atleast_2d(np.asarray(omegas, dtype=float))
    if cfg.measurement == "closed_form":
        return _closed_form(samples, om)
    return _dense(samples, om, cfg)


def slice_measurements(samples: SpectrogramSamples, cfg: RecoveryConfig) -> list[TranslateMeasurements]:
    rep = gamma_gate(samples.signal_support, samples.freq_lattice)
    if not rep.passed and cfg.gate_policy == "enforce":
        raise GateError("frequency lattice too sparse for the support", [rep])
    idx = cfg.omega_indices()
    om = idx * cfg.signal_grid.spacing
    M = measurement_matrix(samples, cfg, om)
    return [TranslateMeasurements(om[k], tuple(int(v) for v in idx[k]), M[:, k]) for k in range(len(idx))]


def out_of_band_residual(samples: SpectrogramSamples, cfg: RecoveryConfig, layers: int = 4) -> float:
    """Largest measurement just beyond ``K - K`` relative to the largest inside.

    The slices are band-limited to ``K - K`` so this is zero for consistent data.
    """
    g = cfg.signal_grid
    inside = measurement_matrix(samples, cfg)
    ref = float(np.max(np.abs(inside))) if inside.size else 0.0
    if ref == 0:
        return 0.0
    outside = []
    for j in range(g.dim):
        for k in range(1, layers + 1):
            for sgn in (-1, 1):
                v = np.zeros(g.dim)
                v[j] = sgn * (g.shape[j] - 1 + k) * g.spacing[j]
                outside.append(v)
    out = measurement_matrix(samples, cfg, np.array(outside))
    return float(np.max(np.abs(out)) / ref)


# --------------------------------------------------------------------------
# stage 2: translate systems


def _support_columns(grid: Grid, omega_index, restrict: bool) -> np.ndarray:
    """Flat indices of nodes ``t`` where ``f_omega(t)`` can be nonzero."""
    idx = np.stack(np.meshgrid(*[np.arange(n) for n in grid.shape], indexing="ij"), axis=-1).reshape(-1, grid.dim)
    if not restrict:
        return np.arange(grid.size)
    src = idx - np.asarray(omega_index)
    ok = np.all((src >= 0) & (src < np.asarray(grid.shape)), axis=1)
    return np.nonzero(ok)[0]


def translate_matrix(w: WindowSpec, omega, lam_points: np.ndarray, nodes: np.ndarray, cell: float) -> np.ndarray:
    """``M[lambda, t] = conj(g_omega(t - lambda)) * cell``."""
    L, N = len(lam_points), len(nodes)
    d = nodes.shape[1]
    shifted = (nodes[None, :, :] - lam_points[:, None, :]).reshape(-1, d)
    om = np.asarray(omega, dtype=float).reshape(1, d)
    gw = eval_window(w, shifted - om) * np.conj(eval_window(w, shifted))
    return np.conj(gw).reshape(L, N) * cell


def solve_translate_system(
    m: TranslateMeasurements,
    w: WindowSpec,
    lam: CountableSet,
    lambda_horizon: int,
    cfg: RecoveryConfig,
) -> TranslateSolution:
    """Minimum-norm truncated-SVD solution of ``M f_omega = m``.

    For a window with a Lambda-periodic multiplier the solution is sought in
    the truncated right singular space of the base window's system, where
    the smooth unknown ``f_omega`` lives; the multiplier only reweights the
    columns.
    """
    grid = cfg.signal_grid
    lam_pts = lam.enumerate(lambda_horizon)
    if len(m.values) != len(lam_pts):
        raise ValueError("measurement vector does not match the lambda horizon")
    cols = _support_columns(grid, m.omega_index, cfg.restrict_support)
    est = np.zeros(grid.size, dtype=complex)
    if len(cols) == 0:
        return TranslateSolution(GridField(grid, est), 0.0, 0)
    nodes = grid.nodes()[cols]
    M = translate_matrix(w, m.omega, lam_pts, nodes, grid.cell_volume)
    base = periodic_multiplier_base(w, lam)
    # trial space: dominant right singular vectors of the base window's system
    B = M if base is None else translate_matrix(base, m.omega, lam_pts, nodes, grid.cell_volume)
    U, s, Vh = np.linalg.svd(B, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        raise DegenerateSystem(f"translate system at omega={m.omega} has rank 0")
    keep = s > cfg.svd_tol * s[0]
    if base is None:
        coef = (U[:, keep].conj().T @ m.values) / s[keep]
        sol = Vh[keep].conj().T @ coef
    else:
        V = Vh[keep].conj().T
        sol = V @ np.linalg.lstsq(M @ V, m.values, rcond=None)[0]
    est[cols] = sol
    nm = np.linalg.norm(m.values)
    res = float(np.linalg.norm(M @ sol - m.values) / nm) if nm > 0 else 0.0
    return TranslateSolution(GridField(grid, est), res, int(keep.sum()))


# --------------------------------------------------------------------------
# stage 3: assembly


def assemble_signal(slices: dict, cfg: RecoveryConfig, checks: int = 50) -> Assembly:
    """Assemble ``f`` from the lag slices ``{omega_index: flat values of f_omega}``."""
    grid = cfg.signal_grid
    d = grid.dim
    shape = np.asarray(grid.shape)
    zero = tuple([0] * d)
    f0 = np.real(np.asarray(slices[zero]).reshape(grid.shape))
    if not np.any(f0 > 0):
        raise ZeroSignal("the zero-lag slice has no positive mass")
    neg = np.clip(f0, None, 0.0)
    clipped = float(np.sum(np.abs(neg)) / np.sum(np.abs(f0)))
    f0 = np.clip(f0, 0.0, None)
    anchor = tuple(int(v) for v in np.unravel_index(int(np.argmax(f0)), grid.shape))
    a = math.sqrt(f0[anchor])
    flat_anchor = int(np.ravel_multi_index(anchor, grid.shape))
    est = np.empty(grid.shape, dtype=complex)
    for s in itertools.product(*[range(n) for n in grid.shape]):
        key = tuple(int(x) for x in np.asarray(anchor) - np.asarray(s))
        est[s] = np.asarray(slices[key])[flat_anchor] / a
    # consistency of the redundant rows
    rng = np.random.default_rng(cfg.seed)
    scale = float(np.max(np.abs(est)) ** 2)
    worst = 0.0
    for _ in range(checks):
        s = rng.integers(0, shape)
        r = rng.integers(0, shape)
        key = tuple(int(x) for x in s - r)
        lhs = np.asarray(slices[key])[int(np.ravel_multi_index(tuple(s), grid.shape))]
        rhs = est[tuple(r)] * np.conj(est[tuple(s)])
        worst = max(worst, abs(lhs - rhs) / scale)
    return Assembly(GridField(grid, est), float(worst), anchor, clipped)


# --------------------------------------------------------------------------
# driver


def resolve_threads(threads: int | None) -> int:
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("PHASELESS_THREADS")
    return max(1, int(env)) if env else 1


def recover(
    samples: SpectrogramSamples,
    cfg: RecoveryConfig,
    truth: GridField | None = None,
    window: WindowSpec | None = None,
) -> RecoveryReport:
    """Run gates, measurements, per-lag solves and assembly."""
    w = samples.window if window is None else window
    gates = run_gates(samples, w, cfg.gate_policy)
    grid = cfg.signal_grid
    meas = slice_measurements(samples, cfg)
    lam = samples.time_set
    H = samples.horizon

    def solve(m):
        return solve_translate_system(m, w, lam, H, cfg)

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            sols = list(pool.map(solve, meas))
    else:
        sols = [solve(m) for m in meas]
    slices = {m.omega_index: s.field.flat() for m, s in zip(meas, sols)}
    asm = assemble_signal(slices, cfg)
    residuals = {
        "interpolation": out_of_band_residual(samples, cfg),
        "lsq_max": max(s.residual for s in sols),
        "assembly": asm.residual,
        "clipped_mass": asm.clipped_mass,
    }
    report = RecoveryReport(
        estimate=asm.estimate,
        phase_anchor=asm.anchor,
        residuals=residuals,
        gates=gates,
        diagnostics={"min_rank": min(s.rank for s in sols), "n_lags": len(sols), "lambda_horizon": H},
    )
    if truth is not None:
        if truth.grid.shape != grid.shape:
            raise ValueError("ground truth lives on a different grid")
        report.aligned_error = aligned_error(asm.estimate, truth)
    return report


# --------------------------------------------------------------------------
# diagnostics and counterexamples


def gram_diagnostic(
    w: WindowSpec,
    omega,
    lam: CountableSet,
    lambda_horizon: int,
    K: CompactBox,
    grid: Grid,
) -> tuple[float, float, float]:
    """``(sigma_min, sigma_max, cond)`` of the full translate matrix on the nodes of ``grid`` in ``K``.

    ``sigma_min`` is the smallest of the ``n_nodes`` singular values, hence 0
    when there are fewer lambdas than nodes.
    """
    nodes = grid.nodes()
    nodes = nodes[K.contains_points(nodes, tol=1e-9)]
    M = translate_matrix(w, omega, lam.enumerate(lambda_horizon), nodes, grid.cell_volume)
    s = np.linalg.svd(M, compute_uv=False)
    smax = float(s[0]) if s.size else 0.0
    smin = float(s[-1]) if M.shape[0] >= M.shape[1] else 0.0
    cond = smax / smin if smin > 0 else math.inf
    return smin, smax, cond


def _isotropic_gaussian_rate(w: WindowSpec) -> float:
    if w.family != "gaussian" or w.multiplier is not None:
        raise ValueError("the construction needs a Gaussian window")
    S = np.asarray(0.5 * (w.A + w.A.T))
    b = S[0, 0]
    if np.any(np.imag(S) != 0) or not np.allclose(S, b.real * np.eye(w.dim)) or b.real <= 0:
        raise ValueError("the construction needs an isotropic real Gaussian window")
    return float(b.real / math.pi)


def aliasing_counterexample(
    K: CompactBox,
    gamma_sparse: Lattice,
    w: WindowSpec,
    grid: Grid | None = None,
    bump_rate: float = 40.0,
    amplitude: float = 1.0,
    lam: CountableSet | None = None,
    lambda_horizon: int = 17,
) -> tuple[GridField, GridField, float]:
    """Two signals in ``L2(K)``, not phase-equivalent, with equal spectrogram samples on ``Gamma``.

    With ``a_pm`` Gaussian bumps of rate ``bump_rate`` centred at
    ``c_K +- tau``, take ``f = a_+ + i a_-`` and ``h = a_+ - i a_-``.  The
    spectrograms differ by ``4 Im(V a_+ conj V a_-)``, which for the window
    ``exp(-pi beta |t|^2)`` is proportional to ``sin(2 pi w.v)`` with
    ``v = 2 alpha tau / (alpha + beta)``.  Choosing ``v`` as half a
    reciprocal-lattice vector makes it vanish on all of ``Gamma``; this fits
    inside ``K`` only when ``K - K`` overflows the reciprocal cell.

    Returns ``(f, h, deviation)`` with the deviation measured on the sampled
    window relative to the largest sample.
    """
    if amplitude == 0:
        raise ZeroSignal("the construction needs a nonzero signal")
    if gamma_gate(K, gamma_sparse).passed:
        raise NoCounterexample("K - K fits in the reciprocal cell: samples on Gamma determine the signal")
    beta = _isotropic_gaussian_rate(w)
    alpha = float(bump_rate)
    d = K.dim
    centre = 0.5 * (K.lo + K.hi)
    # bump tail beyond `margin` carries < 1e-12 of its energy
    margin = math.sqrt(12.0 * math.log(10.0) / (2.0 * math.pi * alpha))
    dual = reciprocal(gamma_sparse).generator
    best = None
    for j in range(d):
        v = 0.5 * dual[:, j]
        tau = (alpha + beta) / (2.0 * alpha) * v
        if np.all(centre + np.abs(tau) + margin <= K.hi) and np.all(centre - np.abs(tau) - margin >= K.lo):
            if best is None or np.linalg.norm(tau) < np.linalg.norm(best):
                best = tau
    if best is None:
        raise NoCounterexample("no reciprocal direction admits separated bumps inside K; increase bump_rate")
    if grid is None:
        grid = Grid.covering(K, 2.0**-6)

    def bump(p, c):
        return np.exp(-math.pi * alpha * np.sum((p - c) ** 2, axis=1))

    t = grid.nodes()
    ap = bump(t, centre + best)
    am = bump(t, centre - best)
    f = GridField(grid, amplitude * (ap + 1j * am))
    h = GridField(grid, amplitude * (ap - 1j * am))
    check_support(f, K)
    if lam is None:
        lam = CountableSet.from_lattice(Lattice.scaled_integer(0.25, d))
    sf = sample_spectrogram(f, w, lam, gamma_sparse, lambda_horizon, K)
    sh = sample_spectrogram(h, w, lam, gamma_sparse, lambda_horizon, K)
    dev = float(np.max(np.abs(sf.values - sh.values)) / np.max(sf.values))
    return f, h, dev
