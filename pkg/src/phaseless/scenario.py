"""JSON scenarios: window, support, sampling sets, signal and solver settings.

A scenario is a pure description; every random choice is drawn from one
``numpy.random.default_rng(seed)`` so outputs are a function of the file
and the seed.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .geometry import CompactBox, CountableSet, Lattice
from .grid import Grid, GridField
from .paley_wiener import bandlimit_project
from .recovery import RecoveryConfig
from .transforms import check_support
from .windows import WindowSpec, hermite_function

SIGNAL_KINDS = ("gaussian_bump", "hermite_combo", "random_bandpass", "from_file", "zero")

DEFAULT_THRESHOLDS = {"interpolation": 1e-6, "lsq_max": 1e-3, "assembly": 1e-2}


def _complex(v) -> complex:
    if isinstance(v, (list, tuple)):
        return complex(v[0], v[1] if len(v) > 1 else 0.0)
    return complex(v)


@dataclass(frozen=True)
class Scenario:
    window: WindowSpec
    K: CompactBox
    lam: CountableSet
    horizon: int
    gamma: Lattice
    signal: dict
    cfg: RecoveryConfig
    seed: int = 0
    thresholds: tuple = tuple(sorted(DEFAULT_THRESHOLDS.items()))
    base_dir: str = "."

    @property
    def grid(self) -> Grid:
        return self.cfg.signal_grid

    def synthesize(self) -> GridField:
        return synthesize_signal(self.signal, self.grid, self.seed, self.base_dir)

    def with_overrides(self, **kw) -> "Scenario":
        cfg_kw = {k: kw.pop(k) for k in ("svd_tol", "shannon_radius", "gate_policy", "threads") if kw.get(k) is not None}
        out = self
        if "seed" in kw and kw["seed"] is not None:
            out = replace(out, seed=int(kw["seed"]), cfg=replace(out.cfg, seed=int(kw["seed"])))
        if kw.get("horizon") is not None:
            out = replace(out, horizon=int(kw["horizon"]))
        if cfg_kw:
            out = replace(out, cfg=replace(out.cfg, **cfg_kw))
        return out

    def to_json(self) -> dict:
        return {
            "window": self.window.to_json(),
            "K": self.K.to_json(),
            "lambda": {"set": self.lam.to_json(), "horizon": self.horizon},
            "gamma": self.gamma.to_json(),
            "signal": self.signal,
            "grid_spacing": self.grid.spacing.tolist(),
            "cfg": {k: v for k, v in self.cfg.to_json().items() if k not in ("signal_grid", "seed")},
            "thresholds": dict(self.thresholds),
            "seed": self.seed,
        }


def scenario_from_dict(data: dict, base_dir: str = ".") -> Scenario:
    window = WindowSpec.from_json(data["window"])
    K = CompactBox.from_json(data["K"])
    lam = CountableSet.from_json(data["lambda"]["set"])
    horizon = int(data["lambda"]["horizon"])
    gamma = Lattice.from_json(data["gamma"])
    spacing = np.broadcast_to(np.asarray(data.get("grid_spacing", 2.0**-6), dtype=float), (K.dim,))
    grid = Grid.covering(K, float(spacing[0])) if np.all(spacing == spacing[0]) else _aniso_grid(K, spacing)
    seed = int(data.get("seed", 0))
    c = dict(data.get("cfg", {}))
    cfg = RecoveryConfig(
        signal_grid=grid,
        svd_tol=float(c.get("svd_tol", 1e-8)),
        shannon_radius=c.get("shannon_radius"),
        gate_policy=c.get("gate_policy", "enforce"),
        measurement=c.get("measurement", "closed_form"),
        restrict_support=bool(c.get("restrict_support", True)),
        threads=int(c.get("threads", 1)),
        seed=seed,
    )
    signal = dict(data["signal"])
    if signal.get("kind") not in SIGNAL_KINDS:
        raise ValueError(f"unknown signal kind {signal.get('kind')!r}")
    thr = dict(DEFAULT_THRESHOLDS)
    thr.update(data.get("thresholds", {}))
    return Scenario(window, K, lam, horizon, gamma, signal, cfg, seed, tuple(sorted(thr.items())), base_dir)


def _aniso_grid(K: CompactBox, spacing) -> Grid:
    lo = np.floor(K.lo / spacing + 1e-9)
    hi = np.ceil(K.hi / spacing - 1e-9)
    return Grid(lo * spacing, spacing, tuple(int(b - a) + 1 for a, b in zip(lo, hi)))


def load_scenario(path) -> Scenario:
    p = Path(path)
    data = json.loads(p.read_text())
    return scenario_from_dict(data, str(p.parent))


def synthesize_signal(spec: dict, grid: Grid, seed: int = 0, base_dir: str = ".") -> GridField:
    kind = spec["kind"]
    t = grid.nodes()
    if kind == "zero":
        return GridField(grid, np.zeros(grid.size))
    if kind == "gaussian_bump":
        centre = np.broadcast_to(np.asarray(spec.get("center", 0.0), dtype=float), (grid.dim,))
        rate = float(spec.get("rate", 1.5))
        amp = _complex(spec.get("amplitude", 1.0))
        ramp = np.broadcast_to(np.asarray(spec.get("phase_ramp", 0.0), dtype=float), (grid.dim,))
        vals = amp * np.exp(-math.pi * rate * np.sum((t - centre) ** 2, axis=1)) * np.exp(2j * math.pi * (t @ ramp))
        return GridField(grid, vals)
    if kind == "hermite_combo":
        if grid.dim != 1:
            raise ValueError("hermite_combo signals are one-dimensional")
        width = float(spec.get("width", 0.35))
        coeffs = [_complex(c) for c in spec["coeffs"]]
        x = t[:, 0] / width
        vals = sum(c * hermite_function(n, x) for n, c in enumerate(coeffs))
        return GridField(grid, vals)
    if kind == "random_bandpass":
        rng = np.random.default_rng(int(spec.get("seed", seed)))
        band = float(spec.get("band", 4.0))
        rate = float(spec.get("taper_rate", 2.0))
        noise = rng.standard_normal(grid.size) + 1j * rng.standard_normal(grid.size)
        smooth = bandlimit_project(GridField(grid, noise), CompactBox.symmetric(band, grid.dim))
        taper = np.exp(-math.pi * rate * np.sum(t**2, axis=1))
        vals = smooth.flat() * taper
        return GridField(grid, vals / np.max(np.abs(vals)))
    if kind == "from_file":
        path = Path(spec["path"])
        if not path.is_absolute():
            path = Path(base_dir) / path
        return _fit_to_grid(GridField.read(path), grid)
    raise ValueError(f"unknown signal kind {kind!r}")


def _fit_to_grid(fld: GridField, grid: Grid) -> GridField:
    """Restrict a field on a larger aligned grid to ``grid``; energy outside raises SupportError."""
    if fld.grid.dim != grid.dim or not np.allclose(fld.grid.spacing, grid.spacing):
        raise ValueError("signal file spacing does not match the scenario grid")
    off = np.rint((grid.origin - fld.grid.origin) / grid.spacing)
    if not np.allclose(off * grid.spacing, grid.origin - fld.grid.origin, atol=1e-9):
        raise ValueError("signal file grid is not aligned with the scenario grid")
    off = off.astype(int)
    if fld.grid.shape == grid.shape and not off.any():
        return fld
    check_support(fld, grid.support_box())
    out = np.zeros(grid.shape, dtype=complex)
    src, dst = [], []
    for o, n_src, n_dst in zip(off, fld.grid.shape, grid.shape):
        lo, hi = max(o, 0), min(o + n_dst, n_src)
        if hi <= lo:
            return GridField(grid, out)
        src.append(slice(lo, hi))
        dst.append(slice(lo - o, hi - o))
    out[tuple(dst)] = fld.values[tuple(src)]
    return GridField(grid, out)


def headline_dict() -> dict:
    """The reference one-dimensional scenario."""
    return {
        "window": WindowSpec.standard_gaussian().to_json(),
        "K": {"lo": [-1.0], "hi": [1.0]},
        "lambda": {"set": {"kind": "lattice", "lattice": {"dim": 1, "generator": [[0.25]]}}, "horizon": 17},
        "gamma": {"dim": 1, "generator": [[0.2]]},
        "signal": {"kind": "gaussian_bump", "center": [0.1], "rate": 1.5, "amplitude": [1.0, 0.3]},
        "grid_spacing": 2.0**-6,
        "cfg": {"svd_tol": 1e-10, "gate_policy": "enforce"},
        "seed": 0,
    }
