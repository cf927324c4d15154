"""Shannon sampling on lattices, band-limit projection and zero flipping.

For a lattice ``Gamma`` and a box ``D`` tiling space under the reciprocal
lattice, every function with spectrum in ``D`` satisfies
``f(t) = sum_gamma f(gamma) r(t - gamma)`` with
``r(t) = vol(Gamma) * int_D exp(2 pi i x.t) dx``.  For a box the integral
is a product of shifted sincs.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import BadDomain, CoverageError, DegenerateFlip, DimError
from .geometry import CompactBox, Lattice
from .grid import Grid, GridField
from .transforms import cft

VOL_TOL = 1e-9
ZERO_TOL = 1e-10


@dataclass(frozen=True)
class ShannonKernel:
    lattice: Lattice
    domain: CompactBox
    normalization: float

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if t.ndim <= 1 and self.lattice.dim == 1:
            t = t.reshape(-1, 1)
        t = np.atleast_2d(t)
        centre = 0.5 * (self.domain.lo + self.domain.hi)
        width = self.domain.widths
        # int_lo^hi exp(2 pi i x t) dx = width * sinc(width t) * exp(2 pi i centre t)
        val = np.prod(width * np.sinc(width * t), axis=1) * np.exp(2j * np.pi * (t @ centre))
        return self.normalization * val


def shannon_kernel(gamma: Lattice, D: CompactBox | None = None) -> ShannonKernel:
    """Reconstruction kernel for ``gamma``; ``D`` defaults to the centred reciprocal cell."""
    if D is None:
        if not gamma.is_diagonal():
            raise BadDomain("a default box cell exists only for diagonal lattices")
        half = 0.5 / np.abs(np.diag(gamma.generator))
        D = CompactBox(-half, half)
    if D.dim != gamma.dim:
        raise DimError("domain and lattice dimensions differ")
    if abs(D.volume * gamma.volume - 1.0) > VOL_TOL:
        raise BadDomain(f"vol(D) * vol(Gamma) = {D.volume * gamma.volume:.12g}, expected 1")
    k = ShannonKernel(gamma, D, gamma.volume)
    # a box of the right volume can still fail to tile; check the nearest lattice points
    nb = np.array([v for v in np.ndindex(*([3] * gamma.dim)) if any(c != 1 for c in v)]) - 1
    if len(nb) and np.max(np.abs(k(gamma.points(nb)))) > ZERO_TOL:
        raise BadDomain("D is not a fundamental cell of the reciprocal lattice")
    return k


def _coverage(kernel: ShannonKernel, gamma_points: np.ndarray, targets: np.ndarray, radius: float) -> None:
    lat = kernel.lattice
    have = {tuple(v) for v in np.rint(lat.coords(gamma_points)).astype(np.int64)}
    missing = 0
    for t in targets:
        idx = lat.indices_in_box(t - radius, t + radius, half_open=False)
        pts = lat.points(idx)
        near = np.linalg.norm(pts - t, axis=1) <= radius
        for v in idx[near]:
            if tuple(v) not in have:
                missing += 1
    if missing:
        raise CoverageError(f"{missing} required lattice samples are missing within the truncation radius")


def shannon_interpolate(
    gamma_points,
    values,
    kernel: ShannonKernel,
    targets,
    truncation_radius: float,
    envelope: Callable[[np.ndarray], np.ndarray] | None = None,
    check_coverage: bool = True,
    chunk: int = 512,
):
    """Truncated Shannon series ``sum_{|gamma - t| <= R} f(gamma) r(t - gamma)``.

    ``gamma_points`` (n, d) and ``values`` (n,) are the lattice samples.
    Without ``envelope`` the interpolated values are returned.  With an
    envelope ``|f(gamma)| <= envelope(|gamma|)`` the pair ``(values, bound)``
    is returned, where ``bound`` sums the envelope against ``|r|`` over the
    omitted lattice points out to ten truncation radii.
    """
    d = kernel.lattice.dim
    gp = np.asarray(gamma_points, dtype=float).reshape(-1, d)
    vals = np.asarray(values, dtype=complex).ravel()
    tg = np.asarray(targets, dtype=float).reshape(-1, d)
    if len(gp) != len(vals):
        raise DimError("one value per lattice point is required")
    if check_coverage:
        _coverage(kernel, gp, tg, truncation_radius)
    out = np.empty(len(tg), dtype=complex)
    for s in range(0, len(tg), chunk):
        t = tg[s : s + chunk]
        diff = t[:, None, :] - gp[None, :, :]
        dist = np.linalg.norm(diff, axis=2)
        R = kernel(diff.reshape(-1, d)).reshape(dist.shape)
        R[dist > truncation_radius] = 0.0
        out[s : s + chunk] = R @ vals
    if envelope is None:
        return out
    lat = kernel.lattice
    far = 10.0 * truncation_radius
    bound = 0.0
    for t in tg:
        idx = lat.indices_in_box(t - far, t + far, half_open=False)
        pts = lat.points(idx)
        dist = np.linalg.norm(pts - t, axis=1)
        tail = dist > truncation_radius
        r = np.abs(kernel(t - pts[tail]))
        bound = max(bound, float(np.sum(envelope(np.linalg.norm(pts[tail], axis=1)) * r)))
    return out, bound


def bandlimit_project(field: GridField, box: CompactBox) -> GridField:
    """Zero the grid spectrum outside ``box`` and transform back."""
    if box.dim != field.dim:
        raise DimError("box and field dimensions differ")
    F = cft(field, -1)
    keep = box.contains_points(F.grid.nodes(), tol=1e-12).reshape(F.grid.shape)
    F = F.with_values(np.where(keep, F.values, 0.0))
    back = cft(F, +1, out_origin=field.grid.origin)
    return GridField(field.grid, back.values)


def zero_flip_pair(z0: complex, grid: Grid) -> tuple[GridField, GridField]:
    """``f(t) = (t - z0) sinc^2(t)`` and its flip ``h(t) = (t - conj z0) sinc^2(t)``.

    On the real line ``|f| = |h|`` while ``f`` and ``h`` differ by more than a
    global phase whenever ``z0`` is not real.
    """
    if grid.dim != 1:
        raise DimError("zero flipping is implemented for one-dimensional grids")
    z0 = complex(z0)
    if z0.imag == 0:
        raise DegenerateFlip("a real zero flips onto itself")
    t = grid.axes()[0]
    base = np.sinc(t) ** 2
    return GridField(grid, (t - z0) * base), GridField(grid, (t - np.conj(z0)) * base)


def sinc_envelope(decay_power: float = 2.0, scale: float = 1.0) -> Callable[[np.ndarray], np.ndarray]:
    """Envelope ``scale / max(1, |x|)^p`` for use with ``shannon_interpolate``."""

    def env(r):
        return scale / np.maximum(1.0, np.asarray(r)) ** decay_power

    return env


__all__ = [
    "ShannonKernel",
    "shannon_kernel",
    "shannon_interpolate",
    "bandlimit_project",
    "zero_flip_pair",
    "sinc_envelope",
]
