"""Regular grids and complex samples on them.

``Grid`` carries only geometry; ``GridField`` attaches a complex array.
Values are stored with shape ``grid.shape`` (row-major, axis 0 slowest).

GFLD1 file layout: one JSON header line
``{"magic": "GFLD1", "dim", "origin", "spacing", "shape", "dtype": "c128"}``
followed by raw little-endian complex128 values in row-major order.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimError
from .geometry import CompactBox

MAGIC = "GFLD1"


@dataclass(frozen=True)
class Grid:
    origin: np.ndarray
    spacing: np.ndarray
    shape: tuple[int, ...]

    def __post_init__(self):
        origin = np.atleast_1d(np.asarray(self.origin, dtype=float))
        spacing = np.atleast_1d(np.asarray(self.spacing, dtype=float))
        shape = tuple(int(n) for n in np.atleast_1d(self.shape))
        if not (len(origin) == len(spacing) == len(shape)):
            raise DimError("origin, spacing and shape must have equal length")
        if np.any(spacing <= 0) or any(n < 1 for n in shape):
            raise ValueError("spacing must be positive and shape entries >= 1")
        origin.setflags(write=False)
        spacing.setflags(write=False)
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "shape", shape)

    @classmethod
    def centered(cls, half_width, spacing, dim: int = 1) -> "Grid":
        """Grid on ``[-half_width, half_width]^dim`` with nodes at multiples of ``spacing``."""
        n = int(round(half_width / spacing))
        return cls(-n * spacing * np.ones(dim), spacing * np.ones(dim), (2 * n + 1,) * dim)

    @classmethod
    def covering(cls, box: CompactBox, spacing: float) -> "Grid":
        """Smallest grid on ``spacing * Z^d`` covering ``box``."""
        lo = np.floor(box.lo / spacing + 1e-9)
        hi = np.ceil(box.hi / spacing - 1e-9)
        shape = tuple(int(b - a) + 1 for a, b in zip(lo, hi))
        return cls(lo * spacing, spacing * np.ones(box.dim), shape)

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def axes(self) -> list[np.ndarray]:
        return [o + h * np.arange(n) for o, h, n in zip(self.origin, self.spacing, self.shape)]

    def nodes(self) -> np.ndarray:
        """All node coordinates, shape ``(size, dim)`` in row-major order."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def support_box(self) -> CompactBox:
        hi = self.origin + (np.asarray(self.shape) - 1) * self.spacing
        # a single-node axis gets a token width so the box stays valid
        hi = np.where(hi > self.origin, hi, self.origin + self.spacing * 1e-9)
        return CompactBox(self.origin, hi)

    def shifted(self, offset) -> "Grid":
        return Grid(self.origin + np.asarray(offset, dtype=float), self.spacing, self.shape)

    def padded(self, extra: int) -> "Grid":
        """Grid extended by ``extra`` nodes on both sides of every axis."""
        return Grid(self.origin - extra * self.spacing, self.spacing, tuple(n + 2 * extra for n in self.shape))

    def nearest_index(self, points, tol: float = 1e-9):
        """Integer node index of each point, or None when a point is off-grid by more than ``tol``."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        raw = (pts - self.origin) / self.spacing
        idx = np.rint(raw)
        if np.any(np.abs(raw - idx) * self.spacing > tol):
            return None
        return idx.astype(np.int64)

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "origin": self.origin.tolist(),
            "spacing": self.spacing.tolist(),
            "shape": list(self.shape),
        }

    @classmethod
    def from_json(cls, data: dict) -> "Grid":
        return cls(data["origin"], data["spacing"], tuple(data["shape"]))


@dataclass(frozen=True)
class GridField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.size != self.grid.size:
            raise DimError(f"{v.size} values for a grid of {self.grid.size} nodes")
        v = np.array(v.reshape(self.grid.shape))
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "GridField":
        """Sample ``fn(points)`` on the grid nodes; ``fn`` maps (n, d) to (n,)."""
        return cls(grid, np.asarray(fn(grid.nodes()), dtype=complex))

    @property
    def dim(self) -> int:
        return self.grid.dim

    def flat(self) -> np.ndarray:
        return self.values.ravel()

    def energy(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2) * self.grid.cell_volume)

    def support_box(self) -> CompactBox:
        return self.grid.support_box()

    def with_values(self, values) -> "GridField":
        return GridField(self.grid, values)

    def scaled(self, c: complex) -> "GridField":
        return GridField(self.grid, c * self.values)

    def write(self, path) -> None:
        header = dict(magic=MAGIC, **self.grid.to_json(), dtype="c128")
        data = np.ascontiguousarray(self.values, dtype="<c16").tobytes()
        with open(path, "wb") as fh:
            fh.write((json.dumps(header) + "\n").encode())
            fh.write(data)

    @classmethod
    def read(cls, path) -> "GridField":
        raw = Path(path).read_bytes()
        nl = raw.index(b"\n")
        header = json.loads(raw[:nl].decode())
        if header.get("magic") != MAGIC or header.get("dtype") != "c128":
            raise ValueError(f"{path}: not a GFLD1 complex128 file")
        grid = Grid.from_json(header)
        values = np.frombuffer(raw[nl + 1 :], dtype="<c16")
        return cls(grid, values.astype(complex))


def inner(f: GridField, g: GridField) -> complex:
    """Riemann inner product ``sum f * conj(g) * cell``."""
    return complex(np.vdot(g.values, f.values) * f.grid.cell_volume)


def aligned_error(estimate, truth) -> float:
    """``min_tau |estimate - tau * truth| / |truth|`` over unit-modulus ``tau``.

    Accepts GridFields or arrays.  The optimum is ``tau = phase(<estimate, truth>)``.
    """
    a = np.ravel(estimate.values if isinstance(estimate, GridField) else estimate)
    b = np.ravel(truth.values if isinstance(truth, GridField) else truth)
    nb = np.linalg.norm(b)
    if nb == 0:
        raise ValueError("reference signal is zero")
    c = np.vdot(b, a)
    tau = c / abs(c) if c != 0 else 1.0
    return float(np.linalg.norm(a - tau * b) / nb)
