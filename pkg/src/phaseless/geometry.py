"""Lattices, boxes and countable point sets.

Conventions
-----------
* A lattice is ``A @ Z^d`` with the generator ``A`` acting on integer column
  vectors.  Its reciprocal lattice has generator ``inv(A).T``.
* The fundamental domain of a lattice is the centered half-open cell
  ``A @ [-1/2, 1/2)^d``.  Containment is tested with a strict-interior
  tolerance, so boundary-touching boxes are rejected.
* Lattice points are enumerated by increasing l-infinity index shell, and
  lexicographically inside a shell.  Primes and the other 1-D families are
  enumerated by magnitude.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from scipy.spatial.distance import pdist
from scipy.special import gamma as gamma_fn

from .errors import DimError, SingularLattice, TooFewPoints

DET_EPS = 1e-10
CELL_TOL = 1e-12


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Lattice:
    generator: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.generator, dtype=float))
        if A.shape[0] != A.shape[1]:
            raise DimError(f"generator must be square, got shape {A.shape}")
        s = np.linalg.svd(A, compute_uv=False)
        if s[0] == 0 or s[-1] <= DET_EPS * s[0]:
            raise SingularLattice(f"near-singular generator (singular values {s})")
        object.__setattr__(self, "generator", _frozen(A))

    @classmethod
    def diagonal(cls, spacings: Sequence[float]) -> "Lattice":
        return cls(np.diag(np.asarray(spacings, dtype=float)))

    @classmethod
    def scaled_integer(cls, spacing: float, dim: int = 1) -> "Lattice":
        """``spacing * Z^dim``."""
        return cls(spacing * np.eye(dim))

    @property
    def dim(self) -> int:
        return self.generator.shape[0]

    @property
    def volume(self) -> float:
        return float(abs(np.linalg.det(self.generator)))

    @property
    def density(self) -> float:
        return 1.0 / self.volume

    def is_diagonal(self) -> bool:
        A = self.generator
        return bool(np.all(A == np.diag(np.diag(A))))

    def points(self, indices) -> np.ndarray:
        """Map integer index vectors (n, d) to lattice points (n, d)."""
        idx = np.atleast_2d(np.asarray(indices, dtype=float))
        return idx @ self.generator.T

    def coords(self, points) -> np.ndarray:
        """Coordinates of points in the lattice basis, ``inv(A) @ p``."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.linalg.solve(self.generator, pts.T).T

    def indices_in_box(self, lo, hi, half_open: bool = True) -> np.ndarray:
        """Integer indices of lattice points inside the box ``[lo, hi)`` (or ``[lo, hi]``)."""
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        corners = np.array(list(itertools.product(*zip(lo, hi))))
        c = self.coords(corners)
        kmin = np.floor(c.min(axis=0)) - 1
        kmax = np.ceil(c.max(axis=0)) + 1
        axes = [np.arange(a, b + 1) for a, b in zip(kmin, kmax)]
        idx = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.dim)
        pts = self.points(idx)
        scale = max(1.0, float(np.abs(np.concatenate([lo, hi])).max()))
        eps = 1e-12 * scale
        if half_open:
            keep = np.all((pts >= lo - eps) & (pts < hi - eps), axis=1)
        else:
            keep = np.all((pts >= lo - eps) & (pts <= hi + eps), axis=1)
        return idx[keep].astype(np.int64)

    def to_json(self) -> dict:
        return {"dim": self.dim, "generator": self.generator.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> "Lattice":
        lat = cls(np.asarray(data["generator"], dtype=float))
        if "dim" in data and int(data["dim"]) != lat.dim:
            raise DimError("dim does not match generator shape")
        return lat


@dataclass(frozen=True)
class CompactBox:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise DimError("lo and hi must be vectors of equal length")
        if not np.all(lo < hi):
            raise ValueError(f"need lo < hi componentwise, got {lo} and {hi}")
        object.__setattr__(self, "lo", _frozen(lo))
        object.__setattr__(self, "hi", _frozen(hi))

    @classmethod
    def symmetric(cls, kappa: float, dim: int = 1) -> "CompactBox":
        """The cube ``[-kappa, kappa]^dim``."""
        return cls(-kappa * np.ones(dim), kappa * np.ones(dim))

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    @property
    def widths(self) -> np.ndarray:
        return self.hi - self.lo

    @property
    def volume(self) -> float:
        return float(np.prod(self.widths))

    def diam_inf(self) -> float:
        return float(self.widths.max())

    def difference(self) -> "CompactBox":
        """Minkowski difference ``K - K``."""
        return CompactBox(self.lo - self.hi, self.hi - self.lo)

    def corners(self) -> np.ndarray:
        return np.array(list(itertools.product(*zip(self.lo, self.hi))))

    def contains_points(self, points, tol: float = 0.0) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.all((pts >= self.lo - tol) & (pts <= self.hi + tol), axis=1)

    def contains_box(self, other: "CompactBox") -> bool:
        return bool(np.all(other.lo >= self.lo) and np.all(other.hi <= self.hi))

    def to_json(self) -> dict:
        return {"lo": self.lo.tolist(), "hi": self.hi.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> "CompactBox":
        return cls(data["lo"], data["hi"])


def reciprocal(lat: Lattice) -> Lattice:
    return Lattice(np.linalg.inv(lat.generator).T)


def cell_slack(lat: Lattice, box: CompactBox) -> float:
    """Smallest distance (in cell coordinates) from a box corner to the cell boundary.

    Positive exactly when every corner sits strictly inside ``[-1/2, 1/2)^d``.
    """
    if lat.dim != box.dim:
        raise DimError(f"lattice dim {lat.dim} != box dim {box.dim}")
    c = lat.coords(box.corners())
    return float(np.min(0.5 - np.abs(c)))


def fundamental_domain_contains(lat: Lattice, box: CompactBox) -> bool:
    """Whether ``box`` lies inside the centered fundamental cell of ``lat``.

    The cell is a parallelepiped and the box is convex, so testing the corners
    suffices.
    """
    return cell_slack(lat, box) >= CELL_TOL


# --------------------------------------------------------------------------
# countable sets


def primes_upto(n: int) -> np.ndarray:
    """All primes ``<= n`` by the sieve of Eratosthenes."""
    n = int(n)
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, int(math.isqrt(n)) + 1):
        if sieve[p]:
            sieve[p * p :: p] = False
    return np.nonzero(sieve)[0].astype(np.int64)


def _nth_prime_bound(n: int) -> int:
    if n < 6:
        return 15
    ln = math.log(n)
    return int(n * (ln + math.log(ln))) + 10


def _shell_indices(dim: int, k: int) -> np.ndarray:
    """Integer vectors with l-infinity norm exactly k, in lexicographic order."""
    if k == 0:
        return np.zeros((1, dim), dtype=np.int64)
    rng = np.arange(-k, k + 1)
    grid = np.stack(np.meshgrid(*([rng] * dim), indexing="ij"), axis=-1).reshape(-1, dim)
    return grid[np.abs(grid).max(axis=1) == k]


_KINDS = ("lattice", "arithmetic", "geometric", "primes", "explicit")


@dataclass(frozen=True)
class CountableSet:
    """A countable subset of R^d from one of a few parametrised families.

    Use the classmethod constructors; the raw fields are only meaningful for
    the matching ``kind``.
    """

    kind: str
    dim: int = 1
    lattice: Lattice | None = None
    a: float = 0.0
    b: float = 1.0
    q: float = 2.0
    scale: float = 1.0
    explicit_points: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.kind == "lattice":
            if self.lattice is None:
                raise ValueError("lattice kind needs a Lattice")
            object.__setattr__(self, "dim", self.lattice.dim)
        elif self.kind == "explicit":
            pts = np.asarray(self.explicit_points, dtype=float)
            if pts.ndim == 1:
                pts = pts[:, None]
            if pts.shape[1] != self.dim:
                object.__setattr__(self, "dim", pts.shape[1])
            if len(np.unique(pts, axis=0)) != len(pts):
                raise ValueError("explicit set contains duplicate points")
            object.__setattr__(self, "explicit_points", _frozen(pts))
        else:
            if self.dim != 1:
                raise DimError(f"{self.kind} sets are one-dimensional")
            if self.kind == "arithmetic" and not self.b > 0:
                raise ValueError("arithmetic step b must be positive")
            if self.kind == "geometric" and not (self.q > 1 and self.scale > 0):
                raise ValueError("geometric needs q > 1 and scale > 0")
            if self.kind == "primes" and not self.scale > 0:
                raise ValueError("primes scale must be positive")

    # constructors
    @classmethod
    def from_lattice(cls, lat: Lattice) -> "CountableSet":
        return cls(kind="lattice", lattice=lat)

    @classmethod
    def arithmetic(cls, a: float, b: float) -> "CountableSet":
        """``{a + b n : n = 0, 1, 2, ...}``."""
        return cls(kind="arithmetic", a=float(a), b=float(b))

    @classmethod
    def geometric(cls, q: float, scale: float = 1.0) -> "CountableSet":
        """``{scale * q**n : n = 0, 1, 2, ...}``."""
        return cls(kind="geometric", q=float(q), scale=float(scale))

    @classmethod
    def primes(cls, scale: float = 1.0) -> "CountableSet":
        return cls(kind="primes", scale=float(scale))

    @classmethod
    def explicit(cls, points) -> "CountableSet":
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        return cls(kind="explicit", dim=pts.shape[1], explicit_points=pts)

    @property
    def is_finite(self) -> bool:
        return self.kind == "explicit"

    # enumeration
    def enumerate(self, n: int) -> np.ndarray:
        """The first ``n`` points in canonical order, shape (m, dim) with m <= n."""
        n = int(n)
        if n <= 0:
            return np.zeros((0, self.dim))
        if self.kind == "lattice":
            return self.lattice.points(self.lattice_indices(n))
        if self.kind == "arithmetic":
            return (self.a + self.b * np.arange(n, dtype=float))[:, None]
        if self.kind == "geometric":
            return (self.scale * self.q ** np.arange(n, dtype=float))[:, None]
        if self.kind == "primes":
            ps = primes_upto(_nth_prime_bound(n))
            return (self.scale * ps[:n].astype(float))[:, None]
        return np.array(self.explicit_points[:n])

    def lattice_indices(self, n: int) -> np.ndarray:
        if self.kind != "lattice":
            raise ValueError("lattice_indices is only defined for lattice sets")
        out, total, k = [], 0, 0
        while total < n:
            shell = _shell_indices(self.dim, k)
            out.append(shell)
            total += len(shell)
            k += 1
        return np.concatenate(out)[:n]

    def index_labels(self, n: int) -> np.ndarray:
        """Integer labels written to files: lattice coordinates, else ordinals."""
        if self.kind == "lattice":
            return self.lattice_indices(n)
        m = len(self.enumerate(n))
        lab = np.zeros((m, self.dim), dtype=np.int64)
        lab[:, 0] = np.arange(m)
        return lab

    def iter_points(self) -> Iterator[np.ndarray]:
        k = 0
        while True:
            chunk = self.enumerate(2 ** (k + 4))
            start = 0 if k == 0 else 2 ** (k + 3)
            for p in chunk[start:]:
                yield p
            if self.is_finite and len(chunk) < 2 ** (k + 4):
                return
            k += 1

    def points_in_cube(self, r: float) -> np.ndarray:
        """Points of the set inside the open cube ``(-r, r)^d``."""
        return self._points_within(r, "cube")

    def points_in_ball(self, r: float) -> np.ndarray:
        """Points of the set inside the closed Euclidean ball of radius r."""
        return self._points_within(r, "ball")

    def _points_within(self, r: float, shape: str) -> np.ndarray:
        def keep(pts):
            if shape == "cube":
                return pts[np.all(np.abs(pts) < r, axis=1)]
            return pts[np.linalg.norm(pts, axis=1) <= r * (1 + 1e-15)]

        if self.kind == "lattice":
            lo, hi = -r * np.ones(self.dim), r * np.ones(self.dim)
            idx = self.lattice.indices_in_box(lo, hi, half_open=False)
            return keep(self.lattice.points(idx))
        if self.kind == "arithmetic":
            n_max = max(0, int(math.floor((r - self.a) / self.b)) + 1)
            return keep(self.enumerate(n_max + 1))
        if self.kind == "geometric":
            n_max = max(0, int(math.floor(math.log(r / self.scale, self.q))) + 2) if r > self.scale else 1
            return keep(self.enumerate(n_max))
        if self.kind == "primes":
            ps = primes_upto(int(math.floor(r / self.scale)) + 1)
            return keep((self.scale * ps.astype(float))[:, None])
        return keep(np.array(self.explicit_points))

    def to_json(self) -> dict:
        if self.kind == "lattice":
            return {"kind": "lattice", "lattice": self.lattice.to_json()}
        if self.kind == "arithmetic":
            return {"kind": "arithmetic", "a": self.a, "b": self.b}
        if self.kind == "geometric":
            return {"kind": "geometric", "q": self.q, "scale": self.scale}
        if self.kind == "primes":
            return {"kind": "primes", "scale": self.scale}
        return {"kind": "explicit", "points": self.explicit_points.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> "CountableSet":
        kind = data["kind"]
        if kind == "lattice":
            return cls.from_lattice(Lattice.from_json(data["lattice"]))
        if kind == "arithmetic":
            return cls.arithmetic(data["a"], data["b"])
        if kind == "geometric":
            return cls.geometric(data["q"], data.get("scale", 1.0))
        if kind == "primes":
            return cls.primes(data.get("scale", 1.0))
        if kind == "explicit":
            return cls.explicit(data["points"])
        raise ValueError(f"unknown countable set kind {kind!r}")


def ball_volume(radius: float, dim: int) -> float:
    return math.pi ** (dim / 2) * radius**dim / float(gamma_fn(dim / 2 + 1))


def density_estimate(s: CountableSet, radius: float) -> float:
    """``#(S ∩ B_r(0)) / vol(B_r(0))`` (ball normalisation)."""
    if not radius > 0:
        raise ValueError("radius must be positive")
    return len(s.points_in_ball(radius)) / ball_volume(radius, s.dim)


def cube_density(s: CountableSet, radius: float) -> float:
    """``#(S ∩ (-r, r)^d) / (2r)^d`` (cube normalisation used for D^+/D^-)."""
    if not radius > 0:
        raise ValueError("radius must be positive")
    return len(s.points_in_cube(radius)) / (2.0 * radius) ** s.dim


def separation(s: CountableSet, horizon: int) -> float:
    """Minimum pairwise Euclidean distance among the first ``horizon`` points."""
    pts = s.enumerate(horizon)
    if len(pts) < 2:
        raise TooFewPoints(f"need at least 2 points, got {len(pts)}")
    return float(pdist(pts).min())
