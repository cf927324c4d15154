"""Window families and their exponential-type metadata.

Every window is a ``WindowSpec``.  Besides the evaluation data each spec
carries ``alpha`` (exponential type of the entire prefactor) and ``beta``
(a bound on ``||A + A^T||_1`` of the Gaussian part), from which the lambda
gate computes its budget ``2 alpha + beta * diam_inf(K)``.

Families
--------
gaussian     ``gain * exp(-(t - nu)^T A (t - nu))``
hermite      tensor product of L2-normalised Hermite functions
             ``h_n(t) = (2 pi)^{1/4} psi_n(sqrt(2 pi) t)``
airy         ``(a J1(2 pi |w| a) / |w|)^2`` in two dimensions
bandlimited  inverse Fourier transform of a piecewise-constant spectrum
tabulated    samples on a grid, multilinear interpolation, zero outside

Any family may additionally carry a periodic multiplier
``prod_j (offset + amplitude * cos(2 pi t_j / period_j))``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import DimError, MissingClassData, ZeroWindow
from .geometry import CompactBox
from .grid import Grid, GridField

FAMILIES = ("gaussian", "hermite", "airy", "bandlimited", "tabulated")

SERIES_CUTOFF = 12.0


# --------------------------------------------------------------------------
# special functions


def _j1_series(x: np.ndarray) -> np.ndarray:
    half = x / 2.0
    term = half.copy()
    total = term.copy()
    sq = half * half
    for m in range(1, 80):
        term = -term * sq / (m * (m + 1))
        total += term
        if np.all(np.abs(term) <= 1e-17 * np.maximum(np.abs(total), 1e-300)):
            break
    return total


def _j1_hankel(x: np.ndarray) -> np.ndarray:
    # P and Q asymptotic series for nu = 1, mu = 4 nu^2 = 4
    mu = 4.0
    p = np.ones_like(x)
    q = np.zeros_like(x)
    coef = 1.0
    z = 8.0 * x
    best = np.full_like(x, np.inf)
    done = np.zeros(x.shape, dtype=bool)
    for k in range(1, 60):
        coef = coef * (mu - (2 * k - 1) ** 2) / k
        term = coef / z**k
        mag = np.abs(term)
        grow = mag >= best
        done |= grow
        live = ~done
        sign = (-1) ** (k // 2)
        if k % 2:
            q = np.where(live, q + sign * term, q)
        else:
            p = np.where(live, p + sign * term, p)
        best = np.where(live, mag, best)
        done |= mag < 1e-17
        if np.all(done):
            break
    chi = x - 0.75 * math.pi
    return np.sqrt(2.0 / (math.pi * x)) * (p * np.cos(chi) - q * np.sin(chi))


def bessel_j1(x):
    """Bessel function of the first kind, order one.

    Power series up to ``|x| = 12``, Hankel asymptotic expansion beyond.
    Accepts scalars or arrays; returns the same kind.
    """
    arr = np.asarray(x, dtype=float)
    ax = np.abs(arr)
    out = np.empty_like(ax)
    small = ax <= SERIES_CUTOFF
    if np.any(small):
        out[small] = _j1_series(ax[small])
    if np.any(~small):
        out[~small] = _j1_hankel(ax[~small])
    out = np.sign(arr) * out
    return float(out) if np.ndim(x) == 0 else out


def hermite_functions(n_max: int, t) -> np.ndarray:
    """Rows ``h_0 .. h_{n_max}`` evaluated at ``t`` (1-D), via the three-term recurrence."""
    t = np.asarray(t, dtype=float)
    x = math.sqrt(2.0 * math.pi) * t
    out = np.empty((n_max + 1,) + t.shape)
    out[0] = 2.0**0.25 * np.exp(-math.pi * t * t)
    if n_max >= 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for n in range(1, n_max):
        out[n + 1] = math.sqrt(2.0 / (n + 1)) * x * out[n] - math.sqrt(n / (n + 1)) * out[n - 1]
    return out


def hermite_function(n: int, t) -> np.ndarray:
    return hermite_functions(n, t)[n]


# --------------------------------------------------------------------------
# window specs


def _as_matrix(A, dim=None) -> np.ndarray:
    M = np.atleast_2d(np.asarray(A, dtype=complex))
    if M.shape[0] != M.shape[1]:
        raise DimError("Gaussian matrix must be square")
    if dim is not None and M.shape[0] != dim:
        raise DimError("matrix size does not match dim")
    if np.all(M.imag == 0):
        M = M.real.astype(float)
    return M


@dataclass(frozen=True)
class WindowSpec:
    """Tagged window description.  Build with the classmethods."""

    family: str
    dim: int
    alpha: float | None = None
    beta: float | None = None
    gain: complex = 1.0
    A: np.ndarray | None = field(default=None, repr=False)
    nu: np.ndarray | None = field(default=None, repr=False)
    k: tuple[int, ...] | None = None
    a: float | None = None
    field_: GridField | None = field(default=None, repr=False)
    multiplier: tuple | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown window family {self.family!r}")

    # constructors ---------------------------------------------------------
    @classmethod
    def gaussian(cls, A, nu=None, gain: complex = 1.0) -> "WindowSpec":
        M = _as_matrix(A)
        d = M.shape[0]
        nu_ = np.zeros(d) if nu is None else np.atleast_1d(np.asarray(nu, dtype=complex))
        if np.all(np.imag(nu_) == 0):
            nu_ = np.real(nu_).astype(float)
        if nu_.shape != (d,):
            raise DimError("nu must have length dim")
        beta = float(np.linalg.norm(M + M.T, 1))
        return cls("gaussian", d, alpha=0.0, beta=beta, gain=complex(gain), A=M, nu=nu_)

    @classmethod
    def gaussian_from_exponent(cls, A, b, c: complex = 0.0) -> "WindowSpec":
        """``exp(-t^T A t + b^T t + c)`` folded into centre ``nu`` and a gain."""
        M = _as_matrix(A)
        S = 0.5 * (M + M.T)
        nu = np.linalg.solve(2.0 * S, np.asarray(b, dtype=complex))
        gain = np.exp(c + nu @ S @ nu)
        return cls.gaussian(M, nu, gain)

    @classmethod
    def standard_gaussian(cls, dim: int = 1) -> "WindowSpec":
        """``exp(-pi |t|^2)``."""
        return cls.gaussian(math.pi * np.eye(dim))

    @classmethod
    def hermite(cls, k) -> "WindowSpec":
        kk = tuple(int(v) for v in np.atleast_1d(k))
        if any(v < 0 for v in kk):
            raise ValueError("Hermite indices must be non-negative")
        return cls("hermite", len(kk), alpha=0.0, beta=2.0 * math.pi, k=kk)

    @classmethod
    def airy(cls, a: float, dim: int = 2) -> "WindowSpec":
        if dim != 2:
            raise DimError("the Airy disk window is two-dimensional")
        if not a > 0:
            raise ValueError("Airy radius must be positive")
        return cls("airy", 2, alpha=4.0 * math.pi * a, beta=0.0, a=float(a))

    @classmethod
    def bandlimited(cls, spectrum: GridField) -> "WindowSpec":
        box = spectrum.grid.support_box()
        radius = float(np.max(np.maximum(np.abs(box.lo), np.abs(box.hi))))
        return cls("bandlimited", spectrum.dim, alpha=2.0 * math.pi * radius, beta=0.0, field_=spectrum)

    @classmethod
    def tabulated(cls, samples: GridField, alpha=None, beta=None) -> "WindowSpec":
        return cls("tabulated", samples.dim, alpha=alpha, beta=beta, field_=samples)

    def with_multiplier(self, period, offset: float = 2.0, amplitude: float = 1.0) -> "WindowSpec":
        """Multiply by the periodic factor ``prod_j (offset + amplitude cos(2 pi t_j / period_j))``."""
        per = np.broadcast_to(np.asarray(period, dtype=float), (self.dim,)).copy()
        if np.any(per <= 0):
            raise ValueError("period must be positive")
        if self.multiplier is not None:
            raise ValueError("window already carries a multiplier")
        alpha = None if self.alpha is None else self.alpha + 2.0 * math.pi / float(per.min())
        return replace(self, alpha=alpha, multiplier=(tuple(per.tolist()), float(offset), float(amplitude)))

    def scaled(self, c: complex) -> "WindowSpec":
        return replace(self, gain=complex(self.gain) * complex(c))

    # serialisation --------------------------------------------------------
    def to_json(self) -> dict:
        out = {"family": self.family, "dim": self.dim, "alpha": self.alpha, "beta": self.beta}
        g = complex(self.gain)
        if g != 1:
            out["gain"] = [g.real, g.imag]
        if self.family == "gaussian":
            A = np.asarray(self.A, dtype=complex)
            nu = np.asarray(self.nu, dtype=complex)
            out["A"] = A.real.tolist()
            if np.any(A.imag):
                out["A_imag"] = A.imag.tolist()
            out["nu"] = nu.real.tolist()
            if np.any(nu.imag):
                out["nu_imag"] = nu.imag.tolist()
        elif self.family == "hermite":
            out["k"] = list(self.k)
        elif self.family == "airy":
            out["a"] = self.a
        else:
            v = self.field_.flat()
            out["grid"] = self.field_.grid.to_json()
            out["values"] = np.stack([v.real, v.imag], axis=-1).tolist()
        if self.multiplier is not None:
            per, off, amp = self.multiplier
            out["multiplier"] = {"period": list(per), "offset": off, "amplitude": amp}
        return out

    @classmethod
    def from_json(cls, data: dict) -> "WindowSpec":
        fam = data["family"]
        if fam == "gaussian":
            A = np.asarray(data["A"], dtype=float) + 1j * np.asarray(data.get("A_imag", 0.0))
            nu = data.get("nu")
            if nu is not None:
                nu = np.asarray(nu, dtype=float) + 1j * np.asarray(data.get("nu_imag", 0.0))
            w = cls.gaussian(A, nu)
        elif fam == "hermite":
            w = cls.hermite(data["k"])
        elif fam == "airy":
            w = cls.airy(data["a"], data.get("dim", 2))
        elif fam in ("bandlimited", "tabulated"):
            vals = np.asarray(data["values"], dtype=float)
            fld = GridField(Grid.from_json(data["grid"]), vals[..., 0] + 1j * vals[..., 1])
            if fam == "bandlimited":
                w = cls.bandlimited(fld)
            else:
                w = cls.tabulated(fld, data.get("alpha"), data.get("beta"))
        else:
            raise ValueError(f"unknown window family {fam!r}")
        if "gain" in data:
            w = w.scaled(complex(*data["gain"]))
        if "multiplier" in data:
            m = data["multiplier"]
            w = w.with_multiplier(m["period"], m.get("offset", 2.0), m.get("amplitude", 1.0))
        if fam in ("gaussian", "hermite", "airy", "bandlimited") and data.get("alpha") is not None:
            # explicit metadata in the file overrides the family default
            w = replace(w, alpha=float(data["alpha"]), beta=float(data["beta"]))
        return w


# --------------------------------------------------------------------------
# evaluation


def _points(w: WindowSpec, points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim <= 1 and w.dim == 1:
        pts = pts.reshape(-1, 1)
    pts = np.atleast_2d(pts)
    if pts.shape[1] != w.dim:
        raise DimError(f"points have dimension {pts.shape[1]}, window has {w.dim}")
    return pts


def _airy(a: float, r: np.ndarray) -> np.ndarray:
    out = np.empty_like(r)
    tiny = r < 1e-6 / a
    rr = r[tiny]
    out[tiny] = math.pi**2 * a**4 * (1.0 - (2.0 * math.pi * a * rr) ** 2 / 8.0) ** 2
    rb = r[~tiny]
    out[~tiny] = (a * bessel_j1(2.0 * math.pi * a * rb) / rb) ** 2
    return out


def _bandlimited(spec: GridField, pts: np.ndarray, chunk: int = 2048) -> np.ndarray:
    # spectrum is treated as constant on each grid cell, so the cell integral is exact
    nodes = spec.grid.nodes()
    vals = spec.flat()
    nz = vals != 0
    nodes, vals = nodes[nz], vals[nz]
    h = spec.grid.spacing
    out = np.empty(len(pts), dtype=complex)
    for s in range(0, len(pts), chunk):
        p = pts[s : s + chunk]
        phase = np.exp(2j * np.pi * (p @ nodes.T))
        cell = np.prod(h * np.sinc(h * p), axis=1)
        out[s : s + chunk] = cell * (phase @ vals)
    return out


def _tabulated(samples: GridField, pts: np.ndarray) -> np.ndarray:
    axes = samples.grid.axes()
    vals = samples.values
    if samples.dim == 1:
        x = pts[:, 0]
        re = np.interp(x, axes[0], vals.real, left=0.0, right=0.0)
        im = np.interp(x, axes[0], vals.imag, left=0.0, right=0.0)
        return re + 1j * im
    interp = RegularGridInterpolator(axes, vals, bounds_error=False, fill_value=0.0)
    return interp(pts)


def eval_window(w: WindowSpec, points) -> np.ndarray:
    """Complex window values at ``points`` of shape (n, dim) (or (n,) in one dimension)."""
    pts = _points(w, points)
    if w.family == "gaussian":
        u = pts - w.nu
        S = 0.5 * (w.A + w.A.T)
        val = np.exp(-np.einsum("ni,ij,nj->n", u, S, u))
    elif w.family == "hermite":
        val = np.ones(len(pts))
        for j, n in enumerate(w.k):
            val = val * hermite_function(n, pts[:, j])
    elif w.family == "airy":
        val = _airy(w.a, np.linalg.norm(pts, axis=1))
    elif w.family == "bandlimited":
        val = _bandlimited(w.field_, pts)
    else:
        val = _tabulated(w.field_, pts)
    if w.multiplier is not None:
        per, off, amp = w.multiplier
        val = val * np.prod(off + amp * np.cos(2.0 * np.pi * pts / np.asarray(per)), axis=1)
    val = np.asarray(val, dtype=complex)
    if complex(w.gain) != 1:
        val = complex(w.gain) * val
    return val


def tabulate(w: WindowSpec, grid: Grid) -> GridField:
    return GridField(grid, eval_window(w, grid.nodes()))


def window_product(w: WindowSpec, omega, grid: Grid) -> GridField:
    """Samples of ``g_omega(t) = g(t - omega) * conj(g(t))`` on the grid."""
    t = grid.nodes()
    om = np.broadcast_to(np.asarray(omega, dtype=float), (w.dim,))
    vals = eval_window(w, t - om) * np.conj(eval_window(w, t))
    return GridField(grid, vals)


def gaussian_product_closed_form(A, nu, omega):
    """Parameters ``(B, m, c)`` with ``g(t - omega) conj g(t) = exp(c - (t - m)^T B (t - m))``.

    Here ``g(t) = exp(-(t - nu)^T A (t - nu))`` and ``A`` is assumed to have
    a positive definite real part.
    """
    M = _as_matrix(A).astype(complex)
    P = 0.5 * (M + M.T)
    Q = np.conj(P)
    nu = np.atleast_1d(np.asarray(nu, dtype=complex))
    a = np.atleast_1d(np.asarray(omega, dtype=float)) + nu
    b = np.conj(nu)
    B = P + Q
    m = np.linalg.solve(B, P @ a + Q @ b)
    c = m @ B @ m - a @ P @ a - b @ Q @ b
    return B, m, complex(c)


def synth_bandlimited(spectrum: GridField) -> WindowSpec:
    """Band-limited window ``g(t) = int spectrum(xi) exp(2 pi i xi t) dxi``.

    The spectrum is treated as piecewise constant on its grid cells; its
    support box (the node hull) defines the stored type ``alpha``.
    """
    if not np.any(spectrum.values != 0):
        raise ZeroWindow("spectrum has zero energy")
    return WindowSpec.bandlimited(spectrum)


def disk_indicator(radius: float, spacing: float, supersample: int = 8) -> GridField:
    """Cell-averaged indicator of the disk of given radius on a square grid."""
    n = int(math.ceil(radius / spacing)) + 1
    grid = Grid(-n * spacing * np.ones(2), spacing * np.ones(2), (2 * n + 1, 2 * n + 1))
    sub = (np.arange(supersample) + 0.5) / supersample - 0.5
    ax = grid.axes()[0]
    fine = (ax[:, None] + spacing * sub[None, :]).ravel()
    inside = (fine[:, None] ** 2 + fine[None, :] ** 2) <= radius**2
    frac = inside.reshape(len(ax), supersample, len(ax), supersample).mean(axis=(1, 3))
    return GridField(grid, frac.astype(complex))


def gaussian_factorization_check(A, nu=None, trials: int = 100, seed: int = 0, pairs=None) -> float:
    """Max relative residual of ``phi(z + l) = phi(z) phi(l) exp(-2 z^T A l) / phi(0)``.

    ``phi(z) = exp(-(z - nu)^T A (z - nu))``.  The pairs are drawn uniformly
    from ``[-2, 2]^d`` unless given explicitly as ``[(z, l), ...]``.
    """
    M = _as_matrix(A).astype(complex)
    d = M.shape[0]
    nu = np.zeros(d) if nu is None else np.atleast_1d(np.asarray(nu, dtype=complex))

    def log_phi(z):
        u = z - nu
        return -(u @ M @ u)

    if pairs is None:
        rng = np.random.default_rng(seed)
        pairs = [(rng.uniform(-2, 2, d), rng.uniform(-2, 2, d)) for _ in range(trials)]
    worst = 0.0
    for z, lam in pairs:
        z = np.atleast_1d(np.asarray(z, dtype=float))
        lam = np.atleast_1d(np.asarray(lam, dtype=float))
        lhs = log_phi(z + lam)
        rhs = log_phi(z) + log_phi(lam) - 2.0 * (z @ M @ lam) - log_phi(np.zeros(d))
        # |e^L - e^R| / |e^L| = |1 - e^(R - L)|
        worst = max(worst, float(abs(1.0 - np.exp(rhs - lhs))))
    return worst


def class_sigma(w: WindowSpec, K: CompactBox) -> float:
    """Exponential-type budget ``2 alpha + beta * diam_inf(K)``."""
    if w.alpha is None or w.beta is None:
        raise MissingClassData(f"{w.family} window carries no (alpha, beta) metadata")
    if K.dim != w.dim:
        raise DimError("window and support box dimensions differ")
    return 2.0 * w.alpha + w.beta * K.diam_inf()


def std_extent(w: WindowSpec) -> float:
    """Rough half-width beyond which the window is negligible (used for padding)."""
    if w.family in ("gaussian", "hermite"):
        if w.family == "gaussian":
            lam_min = float(np.linalg.eigvalsh(0.5 * (w.A + w.A.T).real).min())
            sd = 1.0 / math.sqrt(2.0 * lam_min)
            centre = float(np.abs(np.real(w.nu)).max())
        else:
            sd = math.sqrt(max(w.k) + 1) / math.sqrt(2.0 * math.pi) * 2
            centre = 0.0
        return centre + 4.0 * sd * 2.0
    if w.family == "airy":
        return 8.0 / (2.0 * w.a)
    if w.family == "bandlimited":
        return 8.0 / max(w.alpha / (2.0 * math.pi), 1e-12)
    box = w.field_.support_box()
    return float(np.max(np.maximum(np.abs(box.lo), np.abs(box.hi))))
