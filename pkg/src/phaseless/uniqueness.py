"""Decidable uniqueness gates.

Each gate returns a ``GateReport``.  Inequality gates pass exactly when the
signed margin of the governing inequality is positive.  Finite-data gates
(density estimates, divergence of series) are advisory and say so in
``details``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from .errors import DimError, NotSeparated, Unclassifiable
from .geometry import (
    CompactBox,
    CountableSet,
    Lattice,
    cell_slack,
    cube_density,
    primes_upto,
    reciprocal,
    separation,
)
from .windows import WindowSpec, class_sigma

GATES = ("carlson", "ronkin", "zalik", "gaussian_semigroup", "gamma_cell")


@dataclass(frozen=True)
class GateReport:
    gate: str
    passed: bool
    margin: float
    details: str = ""

    def to_json(self) -> dict:
        m = self.margin
        return {
            "gate": self.gate,
            "pass": bool(self.passed),
            "margin": float(m) if math.isfinite(m) else None,
            "details": self.details,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json())


def carlson_gate(spacing: float, sigma: float) -> GateReport:
    """Lattice ``spacing * Z^d`` against exponential type ``sigma``: pass iff ``spacing * sigma < pi``."""
    if not spacing > 0:
        raise ValueError("spacing must be positive")
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    margin = math.pi - spacing * sigma
    return GateReport("carlson", bool(margin > 0), float(margin), f"spacing={spacing:g}, sigma={sigma:g}")


def ronkin_constant(d: int) -> float:
    if d < 1:
        raise ValueError("dimension must be >= 1")
    e = math.e
    inner = (d - 1) / 2 + e
    for k in range(d - 1):
        inner += (29 / 3) ** (d - 2 - k) * (13 * k / 3 + 25 * e / 3)
    return 2.0 / math.factorial(d) * (math.pi / 2) ** (d - 1) / inner


def ronkin_gate(s: CountableSet, sigma: float, horizon: int = 1000, radius: float = 100.0) -> GateReport:
    """Separated set against type ``sigma``: pass iff ``sigma < A_d delta^(d-1) D+``.

    ``D+`` is estimated as the largest cube density at radii ``r, 2r, 4r``.
    """
    d = s.dim
    delta = separation(s, horizon)
    if delta <= 0:
        raise NotSeparated("set contains coincident points")
    dens = [cube_density(s, radius * m) for m in (1, 2, 4)]
    dplus = max(dens)
    bound = ronkin_constant(d) * delta ** (d - 1) * dplus
    margin = bound - sigma
    notes = [f"delta={delta:g}", f"D+~{dplus:g} (finite-radius estimate at r={radius:g},{2 * radius:g},{4 * radius:g})"]
    if not (dens[0] <= dens[1] <= dens[2] or dens[0] >= dens[1] >= dens[2]):
        notes.append("warning: density estimates are not monotone in the radius")
    notes.append(f"bound={bound:g}, sigma={sigma:g}")
    return GateReport("ronkin", bool(margin > 0), float(margin), "; ".join(notes))


def _partial_sum(s: CountableSet, horizon: int) -> float:
    if s.kind == "primes":
        ps = primes_upto(int(horizon * (math.log(horizon) + math.log(math.log(horizon)))) + 10)[:horizon]
        pts = s.scale * ps.astype(float)
    elif s.kind == "geometric":
        n = min(horizon, int(700 / math.log(s.q)) + 1)
        pts = s.scale * s.q ** np.arange(n, dtype=float)
    elif s.kind == "lattice":
        pts = s.enumerate(min(horizon, 10**6))[:, 0]
    else:
        pts = s.enumerate(horizon)[:, 0]
    pts = np.abs(pts)
    pts = pts[pts > 0]
    return float(np.sum(1.0 / pts))


def zalik_classify(s: CountableSet, horizon: int = 10**6) -> GateReport:
    """Classify ``sum 1/|lambda|`` (zero excluded) as divergent (pass) or convergent (fail).

    The decision is made from the family; the partial sum up to ``horizon``
    terms is attached as corroboration only.
    """
    if s.dim != 1:
        raise Unclassifiable("the divergence criterion applies to subsets of the real line")
    if s.kind in ("arithmetic", "primes", "lattice"):
        verdict, why = True, {"arithmetic": "harmonic-type series", "primes": "sum of prime reciprocals",
                              "lattice": "harmonic-type series"}[s.kind]
    elif s.kind in ("geometric", "explicit"):
        verdict, why = False, "geometric series" if s.kind == "geometric" else "finite set"
    else:
        raise Unclassifiable(f"cannot classify set kind {s.kind!r}")
    ps = _partial_sum(s, horizon)
    return GateReport(
        "zalik",
        verdict,
        math.inf if verdict else -math.inf,
        f"{why}: {'divergent' if verdict else 'convergent'}; partial sum over {horizon} terms = {ps:.6g} (evidence only)",
    )


def axis_spacing(lat: Lattice, max_den: int = 1000) -> float | None:
    """Smallest ``t`` with ``t * Z^d`` (per axis) inside the lattice, maximised over axes.

    ``t_j`` is the least positive number with ``t_j e_j`` in the lattice.
    Returns None when some axis meets the lattice only at the origin (up to
    the rational approximation depth ``max_den``).
    """
    inv = np.linalg.inv(lat.generator)
    worst = 0.0
    for j in range(lat.dim):
        col = inv[:, j]  # coordinates of e_j
        scale = np.max(np.abs(col))
        ratios = col / scale
        fr = [Fraction(float(r)).limit_denominator(max_den) for r in ratios]
        if any(abs(float(f) - r) > 1e-9 for f, r in zip(fr, ratios)):
            return None
        den = math.lcm(*[f.denominator for f in fr])
        nums = [int(f * den) for f in fr]
        g = math.gcd(*nums)
        # t e_j has coordinates t * scale * ratios; integrality needs t*scale*(nums/den) in Z
        step = den / (g * scale)
        worst = max(worst, step)
    return worst


def _is_gaussian(w: WindowSpec) -> bool:
    if w.family != "gaussian" or w.multiplier is not None:
        return False
    S = 0.5 * (w.A + w.A.T)
    re = np.real(S)
    return bool(abs(np.linalg.det(re)) > 1e-12)


def _periodic_over(lam: Lattice, period) -> bool:
    """Whether every lattice vector is a period of the axis-wise multiplier."""
    per = np.asarray(period, dtype=float)
    A = lam.generator / per[:, None]
    return bool(np.allclose(A, np.rint(A), atol=1e-9))


def periodic_multiplier_base(w: WindowSpec, lam: CountableSet) -> WindowSpec | None:
    """The window without its multiplier, when the multiplier is Lambda-periodic and non-vanishing.

    Then ``g_w(t - lambda) chi(t - lambda - w) conj chi(t - lambda)`` equals
    ``g_w(t - lambda) c_w(t)`` with ``c_w`` independent of ``lambda``, so the
    translate system of the full window is that of the base window composed
    with a pointwise multiplication by ``c_w``.  Returns None otherwise.
    """
    if w.multiplier is None or lam.kind != "lattice":
        return None
    per, off, amp = w.multiplier
    if not (_periodic_over(lam.lattice, per) and off > abs(amp)):
        return None
    alpha = None if w.alpha is None else w.alpha - 2 * math.pi / min(per)
    return replace(w, multiplier=None, alpha=alpha)


def lambda_gate(
    w: WindowSpec,
    K: CompactBox,
    lam: CountableSet,
    horizon: int = 1000,
    radius: float = 100.0,
) -> GateReport:
    """Time-side gate for the translate systems of ``g_omega``."""
    if not (w.dim == K.dim == lam.dim):
        raise DimError("window, support and set dimensions differ")
    base = periodic_multiplier_base(w, lam)
    if base is not None:
        rep = lambda_gate(base, K, lam, horizon, radius)
        return GateReport(
            rep.gate,
            rep.passed,
            rep.margin,
            rep.details + "; periodic multiplier is Lambda-periodic and non-vanishing, decided on the base window",
        )
    if _is_gaussian(w):
        if lam.kind == "lattice":
            return GateReport("gaussian_semigroup", True, math.inf, "Gaussian window with a lattice: no density condition")
        if lam.dim == 1 and lam.kind in ("arithmetic", "geometric", "primes", "explicit"):
            return zalik_classify(lam)
    sigma = class_sigma(w, K)
    if lam.kind == "lattice":
        t = axis_spacing(lam.lattice)
        if t is not None:
            rep = carlson_gate(t, sigma)
            return GateReport(rep.gate, rep.passed, rep.margin, rep.details + f"; axis spacing of the lattice = {t:g}")
    return ronkin_gate(lam, sigma, horizon, radius)


def gamma_gate(K: CompactBox, gamma: Lattice) -> GateReport:
    """Frequency-side gate: ``K - K`` inside the centred cell of the reciprocal lattice."""
    if K.dim != gamma.dim:
        raise DimError("support and lattice dimensions differ")
    dual = reciprocal(gamma)
    slack = cell_slack(dual, K.difference())
    passed = bool(slack >= 1e-12)
    return GateReport("gamma_cell", passed, slack, f"min corner slack of K-K in the reciprocal cell = {slack:.6g}")
