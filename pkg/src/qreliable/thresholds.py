"""Scalar restoring dynamics of the noisy majority gate on symmetric inputs."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Callable

import numpy as np

from .coeffs import CoeffTable
from .errors import UnsupportedError

GRID_STEP = 1e-3
ROOT_TOL = 1e-12
SEPARATION = 1e-9
MARGINAL = 1e-9
ENDPOINT_TOL = 1e-12


def _require_odd(t: CoeffTable) -> None:
    if t.k % 2 == 0:
        raise UnsupportedError(f"threshold analysis needs odd fan-in, got k={t.k}")


def center(t: CoeffTable) -> Fraction:
    return Fraction(t.q - 1, t.q)


def m0(a, t: CoeffTable):
    """Output error of the noiseless gate on k i.i.d. a-noisy inputs."""
    k = t.k
    return sum(comb(k, l) * t.c[l] * (1 - a) ** l * a ** (k - l) for l in range(k + 1) if t.c[l])


def m0_prime(a, t: CoeffTable):
    k = t.k
    return k * sum(comb(k - 1, l) * (t[l] - t[l + 1]) * (1 - a) ** l * a ** (k - 1 - l)
                   for l in range(k))


def _rational(eps):
    # int / int would silently produce a float
    return Fraction(eps) if isinstance(eps, int) else eps


def m_eps(a, eps, t: CoeffTable):
    q = t.q
    eps = _rational(eps)
    base = m0(a, t)
    return (1 - eps / (q - 1)) * base + eps * (1 - base)


def m_eps_prime(a, eps, t: CoeffTable):
    eps = _rational(eps)
    return (1 - t.q * eps / (t.q - 1)) * m0_prime(a, t)


def C_coefficient(t: CoeffTable) -> Fraction:
    """Slope of m0 at the maximally mixed error rate (q-1)/q."""
    _require_odd(t)
    q, k = t.q, t.k
    s = sum(comb(k - 1, l) * (t[l] - t[l + 1]) * (q - 1) ** (k - l - 1) for l in range(k // 2 + 1))
    return Fraction(k, q ** (k - 1)) * s


def transcritical_eps(t: CoeffTable) -> Fraction | None:
    """Noise level where the mixed fixed point becomes stable; None if C <= 1."""
    C = C_coefficient(t)
    if C <= 1:
        return None
    return center(t) * (C - 1) / C


def saddle_node_k3(q: int) -> Fraction:
    return Fraction(q - 1, 5 * q - 4)


@dataclass(frozen=True)
class ScalarFixedPoint:
    a: float
    stability: str  # "stable", "unstable" or "marginal"
    exact: Fraction | None = None
    slope: float = 0.0


def _poly(eps: float, t: CoeffTable) -> np.polynomial.Polynomial:
    """m_eps(a) - a in the power basis (float coefficients)."""
    P = np.polynomial.Polynomial
    one_minus = P([1.0, -1.0])
    a = P([0.0, 1.0])
    base = P([0.0])
    for l in range(t.k + 1):
        if t.c[l]:
            base = base + comb(t.k, l) * float(t.c[l]) * one_minus**l * a ** (t.k - l)
    q = t.q
    return (1 - q * eps / (q - 1)) * base + eps - a


def bisect(f: Callable[[float], float], lo: float, hi: float, tol: float = ROOT_TOL,
           flo: float | None = None) -> float:
    """Root of f in [lo, hi] given a sign change."""
    flo = f(lo) if flo is None else flo
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0:
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _critical_points(poly) -> list[float]:
    d = poly.deriv()
    if d.degree() < 1:
        return []
    pts = []
    for r in d.roots():
        if abs(r.imag) < 1e-7 and 0 < r.real < 1:
            x = r.real
            # polish: the derivative changes sign across a simple critical point
            lo, hi = max(0.0, x - 1e-6), min(1.0, x + 1e-6)
            if d(lo) * d(hi) < 0:
                x = bisect(d, lo, hi)
            pts.append(x)
    return sorted(pts)


def _roots(eps: float, t: CoeffTable) -> list[float]:
    """Roots of m_eps(a) - a on [0, 1] other than the mixed point (q-1)/q.

    The known root at (q-1)/q is divided out first, so the double root at
    the transcritical point does not smear into spurious neighbours. The
    interval is then cut at critical points so every piece is monotone; a
    sign-bracketing grid alone misses root pairs sharing one grid cell near
    the saddle-node.
    """
    cf = float(center(t))
    poly, _ = divmod(_poly(eps, t), np.polynomial.Polynomial([-cf, 1.0]))
    grid = np.arange(0.0, 1.0 + GRID_STEP / 2, GRID_STEP)
    crit = _critical_points(poly)
    knots = sorted(set(np.clip(grid, 0, 1).tolist()) | set(crit) | {0.0, 1.0})
    vals = poly(np.array(knots))
    roots = []
    for i, (x, v) in enumerate(zip(knots, vals)):
        # deflation leaves rounding residue at the endpoints, where eps = 0 has exact roots
        if v == 0 or (x in (0.0, 1.0) and abs(v) <= ENDPOINT_TOL):
            roots.append(x)
        if i + 1 < len(knots) and v * vals[i + 1] < 0:
            roots.append(bisect(poly, x, knots[i + 1], flo=v))
    # near a double root the polynomial may touch zero without crossing
    roots.extend(x for x in crit if abs(poly(x)) < 1e-14)
    merged: list[float] = []
    for r in sorted(float(r) for r in roots):
        if abs(r - cf) <= SEPARATION:
            continue
        if not merged or r - merged[-1] > SEPARATION:
            merged.append(r)
    return merged


def _classify(slope: float) -> str:
    if abs(abs(slope) - 1) <= MARGINAL:
        return "marginal"
    return "stable" if abs(slope) < 1 else "unstable"


def scalar_fixed_points(eps, t: CoeffTable) -> list[ScalarFixedPoint]:
    """All fixed points of m_eps on [0, 1], sorted, each with its stability.

    The maximally mixed point (q-1)/q is always reported with its exact value.
    """
    _require_odd(t)
    c = center(t)
    out = []
    for r in _roots(float(eps), t):
        slope = float(m_eps_prime(r, float(eps), t))
        out.append(ScalarFixedPoint(r, _classify(slope), None, slope))
    slope_c = m_eps_prime(c, eps, t)
    out.append(ScalarFixedPoint(float(c), _classify(float(slope_c)), c, float(slope_c)))
    return sorted(out, key=lambda p: p.a)


def _has_low_root(eps: float, t: CoeffTable) -> bool:
    cf = float(center(t))
    return any(r < cf - SEPARATION for r in _roots(eps, t))


def saddle_node_bisection(t: CoeffTable, tol: float = 1e-12) -> float:
    """Largest eps at which a fixed point below (q-1)/q survives."""
    _require_odd(t)
    lo, hi = 0.0, float(center(t))
    if not _has_low_root(lo, t):
        return 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _has_low_root(mid, t):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def saddle_node_eps(t: CoeffTable):
    """Ultimate threshold: exact Fraction for k=3, float otherwise.

    For k=3 the closed form is cross-checked against bisection.
    """
    return _saddle(t, saddle_node_bisection(t))


def _saddle(t: CoeffTable, numeric: float):
    if t.k != 3:
        return numeric
    exact = saddle_node_k3(t.q)
    if abs(float(exact) - numeric) > 1e-9:
        raise AssertionError(f"saddle-node bisection {numeric!r} disagrees with {exact}")
    return exact


@dataclass(frozen=True)
class ThresholdReport:
    q: int
    k: int
    C: Fraction
    eps_transcritical: Fraction | None
    eps_saddle: Fraction | float
    eps_saddle_bisection: float


def threshold_report(t: CoeffTable) -> ThresholdReport:
    numeric = saddle_node_bisection(t)
    return ThresholdReport(t.q, t.k, C_coefficient(t), transcritical_eps(t), _saddle(t, numeric), numeric)


@dataclass(frozen=True)
class Trajectory:
    values: list
    converged: bool

    @property
    def final(self):
        return self.values[-1]


def iterate_m(a0, eps, t: CoeffTable, n: int = 100_000, tol: float = 1e-13) -> Trajectory:
    """Iterate m_eps from a0 until successive values differ by less than tol."""
    values = [a0]
    a = a0
    for _ in range(n):
        nxt = m_eps(a, eps, t)
        values.append(nxt)
        if abs(nxt - a) < tol:
            return Trajectory(values, True)
        a = nxt
    return Trajectory(values, False)


def m_eps_iterated(a, eps, t: CoeffTable, times: int):
    for _ in range(times):
        a = m_eps(a, eps, t)
    return a
