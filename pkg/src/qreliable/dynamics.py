"""Maps on the probability simplex induced by noisy MAJ, DEN and ENAND gates,
their fixed points, the DEN Lyapunov function and vector-field sampling."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import gates
from .coeffs import coeffs_countvector
from .errors import ArgumentError, UnsupportedError
from .simplex import (Dist, check_probability, decode, p01_to_xy, symmetric_encode,
                      xy_to_p01)
from .thresholds import m_eps

MAX_STEPS = 100_000
STEP_TOL = 1e-13


@lru_cache(maxsize=None)
def _maj(q: int, k: int) -> gates.GateTable:
    return gates.maj(q, k)


@lru_cache(maxsize=None)
def _coeffs(q: int, k: int):
    return coeffs_countvector(q, k)


_DEN = gates.den()
_ENAND = gates.enand()


@dataclass(frozen=True)
class MapSpec:
    kind: str  # "maj", "den" or "enand"
    eps: float
    q: int = 3
    k: int = 3
    partner: Dist | None = None

    def __post_init__(self):
        if self.kind not in ("maj", "den", "enand"):
            raise ArgumentError(f"unknown map kind {self.kind!r}")
        if self.kind in ("den", "enand") and self.q != 3:
            raise UnsupportedError(f"{self.kind} maps need q=3")
        if self.kind == "enand" and (self.partner is None or self.partner.q != 3):
            raise ArgumentError("the enand map needs a ternary partner distribution")
        check_probability(self.eps, "eps")

    def apply(self, P: np.ndarray) -> np.ndarray:
        """Apply the map to each row of P, shape (n, q)."""
        if self.kind == "maj":
            return gates.pushforward_batch(_maj(self.q, self.k), [P] * self.k, self.eps)
        if self.kind == "den":
            return gates.pushforward_batch(_DEN, [P, P], self.eps)
        partner = self.partner.as_array()[None, :]
        return gates.pushforward_batch(_ENAND, [P, partner], self.eps)


def maj_map(d: Dist, eps, q: int | None = None, k: int = 3) -> Dist:
    """Distribution of the eps-noisy MAJ output on k i.i.d. copies of ``d``."""
    q = d.q if q is None else q
    if d.q != q:
        raise ArgumentError(f"distribution has q={d.q}, map has q={q}")
    return gates.pushforward(_maj(q, k), [d] * k, eps)


def den_map(p0, p1, eps):
    """Closed-form DEN update of the (p0, p1) coordinates.

    Accepts Fractions, floats or numpy arrays.
    """
    c = 1 - 3 * eps / 2
    return (c * (2 - p0 - 2 * p1) * p0 + eps / 2,
            c * (2 - 2 * p0 - p1) * p1 + eps / 2)


def den_map_xy(x, y, eps):
    s = 4 - 6 * eps  # xi + 3
    return s * x * (1 - y) / 3, s * (x * x - y * y) / 2


def xi_of(eps):
    return 1 - 6 * eps


def delta(eps) -> float:
    return math.sqrt(max(0.0, (1 - 6 * eps) * (1 - 2 * eps)))


def den_logical_weights(eps) -> tuple[float, float]:
    """(p_plus, p_minus) of the logical DEN fixed points, denominator 2-3eps."""
    if eps > Fraction(1, 6):
        raise ArgumentError(f"no logical fixed points above eps=1/6, got {eps}")
    d = delta(eps)
    den = 2 - 3 * eps
    return (1 - 3 * eps + d) / den, (1 - 3 * eps - d) / den


def logical_dist(symbol: int, eps) -> Dist:
    """The DEN fixed point associated with logical ``symbol`` (0 or 1)."""
    pp, pm = den_logical_weights(float(eps))
    w = (pp, pm) if symbol == 0 else (pm, pp)
    return Dist((w[0], w[1], 1.0 - pp - pm), False)


@dataclass(frozen=True)
class SimplexFixedPoint:
    dist: Dist
    region: object  # decoded symbol, or "center"
    stability: str
    spectral_radius: float = float("nan")


def _jacobian_radius(f, p: np.ndarray, h: float = 1e-6) -> float:
    """Spectral radius of f in the chart dropping the last coordinate."""
    q = p.shape[0]
    base = p[:-1]

    def chart(v):
        full = np.append(v, 1.0 - v.sum())
        return f(full[None, :])[0][:-1]

    J = np.empty((q - 1, q - 1))
    for j in range(q - 1):
        e = np.zeros(q - 1)
        e[j] = h
        J[:, j] = (chart(base + e) - chart(base - e)) / (2 * h)
    return float(np.max(np.abs(np.linalg.eigvals(J))))


def classify_radius(rho: float, band: float = 1e-6) -> str:
    if rho < 1 - band:
        return "stable"
    if rho > 1 + band:
        return "unstable"
    return "marginal"


def _fixed_point(spec: MapSpec, p: np.ndarray) -> SimplexFixedPoint:
    d = Dist(tuple(float(v) for v in p), False)
    res = decode(d, tol=1e-9)
    rho = _jacobian_radius(spec.apply, p)
    return SimplexFixedPoint(d, "center" if res.is_tie else res.symbol, classify_radius(rho), rho)


def den_fixed_points(eps) -> list[SimplexFixedPoint]:
    """Mixed point plus, for eps <= 1/6, the two logical points."""
    check_probability(eps, "eps")
    spec = MapSpec("den", float(eps))
    pts = [np.array([1 / 3, 1 / 3, 1 / 3])]
    if eps <= Fraction(1, 6):
        pp, pm = den_logical_weights(float(eps))
        pts.append(np.array([pp, pm, 1 - pp - pm]))
        pts.append(np.array([pm, pp, 1 - pp - pm]))
    return [_fixed_point(spec, p) for p in pts]


def logical_fixed_point_xy(xi: float) -> tuple[float, float]:
    """(x, y) of the logical-1 DEN fixed point."""
    return math.sqrt(xi * (xi + 2)) / (xi + 3), xi / (xi + 3)


def lyapunov_V(x, y, xi):
    s = xi + 3
    return (s * s * x * x - (xi + 2) * s * y) ** 2 + (s * s * x * x - xi * (xi + 2)) ** 2


def sample_logical_region(n: int, rng: np.random.Generator, symbol: int = 1) -> np.ndarray:
    """Uniform points (p0, p1, p2) of the simplex where ``symbol`` beats the other logical symbol."""
    P = rng.dirichlet(np.ones(3), size=n)
    swap = P[:, 1 - symbol] > P[:, symbol]
    P[swap, 0], P[swap, 1] = P[swap, 1].copy(), P[swap, 0].copy()
    return P[P[:, symbol] > P[:, 1 - symbol]]


def enand_map(dA: Dist, dB: Dist, eps) -> Dist:
    if dA.q != 3 or dB.q != 3:
        raise UnsupportedError("ENAND acts on ternary distributions")
    return gates.pushforward(_ENAND, [dA, dB], eps)


def enand_closed_form(u: int, v: int, eps: float) -> tuple[float, float]:
    """Logical weights (G0, G1) of ENAND applied to the DEN fixed points P_u, P_v."""
    d = delta(eps)
    if u == v == 0:
        return ((1 - 3 * eps - d) / (2 - 3 * eps),
                (1 + d + eps * (-4 + 6 * eps - 3 * d)) / (2 - 3 * eps))
    if u == v == 1:
        return ((1 - 3 * eps + d) / (2 - 3 * eps),
                (1 - d + eps * (-4 + 6 * eps + 3 * d)) / (2 - 3 * eps))
    r = 1 / (1 - 3 * eps / 2)
    return 1 + 4 * eps - r, r - 6 * eps


@dataclass(frozen=True)
class EnandCheck:
    eps: float
    passed: bool
    reason: str
    margins: dict  # (u, v) -> weight(intended) - weight(other)


def enand_check(eps) -> EnandCheck:
    eps = float(eps)
    if not 0 <= eps < 0.5:
        raise ArgumentError(f"eps must lie in [0, 1/2), got {eps}")
    if eps >= 1 / 6:
        return EnandCheck(eps, False, "no distinct logical fixed points", {})
    P = (logical_dist(0, eps), logical_dist(1, eps))
    margins = {}
    for u in (0, 1):
        for v in (0, 1):
            out = enand_map(P[u], P[v], eps)
            want = 1 - (u & v)
            margins[(u, v)] = out[want] - out[1 - want]
    ok = all(m > 0 for m in margins.values())
    return EnandCheck(eps, ok, "ok" if ok else "inequality violated", margins)


def enand_verify(eps) -> bool:
    return enand_check(eps).passed


@dataclass(frozen=True)
class BasinReport:
    alpha: object        # output error 1 - p0'
    lower: object        # m_eps(1 - p0)
    upper: object        # bound from the symmetric input with equal gap
    lower_ok: bool
    upper_ok: bool


def basin_bounds_check(d: Dist, eps, q: int | None = None, k: int = 3) -> BasinReport:
    """Compare one MAJ step from a point decoding to 0 with the symmetric-input bounds."""
    q = d.q if q is None else q
    res = decode(d)
    if res.is_tie or res.symbol != 0:
        raise ArgumentError(f"input must decode to symbol 0, got {res!r}")
    out = maj_map(d, eps, q, k)
    t = _coeffs(q, k)
    m = m_eps(1 - d[0], eps, t)
    alpha = 1 - out[0]
    # the upper bound compares against the symmetric input with the same
    # gap p0 - max_j p_j, not the same p0
    gap = d[0] - max(d[j] for j in range(1, q))
    m_sym = m_eps(1 - (1 + (q - 1) * gap) / q, eps, t)
    runner_up = max(out[j] for j in range(1, q))
    upper = m_sym - (runner_up - m_sym / (q - 1))
    return BasinReport(alpha, m, upper, alpha >= m, alpha <= upper)


def symmetric_consistency(q: int, k: int, a, eps) -> tuple:
    """(MAJ-map error on an a-noisy input, m_eps(a)); equal by construction of c."""
    out = maj_map(symmetric_encode(q, 0, a), eps, q, k)
    return out.error(0), m_eps(a, eps, _coeffs(q, k))


def lattice(resolution: int, margin: float = 1e-9) -> np.ndarray:
    """Barycentric lattice of side ``resolution``, pulled inside the simplex by ``margin``."""
    if resolution < 1:
        raise ArgumentError("resolution must be >= 1")
    pts = [(i, j, resolution - i - j) for i in range(resolution + 1) for j in range(resolution + 1 - i)]
    P = np.array(pts, dtype=float) / resolution
    return (1 - 3 * margin) * P + margin


def field_grid(spec: MapSpec, resolution: int) -> np.ndarray:
    """Rows (x, y, dx, dy): lattice points and their one-step displacement."""
    if spec.q != 3:
        raise UnsupportedError("field sampling is defined for q=3")
    P = lattice(resolution)
    Q = spec.apply(P)
    x, y = p01_to_xy(P[:, 0], P[:, 1])
    x2, y2 = p01_to_xy(Q[:, 0], Q[:, 1])
    return np.column_stack([x, y, x2 - x, y2 - y])


@dataclass(frozen=True)
class IterationResult:
    points: np.ndarray
    converged: np.ndarray
    steps: int


def iterate_batch(spec: MapSpec, P: np.ndarray, max_steps: int = MAX_STEPS,
                  tol: float = STEP_TOL) -> IterationResult:
    """Iterate every row of P until its step is below ``tol`` or steps run out."""
    P = np.array(P, dtype=float)
    done = np.zeros(len(P), dtype=bool)
    steps = 0
    while steps < max_steps and not done.all():
        live = ~done
        nxt = spec.apply(P[live])
        moved = np.abs(nxt - P[live]).max(axis=1)
        P[live] = nxt
        idx = np.flatnonzero(live)
        done[idx[moved < tol]] = True
        steps += 1
    return IterationResult(P, done, steps)


def iterate_den(p0, p1, eps, max_steps: int = 10_000, tol: float = STEP_TOL):
    """Vectorised closed-form DEN iteration on arrays of (p0, p1)."""
    p0 = np.array(p0, dtype=float)
    p1 = np.array(p1, dtype=float)
    for _ in range(max_steps):
        n0, n1 = den_map(p0, p1, eps)
        step = max(np.abs(n0 - p0).max(), np.abs(n1 - p1).max())
        p0, p1 = n0, n1
        if step < tol:
            return p0, p1, True
    return p0, p1, False


def sink_census(spec: MapSpec, resolution: int, cluster_tol: float = 1e-6) -> list[SimplexFixedPoint]:
    """Distinct limits of the lattice points under iteration, with stability."""
    res = iterate_batch(spec, lattice(resolution))
    if not res.converged.all():
        raise ArithmeticError(f"{int((~res.converged).sum())} lattice points did not converge")
    reps: list[np.ndarray] = []
    for p in res.points:
        if not any(np.abs(p - r).max() < cluster_tol for r in reps):
            reps.append(p)
    return [_fixed_point(spec, r) for r in reps]


def xy_to_dist(x: float, y: float) -> Dist:
    p0, p1 = xy_to_p01(x, y)
    return Dist((p0, p1, 1 - p0 - p1), False)
