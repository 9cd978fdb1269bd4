"""Fast invariant checks over every module, used by the ``selftest`` command."""
from __future__ import annotations

from fractions import Fraction
from typing import Callable

import numpy as np

from . import dynamics, gates, propagation
from .coeffs import balance_sum, coeffs, small_k3_closed_form
from .montecarlo import run_formula
from .simplex import p01_to_xy, symmetric_encode
from .thresholds import C_coefficient, m_eps, saddle_node_bisection, transcritical_eps


def _coefficients() -> bool:
    ok = all(coeffs(q, 3, "both").c == small_k3_closed_form(q) for q in range(2, 8))
    ok &= all(coeffs(q, k, "both") == coeffs(q, k) for q in (2, 3, 4) for k in (1, 3, 5))
    return ok and all(balance_sum(coeffs(q, k)) == Fraction(q - 1, q) for q in (2, 3, 5) for k in (3, 5))


def _thresholds() -> bool:
    t = coeffs(3, 3)
    ok = C_coefficient(t) == Fraction(4, 3) and transcritical_eps(t) == Fraction(1, 6)
    ok &= abs(saddle_node_bisection(t) - 2 / 11) < 1e-9
    return ok and all(transcritical_eps(coeffs(q, 3)) == Fraction(q - 1, q * (q + 1)) for q in range(2, 8))


def _mixed_point() -> bool:
    return all(m_eps(Fraction(q - 1, q), e, coeffs(q, k)) == Fraction(q - 1, q)
               for q in (2, 3, 4) for k in (3, 5)
               for e in (Fraction(0), Fraction(1, 10), Fraction(1, 6), Fraction(1, 5)))


def _den() -> bool:
    ok = True
    for e in np.arange(0, 0.161, 0.02):
        for fp in dynamics.den_fixed_points(float(e)):
            p0, p1 = fp.dist[0], fp.dist[1]
            n0, n1 = dynamics.den_map(p0, p1, float(e))
            ok &= max(abs(n0 - p0), abs(n1 - p1)) < 1e-12
    return ok


def _lyapunov() -> bool:
    rng = np.random.default_rng(0)
    ok = True
    for e in (0.01, 0.1, 0.16):
        xi = dynamics.xi_of(e)
        P = dynamics.sample_logical_region(2000, rng)
        x, y = p01_to_xy(P[:, 0], P[:, 1])
        x2, y2 = dynamics.den_map_xy(x, y, e)
        ok &= bool(np.all(dynamics.lyapunov_V(x2, y2, xi) <= dynamics.lyapunov_V(x, y, xi) + 1e-12))
    return ok


def _enand() -> bool:
    return all(dynamics.enand_verify(e) for e in np.arange(0.001, 1 / 6, 0.01))


def _propagation() -> bool:
    ok = propagation.verify_pa(3, 6, 3).passed and propagation.verify_pa(5, 5, 3).passed
    return ok and all(abs(propagation.mul_margin_root(q) - (1 - q**-0.5)) < 1e-9 for q in (3, 5, 7))


def _gates() -> bool:
    ok = gates.is_balanced(gates.den()) and gates.is_balanced(gates.maj(3, 3))
    ok &= gates.pa_decompose(gates.add(5)) is not None and gates.pa_decompose(gates.den()) is None
    return ok and gates.loads_gate(gates.dumps_gate(gates.enand())).table == gates.enand().table


def _montecarlo() -> bool:
    f = gates.complete_tree(gates.maj(3, 3), 2)
    leaves = {0: symmetric_encode(3, 0, 0.2)}
    a = run_formula(f, leaves, 0.05, 5000, 3, target=0)
    b = run_formula(f, leaves, 0.05, 5000, 3, target=0, threads=2)
    exact = gates.eval_exact(f, leaves, 0.05).error(0)
    return a.histogram == b.histogram and abs(a.error_rate - exact) < 5 * max(a.half_width, 1e-3)


CHECKS: dict[str, Callable[[], bool]] = {
    "coefficients": _coefficients,
    "thresholds": _thresholds,
    "mixed-point invariance": _mixed_point,
    "den fixed points": _den,
    "lyapunov descent": _lyapunov,
    "enand inequalities": _enand,
    "pa propagation": _propagation,
    "gate library": _gates,
    "monte carlo": _montecarlo,
}


def run() -> list[tuple[str, bool]]:
    results = []
    for name, check in CHECKS.items():
        try:
            ok = bool(check())
        except Exception:  # a crash is a failure, reported by name
            ok = False
        results.append((name, ok))
    return results

