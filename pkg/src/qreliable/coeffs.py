"""Error-pattern coefficients of the generalized majority gate.

``c[l]`` is the fraction of input assignments with exactly ``l`` correct
entries (the other k-l drawn from the q-1 wrong symbols) for which MAJ
outputs a wrong symbol. The correct symbol is fixed to 0; MAJ commutes
with relabelings of the alphabet, so nothing is lost.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial

import numpy as np

from .errors import ArgumentError, ResourceError
from .gates import maj
from .simplex import check_q

ENUM_BUDGET = 10**8


@dataclass(frozen=True)
class CoeffTable:
    q: int
    k: int
    c: tuple

    def __post_init__(self):
        if len(self.c) != self.k + 1:
            raise ArgumentError(f"need {self.k + 1} coefficients, got {len(self.c)}")

    def __getitem__(self, l: int) -> Fraction:
        # c beyond k is zero: used by difference formulas
        return self.c[l] if 0 <= l <= self.k else Fraction(0)


def _check(q: int, k: int) -> None:
    check_q(q)
    if not isinstance(k, int) or k < 1:
        raise ArgumentError(f"fan-in must be a positive integer, got {k!r}")


def _normalise(q: int, k: int, errors) -> CoeffTable:
    return CoeffTable(q, k, tuple(Fraction(int(errors[l]), comb(k, l) * (q - 1) ** (k - l))
                                  for l in range(k + 1)))


def coeffs_enumerate(q: int, k: int, budget: int = ENUM_BUDGET) -> CoeffTable:
    """Count erroneous assignments over the full MAJ truth table."""
    _check(q, k)
    if q**k > budget:
        raise ResourceError(f"enumerating {q}^{k} assignments exceeds the budget of {budget}; "
                            "use coeffs_countvector instead")
    g = maj(q, k)
    n = q**k
    errors = np.zeros(k + 1, dtype=np.int64)
    step = 1 << 20
    for start in range(0, n, step):
        idx = np.arange(start, min(n, start + step), dtype=np.int64)
        zeros = np.zeros(idx.shape, dtype=np.int64)
        rest = idx.copy()
        for _ in range(k):
            zeros += rest % q == 0
            rest //= q
        wrong = g.array[idx] != 0
        errors += np.bincount(zeros[wrong], minlength=k + 1)
    return _normalise(q, k, errors)


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def coeffs_countvector(q: int, k: int) -> CoeffTable:
    """Same table from symbol-count vectors instead of assignments.

    A count vector with the correct symbol tied among t modes contributes
    (t-1)/t of its orderings: over all orderings of a fixed multiset, each
    tied value is first to appear equally often.
    """
    _check(q, k)
    errors = [Fraction(0)] * (k + 1)
    fk = factorial(k)
    for n0 in range(k + 1):
        for rest in _compositions(k - n0, q - 1):
            orderings = fk // factorial(n0)
            for r in rest:
                orderings //= factorial(r)
            top = max(rest) if rest else 0
            if n0 > top:
                continue
            if n0 < top:
                errors[n0] += orderings
                continue
            t = 1 + sum(1 for r in rest if r == n0)
            errors[n0] += Fraction(orderings * (t - 1), t)
    for e in errors:
        if e.denominator != 1:
            raise AssertionError("non-integral error count; tie accounting is inconsistent")
    return _normalise(q, k, [e.numerator for e in errors])


def coeffs(q: int, k: int, method: str = "cv") -> CoeffTable:
    if method in ("cv", "countvector"):
        return coeffs_countvector(q, k)
    if method in ("enum", "enumerate"):
        return coeffs_enumerate(q, k)
    if method == "both":
        a, b = coeffs_enumerate(q, k), coeffs_countvector(q, k)
        if a != b:
            raise AssertionError(f"enumeration and count-vector tables differ for q={q}, k={k}")
        return a
    raise ArgumentError(f"unknown method {method!r}")


def small_k3_closed_form(q: int) -> tuple:
    return (Fraction(1), 1 - Fraction(q - 2, 3 * (q - 1)), Fraction(0), Fraction(0))


def balance_sum(t: CoeffTable) -> Fraction:
    """Fraction of all q^k assignments MAJ gets wrong; (q-1)/q for a balanced gate."""
    q, k = t.q, t.k
    return sum(comb(k, l) * t.c[l] * (q - 1) ** (k - l) for l in range(k + 1)) / Fraction(q**k)
