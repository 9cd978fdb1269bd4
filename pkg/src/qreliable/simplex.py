"""Distributions over [q], the q-ary symmetric channel, decoding, and the
(x, y) chart of the ternary simplex.

Two arithmetic modes are supported. Exact distributions hold
``fractions.Fraction`` weights and sum to one exactly; floating
distributions hold Python floats and sum to one within ``float_tol()``.
Mixing the two in a single computation raises ``ModeError``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import ArgumentError, ModeError, UnsupportedError

MAX_Q = 64

_FLOAT_TOL = 1e-12


def float_tol() -> float:
    return _FLOAT_TOL


def set_float_tol(tol: float) -> None:
    global _FLOAT_TOL
    if not tol > 0:
        raise ArgumentError(f"tolerance must be positive, got {tol!r}")
    _FLOAT_TOL = float(tol)


def is_exact_number(x) -> bool:
    return isinstance(x, Rational) and not isinstance(x, bool)


def as_exact(x, what: str = "value") -> Fraction:
    """Coerce ints, Fractions and 'p/q' strings to Fraction; refuse floats."""
    if isinstance(x, bool):
        raise ArgumentError(f"{what} must be a number, got {x!r}")
    if is_exact_number(x):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise ModeError(f"{what}={x!r} is not exact; pass an int, Fraction or 'p/q' string")


def check_probability(p, what: str = "probability") -> None:
    if not 0 <= p <= 1:
        raise ArgumentError(f"{what} must lie in [0, 1], got {p!r}")


def check_q(q: int) -> None:
    if not isinstance(q, (int, np.integer)) or not 2 <= q <= MAX_Q:
        raise ArgumentError(f"alphabet size must be an integer in [2, {MAX_Q}], got {q!r}")


@dataclass(frozen=True)
class Dist:
    """A point of the probability simplex over [q]."""

    weights: tuple
    exact: bool

    def __post_init__(self):
        w = self.weights
        check_q(len(w))
        if self.exact:
            if not all(is_exact_number(x) for x in w):
                raise ModeError("exact Dist requires rational weights")
            if any(x < 0 for x in w):
                raise ArgumentError(f"negative weight in {w}")
            if sum(w) != 1:
                raise ArgumentError(f"weights sum to {sum(w)}, not 1")
        else:
            tol = _FLOAT_TOL
            if any(not math.isfinite(x) or x < -tol for x in w):
                raise ArgumentError(f"invalid weight in {w}")
            if abs(math.fsum(w) - 1.0) > tol:
                raise ArgumentError(f"weights sum to {math.fsum(w)!r}, not 1")

    @classmethod
    def of(cls, weights: Iterable, exact: bool | None = None) -> Dist:
        """Build a Dist, inferring the mode when ``exact`` is None.

        All-rational input gives an exact Dist; anything else is floating.
        """
        w = list(weights)
        if exact is None:
            exact = all(is_exact_number(x) for x in w)
        if exact:
            return cls(tuple(Fraction(x) for x in w), True)
        return cls(tuple(float(x) for x in w), False)

    @classmethod
    def uniform(cls, q: int, exact: bool = True) -> Dist:
        check_q(q)
        if exact:
            return cls((Fraction(1, q),) * q, True)
        return cls((1.0 / q,) * q, False)

    @classmethod
    def point(cls, q: int, symbol: int, exact: bool = True) -> Dist:
        check_q(q)
        _check_symbol(q, symbol)
        one, zero = (Fraction(1), Fraction(0)) if exact else (1.0, 0.0)
        return cls(tuple(one if i == symbol else zero for i in range(q)), exact)

    @property
    def q(self) -> int:
        return len(self.weights)

    def __getitem__(self, i):
        return self.weights[i]

    def __iter__(self):
        return iter(self.weights)

    def __len__(self):
        return len(self.weights)

    def as_array(self) -> np.ndarray:
        return np.array([float(x) for x in self.weights])

    def to_float(self) -> Dist:
        if not self.exact:
            return self
        return Dist(tuple(float(x) for x in self.weights), False)

    def error(self, target: int):
        """Probability mass away from ``target``."""
        return 1 - self.weights[target]

    def close_to(self, other: Dist, tol: float) -> bool:
        return self.q == other.q and all(abs(a - b) <= tol for a, b in zip(self, other))


def _check_symbol(q: int, symbol) -> None:
    if not isinstance(symbol, (int, np.integer)) or isinstance(symbol, bool) or not 0 <= symbol < q:
        raise ArgumentError(f"symbol must be an integer in [0, {q}), got {symbol!r}")


def same_mode(dists: Sequence[Dist]) -> bool:
    """Return the shared mode of ``dists``; raise if they disagree."""
    modes = {d.exact for d in dists}
    if len(modes) != 1:
        raise ModeError("cannot mix exact and floating distributions")
    return modes.pop()


def coerce_prob(p, exact: bool, what: str = "probability"):
    """Bring a probability into the arithmetic mode of a computation."""
    if exact:
        p = as_exact(p, what)
    else:
        p = float(p)
    check_probability(p, what)
    return p


def symmetric_encode(q: int, symbol: int, a) -> Dist:
    """The a-noisy encoding of ``symbol``: 1-a on it, a/(q-1) elsewhere.

    Exact when ``a`` is rational.
    """
    check_q(q)
    _check_symbol(q, symbol)
    exact = is_exact_number(a)
    a = coerce_prob(a, exact, "a")
    off = a / (q - 1)
    return Dist(tuple(1 - a if i == symbol else off for i in range(q)), exact)


def apply_channel(d: Dist, eps) -> Dist:
    """Post-compose ``d`` with the q-ary symmetric channel of strength ``eps``."""
    eps = coerce_prob(eps, d.exact, "eps")
    q = d.q
    scale = 1 - q * eps / (q - 1)
    shift = eps / (q - 1)
    return Dist(tuple(scale * w + shift for w in d), d.exact)


def channel_array(r: np.ndarray, eps: float) -> np.ndarray:
    """Floating channel on the last axis of ``r``, with renormalisation.

    The sum-to-one constraint is an unstable direction of several of the
    maps iterated downstream, so rounding drift is removed here.
    """
    q = r.shape[-1]
    r = r / r.sum(axis=-1, keepdims=True)
    return (1 - q * eps / (q - 1)) * r + eps / (q - 1)


@dataclass(frozen=True)
class DecodeResult:
    symbols: frozenset

    @property
    def is_tie(self) -> bool:
        return len(self.symbols) > 1

    @property
    def symbol(self) -> int:
        if self.is_tie:
            raise ArgumentError(f"tie between {sorted(self.symbols)}")
        return next(iter(self.symbols))

    def __repr__(self):
        if self.is_tie:
            return f"Tie({sorted(self.symbols)})"
        return f"Decoded({self.symbol})"


def Decoded(symbol: int) -> DecodeResult:
    return DecodeResult(frozenset([symbol]))


def Tie(symbols) -> DecodeResult:
    s = frozenset(symbols)
    if len(s) < 2:
        raise ArgumentError("a tie needs at least two symbols")
    return DecodeResult(s)


def decode(d: Dist, tol: float = 0.0) -> DecodeResult:
    """Most likely symbol, or the set of symbols sharing the maximal weight.

    Weights within ``tol`` of the maximum count as tied; the default of zero
    is the strict comparison.
    """
    top = max(d)
    return DecodeResult(frozenset(i for i, w in enumerate(d) if top - w <= tol))


class XYPoint(NamedTuple):
    x: float
    y: float


_SQRT3 = math.sqrt(3.0)


def to_xy(d: Dist) -> XYPoint:
    if d.q != 3:
        raise UnsupportedError(f"the (x, y) chart is defined for q=3 only, got q={d.q}")
    p0, p1 = float(d[0]), float(d[1])
    return XYPoint(_SQRT3 / 4 * (p1 - p0), 0.75 * (p0 + p1 - 2.0 / 3.0))


def from_xy(pt) -> Dist:
    p0, p1 = xy_to_p01(pt[0], pt[1])
    return Dist((p0, p1, 1.0 - p0 - p1), False)


def p01_to_xy(p0, p1):
    """Array-friendly (p0, p1) -> (x, y)."""
    return _SQRT3 / 4 * (p1 - p0), 0.75 * (p0 + p1 - 2.0 / 3.0)


def xy_to_p01(x, y):
    diff = 4 * x / _SQRT3
    total = 4 * y / 3 + 2.0 / 3.0
    return (total - diff) / 2, (total + diff) / 2
