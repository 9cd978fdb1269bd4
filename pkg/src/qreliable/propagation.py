"""Noise propagation through pseudo-additive gates and the MUL
distinguishability margin."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Sequence

from . import gates
from .errors import ArgumentError, UnsupportedError
from .simplex import check_q, coerce_prob, float_tol, is_exact_number, symmetric_encode
from .thresholds import bisect


@dataclass(frozen=True)
class PropagationResult:
    b: object  # output error rate (mass off the correct symbol)
    symmetric: bool


def _mode(*xs) -> bool:
    return all(is_exact_number(x) for x in xs)


def prop_perm(a, eps, q: int):
    """Error rate after an eps-noisy unary bijection on an a-noisy input."""
    check_q(q)
    exact = _mode(a, eps)
    a, eps = coerce_prob(a, exact, "a"), coerce_prob(eps, exact, "eps")
    return eps + (1 - q * eps / (q - 1)) * a


def prop_add(a1, a2, eps, q: int):
    """Error rate after eps-noisy ADD on independent a1- and a2-noisy inputs."""
    check_q(q)
    exact = _mode(a1, a2, eps)
    a1, a2 = coerce_prob(a1, exact, "a1"), coerce_prob(a2, exact, "a2")
    eps = coerce_prob(eps, exact, "eps")
    noiseless = a1 + a2 - a1 * a2 * q / (q - 1)
    return eps + noiseless * (q - 1 - q * eps) / (q - 1)


def prop_add_chain(a_list: Sequence, eps, q: int):
    """Left fold of prop_add over a sequence of input error rates."""
    if not a_list:
        raise ArgumentError("need at least one input")
    return reduce(lambda acc, a: prop_add(acc, a, eps, q), a_list[1:], a_list[0])


def _is_prime(n: int) -> bool:
    return n >= 2 and all(n % p for p in range(2, int(n**0.5) + 1))


def _require_prime(q: int) -> None:
    check_q(q)
    if not _is_prime(q):
        raise UnsupportedError(f"MUL analysis needs a prime alphabet size, got q={q}")


@dataclass(frozen=True)
class MulReport:
    p_correct: object
    p_0: object
    margin: object


def mul_distinguishability(q: int, a) -> MulReport:
    """Noiseless MUL on two a-noisy inputs whose true values are nonzero.

    ``p_0`` is the weight on the dominant wrong output 0.
    """
    _require_prime(q)
    a = coerce_prob(a, is_exact_number(a), "a")
    s = a / (q - 1)
    p_correct = (1 - a) ** 2 + (q - 2) * s * s
    p_0 = s * s + 2 * s * (1 - s)
    return MulReport(p_correct, p_0, p_correct - p_0)


def mul_margin_root(q: int, tol: float = 1e-14) -> float:
    """Noise level in (0, 1) where the MUL margin changes sign."""
    _require_prime(q)
    return bisect(lambda a: float(mul_distinguishability(q, a).margin), 0.0, 1.0, tol)


def mul_zero_product(q: int, a) -> PropagationResult:
    """MUL on a-noisy encodings of 0 and 1: the zero-product case, reported as is."""
    _require_prime(q)
    enc = [symmetric_encode(q, 0, a), symmetric_encode(q, 1, a)]
    out = gates.pushforward(gates.mul(q), enc, 0 if is_exact_number(a) else 0.0)
    return _summarise(out, 0)


def _summarise(out, target: int) -> PropagationResult:
    wrong = [w for i, w in enumerate(out) if i != target]
    if out.exact:
        symmetric = len(set(wrong)) <= 1
    else:
        symmetric = max(wrong) - min(wrong) <= float_tol()
    return PropagationResult(out.error(target), symmetric)


def snp_output_check(g: gates.GateTable, a_list: Sequence, eps,
                     targets: Sequence[int] | str | None = None) -> PropagationResult:
    """Push symmetric-noisy inputs through g and test the output for symmetric noise.

    ``targets`` are the true input symbols; default is symbol 1 on every
    input. ``"all"`` checks every assignment and reports the largest error
    rate, symmetric only if every assignment gives symmetric output.
    """
    if len(a_list) != g.k:
        raise ArgumentError(f"{g.name} takes {g.k} inputs, got {len(a_list)} noise levels")
    exact = _mode(eps, *a_list)
    eps = coerce_prob(eps, exact, "eps")
    if targets == "all":
        cases = list(itertools.product(range(g.q), repeat=g.k))
    elif targets is None:
        cases = [(1 % g.q,) * g.k]
    else:
        cases = [tuple(targets)]
    results = []
    for tgt in cases:
        if len(tgt) != g.k:
            raise ArgumentError(f"need {g.k} targets, got {len(tgt)}")
        enc = [symmetric_encode(g.q, t, a if exact else float(a)) for t, a in zip(tgt, a_list)]
        results.append(_summarise(gates.pushforward(g, enc, eps), g(*tgt)))
    worst = max(r.b for r in results)
    return PropagationResult(worst, all(r.symmetric for r in results))


def pa_grid(q: int, n: int = 20, n_eps: int = 5):
    """Exact rational grid of (a1, a2, eps) in [0, (q-1)/q] used by grid checks."""
    top = Fraction(q - 1, q)
    a_vals = [top * i / (n - 1) for i in range(n)] if n > 1 else [Fraction(0)]
    e_vals = [top * i / (n_eps - 1) for i in range(n_eps)] if n_eps > 1 else [Fraction(0)]
    return a_vals, e_vals


@dataclass(frozen=True)
class PAGridReport:
    q: int
    points: int
    perm_ok: bool
    add_ok: bool
    closure_ok: bool
    monotone_ok: bool

    @property
    def passed(self) -> bool:
        return self.perm_ok and self.add_ok and self.closure_ok and self.monotone_ok


def verify_pa(q: int, n: int = 20, n_eps: int = 5, sigma: Sequence[int] | None = None) -> PAGridReport:
    """Check the closed forms against exact push-forward on a rational grid.

    Also checks closure below (q-1)/q and monotonicity of prop_add in each argument.
    """
    check_q(q)
    sigma = tuple(sigma) if sigma is not None else tuple((i + 1) % q for i in range(q))
    P, A = gates.perm(sigma), gates.add(q)
    a_vals, e_vals = pa_grid(q, n, n_eps)
    top = Fraction(q - 1, q)
    perm_ok = add_ok = closure_ok = monotone_ok = True
    points = 0
    for eps in e_vals:
        for a1 in a_vals:
            b = prop_perm(a1, eps, q)
            out = gates.pushforward(P, [symmetric_encode(q, 0, a1)], eps)
            perm_ok &= out.error(P(0)) == b
            if a1 < top and eps < top:
                closure_ok &= b < top
            prev = None
            for a2 in a_vals:
                points += 1
                bp = prop_add(a1, a2, eps, q)
                # targets (1, q-1) sum to 0, which catches sign slips in the formula
                enc = [symmetric_encode(q, 1 % q, a1), symmetric_encode(q, q - 1, a2)]
                add_ok &= gates.pushforward(A, enc, eps).error(0) == bp
                if a1 < top and a2 < top and eps < top:
                    closure_ok &= bp < top
                if prev is not None:
                    monotone_ok &= bp >= prev
                prev = bp
    # monotone in eps at fixed inputs
    for a1 in a_vals:
        for a2 in a_vals:
            vals = [prop_add(a1, a2, e, q) for e in e_vals]
            monotone_ok &= all(x <= y for x, y in zip(vals, vals[1:]))
    return PAGridReport(q, points, perm_ok, add_ok, closure_ok, monotone_ok)
