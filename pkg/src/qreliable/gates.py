"""Deterministic gate truth tables, fan-out-one formulas and their exact
push-forward under q-ary symmetric output noise."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, reduce
from typing import Mapping, Sequence, Union

import numpy as np

from .errors import ArgumentError, ConfigurationError, ResourceError, UnsupportedError
from .simplex import Dist, apply_channel, channel_array, check_q, coerce_prob, same_mode

MAX_TABLE = 10**8
_CHUNK = 1 << 20


@dataclass(frozen=True)
class GateTable:
    """A k-input gate over [q] as a dense row-major table (last input fastest)."""

    q: int
    k: int
    table: tuple
    name: str = "g"

    def __post_init__(self):
        check_q(self.q)
        if self.k < 1:
            raise ArgumentError(f"fan-in must be >= 1, got {self.k}")
        if len(self.table) != self.q**self.k:
            raise ArgumentError(f"table has {len(self.table)} entries, expected {self.q**self.k}")
        if any(not 0 <= v < self.q for v in self.table):
            raise ArgumentError("table entries must lie in [0, q)")
        if any(c.isspace() for c in self.name) or not self.name:
            raise ArgumentError(f"gate name must be a non-empty token, got {self.name!r}")

    @cached_property
    def array(self) -> np.ndarray:
        return np.asarray(self.table, dtype=np.int64)

    @cached_property
    def cube(self) -> np.ndarray:
        """The table reshaped to one axis per input."""
        return self.array.reshape((self.q,) * self.k)

    def index(self, inputs: Sequence[int]) -> int:
        if len(inputs) != self.k:
            raise ArgumentError(f"{self.name} takes {self.k} inputs, got {len(inputs)}")
        idx = 0
        for x in inputs:
            if not 0 <= x < self.q:
                raise ArgumentError(f"input symbol {x} outside [0, {self.q})")
            idx = idx * self.q + x
        return idx

    def __call__(self, *inputs: int) -> int:
        return self.table[self.index(inputs)]

    def rows(self):
        """Yield (input tuple, output) in table order."""
        for tup, out in zip(itertools.product(range(self.q), repeat=self.k), self.table):
            yield tup, out


def _all_inputs(q: int, k: int, start: int, stop: int) -> np.ndarray:
    """Input tuples with table indices in [start, stop), shape (n, k)."""
    idx = np.arange(start, stop, dtype=np.int64)
    cols = []
    for _ in range(k):
        cols.append(idx % q)
        idx = idx // q
    return np.stack(cols[::-1], axis=1)


def _maj_table(q: int, k: int) -> tuple:
    # Mode of the inputs; among tied modes, the one whose first occurrence
    # comes earliest wins.
    n = q**k
    out = np.empty(n, dtype=np.int64)
    sym = np.arange(q)
    for start in range(0, n, _CHUNK):
        stop = min(n, start + _CHUNK)
        x = _all_inputs(q, k, start, stop)
        hit = x[:, :, None] == sym[None, None, :]
        counts = hit.sum(axis=1)
        first = np.where(hit.any(axis=1), hit.argmax(axis=1), k)
        is_mode = counts == counts.max(axis=1, keepdims=True)
        out[start:stop] = np.where(is_mode, first, k + 1).argmin(axis=1)
    return tuple(int(v) for v in out)


# DEN and ENAND are symmetric; only the upper triangle is listed.
_DEN_ROWS = {(0, 0): 0, (0, 1): 2, (0, 2): 0, (1, 1): 1, (1, 2): 1, (2, 2): 2}
_ENAND_ROWS = {(0, 0): 1, (0, 1): 1, (0, 2): 2, (1, 1): 0, (1, 2): 0, (2, 2): 2}


def _symmetric_table(rows: Mapping) -> tuple:
    return tuple(rows[(min(x, y), max(x, y))] for x in range(3) for y in range(3))


def maj(q: int, k: int) -> GateTable:
    check_q(q)
    if k < 1:
        raise UnsupportedError(f"MAJ needs k >= 1, got {k}")
    if q**k > MAX_TABLE:
        raise ResourceError(f"MAJ[{q},{k}] table would have {q**k} entries")
    return GateTable(q, k, _maj_table(q, k), f"MAJ[{q},{k}]")


def den() -> GateTable:
    return GateTable(3, 2, _symmetric_table(_DEN_ROWS), "DEN")


def enand() -> GateTable:
    return GateTable(3, 2, _symmetric_table(_ENAND_ROWS), "ENAND")


def add(q: int) -> GateTable:
    check_q(q)
    return GateTable(q, 2, tuple((x + y) % q for x in range(q) for y in range(q)), f"ADD[{q}]")


def mul(q: int, k: int = 2) -> GateTable:
    """Product of the first two inputs mod q; any further inputs are ignored."""
    check_q(q)
    if k < 2:
        raise UnsupportedError(f"MUL needs k >= 2, got {k}")
    table = tuple((t[0] * t[1]) % q for t in itertools.product(range(q), repeat=k))
    return GateTable(q, k, table, f"MUL[{q},{k}]")


def perm(sigma: Sequence[int]) -> GateTable:
    q = len(sigma)
    if sorted(sigma) != list(range(q)):
        raise ArgumentError(f"{sigma} is not a permutation of [0, {q})")
    return GateTable(q, 1, tuple(sigma), "PERM[" + ",".join(map(str, sigma)) + "]")


def const(q: int, c: int) -> GateTable:
    check_q(q)
    if not 0 <= c < q:
        raise ArgumentError(f"constant {c} outside [0, {q})")
    return GateTable(q, 1, (c,) * q, f"CONST[{q},{c}]")


GATE_KINDS = ("MAJ", "DEN", "ENAND", "ADD", "MUL", "PERM", "CONST")


def builtin_gate(kind: str, q: int, k: int, *, sigma: Sequence[int] | None = None,
                 c: int | None = None) -> GateTable:
    kind = kind.upper()
    if kind == "MAJ":
        return maj(q, k)
    if kind in ("DEN", "ENAND"):
        if (q, k) != (3, 2):
            raise UnsupportedError(f"{kind} is defined for q=3, k=2 only")
        return den() if kind == "DEN" else enand()
    if kind == "ADD":
        if k != 2:
            raise UnsupportedError("ADD is defined for k=2")
        return add(q)
    if kind == "MUL":
        return mul(q, k)
    if kind in ("PERM", "CONST"):
        if k != 1:
            raise UnsupportedError(f"{kind} is unary")
        if kind == "PERM":
            if sigma is None:
                raise ArgumentError("PERM needs sigma")
            if len(sigma) != q:
                raise ArgumentError(f"sigma has length {len(sigma)}, expected {q}")
            return perm(sigma)
        if c is None:
            raise ArgumentError("CONST needs c")
        return const(q, c)
    raise UnsupportedError(f"unknown gate kind {kind!r}; expected one of {GATE_KINDS}")


def compose_unary(outer: GateTable, unaries: Sequence[GateTable], name: str | None = None) -> GateTable:
    """The gate x -> outer(u_1(x_1), ..., u_k(x_k))."""
    if len(unaries) != outer.k or any(u.k != 1 or u.q != outer.q for u in unaries):
        raise ArgumentError("need one unary gate over the same alphabet per input")
    table = tuple(outer(*(u.table[x] for u, x in zip(unaries, tup)))
                  for tup in itertools.product(range(outer.q), repeat=outer.k))
    return GateTable(outer.q, outer.k, table, name or f"{outer.name}o" + "|".join(u.name for u in unaries))


def is_balanced(g: GateTable) -> bool:
    counts = np.bincount(g.array, minlength=g.q)
    return bool(np.all(counts == g.q ** (g.k - 1)))


def _restrictions(g: GateTable, i: int) -> np.ndarray:
    """All unary restrictions along input ``i``, one per row."""
    return np.moveaxis(g.cube, i, -1).reshape(-1, g.q)


def _classify_rows(rows: np.ndarray):
    is_const = np.all(rows == rows[:, :1], axis=1)
    is_bij = np.all(np.sort(rows, axis=1) == np.arange(rows.shape[1]), axis=1)
    return is_const, is_bij


def snp_restriction_check(g: GateTable) -> bool:
    """True iff every one-input restriction of ``g`` is constant or a bijection."""
    for i in range(g.k):
        is_const, is_bij = _classify_rows(_restrictions(g, i))
        if not np.all(is_const | is_bij):
            return False
    return True


@dataclass(frozen=True)
class UnaryMap:
    kind: str  # "constant" or "bijection"
    values: tuple

    def __call__(self, x: int) -> int:
        return self.values[x]


@dataclass(frozen=True)
class PADecomposition:
    q: int
    sigmas: tuple

    def evaluate(self, inputs: Sequence[int]) -> int:
        return sum(s(x) for s, x in zip(self.sigmas, inputs)) % self.q

    def recombine(self, name: str = "PA") -> GateTable:
        table = tuple(self.evaluate(t) for t in itertools.product(range(self.q), repeat=len(self.sigmas)))
        return GateTable(self.q, len(self.sigmas), table, name)


def pa_decompose(g: GateTable) -> PADecomposition | None:
    """Write g as a mod-q sum of unary constants/bijections, if possible.

    Any decomposition differs from the canonical one (restrictions through
    the all-zero input, the constant g(0,...,0) folded into the first map)
    by constant shifts, which preserve the constant/bijection type. So the
    canonical candidate decides existence.
    """
    q, k = g.q, g.k
    base = g.table[0]
    sigmas = []
    for i in range(k):
        # restriction through the all-zero point: entries at stride q^(k-1-i)
        stride = q ** (k - 1 - i)
        tau = [(g.table[x * stride] - base) % q for x in range(q)]
        if i == 0:
            tau = [(t + base) % q for t in tau]
        if len(set(tau)) == 1:
            kind = "constant"
        elif sorted(tau) == list(range(q)):
            kind = "bijection"
        else:
            return None
        sigmas.append(UnaryMap(kind, tuple(tau)))
    dec = PADecomposition(q, tuple(sigmas))
    if dec.recombine(g.name).table != g.table:
        return None
    return dec


def _joint_exact(inputs: Sequence[Dist]):
    for tup in itertools.product(*(range(d.q) for d in inputs)):
        prob = Fraction(1)
        for d, x in zip(inputs, tup):
            prob *= d[x]
            if not prob:
                break
        yield prob


def _check_inputs(g: GateTable, inputs: Sequence[Dist]) -> bool:
    if len(inputs) != g.k:
        raise ArgumentError(f"{g.name} takes {g.k} inputs, got {len(inputs)}")
    if any(d.q != g.q for d in inputs):
        raise ArgumentError(f"input alphabet does not match gate alphabet q={g.q}")
    return same_mode(inputs)


def noiseless_output(g: GateTable, inputs: Sequence[Dist]) -> Dist:
    exact = _check_inputs(g, inputs)
    if exact:
        out = [Fraction(0)] * g.q
        for prob, y in zip(_joint_exact(inputs), g.table):
            if prob:
                out[y] += prob
        return Dist(tuple(out), True)
    r = pushforward_batch(g, [d.as_array()[None, :] for d in inputs], 0.0)[0]
    return Dist(tuple(float(v) for v in r), False)


def pushforward(g: GateTable, inputs: Sequence[Dist], eps) -> Dist:
    """Output distribution of the eps-noisy gate on independent inputs."""
    exact = _check_inputs(g, inputs)
    eps = coerce_prob(eps, exact, "eps")
    if exact:
        return apply_channel(noiseless_output(g, inputs), eps)
    r = pushforward_batch(g, [d.as_array()[None, :] for d in inputs], eps)[0]
    return Dist(tuple(float(v) for v in r), False)


def pushforward_batch(g: GateTable, inputs: Sequence[np.ndarray], eps: float) -> np.ndarray:
    """Floating push-forward for a batch: each input has shape (n, q)."""
    n = max(a.shape[0] for a in inputs)
    joint = reduce(lambda acc, p: (acc[:, :, None] * p[:, None, :]).reshape(n, -1),
                   inputs[1:], np.broadcast_to(inputs[0], (n, g.q)))
    onehot = np.zeros((g.q**g.k, g.q))
    onehot[np.arange(g.q**g.k), g.array] = 1.0
    return channel_array(joint @ onehot, eps)


@dataclass(frozen=True, eq=False)
class Leaf:
    slot: Union[int, str]


@dataclass(frozen=True, eq=False)
class Node:
    gate: GateTable
    children: tuple

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if len(self.children) != self.gate.k:
            raise ArgumentError(f"{self.gate.name} needs {self.gate.k} children, got {len(self.children)}")
        if any(not isinstance(c, (Leaf, Node)) for c in self.children):
            raise ArgumentError("children must be Leaf or Node")


FormulaNode = Union[Leaf, Node]


def check_formula(f: FormulaNode) -> tuple[int, set]:
    """Validate tree shape; return (node count, leaf slots).

    Each leaf position is an independent draw from its slot's distribution,
    so a Leaf object may appear more than once. Gate nodes may not.
    """
    seen: set[int] = set()
    slots: set = set()
    count = 0
    stack = [f]
    while stack:
        n = stack.pop()
        count += 1
        if isinstance(n, Leaf):
            slots.add(n.slot)
            continue
        if id(n) in seen:
            raise ArgumentError("formula shares a subtree; formulas must have fan-out one")
        seen.add(id(n))
        stack.extend(n.children)
    return count, slots


def eval_exact(f: FormulaNode, leaves: Mapping, eps) -> Dist:
    """Output distribution of a noisy formula by bottom-up push-forward."""
    _, slots = check_formula(f)
    missing = slots - set(leaves)
    if missing:
        raise ConfigurationError(f"unbound leaf slots: {sorted(map(str, missing))}")
    return _eval(f, leaves, eps)


def _eval(f, leaves, eps):
    if isinstance(f, Leaf):
        return leaves[f.slot]
    return pushforward(f.gate, [_eval(c, leaves, eps) for c in f.children], eps)


def complete_tree(gate: GateTable, depth: int, slot=0) -> FormulaNode:
    """Complete gate.k-ary tree of the given depth over a single leaf slot."""
    if depth == 0:
        return Leaf(slot)
    return Node(gate, tuple(complete_tree(gate, depth - 1, slot) for _ in range(gate.k)))


def dumps_gate(g: GateTable) -> str:
    lines = [f"{g.q} {g.k} {g.name}"]
    width = g.q
    for i in range(0, len(g.table), width):
        lines.append(" ".join(str(v) for v in g.table[i:i + width]))
    return "\n".join(lines) + "\n"


def loads_gate(text: str) -> GateTable:
    tokens = text.split()
    if len(tokens) < 3:
        raise ArgumentError("gate text needs a 'q k name' header")
    try:
        q, k = int(tokens[0]), int(tokens[1])
        body = [int(t) for t in tokens[3:]]
    except ValueError as exc:
        raise ArgumentError(f"malformed gate text: {exc}") from None
    return GateTable(q, k, tuple(body), tokens[2])
