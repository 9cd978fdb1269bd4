"""Seeded Monte Carlo simulation of noisy formulas.

Random streams are numpy PCG64 generators keyed by
``SeedSequence(seed, spawn_key=(case, layer, block))``. Trials are cut into
blocks of a fixed size, so the draws of a trial depend only on the seed and
its index and never on how blocks are scheduled across threads.

Two sampling modes exist. ``tree`` simulates the formula itself, one
independent tree per trial. ``layered`` keeps a population of ``trials``
samples per gate layer and feeds every gate from i.i.d. draws of the layer
below; it needs memory linear in depth instead of exponential, and its
estimates converge to the tree values as the population grows.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence, Union

import numpy as np

from . import gates
from .dynamics import den_logical_weights
from .errors import ConfigurationError, ResourceError
from .gates import FormulaNode, GateTable, Leaf, Node
from .simplex import Dist, check_probability, check_q, symmetric_encode

BLOCK = 4096
MAX_NODES = 10**7
MAX_SEED = 2**64


def block_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def _blocks(trials: int, size: int = BLOCK):
    return [(b, b * size, min(trials, (b + 1) * size)) for b in range((trials + size - 1) // size)]


def _map(fn, items, threads: int):
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def add_noise(y: np.ndarray, eps: float, q: int, rng: np.random.Generator) -> np.ndarray:
    """Keep each symbol with probability 1-eps, else move it to a uniform other symbol."""
    flip = rng.random(y.shape) < eps
    shift = rng.integers(1, q, size=y.shape)
    return np.where(flip, (y + shift) % q, y)


def sample_dist(d: Dist, n: int, rng: np.random.Generator) -> np.ndarray:
    cdf = np.cumsum(d.as_array())
    idx = np.searchsorted(cdf, rng.random(n) * cdf[-1], side="right")
    return np.minimum(idx, d.q - 1)


def sample_gate(g: GateTable, inputs, eps: float, rng: np.random.Generator, size: int | None = None):
    """One eps-noisy evaluation of g, or ``size`` of them when inputs are arrays or size is given.

    ``inputs`` is a sequence of k symbols or k equal-length integer arrays.
    """
    check_probability(eps, "eps")
    cols = [np.asarray(x, dtype=np.int64) for x in inputs]
    if len(cols) != g.k:
        raise ConfigurationError(f"{g.name} takes {g.k} inputs, got {len(cols)}")
    scalar = all(c.ndim == 0 for c in cols) and size is None
    n = size if size is not None else max((c.size for c in cols), default=1)
    cols = [np.broadcast_to(c, (n,)) for c in cols]
    idx = np.zeros(n, dtype=np.int64)
    for c in cols:
        if c.size and (c.min() < 0 or c.max() >= g.q):
            raise ConfigurationError(f"input symbol out of range for q={g.q}")
        idx = idx * g.q + c
    out = add_noise(g.array[idx], float(eps), g.q, rng)
    return int(out[0]) if scalar else out


@dataclass(frozen=True)
class CaseResult:
    inputs: tuple
    target: int
    histogram: tuple
    error_rate: float
    half_width: float
    bundle_errors: tuple = ()  # per level: (chained bundle error, fresh bundle error)


@dataclass(frozen=True)
class TrialReport:
    histogram: tuple
    trials: int
    error_rate: float | None
    half_width: float | None
    seed: int
    target: int | None = None
    cases: tuple = ()
    bundle_reference: float | None = None
    sampling: str = "tree"
    wall_clock: float = field(default=0.0, compare=False)

    @property
    def decoded_correctly(self) -> bool:
        return self.target is not None and int(np.argmax(self.histogram)) == self.target


def half_width(p: float, trials: int) -> float:
    return 1.96 * math.sqrt(p * (1 - p) / trials)


def _error(hist: np.ndarray, target: int, trials: int) -> tuple[float, float]:
    p = 1.0 - hist[target] / trials
    return float(p), half_width(float(p), trials)


def _check_seed(seed) -> int:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)) or not 0 <= seed < MAX_SEED:
        raise ConfigurationError(f"seed must be an integer in [0, 2^64), got {seed!r}")
    return int(seed)


def _check_trials(trials) -> int:
    if isinstance(trials, bool) or not isinstance(trials, (int, np.integer)) or trials < 1:
        raise ConfigurationError(f"trials must be a positive integer, got {trials!r}")
    return int(trials)


def _simulate(f: FormulaNode, leaves: Mapping, eps: float, n: int, rng) -> np.ndarray:
    if isinstance(f, Leaf):
        return sample_dist(leaves[f.slot], n, rng)
    cols = [_simulate(c, leaves, eps, n, rng) for c in f.children]
    return sample_gate(f.gate, cols, eps, rng, size=n)


def _tree_histogram(f, leaves, eps, trials, seed, case, threads, q):
    def run(block):
        b, lo, hi = block
        y = _simulate(f, leaves, eps, hi - lo, block_rng(seed, case, 0, b))
        return np.bincount(y, minlength=q)
    return sum(_map(run, _blocks(trials), threads))


def run_formula(f: FormulaNode, leaves: Mapping, eps: float, trials: int, seed: int,
                target: int | None = None, threads: int = 1) -> TrialReport:
    """Simulate ``trials`` independent copies of the noisy formula.

    ``leaves`` maps each leaf slot to the distribution it is drawn from,
    fresh for every leaf position and trial.
    """
    start = time.perf_counter()
    seed, trials = _check_seed(seed), _check_trials(trials)
    check_probability(eps, "eps")
    count, slots = gates.check_formula(f)
    if count > MAX_NODES:
        raise ResourceError(f"formula has {count} nodes, above the limit of {MAX_NODES}")
    missing = slots - set(leaves)
    if missing:
        raise ConfigurationError(f"unbound leaf slots: {sorted(map(str, missing))}")
    q = _alphabet(f, leaves)
    hist = _tree_histogram(f, leaves, float(eps), trials, seed, 0, threads, q)
    err = _error(hist, target, trials) if target is not None else (None, None)
    return TrialReport(tuple(int(v) for v in hist), trials, err[0], err[1], seed, target,
                       wall_clock=time.perf_counter() - start)


def _alphabet(f, leaves) -> int:
    if isinstance(f, Node):
        return f.gate.q
    return leaves[f.slot].q


# ---------------------------------------------------------------- experiments

@dataclass(frozen=True)
class MajTree:
    depth: int


@dataclass(frozen=True)
class AlternatingEnandDen:
    depth: int
    den_rounds: int


Construction = Union[MajTree, AlternatingEnandDen]
SAMPLING_MODES = ("auto", "tree", "layered")


@dataclass(frozen=True)
class ExperimentConfig:
    q: int
    k: int
    construction: Construction
    eps: float
    leaf_noise: float
    trials: int
    seed: int
    logical_inputs: tuple | None = None  # None: every logical input
    sampling: str = "auto"
    threads: int = 1

    def __post_init__(self):
        if self.logical_inputs is not None:
            object.__setattr__(self, "logical_inputs", tuple(
                tuple(x) if isinstance(x, (list, tuple)) else (x,) for x in self.logical_inputs))
        check_q(self.q)
        check_probability(self.eps, "eps")
        check_probability(self.leaf_noise, "leaf_noise")
        _check_trials(self.trials)
        _check_seed(self.seed)
        c = self.construction
        if c.depth < 0 or (isinstance(c, AlternatingEnandDen) and c.den_rounds < 0):
            raise ConfigurationError("depths must be non-negative")
        if isinstance(c, AlternatingEnandDen) and (self.q, self.k) != (3, 2):
            raise ConfigurationError("the ENAND/DEN construction needs q=3, k=2")
        if isinstance(c, AlternatingEnandDen) and c.depth < 1:
            raise ConfigurationError("the ENAND/DEN construction needs logical depth >= 1")
        if self.sampling not in SAMPLING_MODES:
            raise ConfigurationError(f"sampling must be one of {SAMPLING_MODES}, got {self.sampling!r}")
        if self.threads < 1:
            raise ConfigurationError("threads must be >= 1")
        width, top = (1, self.q) if isinstance(c, MajTree) else (2, 2)
        for case in self.cases():
            if len(case) != width or any(not 0 <= s < top for s in case):
                raise ConfigurationError(f"invalid logical input {case!r}")

    def cases(self) -> list[tuple]:
        if self.logical_inputs is not None:
            return list(self.logical_inputs)
        if isinstance(self.construction, MajTree):
            return [(s,) for s in range(self.q)]
        return [(u, v) for u in (0, 1) for v in (0, 1)]


def nand_chain(u: int, v: int, depth: int) -> list[int]:
    """Intended logical value after each level: y1 = NAND(u, v), then y = NAND(y, u or v)."""
    ys = [1 - (u & v)]
    for level in range(2, depth + 1):
        w = u if level % 2 == 0 else v
        ys.append(1 - (ys[-1] & w))
    return ys


def den_bundle(x: FormulaNode, rounds: int, make) -> FormulaNode:
    if rounds == 0:
        return make(x)
    return Node(gates.den(), (den_bundle(x, rounds - 1, make), den_bundle(x, rounds - 1, make)))


def build_formula(cfg: ExperimentConfig, inputs: tuple) -> tuple[FormulaNode, dict, int]:
    """Formula tree, leaf bindings and intended output for one logical input."""
    c = cfg.construction
    if isinstance(c, MajTree):
        (s,) = inputs
        f = gates.complete_tree(gates.maj(cfg.q, cfg.k), c.depth)
        return f, {0: symmetric_encode(cfg.q, s, cfg.leaf_noise)}, s
    u, v = inputs
    leaves = {"u": symmetric_encode(3, u, cfg.leaf_noise), "v": symmetric_encode(3, v, cfg.leaf_noise)}
    en = gates.enand()
    r = c.den_rounds
    fresh = lambda slot: den_bundle(Leaf(slot), r, lambda x: x)  # noqa: E731
    f = Node(en, (fresh("u"), fresh("v")))
    for level in range(2, c.depth + 1):
        prev = f
        # each copy of the previous level is an independent subtree
        chained = _copy_bundle(prev, r)
        f = Node(en, (chained, fresh("u" if level % 2 == 0 else "v")))
    return f, leaves, nand_chain(u, v, c.depth)[-1]


def _copy_bundle(sub: FormulaNode, rounds: int) -> FormulaNode:
    if rounds == 0:
        return _clone(sub)
    return Node(gates.den(), (_copy_bundle(sub, rounds - 1), _copy_bundle(sub, rounds - 1)))


def _clone(f: FormulaNode) -> FormulaNode:
    if isinstance(f, Leaf):
        return f
    return Node(f.gate, tuple(_clone(c) for c in f.children))


def tree_size(cfg: ExperimentConfig) -> int:
    """Node count of the formula the configuration describes, leaves included."""
    c = cfg.construction
    if isinstance(c, MajTree):
        k = cfg.k
        return c.depth + 1 if k == 1 else (k ** (c.depth + 1) - 1) // (k - 1)
    bundle_gates = 2**c.den_rounds - 1
    fan = 2**c.den_rounds
    size = 2 * (bundle_gates + fan) + 1
    for _ in range(2, c.depth + 1):
        size = bundle_gates + fan * size + (bundle_gates + fan) + 1
    return size


def _resolve_sampling(cfg: ExperimentConfig) -> str:
    size = tree_size(cfg)
    if cfg.sampling == "tree" and size > MAX_NODES:
        raise ResourceError(f"tree has {size} nodes, above the limit of {MAX_NODES}; "
                            "use layered sampling")
    if cfg.sampling == "auto":
        return "tree" if size <= MAX_NODES else "layered"
    return cfg.sampling


class _Layers:
    """Population-resampling simulator: one population of size n per gate layer."""

    def __init__(self, n: int, eps: float, seed: int, case: int, threads: int):
        self.n, self.eps, self.seed, self.case, self.threads = n, eps, seed, case, threads
        self.layer = 0

    def _next(self, fn) -> np.ndarray:
        self.layer += 1
        layer = self.layer

        def run(block):
            b, lo, hi = block
            return fn(hi - lo, block_rng(self.seed, self.case, layer, b))
        return np.concatenate(_map(run, _blocks(self.n), self.threads))

    def leaves(self, d: Dist) -> np.ndarray:
        return self._next(lambda m, rng: sample_dist(d, m, rng))

    def gate(self, g: GateTable, pops: Sequence[np.ndarray]) -> np.ndarray:
        def fn(m, rng):
            cols = [p[rng.integers(0, p.size, size=m)] for p in pops]
            return sample_gate(g, cols, self.eps, rng, size=m)
        return self._next(fn)

    def bundle(self, pop: np.ndarray, rounds: int) -> np.ndarray:
        den = gates.den()
        for _ in range(rounds):
            pop = self.gate(den, [pop, pop])
        return pop


def _layered_case(cfg: ExperimentConfig, inputs: tuple, case: int):
    sim = _Layers(cfg.trials, float(cfg.eps), cfg.seed, case, cfg.threads)
    c = cfg.construction
    if isinstance(c, MajTree):
        (s,) = inputs
        g = gates.maj(cfg.q, cfg.k)
        pop = sim.leaves(symmetric_encode(cfg.q, s, cfg.leaf_noise))
        for _ in range(c.depth):
            pop = sim.gate(g, [pop] * cfg.k)
        return pop, s, ()
    u, v = inputs
    enc = {0: symmetric_encode(3, 0, cfg.leaf_noise), 1: symmetric_encode(3, 1, cfg.leaf_noise)}
    r, en = c.den_rounds, gates.enand()
    ys = nand_chain(u, v, c.depth)
    bu = sim.bundle(sim.leaves(enc[u]), r)
    bv = sim.bundle(sim.leaves(enc[v]), r)
    n = cfg.trials
    bundle_errors = [(float(np.mean(bu != u)), float(np.mean(bv != v)))]
    pop = sim.gate(en, [bu, bv])
    for level in range(2, c.depth + 1):
        w = u if level % 2 == 0 else v
        chained = sim.bundle(pop, r)
        fresh = sim.bundle(sim.leaves(enc[w]), r)
        bundle_errors.append((float(np.count_nonzero(chained != ys[level - 2]) / n),
                              float(np.count_nonzero(fresh != w) / n)))
        pop = sim.gate(en, [chained, fresh])
    return pop, ys[-1], tuple(bundle_errors)


def bundle_reference(eps: float) -> float:
    """Analytic error of a denoised bundle: 1 - p_plus, or 2/3 above eps = 1/6."""
    if eps > Fraction(1, 6):
        return 2.0 / 3.0
    return 1.0 - den_logical_weights(float(eps))[0]


def vn_experiment(cfg: ExperimentConfig) -> TrialReport:
    """Estimate the worst-case logical error of a restoring construction over its inputs."""
    start = time.perf_counter()
    mode = _resolve_sampling(cfg)
    results = []
    for case, inputs in enumerate(cfg.cases()):
        if mode == "tree":
            f, leaves, target = build_formula(cfg, inputs)
            hist = _tree_histogram(f, leaves, float(cfg.eps), cfg.trials, cfg.seed, case,
                                   cfg.threads, cfg.q)
            bundles = ()
        else:
            pop, target, bundles = _layered_case(cfg, inputs, case)
            hist = np.bincount(pop, minlength=cfg.q)
        p, hw = _error(hist, target, cfg.trials)
        results.append(CaseResult(tuple(inputs), target, tuple(int(v) for v in hist), p, hw, bundles))
    worst = max(results, key=lambda r: r.error_rate)
    ref = bundle_reference(cfg.eps) if isinstance(cfg.construction, AlternatingEnandDen) else None
    return TrialReport(worst.histogram, cfg.trials, worst.error_rate, worst.half_width, cfg.seed,
                       worst.target, tuple(results), ref, mode, time.perf_counter() - start)


def max_bundle_deviation(report: TrialReport) -> float:
    """Largest distance of any per-level bundle error from the analytic reference."""
    if report.bundle_reference is None:
        raise ConfigurationError("report carries no bundle reference")
    devs = [abs(e - report.bundle_reference) for c in report.cases for lvl in c.bundle_errors for e in lvl]
    return max(devs, default=0.0)


# ------------------------------------------------------------------ config io

def config_to_dict(cfg: ExperimentConfig) -> dict:
    c = cfg.construction
    if isinstance(c, MajTree):
        cons = {"kind": "MajTree", "depth": c.depth}
    else:
        cons = {"kind": "AlternatingEnandDen", "depth": c.depth, "den_rounds": c.den_rounds}
    return {
        "q": cfg.q, "k": cfg.k, "construction": cons, "eps": cfg.eps,
        "leaf_noise": cfg.leaf_noise,
        "logical_inputs": None if cfg.logical_inputs is None else [list(x) for x in cfg.cases()],
        "trials": cfg.trials, "seed": cfg.seed, "sampling": cfg.sampling, "threads": cfg.threads,
    }


def _number(x, what: str) -> float:
    if isinstance(x, str):
        try:
            return float(Fraction(x))
        except (ValueError, ZeroDivisionError):
            raise ConfigurationError(f"{what} is not a number: {x!r}") from None
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ConfigurationError(f"{what} is not a number: {x!r}")
    return float(x)


def config_from_dict(doc: Mapping, **overrides) -> ExperimentConfig:
    known = {"q", "k", "construction", "eps", "leaf_noise", "logical_inputs", "trials", "seed",
             "sampling", "threads", "schema_version"}
    extra = set(doc) - known
    if extra:
        raise ConfigurationError(f"unknown config fields: {sorted(extra)}")
    doc = {**doc, **{k: v for k, v in overrides.items() if v is not None}}
    try:
        cons = doc["construction"]
        kind = cons["kind"]
        if kind == "MajTree":
            construction: Construction = MajTree(int(cons["depth"]))
        elif kind == "AlternatingEnandDen":
            construction = AlternatingEnandDen(int(cons["depth"]), int(cons["den_rounds"]))
        else:
            raise ConfigurationError(f"unknown construction {kind!r}")
        if "seed" not in doc:
            raise ConfigurationError("config needs a seed (or pass --seed)")
        inputs = doc.get("logical_inputs")
        return ExperimentConfig(
            q=int(doc["q"]), k=int(doc["k"]), construction=construction,
            eps=_number(doc["eps"], "eps"), leaf_noise=_number(doc["leaf_noise"], "leaf_noise"),
            trials=doc["trials"], seed=doc["seed"],
            logical_inputs=None if inputs is None else tuple(tuple(x) if isinstance(x, list) else (x,)
                                                             for x in inputs),
            sampling=doc.get("sampling", "auto"), threads=int(doc.get("threads", 1)))
    except KeyError as exc:
        raise ConfigurationError(f"config is missing field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"invalid config: {exc}") from None
