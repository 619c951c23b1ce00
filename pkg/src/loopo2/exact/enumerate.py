"""Brute-force enumeration of heights, loops and coherent pairs with exact weights."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable

import numpy as np

from .._kernels import components_over_masks, free_blue_components, theta_parent, uf_find
from ..config import (FREE, BoundaryCondition, ConfigError, Constraints, HeightFn, LoopConfig, SpinPair,
                      compile_bc, decompose_loops)
from ..lattice import Domain, FaceGraph, edge_vertices

DEFAULT_CAP = 16
EDGE_CAP = 64
PAIR_CAP = 1 << 20


class CapExceeded(RuntimeError):
    pass


class EmptySupport(RuntimeError):
    pass


@dataclass(frozen=True)
class MeasureSpec:
    """A finite-volume measure.

    ``kind`` is ``heights`` (uniform Lipschitz functions), ``loops`` (weight
    ``x^|w| n^l(w)``, default ``n=2, x=1``) or ``pairs`` (uniform coherent pairs
    under ``bc``).
    """

    domain: FaceGraph
    bc: BoundaryCondition = FREE
    loop_weights: tuple | None = None
    kind: str = ""

    def __post_init__(self):
        if not self.kind:
            object.__setattr__(self, "kind", "loops" if self.loop_weights is not None else "pairs")
        if self.loop_weights is not None and self.kind != "loops":
            raise ConfigError("loop weights only apply to loop-level measures")
        if self.kind not in ("heights", "loops", "pairs"):
            raise ConfigError(f"unknown measure kind {self.kind!r}")

    @property
    def weights(self) -> tuple[Fraction, Fraction]:
        n, x = self.loop_weights if self.loop_weights is not None else (2, 1)
        return Fraction(n), Fraction(x)


@dataclass
class ExactDist:
    configs: list
    weights: list
    total: int | Fraction = field(init=False)

    def __post_init__(self):
        self.total = sum(self.weights)

    def __len__(self) -> int:
        return len(self.configs)

    def prob(self, i: int) -> Fraction:
        return Fraction(self.weights[i]) / self.total

    def probability(self, event: Callable) -> Fraction:
        if not self.total:
            raise EmptySupport("zero total weight")
        hit = sum(w for c, w in zip(self.configs, self.weights) if event(c))
        return Fraction(hit) / self.total

    def expectation(self, f: Callable) -> Fraction:
        return sum((Fraction(f(c)) * w for c, w in zip(self.configs, self.weights)), Fraction(0)) / self.total


# ---------------------------------------------------------------- heights

def enumerate_heights(domain: Domain, cap: int = DEFAULT_CAP) -> list[HeightFn]:
    inner = sorted(domain.interior_faces)
    if len(inner) > cap:
        raise CapExceeded(f"{len(inner)} interior faces exceed the cap of {cap}")
    idx = domain.index
    order = [idx[f] for f in inner]
    nb = domain.neighbor_lists
    vals = np.zeros(domain.size, dtype=np.int64)
    assigned = np.zeros(domain.size, dtype=bool)
    for f in domain.inner_boundary:
        assigned[idx[f]] = True
    bound = len(order) + 1
    out: list[HeightFn] = []

    def rec(pos: int):
        if pos == len(order):
            out.append(HeightFn(domain, vals.copy()))
            return
        i = order[pos]
        lo, hi = -bound, bound
        for j in nb[i]:
            if assigned[j]:
                lo = max(lo, vals[j] - 1)
                hi = min(hi, vals[j] + 1)
        assigned[i] = True
        for v in range(lo, hi + 1):
            vals[i] = v
            rec(pos + 1)
        assigned[i] = False
        vals[i] = 0

    rec(0)
    return out


# ---------------------------------------------------------------- loops

def enumerate_loops(domain: Domain, cap: int = EDGE_CAP) -> list[LoopConfig]:
    """All even subsets of the interior edges, by edge backtracking with vertex parity checks."""
    edges = list(domain.interior_edges)
    if len(edges) > cap:
        raise CapExceeded(f"{len(edges)} interior edges exceed the cap of {cap}")
    ends = [edge_vertices(e) for e in edges]
    # a vertex is checked once its last incident interior edge has been decided
    last: dict = {}
    for i, (a, b) in enumerate(ends):
        last[a] = i
        last[b] = i
    closing: list[list] = [[] for _ in edges]
    for x, i in last.items():
        closing[i].append(x)
    # vertices touching a boundary edge must have even degree too; they have at most 2 interior edges
    deg: dict = {x: 0 for x in last}
    chosen = [False] * len(edges)
    out: list[LoopConfig] = []

    def rec(i: int):
        if i == len(edges):
            out.append(LoopConfig(domain, frozenset(e for e, c in zip(edges, chosen) if c)))
            return
        a, b = ends[i]
        for take in (False, True):
            if take:
                deg[a] += 1
                deg[b] += 1
                chosen[i] = True
            if all(deg[x] % 2 == 0 for x in closing[i]):
                rec(i + 1)
            if take:
                deg[a] -= 1
                deg[b] -= 1
                chosen[i] = False

    rec(0)
    return out


def loop_weight(omega: LoopConfig, n=2, x=1):
    n, x = Fraction(n), Fraction(x)
    w = x ** len(omega) * n ** len(decompose_loops(omega))
    return w.numerator if w.denominator == 1 else w


# ---------------------------------------------------------------- red marginals and pairs

@dataclass
class RedTable:
    """Every red configuration allowed by the constraints with its weight exponent.

    Row ``r`` of ``reds`` has weight ``2**exponents[r]``; rows with no coherent
    blue completion are dropped.
    """

    domain: FaceGraph
    constraints: Constraints
    reds: np.ndarray
    exponents: np.ndarray
    free_idx: np.ndarray

    @property
    def weights(self) -> list[int]:
        return [1 << int(k) for k in self.exponents]

    @property
    def total(self) -> int:
        return sum(self.weights)

    def dist(self) -> ExactDist:
        return ExactDist([r for r in self.reds], self.weights)

    def probability(self, event: Callable[[np.ndarray], bool]) -> Fraction:
        hit = sum(1 << int(k) for r, k in zip(self.reds, self.exponents) if event(r))
        return Fraction(hit, self.total)

    def probability_mask(self, mask: np.ndarray) -> Fraction:
        hit = sum(1 << int(k) for k in self.exponents[mask])
        return Fraction(hit, self.total)

    def restricted(self, faces_idx: np.ndarray) -> dict[bytes, int]:
        """Marginal weights (unnormalised) of the red configuration on a face subset."""
        out: dict[bytes, int] = {}
        for r, k in zip(self.reds, self.exponents):
            key = r[faces_idx].tobytes()
            out[key] = out.get(key, 0) + (1 << int(k))
        return out


def red_table(domain: FaceGraph, bc: BoundaryCondition | Constraints = FREE, cap: int = DEFAULT_CAP) -> RedTable:
    cons = bc if isinstance(bc, Constraints) else compile_bc(domain, bc)
    free_idx = cons.free_red.astype(np.int64)
    if len(free_idx) > cap:
        raise CapExceeded(f"{len(free_idx)} free faces exceed the cap of {cap}")
    base = cons.red_fixed.copy()
    base[free_idx] = -1
    ks = components_over_masks(free_idx, base, domain.dual_edges, cons.blue_equal, cons.blue_pin)
    masks = np.arange(1 << len(free_idx), dtype=np.int64)
    reds = np.repeat(base[None, :], len(masks), axis=0)
    if len(free_idx):
        bits = ((masks[:, None] >> np.arange(len(free_idx))[None, :]) & 1).astype(np.int8)
        reds[:, free_idx] = 2 * bits - 1
    keep = ks >= 0
    for g in cons.red_equal:
        sub = reds[:, g]
        keep &= np.all(sub == sub[:, :1], axis=1)
    if not keep.any():
        raise EmptySupport("no red configuration satisfies the boundary condition")
    return RedTable(domain, cons, reds[keep], ks[keep], free_idx)


def red_marginal_weight(domain: FaceGraph, red, bc: BoundaryCondition = FREE) -> int:
    """Number of blue configurations completing ``red`` into an admissible pair."""
    cons = compile_bc(domain, bc)
    red = np.asarray(red, dtype=np.int8)
    if not cons.red_ok(red):
        raise ConfigError("red configuration violates the boundary condition")
    k = free_blue_components(red, domain.dual_edges, cons.blue_equal, cons.blue_pin)
    return 0 if k < 0 else 1 << int(k)


def blue_completions(domain: FaceGraph, red: np.ndarray, cons: Constraints) -> list[np.ndarray]:
    parent = theta_parent(red, domain.dual_edges, cons.blue_equal)
    roots = np.array([uf_find(parent, i) for i in range(domain.size)])
    forced: dict[int, int] = {}
    for i in np.flatnonzero(cons.blue_pin):
        r = roots[i]
        s = int(cons.blue_pin[i])
        if forced.setdefault(r, s) != s:
            return []
    free_roots = sorted(set(roots.tolist()) - set(forced))
    out = []
    for mask in range(1 << len(free_roots)):
        colour = dict(forced)
        for b, r in enumerate(free_roots):
            colour[r] = 1 if (mask >> b) & 1 else -1
        out.append(np.array([colour[r] for r in roots], dtype=np.int8))
    return out


def enumerate_pairs(domain: FaceGraph, bc: BoundaryCondition | Constraints = FREE, cap: int = DEFAULT_CAP,
                    pair_cap: int = PAIR_CAP) -> ExactDist:
    table = red_table(domain, bc, cap)
    if table.total > pair_cap:
        raise CapExceeded(f"{table.total} coherent pairs exceed the cap of {pair_cap}")
    configs = []
    for red in table.reds:
        for blue in blue_completions(domain, red, table.constraints):
            configs.append(SpinPair(domain, red.copy(), blue))
    if not configs:
        raise EmptySupport("no coherent pair satisfies the boundary condition")
    return ExactDist(configs, [1] * len(configs))


# ---------------------------------------------------------------- generic queries

def distribution(spec: MeasureSpec, cap: int | None = None) -> ExactDist:
    if spec.kind == "heights":
        hs = enumerate_heights(spec.domain, cap or DEFAULT_CAP)
        return ExactDist(hs, [1] * len(hs))
    if spec.kind == "loops":
        n, x = spec.weights
        ls = enumerate_loops(spec.domain, cap or EDGE_CAP)
        ws = [x ** len(w) * n ** len(decompose_loops(w)) for w in ls]
        return ExactDist(ls, ws)
    return enumerate_pairs(spec.domain, spec.bc, cap or DEFAULT_CAP)


def exact_prob(spec: MeasureSpec, event: Callable, cap: int | None = None) -> Fraction:
    return distribution(spec, cap).probability(event)


def exact_expectation(spec: MeasureSpec, f: Callable, cap: int | None = None) -> Fraction:
    return distribution(spec, cap).expectation(f)


def count_heights(domain: Domain, cap: int = DEFAULT_CAP) -> int:
    return len(enumerate_heights(domain, cap))


def bijection_sum(domain: Domain, cap: int = EDGE_CAP) -> int:
    """Sum of 2^(number of loops) over loop configurations."""
    return sum(1 << len(decompose_loops(w)) for w in enumerate_loops(domain, cap))


def restrict_weights(weights: dict, total=None) -> dict:
    total = total if total is not None else sum(weights.values())
    return {k: Fraction(v, total) for k, v in weights.items()}


def tv_distance(p: dict, q: dict) -> Fraction | float:
    keys = set(p) | set(q)
    return sum(abs(p.get(k, 0) - q.get(k, 0)) for k in keys) / 2


def iter_masks(nbits: int) -> Iterable[int]:
    return range(1 << nbits)
