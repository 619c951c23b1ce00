"""Markov chains for the uniform height measure and the coherent-pair measures.

Randomness comes from a Philox generator keyed by ``(seed, chain_id)``; each
sweep consumes one raw 64-bit word per visited site and colour, so a
trajectory is a pure function of the chain parameters.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np
from numba import njit

from ._kernels import uf_find, uf_union
from .config import (BCError, BoundaryCondition, Constraints, HeightFn, SpinPair, compile_bc, is_coherent,
                     validate_height)
from .lattice import Domain, FaceGraph, edge_vertices, make_edge

HEIGHTS, SPINS = "heights", "spins"
SPIN_BCS = ("free", "pp", "mm", "pm", "mp", "bpp", "bmm", "dobrushin", "dobrushin-cyl", "fourarc", "pinned")
FOURARC_MAX_FREE = 22


class DiagnosticsError(ValueError):
    pass


@dataclass(frozen=True)
class ChainParams:
    sweeps: int
    burnin: int = 0
    thin: int = 1
    seed: int = 0
    chain_id: int = 0
    refresh: bool = False   # height chain only: resample loop orientations after every sweep
    blue_refresh: bool = True   # spin chain only: exact resampling of blue given red

    def __post_init__(self):
        if self.sweeps < 1 or self.burnin < 0 or self.burnin >= self.sweeps:
            raise ValueError(f"need 0 <= burnin < sweeps, got burnin={self.burnin}, sweeps={self.sweeps}")
        if self.thin < 1:
            raise ValueError("thinning interval must be >= 1")

    @property
    def n_samples(self) -> int:
        return (self.sweeps - self.burnin) // self.thin

    def with_chain(self, chain_id: int) -> "ChainParams":
        return ChainParams(self.sweeps, self.burnin, self.thin, self.seed, chain_id, self.refresh, self.blue_refresh)


def make_rng(seed: int, chain_id: int) -> np.random.Philox:
    return np.random.Philox(key=np.array([seed & (2**64 - 1), chain_id & (2**64 - 1)], dtype=np.uint64))


# ---------------------------------------------------------------- kernels

@njit(cache=True)
def _shuffle(order, raw):
    # Fisher-Yates; index from the low 32 bits by multiply-shift
    n = order.shape[0]
    for i in range(n - 1, 0, -1):
        j = np.int64(((raw[i] & np.uint64(0xFFFFFFFF)) * np.uint64(i + 1)) >> np.uint64(32))
        t = order[i]
        order[i] = order[j]
        order[j] = t


@njit(cache=True)
def _heatbath(phi, nbr, sites, raw):
    order = sites.copy()
    _shuffle(order, raw)
    for t in range(order.shape[0]):
        u = order[t]
        lo = -(1 << 40)
        hi = 1 << 40
        for a in range(6):
            w = nbr[u, a]
            if w < 0:
                continue
            if phi[w] - 1 > lo:
                lo = phi[w] - 1
            if phi[w] + 1 < hi:
                hi = phi[w] + 1
        width = hi - lo + 1
        phi[u] = lo + np.int64(((raw[t] >> np.uint64(32)) * np.uint64(width)) >> np.uint64(32))


@njit(cache=True)
def _orientation_refresh(phi, dual, ev, nv, edge_of, boundary, raw):
    """Flip every loop of the level-line configuration independently with probability 1/2."""
    parent = np.arange(nv)
    for e in range(dual.shape[0]):
        if phi[dual[e, 0]] != phi[dual[e, 1]]:
            uf_union(parent, ev[e, 0], ev[e, 1])
    flip = np.empty(nv, dtype=np.int64)
    for v in range(nv):
        flip[v] = 1 if (raw[v] >> np.uint64(63)) == 0 else -1
    # new[j] - new[i] = flip(loop) * (old[j] - old[i]); integrate outward from the boundary
    n = phi.shape[0]
    new = np.zeros(n, dtype=np.int64)
    done = np.zeros(n, dtype=np.bool_)
    stack = np.empty(n, dtype=np.int64)
    top = 0
    for i in range(boundary.shape[0]):
        done[boundary[i]] = True
        new[boundary[i]] = phi[boundary[i]]
        stack[top] = boundary[i]
        top += 1
    while top > 0:
        top -= 1
        i = stack[top]
        for a in range(6):
            e = edge_of[i, a]
            if e < 0:
                continue
            j = dual[e, 0] if dual[e, 1] == i else dual[e, 1]
            if done[j]:
                continue
            d = phi[j] - phi[i]
            if d != 0:
                d *= flip[uf_find(parent, ev[e, 0])]
            new[j] = new[i] + d
            done[j] = True
            stack[top] = j
            top += 1
    phi[:] = new


@njit(cache=True)
def _spin_pass(red, blue, nbr, sites, red_lock, blue_lock, raw, colour):
    order = sites.copy()
    _shuffle(order, raw)
    for t in range(order.shape[0]):
        if (raw[t] >> np.uint64(63)) == 0:
            continue    # hold
        u = order[t]
        if colour == 0:
            if red_lock[u]:
                continue
            nr = -red[u]
            ok = True
            for a in range(6):
                w = nbr[u, a]
                if w >= 0 and nr != red[w] and blue[u] != blue[w]:
                    ok = False
                    break
            if ok:
                red[u] = nr
        else:
            if blue_lock[u]:
                continue
            nb = -blue[u]
            ok = True
            for a in range(6):
                w = nbr[u, a]
                if w >= 0 and red[u] != red[w] and nb != blue[w]:
                    ok = False
                    break
            if ok:
                blue[u] = nb


@njit(cache=True)
def _blue_refresh(red, blue, edges, extra, pin, raw):
    n = red.shape[0]
    parent = np.arange(n)
    for e in range(edges.shape[0]):
        if red[edges[e, 0]] != red[edges[e, 1]]:
            uf_union(parent, edges[e, 0], edges[e, 1])
    for e in range(extra.shape[0]):
        uf_union(parent, extra[e, 0], extra[e, 1])
    colour = np.zeros(n, dtype=np.int8)
    for i in range(n):
        if pin[i] != 0:
            colour[uf_find(parent, i)] = pin[i]
    for i in range(n):
        r = uf_find(parent, i)
        if colour[r] == 0:
            colour[r] = 1 if (raw[r] >> np.uint64(63)) == 0 else -1
        blue[i] = colour[r]


# ---------------------------------------------------------------- chain state

@dataclass(frozen=True, eq=False)
class _Geometry:
    nbr: np.ndarray
    sites: np.ndarray
    dual: np.ndarray
    ev: np.ndarray
    nv: int
    edge_of: np.ndarray     # (n, 6) dual-edge index per neighbour slot
    boundary: np.ndarray


def edge_geometry(domain: FaceGraph) -> _Geometry:
    cached = getattr(domain, "_mcmc_geometry", None)
    if cached is not None:
        return cached
    nbr = domain.neighbor_table
    dual = domain.dual_edges
    pos = {(int(i), int(j)): e for e, (i, j) in enumerate(dual)}
    edge_of = -np.ones_like(nbr)
    for i in range(domain.size):
        for a in range(6):
            j = nbr[i, a]
            if j >= 0:
                edge_of[i, a] = pos[(min(i, j), max(i, j))]
    vid: dict = {}
    ev = np.zeros((len(dual), 2), dtype=np.int64)
    if isinstance(domain, Domain):
        for e, (i, j) in enumerate(dual):
            for s, x in enumerate(edge_vertices(make_edge(domain.faces[i], domain.faces[j]))):
                ev[e, s] = vid.setdefault(x, len(vid))
    inner = domain.inner_boundary
    boundary = np.array(sorted(domain.index[f] for f in inner), dtype=np.int64)
    sites = np.array([i for i, f in enumerate(domain.faces) if f not in inner], dtype=np.int64)
    geo = _Geometry(nbr, sites, dual, ev, len(vid), edge_of, boundary)
    try:
        object.__setattr__(domain, "_mcmc_geometry", geo)
    except AttributeError:
        pass
    return geo


def representation(domain: FaceGraph, bc: BoundaryCondition) -> str:
    """Which chain targets ``bc`` on ``domain``; raises BCError for unsupported combinations."""
    if bc.kind == "free" and isinstance(domain, Domain):
        return HEIGHTS
    if bc.kind not in SPIN_BCS:
        raise BCError(f"no sampler for boundary condition {bc.kind!r}")
    cons = compile_bc(domain, bc)
    if cons.red_equal:
        raise BCError(f"the spin chain cannot hold red constant on a set ({bc.kind!r})")
    if bc.kind == "fourarc" and int((cons.red_fixed == 0).sum()) > FOURARC_MAX_FREE:
        raise BCError("four-arc sampling is restricted to enumerable domains")
    return SPINS


@dataclass(eq=False)
class ChainState:
    domain: FaceGraph
    bc: BoundaryCondition
    config: np.ndarray | tuple          # heights, or (red, blue)
    rng: np.random.Philox
    sweep: int = 0
    kind: str = HEIGHTS
    cons: Constraints | None = None
    debug: bool = False
    _locks: tuple = field(default=(), repr=False)

    @property
    def value(self):
        """Current configuration as a HeightFn or SpinPair."""
        if self.kind == HEIGHTS:
            return HeightFn(self.domain, self.config.copy())
        red, blue = self.config
        return SpinPair(self.domain, red.copy(), blue.copy())

    def flat(self) -> np.ndarray:
        """Per-face values; spin pairs are stacked red then blue."""
        if self.kind == HEIGHTS:
            return self.config
        return np.concatenate(self.config)


def _initial_spins(domain: FaceGraph, cons: Constraints) -> tuple[np.ndarray, np.ndarray]:
    """A coherent start: red from the fixed values, free faces p, blue constant where possible."""
    red = np.where(cons.red_fixed != 0, cons.red_fixed, 1).astype(np.int8)
    blue = np.ones(domain.size, dtype=np.int8)
    geo = edge_geometry(domain)
    raw = np.zeros(domain.size, dtype=np.uint64)
    _blue_refresh(red, blue, geo.dual, cons.blue_equal, cons.blue_pin, raw)
    if not (cons.red_ok(red) and cons.blue_ok(blue) and is_coherent(domain, red, blue)):
        raise BCError(f"could not build a valid start for {cons!r}")
    return red, blue


def init_state(domain: FaceGraph, bc: BoundaryCondition, params: ChainParams, start=None,
               debug: bool = False) -> ChainState:
    kind = representation(domain, bc)
    rng = make_rng(params.seed, params.chain_id)
    if kind == HEIGHTS:
        phi = np.zeros(domain.size, dtype=np.int64) if start is None else validate_height(domain, start).values.copy()
        return ChainState(domain, bc, phi, rng, 0, kind, debug=debug)
    cons = compile_bc(domain, bc)
    if start is None:
        red, blue = _initial_spins(domain, cons)
    else:
        red, blue = (np.asarray(x, dtype=np.int8).copy() for x in start)
        if not (cons.red_ok(red) and cons.blue_ok(blue) and is_coherent(domain, red, blue)):
            raise BCError("start configuration is not valid for the boundary condition")
    red_lock = cons.red_fixed != 0
    blue_lock = cons.blue_pin != 0
    if len(cons.blue_equal):
        blue_lock[cons.blue_equal.ravel()] = True
    st = ChainState(domain, bc, (red, blue), rng, 0, kind, cons, debug)
    st._locks = (red_lock, blue_lock)
    return st


def height_heatbath_sweep(state: ChainState, refresh: bool = False) -> ChainState:
    geo = edge_geometry(state.domain)
    raw = state.rng.random_raw(len(geo.sites))
    _heatbath(state.config, geo.nbr, geo.sites, raw)
    if refresh:
        _orientation_refresh(state.config, geo.dual, geo.ev, geo.nv, geo.edge_of, geo.boundary,
                             state.rng.random_raw(max(geo.nv, 1)))
    state.sweep += 1
    if state.debug:
        validate_height(state.domain, state.config)
    return state


def spin_metropolis_sweep(state: ChainState, blue_refresh: bool = True) -> ChainState:
    geo = edge_geometry(state.domain)
    red, blue = state.config
    red_lock, blue_lock = state._locks
    sites = np.arange(state.domain.size, dtype=np.int64)
    for colour in (0, 1):
        _spin_pass(red, blue, geo.nbr, sites, red_lock, blue_lock, state.rng.random_raw(len(sites)), colour)
    if blue_refresh:
        cons = state.cons
        _blue_refresh(red, blue, geo.dual, cons.blue_equal, cons.blue_pin, state.rng.random_raw(len(sites)))
    state.sweep += 1
    if state.debug:
        assert is_coherent(state.domain, red, blue)
        assert state.cons.red_ok(red) and state.cons.blue_ok(blue)
    return state


def step(state: ChainState, params: ChainParams) -> ChainState:
    if state.kind == HEIGHTS:
        return height_heatbath_sweep(state, params.refresh)
    return spin_metropolis_sweep(state, params.blue_refresh)


def run_chain(domain: FaceGraph, bc: BoundaryCondition, params: ChainParams, start=None,
              debug: bool = False) -> Iterator[np.ndarray]:
    """Yield copies of the per-face values every ``thin`` sweeps after burn-in."""
    state = init_state(domain, bc, params, start, debug)
    for s in range(1, params.sweeps + 1):
        step(state, params)
        if s > params.burnin and (s - params.burnin) % params.thin == 0:
            yield state.flat().copy()


def sample_array(domain: FaceGraph, bc: BoundaryCondition, params: ChainParams, start=None) -> np.ndarray:
    out = [x for x in run_chain(domain, bc, params, start)]
    width = domain.size * (1 if representation(domain, bc) == HEIGHTS else 2)
    return np.array(out).reshape(len(out), width)


# ---------------------------------------------------------------- diagnostics

def integrated_time(x, c: float = 5.0) -> float:
    """Integrated autocorrelation time with the self-consistent window M >= c tau."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    if n < 2:
        return 1.0
    y = x - x.mean()
    var = float(y @ y) / n
    if var == 0.0:
        return 1.0
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(y, size)
    acf = np.fft.irfft(f * np.conj(f), size)[:n] / (n * var)
    tau = 2.0 * np.cumsum(acf) - 1.0
    for m in range(1, n):
        if m >= c * tau[m]:
            return max(float(tau[m]), 1.0)
    return max(float(tau[-1]), 1.0)


@dataclass(frozen=True)
class Diagnostics:
    ratio: float
    tau: tuple
    flagged: bool

    def to_json(self) -> dict:
        return {"ratio": self.ratio, "tau": list(self.tau), "flagged": self.flagged}


def convergence_diagnostics(streams, observable=None, threshold: float = 1.1) -> Diagnostics:
    """Potential scale reduction across chains plus per-chain autocorrelation times."""
    series = [np.asarray([observable(s) for s in st] if observable else st, dtype=float) for st in streams]
    if len(series) < 2:
        raise DiagnosticsError("need at least two chains")
    n = min(len(s) for s in series)
    if n < 2:
        raise DiagnosticsError("chains are too short")
    series = [s[:n] for s in series]
    for i in range(len(series)):
        for j in range(i):
            if np.array_equal(series[i], series[j]):
                raise DiagnosticsError("identical chains: seeds are not independent")
    means = np.array([s.mean() for s in series])
    within = float(np.mean([s.var(ddof=1) for s in series]))
    between = n * float(means.var(ddof=1))
    if within == 0.0:
        raise DiagnosticsError("zero within-chain variance")
    ratio = float(np.sqrt(((n - 1) / n * within + between / n) / within))
    taus = tuple(integrated_time(s) for s in series)
    return Diagnostics(ratio, taus, ratio > threshold)


# ---------------------------------------------------------------- spool

_HEADER = struct.Struct("<I")


def spool(samples, path) -> int:
    """Write length-prefixed records: a face-count header then int64 values. Returns the count."""
    count = 0
    with open(path, "wb") as fh:
        for x in samples:
            x = np.ascontiguousarray(x, dtype="<i8")
            fh.write(_HEADER.pack(len(x)))
            fh.write(x.tobytes())
            count += 1
    return count


def read_spool(path) -> list[np.ndarray]:
    out = []
    with open(path, "rb") as fh:
        while head := fh.read(_HEADER.size):
            (n,) = _HEADER.unpack(head)
            out.append(np.frombuffer(fh.read(8 * n), dtype="<i8").copy())
    return out
