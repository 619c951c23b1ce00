"""Measure-preserving maps between heights, oriented loops, coloured loops and spin pairs."""
from __future__ import annotations

import numpy as np

from .config import (ConfigError, HeightFn, LoopConfig, OrientedLoopConfig, SpinPair, as_array, decompose_loops,
                     enclosed_faces, omega_of, theta_components, validate_height, validate_loops)
from .lattice import Domain, FaceGraph, make_edge


def _rng(rng) -> np.random.Generator:
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def _inside_masks(domain: Domain, loops) -> list[np.ndarray]:
    out = []
    for lp in loops:
        m = np.zeros(domain.size, dtype=bool)
        for f in enclosed_faces(lp):
            m[domain.index[f]] = True
        out.append(m)
    return out


def height_to_oriented_loops(phi: HeightFn) -> OrientedLoopConfig:
    d = phi.domain
    v = phi.values
    edges = [(d.faces[i], d.faces[j]) for i, j in d.dual_edges if v[i] != v[j]]
    omega = validate_loops(d, edges)
    flags = []
    for lp in decompose_loops(omega):
        # orientation is read off any edge: the face enclosed by the loop is the higher one iff clockwise
        inside = set(enclosed_faces(lp))
        a, b = lp[0]
        hi_in = v[d.index[a]] > v[d.index[b]] if a in inside else v[d.index[b]] > v[d.index[a]]
        flags.append(bool(hi_in))
    return OrientedLoopConfig(omega, tuple(flags))


def oriented_loops_to_height(ol: OrientedLoopConfig) -> HeightFn:
    d = ol.domain
    loops = decompose_loops(ol.loops)
    if len(loops) != len(ol.clockwise):
        raise ConfigError("one orientation flag per loop is required")
    vals = np.zeros(d.size, dtype=np.int64)
    for m, cw in zip(_inside_masks(d, loops), ol.clockwise):
        vals[m] += 1 if cw else -1
    return validate_height(d, vals)


def orient_uniform(omega: LoopConfig, rng=None) -> OrientedLoopConfig:
    rng = _rng(rng)
    n = len(decompose_loops(omega))
    return OrientedLoopConfig(omega, tuple(bool(b) for b in rng.integers(0, 2, size=n)))


def color_loops_uniform(omega: LoopConfig, rng=None) -> tuple[LoopConfig, LoopConfig]:
    """Colour each loop red or blue by a fair coin; returns (red loops, blue loops)."""
    rng = _rng(rng)
    loops = decompose_loops(omega)
    coins = rng.integers(0, 2, size=len(loops))
    red = frozenset(e for lp, c in zip(loops, coins) if c for e in lp)
    blue = frozenset(e for lp, c in zip(loops, coins) if not c for e in lp)
    return LoopConfig(omega.domain, red), LoopConfig(omega.domain, blue)


def spins_to_loops(pair: SpinPair) -> tuple[LoopConfig, LoopConfig]:
    return omega_of(pair.domain, pair.red), omega_of(pair.domain, pair.blue)


def _spins_from_loops(domain: Domain, omega: LoopConfig, boundary: int) -> np.ndarray:
    s = np.full(domain.size, boundary, dtype=np.int8)
    for m in _inside_masks(domain, decompose_loops(omega)):
        s[m] *= -1
    return s


def loops_to_spins(omega_r: LoopConfig, omega_b: LoopConfig, red_boundary: int = 1, blue_boundary: int = 1) -> SpinPair:
    if omega_r.edges & omega_b.edges:
        raise ConfigError("red and blue loop configurations overlap")
    d = omega_r.domain
    pair = SpinPair(d, _spins_from_loops(d, omega_r, red_boundary), _spins_from_loops(d, omega_b, blue_boundary))
    return pair


def assign_blue_uniform(domain: FaceGraph, red, rng=None) -> np.ndarray:
    """One fair blue spin per cluster of theta(red)."""
    rng = _rng(rng)
    r = as_array(domain, red)
    roots = theta_components(domain, r)
    coins = rng.integers(0, 2, size=domain.size).astype(np.int8) * 2 - 1
    return coins[roots]


def edges_from_keys(domain: Domain, pairs) -> LoopConfig:
    return validate_loops(domain, [make_edge(*p) for p in pairs])
