import math

import networkx as nx
import numpy as np

from loopo2.config import M, P
from loopo2.detect import circuit_double_exists, crossing_exists, ray_crossing
from loopo2.lattice import Face, build_annulus, build_parallelogram, edge_vertices, vertex_position


def test_crossing_examples():
    d = build_parallelogram(1, 1)
    allp = np.full(d.size, P, dtype=np.int8)
    assert crossing_exists(allp, d, "h", "double", P)
    assert not crossing_exists(-allp, d, "h", "double", P)


def test_blocking_column_stops_simple_crossing():
    d = build_parallelogram(2, 2)
    s = np.full(d.size, P, dtype=np.int8)
    assert crossing_exists(s, d, "h", "simple", P)
    for f in d.faces:
        if f.k == 1:
            s[d.index[f]] = M
    assert not crossing_exists(s, d, "h", "simple", P)
    assert crossing_exists(s, d, "v", "simple", P)


def test_circuit_examples():
    a = build_annulus(1, 2)
    allp = np.full(a.outer.size, P, dtype=np.int8)
    assert circuit_double_exists(allp, a, P)
    assert not circuit_double_exists(-allp, a, P)


def _double_graph(annulus, spins, s):
    g = nx.Graph()
    idx = annulus.outer.index
    for e in annulus.outer.interior_edges:
        if e[0] in annulus.hole and e[1] in annulus.hole:
            continue
        if spins[idx[e[0]]] == s and spins[idx[e[1]]] == s:
            g.add_edge(*edge_vertices(e))
    return g


def _winds(cycle):
    """Winding number of a vertex cycle around the centre of the origin face, by summing angles."""
    cx, cy = Face(0, 0).center()
    pts = [vertex_position(v) for v in cycle]
    total = 0.0
    for (x0, y0), (x1, y1) in zip(pts, pts[1:] + pts[:1]):
        a0 = math.atan2(y0 - cy, x0 - cx)
        a1 = math.atan2(y1 - cy, x1 - cx)
        total += (a1 - a0 + math.pi) % (2 * math.pi) - math.pi
    return round(total / (2 * math.pi)) != 0


def brute_circuit(annulus, spins, s):
    g = _double_graph(annulus, spins, s)
    return any(_winds(c) for c in nx.simple_cycles(g))


def test_circuit_matches_brute_force():
    a = build_annulus(1, 3)
    rng = np.random.default_rng(2)
    hits = 0
    for _ in range(1000):
        p = rng.uniform(0.6, 0.95)
        s = np.where(rng.random(a.outer.size) < p, P, M).astype(np.int8)
        got = circuit_double_exists(s, a, P)
        assert got == brute_circuit(a, s, P)
        hits += got
    assert 0 < hits < 1000


def test_circuit_invariant_under_ray_direction():
    a = build_annulus(1, 3)
    rng = np.random.default_rng(5)
    for _ in range(300):
        s = np.where(rng.random(a.outer.size) < 0.8, P, M).astype(np.int8)
        results = {circuit_double_exists(s, a, P, direction=k) for k in range(6)}
        assert len(results) == 1


def test_ray_crossing_counts_once_per_ring():
    a = build_annulus(1, 3)
    for k in range(6):
        crossing = [e for e in a.outer.interior_edges if ray_crossing(e, k)]
        assert len(crossing) == 3


def test_circuit_is_increasing():
    a = build_annulus(1, 3)
    rng = np.random.default_rng(9)
    for _ in range(300):
        s = np.where(rng.random(a.outer.size) < 0.75, P, M).astype(np.int8)
        before = circuit_double_exists(s, a, P)
        minus = np.flatnonzero(s == M)
        if not len(minus):
            continue
        s[rng.choice(minus)] = P
        assert circuit_double_exists(s, a, P) >= before
