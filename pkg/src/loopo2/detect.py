"""Crossing and circuit detectors on spin configurations.

A *plan* precomputes the geometry of an event (edge list, endpoint sets, cut
ray) against the face indexing of a host graph, so that the compiled kernels
only see integer arrays.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from ._kernels import uf_find, uf_union
from .lattice import DIRECTIONS, Annulus, Domain, DomainError, Face, FaceGraph, edge_vertices

PATH, CIRCUIT = 0, 1


@dataclass(frozen=True, eq=False)
class DoublePlan:
    """Edge-path event on double edges: both faces of every used edge carry one spin."""

    ev: np.ndarray       # (E, 2) vertex ids
    ef: np.ndarray       # (E, 2) host face indices
    src: np.ndarray      # bool per vertex
    dst: np.ndarray      # bool per vertex
    cross: np.ndarray    # bool per edge, cut-ray crossings (circuits only)
    kind: int
    vertices: tuple      # vertex triples, for reporting

    @property
    def nv(self) -> int:
        return len(self.vertices)


@dataclass(frozen=True, eq=False)
class SimplePlan:
    """Face-path event on faces of one spin inside a region."""

    fe: np.ndarray       # (E, 2) host face indices of region adjacencies
    region: np.ndarray   # host indices of region faces
    src: np.ndarray      # bool per host face
    dst: np.ndarray      # bool per host face


@njit(cache=True)
def double_event(spins, s, ev, ef, src, dst, cross, kind, nv):
    if kind == 0:
        # endpoints count only when they carry a double edge, so paths are never empty
        parent = np.arange(nv)
        used = np.zeros(nv, dtype=np.bool_)
        for e in range(ev.shape[0]):
            if spins[ef[e, 0]] == s and spins[ef[e, 1]] == s:
                uf_union(parent, ev[e, 0], ev[e, 1])
                used[ev[e, 0]] = True
                used[ev[e, 1]] = True
        seen = np.zeros(nv, dtype=np.bool_)
        for v in range(nv):
            if src[v] and used[v]:
                seen[uf_find(parent, v)] = True
        for v in range(nv):
            if dst[v] and used[v] and seen[uf_find(parent, v)]:
                return True
        return False
    # double cover: copies v and v + nv, the sheet changes across the cut ray
    parent = np.arange(2 * nv)
    for e in range(ev.shape[0]):
        if spins[ef[e, 0]] == s and spins[ef[e, 1]] == s:
            a = ev[e, 0]
            b = ev[e, 1]
            if cross[e]:
                uf_union(parent, a, b + nv)
                uf_union(parent, a + nv, b)
            else:
                uf_union(parent, a, b)
                uf_union(parent, a + nv, b + nv)
    for v in range(nv):
        if uf_find(parent, v) == uf_find(parent, v + nv):
            return True
    return False


@njit(cache=True)
def simple_event(spins, s, fe, region, src, dst):
    n = spins.shape[0]
    parent = np.arange(n)
    for e in range(fe.shape[0]):
        if spins[fe[e, 0]] == s and spins[fe[e, 1]] == s:
            uf_union(parent, fe[e, 0], fe[e, 1])
    seen = np.zeros(n, dtype=np.bool_)
    for i in region:
        if src[i] and spins[i] == s:
            seen[uf_find(parent, i)] = True
    for i in region:
        if dst[i] and spins[i] == s and seen[uf_find(parent, i)]:
            return True
    return False


def _vertex_ids(edges):
    verts: dict = {}
    ev = np.zeros((len(edges), 2), dtype=np.int64)
    for i, e in enumerate(edges):
        for j, x in enumerate(edge_vertices(e)):
            ev[i, j] = verts.setdefault(x, len(verts))
    order = tuple(sorted(verts, key=verts.get))
    return ev, verts, order


def _face_idx(host: FaceGraph, edges) -> np.ndarray:
    return np.array([(host.index[u], host.index[v]) for u, v in edges], dtype=np.int64).reshape(-1, 2)


SIDES = {"h": ("Left", "Right"), "v": ("Bottom", "Top")}


def crossing_plan(region: Domain, direction: str, mode: str = "double", host: FaceGraph | None = None,
                  ends: str = "sides"):
    """Plan for a horizontal (``h``) or vertical (``v``) crossing of a labelled region.

    Double paths end on non-corner side vertices (``ends="sides"``) or, with
    ``ends="faces"``, on any vertex touching a face of the region adjacent to
    the side.
    """
    if not region.labelled:
        raise DomainError(f"{region.name} has no side labels")
    host = host if host is not None else region
    a, b = SIDES[direction]
    if mode == "double":
        edges = list(region.interior_edges)
        ev, verts, order = _vertex_ids(edges)
        if ends == "sides":
            src = np.array([x in region.side_vertices[a] for x in order], dtype=np.bool_)
            dst = np.array([x in region.side_vertices[b] for x in order], dtype=np.bool_)
        elif ends == "faces":
            fa, fb = region.side_inner_faces[a], region.side_inner_faces[b]
            src = np.array([any(f in fa for f in x) for x in order], dtype=np.bool_)
            dst = np.array([any(f in fb for f in x) for x in order], dtype=np.bool_)
        else:
            raise ValueError(f"unknown endpoint rule {ends!r}")
        return DoublePlan(ev, _face_idx(host, edges), src, dst, np.zeros(len(edges), dtype=np.bool_), PATH, order)
    if mode == "simple":
        edges = list(region.interior_edges)
        src = host.mask(region.side_inner_faces[a])
        dst = host.mask(region.side_inner_faces[b])
        reg = np.array(sorted(host.index[f] for f in region.faces), dtype=np.int64)
        return SimplePlan(_face_idx(host, edges), reg, src, dst)
    raise ValueError(f"unknown crossing mode {mode!r}")


def annulus_edges(annulus: Annulus) -> list:
    hole = annulus.hole
    return [e for e in annulus.outer.interior_edges if not (e[0] in hole and e[1] in hole)]


def ray_crossing(edge, direction: int = 0, origin=(0, 0)) -> bool:
    """Does ``edge`` cross the ray from the centre of ``origin`` along a lattice direction?

    The ray runs through face centres ``origin + j d`` and crosses exactly the
    edges separating consecutive faces on it.
    """
    dk, dl = DIRECTIONS[direction]
    u, v = edge
    ok, ol = origin
    for a, b in ((u, v), (v, u)):
        if (b.k - a.k, b.l - a.l) == (dk, dl):
            ak, al = a.k - ok, a.l - ol
            # a must be origin + j d with j >= 0
            if dk:
                j, r = divmod(ak, dk)
            else:
                j, r = divmod(al, dl)
            if r == 0 and j >= 0 and (ak, al) == (j * dk, j * dl):
                return True
    return False


def circuit_plan(annulus: Annulus, host: FaceGraph | None = None, direction: int = 0) -> DoublePlan:
    host = host if host is not None else annulus.outer
    edges = annulus_edges(annulus)
    ev, verts, order = _vertex_ids(edges)
    cross = np.array([ray_crossing(e, direction) for e in edges], dtype=np.bool_)
    z = np.zeros(len(verts), dtype=np.bool_)
    return DoublePlan(ev, _face_idx(host, edges), z, z.copy(), cross, CIRCUIT, order)


def hole_to_outside_plan(annulus: Annulus, host: FaceGraph | None = None) -> DoublePlan:
    """Double paths inside the annulus from the hole boundary to the outer boundary."""
    host = host if host is not None else annulus.outer
    edges = annulus_edges(annulus)
    ev, verts, order = _vertex_ids(edges)
    outer = annulus.outer.face_set
    src = np.array([any(f in annulus.hole for f in x) for x in order], dtype=np.bool_)
    dst = np.array([any(f not in outer for f in x) for x in order], dtype=np.bool_)
    return DoublePlan(ev, _face_idx(host, edges), src, dst, np.zeros(len(edges), dtype=np.bool_), PATH, order)


def run_double(plan: DoublePlan, spins: np.ndarray, s: int) -> bool:
    return bool(double_event(spins, np.int8(s), plan.ev, plan.ef, plan.src, plan.dst, plan.cross, plan.kind, plan.nv))


def run_simple(plan: SimplePlan, spins: np.ndarray, s: int) -> bool:
    return bool(simple_event(spins, np.int8(s), plan.fe, plan.region, plan.src, plan.dst))


def crossing_exists(sigma, region: Domain, direction: str, mode: str = "double", sign: int = 1,
                    host: FaceGraph | None = None) -> bool:
    host = host if host is not None else region
    spins = np.asarray(sigma, dtype=np.int8)
    plan = crossing_plan(region, direction, mode, host)
    return run_double(plan, spins, sign) if mode == "double" else run_simple(plan, spins, sign)


def circuit_double_exists(sigma, annulus: Annulus, sign: int = 1, host: FaceGraph | None = None,
                          direction: int = 0) -> bool:
    return run_double(circuit_plan(annulus, host, direction), np.asarray(sigma, dtype=np.int8), sign)


# ---------------------------------------------------------------- exhaustive duality scans

@njit(cache=True)
def _theta_roots(red, edges, n):
    parent = np.arange(n)
    for e in range(edges.shape[0]):
        if red[edges[e, 0]] != red[edges[e, 1]]:
            uf_union(parent, edges[e, 0], edges[e, 1])
    roots = np.empty(n, dtype=np.int64)
    for i in range(n):
        roots[i] = uf_find(parent, i)
    return roots


@njit(cache=True)
def dichotomy_scan(n, edges, r_ev, r_ef, r_src, r_dst, r_cross, r_kind, r_nv,
                   b_ev, b_ef, b_src, b_dst, b_cross, b_kind, b_nv):
    """For every coherent pair on ``n`` faces: red event (either sign) or blue event (either sign).

    Returns (pairs checked, failures, red mask and blue of the first failure).
    """
    total = 0
    fails = 0
    bad_red = np.int64(-1)
    bad_blue = np.zeros(n, dtype=np.int8)
    red = np.empty(n, dtype=np.int8)
    blue = np.empty(n, dtype=np.int8)
    for mask in range(1 << n):
        for i in range(n):
            red[i] = 1 if (mask >> i) & 1 else -1
        roots = _theta_roots(red, edges, n)
        # compress roots to 0..k-1
        label = -np.ones(n, dtype=np.int64)
        k = 0
        for i in range(n):
            r = roots[i]
            if label[r] < 0:
                label[r] = k
                k += 1
        if (double_event(red, np.int8(1), r_ev, r_ef, r_src, r_dst, r_cross, r_kind, r_nv)
                or double_event(red, np.int8(-1), r_ev, r_ef, r_src, r_dst, r_cross, r_kind, r_nv)):
            total += 1 << k
            continue
        for bm in range(1 << k):
            for i in range(n):
                blue[i] = 1 if (bm >> label[roots[i]]) & 1 else -1
            total += 1
            ok = (double_event(blue, np.int8(1), b_ev, b_ef, b_src, b_dst, b_cross, b_kind, b_nv)
                  or double_event(blue, np.int8(-1), b_ev, b_ef, b_src, b_dst, b_cross, b_kind, b_nv))
            if not ok:
                if fails == 0:
                    bad_red = mask
                    bad_blue[:] = blue
                fails += 1
    return total, fails, bad_red, bad_blue


def run_dichotomy(n: int, edges: np.ndarray, red_plan: DoublePlan, blue_plan: DoublePlan):
    return dichotomy_scan(n, edges, red_plan.ev, red_plan.ef, red_plan.src, red_plan.dst, red_plan.cross,
                          red_plan.kind, red_plan.nv, blue_plan.ev, blue_plan.ef, blue_plan.src, blue_plan.dst,
                          blue_plan.cross, blue_plan.kind, blue_plan.nv)


def origin_ray_faces(domain: FaceGraph, direction: int = 0, origin=(0, 0)) -> list[Face]:
    dk, dl = DIRECTIONS[direction]
    out = []
    j = 0
    while True:
        f = Face(origin[0] + j * dk, origin[1] + j * dl)
        if f not in domain:
            return out
        out.append(f)
        j += 1


@njit(cache=True)
def double_event_batch(reds, s, ev, ef, src, dst, cross, kind, nv):
    out = np.empty(reds.shape[0], dtype=np.bool_)
    for r in range(reds.shape[0]):
        out[r] = double_event(reds[r], s, ev, ef, src, dst, cross, kind, nv)
    return out


@njit(cache=True)
def simple_event_batch(reds, s, fe, region, src, dst):
    out = np.empty(reds.shape[0], dtype=np.bool_)
    for r in range(reds.shape[0]):
        out[r] = simple_event(reds[r], s, fe, region, src, dst)
    return out


def batch(plan, reds: np.ndarray, s: int) -> np.ndarray:
    """Evaluate a plan on every row of ``reds``."""
    reds = np.ascontiguousarray(reds, dtype=np.int8)
    if isinstance(plan, DoublePlan):
        return double_event_batch(reds, np.int8(s), plan.ev, plan.ef, plan.src, plan.dst, plan.cross, plan.kind,
                                  plan.nv)
    return simple_event_batch(reds, np.int8(s), plan.fe, plan.region, plan.src, plan.dst)
