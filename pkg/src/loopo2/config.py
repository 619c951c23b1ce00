"""Configuration spaces: height functions, loop configurations and coherent spin pairs.

Spins are stored as ``int8`` arrays aligned with ``domain.faces``; ``+1`` is the
``p`` state and ``-1`` the ``m`` state, for red and blue alike.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from ._kernels import theta_parent, uf_find
from .lattice import Domain, Edge, Face, FaceGraph, edge_vertices, make_edge

P, M = 1, -1
_NAMES = {1: "p", -1: "m"}


class ConfigError(ValueError):
    pass


class NotLipschitz(ConfigError):
    def __init__(self, edge):
        super().__init__(f"height jumps by more than 1 across {edge}")
        self.edge = edge


class NonzeroBoundary(ConfigError):
    def __init__(self, face):
        super().__init__(f"nonzero height on inner boundary face {face}")
        self.face = face


class OddVertex(ConfigError):
    def __init__(self, vertex):
        super().__init__(f"vertex {vertex} has odd degree")
        self.vertex = vertex


def as_array(domain: FaceGraph, values, dtype=np.int8) -> np.ndarray:
    """Accept a face-keyed mapping or an aligned sequence."""
    if isinstance(values, Mapping):
        arr = np.zeros(domain.size, dtype=dtype)
        seen = 0
        for f, v in values.items():
            f = Face(*f) if not isinstance(f, str) else Face(*map(int, f.split(",")))
            arr[domain.index[f]] = v
            seen += 1
        if seen != domain.size:
            raise ConfigError("mapping does not cover every face of the domain")
        return arr
    arr = np.asarray(values, dtype=dtype)
    if arr.shape != (domain.size,):
        raise ConfigError(f"expected {domain.size} values, got shape {arr.shape}")
    return arr


def spins_from(domain: FaceGraph, default: int = P, **overrides) -> np.ndarray:
    """Constant spin field with optional face overrides, e.g. ``{(0, 0): M}``."""
    arr = np.full(domain.size, default, dtype=np.int8)
    for f, v in overrides.get("at", {}).items():
        arr[domain.index[Face(*f)]] = v
    return arr


# ---------------------------------------------------------------- heights

@dataclass(frozen=True, eq=False)
class HeightFn:
    domain: Domain
    values: np.ndarray

    def __getitem__(self, f) -> int:
        return int(self.values[self.domain.index[Face(*f)]])

    def __eq__(self, other) -> bool:
        return isinstance(other, HeightFn) and other.domain is self.domain and np.array_equal(self.values, other.values)

    def __hash__(self) -> int:
        return hash(self.values.tobytes())

    def to_json(self) -> dict:
        return {f.key(): int(v) for f, v in zip(self.domain.faces, self.values)}


def validate_height(domain: Domain, phi) -> HeightFn:
    vals = as_array(domain, phi, dtype=np.int64)
    for i, j in domain.dual_edges:
        if abs(vals[i] - vals[j]) > 1:
            raise NotLipschitz((domain.faces[i], domain.faces[j]))
    for f in sorted(domain.inner_boundary):
        if vals[domain.index[f]] != 0:
            raise NonzeroBoundary(f)
    return HeightFn(domain, vals)


# ---------------------------------------------------------------- loops

@dataclass(frozen=True)
class LoopConfig:
    domain: Domain = field(compare=False, hash=False)
    edges: frozenset

    def __len__(self) -> int:
        return len(self.edges)

    def to_json(self) -> list:
        return [[u.key(), v.key()] for u, v in sorted(self.edges)]


@dataclass(frozen=True)
class OrientedLoopConfig:
    loops: LoopConfig
    clockwise: tuple[bool, ...]

    @property
    def domain(self) -> Domain:
        return self.loops.domain


def validate_loops(domain: Domain, edges: Iterable) -> LoopConfig:
    es = frozenset(make_edge(*e) for e in edges)
    for e in es:
        if not domain.inside(e):
            raise ConfigError(f"edge {e} is not an interior edge of {domain.name}")
    degree: dict = {}
    for e in es:
        for x in edge_vertices(e):
            degree[x] = degree.get(x, 0) + 1
    for x in sorted(degree):
        if degree[x] % 2:
            raise OddVertex(x)
    return LoopConfig(domain, es)


def decompose_loops(omega: LoopConfig) -> list[list[Edge]]:
    """Split an even edge set into its loops, each listed in traversal order.

    Loops are ordered by the smallest face they enclose, ties broken by their
    smallest edge, so per-loop flags are reproducible.
    """
    at: dict = {}
    for e in omega.edges:
        for x in edge_vertices(e):
            at.setdefault(x, []).append(e)
    remaining = set(omega.edges)
    loops = []
    for start in sorted(omega.edges):
        if start not in remaining:
            continue
        loop = [start]
        remaining.discard(start)
        _, x = edge_vertices(start)
        cur = start
        while True:
            a, b = at[x]
            nxt = b if a == cur else a
            if nxt == start:
                break
            loop.append(nxt)
            remaining.discard(nxt)
            v1, v2 = edge_vertices(nxt)
            x = v2 if v1 == x else v1
            cur = nxt
        loops.append(loop)
    return sorted(loops, key=lambda lp: (min(enclosed_faces(lp)), min(lp)))


def enclosed_faces(loop: Iterable[Edge]) -> list[Face]:
    """Faces inside a loop, found by ray parity over the loop's bounding rows."""
    loop = list(loop)
    rows: dict[int, list[int]] = {}
    for a, b in loop:
        if a.l == b.l:
            rows.setdefault(a.l, []).append(min(a.k, b.k))
    out = []
    for l, ks in rows.items():
        ks.sort()
        # crossings at k0 < k1 < ...: faces (k, l) with k0 < k <= k1, k2 < k <= k3, ... are inside
        for i in range(0, len(ks) - 1, 2):
            out.extend(Face(k, l) for k in range(ks[i] + 1, ks[i + 1] + 1))
    return out


def _ray_crossings(loop: Iterable[Edge], u: Face) -> int:
    # eastward ray from the centre of u crosses the vertical edges (k,l)|(k+1,l), k >= u.k
    n = 0
    for a, b in loop:
        if a.l == b.l == u.l and min(a.k, b.k) >= u.k:
            n += 1
    return n


def surrounds(loop: Iterable[Edge], u) -> bool:
    return _ray_crossings(loop, Face(*u)) % 2 == 1


def loops_surrounding(omega: LoopConfig, u) -> int:
    u = Face(*u)
    return sum(1 for loop in decompose_loops(omega) if surrounds(loop, u))


# ---------------------------------------------------------------- spins

@dataclass(frozen=True, eq=False)
class SpinPair:
    domain: FaceGraph
    red: np.ndarray
    blue: np.ndarray

    def key(self) -> bytes:
        return self.red.tobytes() + self.blue.tobytes()

    def __eq__(self, other) -> bool:
        return isinstance(other, SpinPair) and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def to_json(self) -> dict:
        return {
            "red": {f.key(): _NAMES[int(s)] for f, s in zip(self.domain.faces, self.red)},
            "blue": {f.key(): _NAMES[int(s)] for f, s in zip(self.domain.faces, self.blue)},
        }


def is_coherent(domain: FaceGraph, red, blue) -> bool:
    r = as_array(domain, red)
    b = as_array(domain, blue)
    e = domain.dual_edges
    if len(e) == 0:
        return True
    bad = (r[e[:, 0]] != r[e[:, 1]]) & (b[e[:, 0]] != b[e[:, 1]])
    return not bool(bad.any())


def theta_of(domain: FaceGraph, sigma) -> frozenset[Edge]:
    """Dual edges across which ``sigma`` changes sign."""
    s = as_array(domain, sigma)
    return frozenset((domain.faces[i], domain.faces[j]) for i, j in domain.dual_edges if s[i] != s[j])


def theta_mask(domain: FaceGraph, sigma: np.ndarray) -> np.ndarray:
    e = domain.dual_edges
    return sigma[e[:, 0]] != sigma[e[:, 1]]


def omega_of(domain: Domain, sigma) -> LoopConfig:
    s = as_array(domain, sigma)
    ring = [domain.index[f] for f in domain.inner_boundary]
    if len(set(s[ring].tolist())) > 1:
        raise ConfigError("spin configuration is not constant on the inner boundary")
    return validate_loops(domain, theta_of(domain, s))


def cluster_count(domain: FaceGraph, theta: Iterable[Edge], merge: Iterable | None = None) -> int:
    """Connected components of (F(D), theta), isolated faces included.

    With ``merge`` every component meeting that face set counts once.
    """
    parent = list(range(domain.size))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for u, v in theta:
        a, b = find(domain.index[Face(*u)]), find(domain.index[Face(*v)])
        if a != b:
            parent[a] = b
    roots = {find(i) for i in range(domain.size)}
    if merge is not None:
        hit = {find(domain.index[Face(*f)]) for f in merge}
        if hit:
            roots = (roots - hit) | {min(hit)}
    return len(roots)


def theta_components(domain: FaceGraph, sigma: np.ndarray, extra: np.ndarray | None = None) -> np.ndarray:
    """Component label (root index) of each face in theta(sigma)."""
    if extra is None:
        extra = np.zeros((0, 2), dtype=np.int64)
    parent = theta_parent(np.asarray(sigma, dtype=np.int8), domain.dual_edges, extra)
    return np.array([uf_find(parent, i) for i in range(domain.size)])


def double_edges(domain: Domain, sigma, s: int, region: Domain | None = None) -> frozenset[Edge]:
    """Interior edges of ``region`` (default: the domain) whose two faces both carry spin ``s``.

    ``sigma`` must be defined on every face of the region.
    """
    sig = as_array(domain, sigma)
    reg = region if region is not None else domain
    out = set()
    for u, v in reg.interior_edges:
        if sig[domain.index[u]] == s and sig[domain.index[v]] == s:
            out.add((u, v))
    return frozenset(out)


# ---------------------------------------------------------------- boundary conditions

class BCError(ConfigError):
    pass


RED_KINDS = {"pp": (P, False), "mm": (M, False), "pm": (P, True), "mp": (M, True)}
BLUE_KINDS = {"bpp": (P, False), "bmm": (M, False), "bpm": (P, True), "bmp": (M, True)}
BC_NAMES = ("free", *RED_KINDS, *BLUE_KINDS, "fourarc", "dobrushin", "dobrushin-cyl", "pinned")


@dataclass(frozen=True)
class BoundaryCondition:
    """Which conditioning of the uniform coherent-pair measure is targeted.

    ``pp``/``mm``: red fixed on the inner boundary, blue free.  ``pm``/``mp``: red
    fixed and blue constant (either value) on the inner boundary.  The ``b*``
    kinds swap the roles of the two colours.  ``fourarc`` carries the four
    marked boundary vertices; ``pinned`` carries red (and optionally blue)
    values on chosen faces.
    """

    kind: str = "free"
    vertices: tuple = ()
    red_pins: tuple = ()
    blue_pins: tuple = ()

    def __post_init__(self):
        if self.kind not in BC_NAMES:
            raise BCError(f"unknown boundary condition {self.kind!r}")

    @property
    def label(self) -> str:
        return self.kind

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.vertices:
            out["vertices"] = [[f.key() for f in v] for v in self.vertices]
        if self.red_pins:
            out["red"] = {Face(*f).key(): int(s) for f, s in self.red_pins}
        if self.blue_pins:
            out["blue"] = {Face(*f).key(): int(s) for f, s in self.blue_pins}
        return out


FREE = BoundaryCondition("free")
RED_PP, RED_MM, RED_PM, RED_MP = (BoundaryCondition(k) for k in ("pp", "mm", "pm", "mp"))
BLUE_PP, BLUE_MM, BLUE_PM, BLUE_MP = (BoundaryCondition(k) for k in ("bpp", "bmm", "bpm", "bmp"))
DOBRUSHIN = BoundaryCondition("dobrushin")
DOBRUSHIN_CYL = BoundaryCondition("dobrushin-cyl")


def four_arc(a, b, c, d) -> BoundaryCondition:
    return BoundaryCondition("fourarc", vertices=tuple(tuple(Face(*f) for f in v) for v in (a, b, c, d)))


def pinned(red: Mapping | None = None, blue: Mapping | None = None) -> BoundaryCondition:
    rp = tuple(sorted((Face(*f), int(s)) for f, s in (red or {}).items()))
    bp = tuple(sorted((Face(*f), int(s)) for f, s in (blue or {}).items()))
    return BoundaryCondition("pinned", red_pins=rp, blue_pins=bp)


def parse_bc(name: str) -> BoundaryCondition:
    if name not in BC_NAMES or name in ("fourarc", "pinned"):
        raise BCError(f"boundary condition {name!r} cannot be given by name")
    return BoundaryCondition(name)


@dataclass
class Constraints:
    """Face-level compilation of a boundary condition.

    ``red_fixed``/``blue_pin`` hold 0 for unconstrained faces; ``red_equal`` lists
    face-index groups whose red spin must be constant; ``blue_equal`` lists index
    pairs forced to share a blue spin.
    """

    red_fixed: np.ndarray
    blue_pin: np.ndarray
    red_equal: list
    blue_equal: np.ndarray

    @property
    def free_red(self) -> np.ndarray:
        return np.flatnonzero(self.red_fixed == 0)

    def red_ok(self, red: np.ndarray) -> bool:
        fixed = self.red_fixed != 0
        if np.any(red[fixed] != self.red_fixed[fixed]):
            return False
        return all(len(set(red[g].tolist())) <= 1 for g in self.red_equal)

    def blue_ok(self, blue: np.ndarray) -> bool:
        pinned_ = self.blue_pin != 0
        if np.any(blue[pinned_] != self.blue_pin[pinned_]):
            return False
        e = self.blue_equal
        return not np.any(blue[e[:, 0]] != blue[e[:, 1]]) if len(e) else True


def _chain(idx) -> np.ndarray:
    idx = sorted(idx)
    return np.array([(idx[i], idx[i + 1]) for i in range(len(idx) - 1)], dtype=np.int64).reshape(-1, 2)


def arc_edges(domain: Domain, vertices) -> list[list]:
    """Boundary edges of the arcs (ab), (bc), (cd), (da) between four marked vertices."""
    cycle = domain.boundary_cycle()
    pos = {x: i for i, x in enumerate(cycle)}
    marks = []
    for v in vertices:
        v = tuple(sorted(Face(*f) for f in v))
        if v not in pos:
            raise BCError(f"{v} is not a boundary vertex of {domain.name}")
        inside = sum(f in domain.face_set for f in v)
        if inside != 2:
            raise BCError(f"{v} has an incident edge outside the domain")
        marks.append(pos[v])
    if len(set(marks)) != 4:
        raise BCError("four-arc vertices must be distinct")
    start = marks[0]
    rel = [(m - start) % len(cycle) for m in marks]
    if rel != sorted(rel):
        raise BCError("four-arc vertices are not in counter-clockwise order")
    arcs: list[list] = [[], [], [], []]
    n = len(cycle)
    for j in range(4):
        i = marks[j]
        while i != marks[(j + 1) % 4]:
            x, y = cycle[i], cycle[(i + 1) % n]
            arcs[j].append(tuple(sorted(set(x) & set(y))))
            i = (i + 1) % n
    return arcs


def arc_faces(domain: Domain, vertices, outer: bool = False) -> tuple[set, set]:
    """Faces along the p arcs (ab),(cd) and along the m arcs (bc),(da).

    By default only inner-boundary faces are returned; ``outer=True`` adds the
    faces on the other side of the arcs.
    """
    arcs = arc_edges(domain, vertices)
    keep = (lambda f: True) if outer else (lambda f: f in domain.face_set)
    sides = [{f for e in es for f in e if keep(f)} for es in arcs]
    return sides[0] | sides[2], sides[1] | sides[3]


def compile_bc(domain: FaceGraph, bc: BoundaryCondition) -> Constraints:
    n = domain.size
    red = np.zeros(n, dtype=np.int8)
    blue = np.zeros(n, dtype=np.int8)
    red_equal: list = []
    blue_equal = np.zeros((0, 2), dtype=np.int64)
    ring = sorted(domain.index[f] for f in domain.inner_boundary)
    kind = bc.kind
    cyl = getattr(domain, "kind", "") == "cyl"
    if cyl and kind not in ("free", "dobrushin-cyl", "pinned"):
        raise BCError(f"boundary condition {kind!r} does not apply to a cylinder")
    if kind in RED_KINDS:
        s, const_blue = RED_KINDS[kind]
        red[ring] = s
        if const_blue:
            blue_equal = _chain(ring)
    elif kind in BLUE_KINDS:
        s, const_red = BLUE_KINDS[kind]
        blue[ring] = s
        if const_red:
            red_equal.append(np.array(ring, dtype=np.int64))
    elif kind == "fourarc":
        if len(bc.vertices) != 4:
            raise BCError("four-arc boundary condition needs four vertices")
        plus, minus = arc_faces(domain, bc.vertices)
        # faces touching both kinds of arc would be contradictory
        if plus & minus:
            raise BCError("a face of the inner boundary touches both a p arc and an m arc")
        for f in plus:
            red[domain.index[f]] = P
        for f in minus:
            red[domain.index[f]] = M
    elif kind == "dobrushin":
        if getattr(domain, "kind", "") != "rect":
            raise BCError("Dobrushin conditions need a rectangle")
        bottom = {f for f in domain.inner_boundary if f.l == 0}
        for f in domain.inner_boundary:
            red[domain.index[f]] = M if f in bottom else P
    elif kind == "dobrushin-cyl":
        if not cyl:
            raise BCError("cylinder Dobrushin conditions need a cylinder")
        for f in domain.bottom:
            red[domain.index[f]] = M
        for f in domain.top:
            red[domain.index[f]] = P
    elif kind == "pinned":
        for f, s in bc.red_pins:
            red[domain.index[Face(*f)]] = s
        for f, s in bc.blue_pins:
            blue[domain.index[Face(*f)]] = s
    return Constraints(red, blue, red_equal, blue_equal)
