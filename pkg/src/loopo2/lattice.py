"""Hexagonal lattice geometry, expressed through its triangular dual.

Faces of the hexagonal lattice are the sites of the triangular lattice and are
addressed by axial coordinates ``(k, l)``; the face centre sits at
``k * (1, 0) + l * (1/2, sqrt(3)/2)``.  A hexagonal edge is stored as the pair of
faces it separates, and a hexagonal vertex as the triple of faces meeting there.
"""
from __future__ import annotations

import math
from collections import deque
from functools import cached_property
from typing import Iterable, NamedTuple

import numpy as np

SQRT3 = math.sqrt(3.0)

# counter-clockwise, starting east
DIRECTIONS = ((1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1))


class Face(NamedTuple):
    k: int
    l: int

    def __add__(self, other):  # type: ignore[override]
        return Face(self.k + other[0], self.l + other[1])

    def neighbors(self) -> list["Face"]:
        return [Face(self.k + dk, self.l + dl) for dk, dl in DIRECTIONS]

    def center(self) -> tuple[float, float]:
        return (self.k + 0.5 * self.l, 0.5 * SQRT3 * self.l)

    def key(self) -> str:
        return f"{self.k},{self.l}"


ORIGIN = Face(0, 0)

Edge = tuple[Face, Face]
Vertex = tuple[Face, Face, Face]


class DomainError(ValueError):
    """Raised when a face set violates the definition of a domain."""


class Disconnected(DomainError):
    pass


class HasHole(DomainError):
    pass


class NoInteriorEdges(DomainError):
    pass


def face_from_key(key: str) -> Face:
    k, l = key.split(",")
    return Face(int(k), int(l))


def face_distance(a, b) -> int:
    dk = a[0] - b[0]
    dl = a[1] - b[1]
    return (abs(dk) + abs(dl) + abs(dk + dl)) // 2


def adjacent(a, b) -> bool:
    return face_distance(a, b) == 1


def make_edge(u, v) -> Edge:
    u, v = Face(*u), Face(*v)
    return (u, v) if u < v else (v, u)


def make_vertex(a, b, c) -> Vertex:
    return tuple(sorted((Face(*a), Face(*b), Face(*c))))  # type: ignore[return-value]


def edge_vertices(edge: Edge) -> tuple[Vertex, Vertex]:
    """The two hexagonal vertices at the ends of ``edge``."""
    u, v = edge
    d = (v.k - u.k, v.l - u.l)
    i = DIRECTIONS.index(d)
    w1 = u + DIRECTIONS[(i - 1) % 6]
    w2 = u + DIRECTIONS[(i + 1) % 6]
    return make_vertex(u, v, w1), make_vertex(u, v, w2)


def vertex_edges(vertex: Vertex) -> tuple[Edge, Edge, Edge]:
    a, b, c = vertex
    return make_edge(a, b), make_edge(a, c), make_edge(b, c)


def vertex_position(vertex: Vertex) -> tuple[float, float]:
    xs, ys = zip(*(f.center() for f in vertex))
    return (sum(xs) / 3.0, sum(ys) / 3.0)


class FaceGraph:
    """Faces plus their adjacency, indexed for array kernels.

    Subclasses fill ``faces`` (sorted) and implement ``_raw_neighbors``.
    """

    faces: tuple[Face, ...]

    def _raw_neighbors(self, f: Face) -> list[Face]:
        raise NotImplementedError

    @cached_property
    def index(self) -> dict[Face, int]:
        return {f: i for i, f in enumerate(self.faces)}

    @property
    def size(self) -> int:
        return len(self.faces)

    def __contains__(self, f) -> bool:
        return Face(*f) in self.index

    def __len__(self) -> int:
        return len(self.faces)

    @cached_property
    def neighbor_lists(self) -> tuple[tuple[int, ...], ...]:
        out = []
        for f in self.faces:
            out.append(tuple(self.index[g] for g in self._raw_neighbors(f) if g in self.index))
        return tuple(out)

    @cached_property
    def dual_edges(self) -> np.ndarray:
        """Index pairs (i < j) of adjacent faces, i.e. the interior hexagonal edges."""
        pairs = sorted({(min(i, j), max(i, j)) for i, nb in enumerate(self.neighbor_lists) for j in nb})
        return np.array(pairs, dtype=np.int64).reshape(-1, 2)

    @cached_property
    def neighbor_table(self) -> np.ndarray:
        """(n, 6) array of neighbour indices padded with -1."""
        tab = -np.ones((self.size, 6), dtype=np.int64)
        for i, nb in enumerate(self.neighbor_lists):
            tab[i, : len(nb)] = nb
        return tab

    def mask(self, faces: Iterable) -> np.ndarray:
        m = np.zeros(self.size, dtype=bool)
        for f in faces:
            m[self.index[Face(*f)]] = True
        return m


class Domain(FaceGraph):
    """A finite simply connected set of faces bounded by a self-avoiding edge polygon.

    Instances should be built through :func:`validate_domain` or the named
    constructors; the bare constructor performs no checks.
    """

    def __init__(self, faces: Iterable, name: str = "", box: tuple[int, int, int, int] | None = None,
                 kind: str = "custom", params: tuple = ()):
        self.faces = tuple(sorted(Face(*f) for f in set(map(tuple, faces))))
        self.face_set = frozenset(self.faces)
        self.name = name or f"domain[{len(self.faces)}]"
        # (kmin, kmax, lmin, lmax) side-labelling box for parallelograms; rows for rectangles
        self._box = box
        self.kind = kind
        self.params = params

    def __repr__(self) -> str:
        return f"Domain({self.name})"

    def _raw_neighbors(self, f: Face) -> list[Face]:
        return f.neighbors()

    @cached_property
    def interior_edges(self) -> list[Edge]:
        return [(self.faces[i], self.faces[j]) for i, j in self.dual_edges]

    @cached_property
    def boundary_edges(self) -> list[Edge]:
        out = set()
        for f in self.faces:
            for g in f.neighbors():
                if g not in self.face_set:
                    out.add(make_edge(f, g))
        return sorted(out)

    @cached_property
    def inner_boundary(self) -> frozenset[Face]:
        return frozenset(f for f in self.faces if any(g not in self.face_set for g in f.neighbors()))

    @cached_property
    def outer_boundary(self) -> frozenset[Face]:
        return frozenset(g for f in self.faces for g in f.neighbors() if g not in self.face_set)

    @cached_property
    def interior_faces(self) -> frozenset[Face]:
        return frozenset(self.face_set - self.inner_boundary)

    @cached_property
    def vertices(self) -> list[Vertex]:
        """Hexagonal vertices incident to at least one interior edge."""
        out = set()
        for e in self.interior_edges:
            out.update(edge_vertices(e))
        return sorted(out)

    @cached_property
    def boundary_vertices(self) -> list[Vertex]:
        out = set()
        for e in self.boundary_edges:
            out.update(edge_vertices(e))
        return sorted(out)

    def inside(self, edge: Edge) -> bool:
        return edge[0] in self.face_set and edge[1] in self.face_set

    # ---- side labels -------------------------------------------------
    def edge_side(self, edge: Edge) -> str | None:
        """Side label of a boundary edge, or None for unlabelled domains.

        The label is read from the position of the outer face: below the box is
        Bottom, above is Top, otherwise Left or Right.  This makes Left and Right
        start and end with vertical edges.
        """
        if self._box is None:
            return None
        u, v = edge
        inner, outer = (u, v) if u in self.face_set else (v, u)
        kmin, kmax, lmin, lmax = self._box
        if outer.l < lmin:
            return "Bottom"
        if outer.l > lmax:
            return "Top"
        if self.kind == "rect":
            x = outer.k + 0.5 * outer.l
            return "Left" if x < 0 else "Right"
        return "Left" if outer.k < kmin else "Right"

    @property
    def labelled(self) -> bool:
        return self._box is not None

    @cached_property
    def side_edges(self) -> dict[str, list[Edge]]:
        if not self.labelled:
            raise DomainError(f"{self.name} has no side labels")
        out: dict[str, list[Edge]] = {"Bottom": [], "Right": [], "Top": [], "Left": []}
        for e in self.boundary_edges:
            out[self.edge_side(e)].append(e)
        return out

    @cached_property
    def side_faces(self) -> dict[str, frozenset[Face]]:
        """Faces of the inner and outer face boundary adjacent to each side."""
        return {s: frozenset(f for e in es for f in e) for s, es in self.side_edges.items()}

    @cached_property
    def side_inner_faces(self) -> dict[str, frozenset[Face]]:
        return {s: fs & self.face_set for s, fs in self.side_faces.items()}

    @cached_property
    def side_vertices(self) -> dict[str, frozenset[Vertex]]:
        """Boundary vertices whose two boundary edges carry the same side label.

        Vertices where the label changes are corners and belong to no side.
        """
        incident: dict[Vertex, list[str]] = {}
        for e in self.boundary_edges:
            for x in edge_vertices(e):
                incident.setdefault(x, []).append(self.edge_side(e))
        out: dict[str, set] = {"Bottom": set(), "Right": set(), "Top": set(), "Left": set()}
        for x, labels in incident.items():
            if len(set(labels)) == 1:
                out[labels[0]].add(x)
        return {s: frozenset(v) for s, v in out.items()}

    @cached_property
    def corner_vertices(self) -> frozenset[Vertex]:
        sided = set().union(*self.side_vertices.values())
        return frozenset(x for x in self.boundary_vertices if x not in sided)

    # ---- boundary cycle ------------------------------------------------
    def boundary_cycle(self) -> list[Vertex]:
        """Boundary vertices in counter-clockwise order along the edge polygon."""
        adj: dict[Vertex, list[Vertex]] = {}
        for e in self.boundary_edges:
            a, b = edge_vertices(e)
            adj.setdefault(a, []).append(b)
            adj.setdefault(b, []).append(a)
        if any(len(n) != 2 for n in adj.values()):
            raise HasHole(f"{self.name}: boundary is not a simple polygon")
        start = min(adj)
        cycle = [start]
        prev, cur = None, start
        while True:
            nxt = adj[cur][0] if adj[cur][0] != prev else adj[cur][1]
            if nxt == start:
                break
            cycle.append(nxt)
            prev, cur = cur, nxt
        if len(cycle) != len(adj):
            raise HasHole(f"{self.name}: boundary has several components")
        pts = [vertex_position(x) for x in cycle]
        area = sum(pts[i][0] * pts[i - 1][1] - pts[i - 1][0] * pts[i][1] for i in range(len(pts)))
        if area > 0:  # shoelace with reversed index order: positive means clockwise
            cycle = [cycle[0]] + cycle[1:][::-1]
        return cycle

    def to_json(self) -> dict:
        return {"faces": [[f.k, f.l] for f in self.faces]}


def _components(faces: set[Face]) -> list[set[Face]]:
    seen: set[Face] = set()
    comps = []
    for f in sorted(faces):
        if f in seen:
            continue
        comp = {f}
        seen.add(f)
        queue = deque([f])
        while queue:
            g = queue.popleft()
            for h in g.neighbors():
                if h in faces and h not in seen:
                    seen.add(h)
                    comp.add(h)
                    queue.append(h)
        comps.append(comp)
    return comps


def validate_domain(faces: Iterable, name: str = "", **kw) -> Domain:
    fs = {Face(*f) for f in faces}
    if not fs:
        raise Disconnected("empty face set")
    if len(_components(fs)) > 1:
        raise Disconnected(f"{name or 'face set'} is not edge-connected")
    # complement within a padded bounding box must be connected
    ks = [f.k for f in fs]
    ls = [f.l for f in fs]
    box = {Face(k, l) for k in range(min(ks) - 2, max(ks) + 3) for l in range(min(ls) - 2, max(ls) + 3)}
    comp_out = box - fs
    outer_ring = {f for f in comp_out if f.k in (min(ks) - 2, max(ks) + 2) or f.l in (min(ls) - 2, max(ls) + 2)}
    reach = {f for c in _components(comp_out) if c & outer_ring for f in c}
    if reach != comp_out:
        raise HasHole(f"{name or 'face set'} is not simply connected")
    d = Domain(fs, name=name, **kw)
    if len(d.dual_edges) == 0:
        raise NoInteriorEdges(f"{name or 'face set'} has no interior edges")
    d.boundary_cycle()
    return d


def ball_faces(n: int, center=ORIGIN) -> set[Face]:
    c = Face(*center)
    return {Face(c.k + k, c.l + l) for k in range(-n, n + 1) for l in range(-n, n + 1)
            if face_distance((k, l), (0, 0)) <= n}


def build_ball(n: int) -> Domain:
    if n < 1:
        raise NoInteriorEdges("ball of radius 0 has no interior edges")
    return validate_domain(ball_faces(n), name=f"ball:{n}", kind="ball", params=(n,))


def build_parallelogram(m: int, n: int) -> Domain:
    if m < 1 or n < 1:
        raise NoInteriorEdges(f"degenerate parallelogram {m}x{n}")
    faces = [(k, l) for k in range(m + 1) for l in range(n + 1)]
    return validate_domain(faces, name=f"par:{m},{n}", box=(0, m, 0, n), kind="par", params=(m, n))


def rect_rows(n: int) -> int:
    """Index of the top row of faces whose centres lie in [0, n] vertically."""
    return int(math.floor(2 * n / SQRT3 + 1e-12))


def rect_faces(m: int, n: int) -> list[Face]:
    out = []
    for l in range(rect_rows(n) + 1):
        # centre abscissa k + l/2 must lie in [-m, m - 1/2]
        kmin = math.ceil(-m - 0.5 * l - 1e-12)
        kmax = math.floor(m - 0.5 - 0.5 * l + 1e-12)
        out.extend(Face(k, l) for k in range(kmin, kmax + 1))
    return out


def build_rectangle(m: int, n: int) -> Domain:
    if m < 1 or n < 1:
        raise NoInteriorEdges(f"degenerate rectangle {m}x{n}")
    return validate_domain(rect_faces(m, n), name=f"rect:{m},{n}",
                           box=(-m, m, 0, rect_rows(n)), kind="rect", params=(m, n))


class Annulus(NamedTuple):
    outer: Domain
    hole: frozenset[Face]

    @property
    def ring(self) -> frozenset[Face]:
        return frozenset(self.outer.face_set - self.hole)

    @property
    def inner_radius(self) -> int:
        return max(face_distance(f, ORIGIN) for f in self.hole)


def build_annulus(n: int, N: int) -> Annulus:
    if n < 1 or N <= n:
        raise DomainError(f"annulus needs N > n >= 1, got n={n}, N={N}")
    return Annulus(build_ball(N), frozenset(ball_faces(n)))


class CylDomain(FaceGraph):
    """Rect_{m,n} with its left and right sides identified.

    Faces are stored in the rectangle's coordinates; the horizontal period of
    face centres is ``2 m``.
    """

    def __init__(self, m: int, n: int):
        if m < 1 or n < 1:
            raise NoInteriorEdges(f"degenerate cylinder {m}x{n}")
        self.m, self.n = m, n
        self.top_row = rect_rows(n)
        self.faces = tuple(sorted(rect_faces(m, n)))
        self.face_set = frozenset(self.faces)
        self.name = f"cyl:{m},{n}"
        self.kind = "cyl"
        self.params = (m, n)

    def __repr__(self) -> str:
        return f"CylDomain({self.m},{self.n})"

    def canonical(self, f) -> Face:
        f = Face(*f)
        x = f.k + 0.5 * f.l
        shift = math.floor((x + self.m) / (2 * self.m))
        return Face(f.k - 2 * self.m * shift, f.l)

    def _raw_neighbors(self, f: Face) -> list[Face]:
        return [self.canonical(g) for g in f.neighbors() if 0 <= g.l <= self.top_row]

    @cached_property
    def bottom(self) -> frozenset[Face]:
        return frozenset(f for f in self.faces if f.l == 0)

    @cached_property
    def top(self) -> frozenset[Face]:
        return frozenset(f for f in self.faces if f.l == self.top_row)

    @cached_property
    def inner_boundary(self) -> frozenset[Face]:
        return self.bottom | self.top

    @cached_property
    def interior_faces(self) -> frozenset[Face]:
        return frozenset(self.face_set - self.inner_boundary)

    def unrolled(self) -> Domain:
        return build_rectangle(self.m, self.n)

    def seam_faces(self) -> frozenset[Face]:
        """Faces adjacent to the identified left/right side."""
        rect = self.unrolled()
        return rect.side_inner_faces["Left"] | rect.side_inner_faces["Right"]

    def to_json(self) -> dict:
        return {"faces": [[f.k, f.l] for f in self.faces], "period": self.m}


def domain_from_json(obj: dict):
    if "period" in obj:
        faces = {Face(*f) for f in obj["faces"]}
        m = int(obj["period"])
        rows = max(f.l for f in faces)
        n = next(n for n in range(1, 10 * rows + 2) if rect_rows(n) == rows)
        cyl = CylDomain(m, n)
        if cyl.face_set != faces:
            raise DomainError("cylinder faces do not match period")
        return cyl
    return validate_domain(obj["faces"])


def parse_domain(spec: str):
    """Parse ``ball:n | par:m,n | rect:m,n | cyl:m,n | annulus:n,N``."""
    kind, _, arg = spec.partition(":")
    try:
        nums = [int(x) for x in arg.split(",")] if arg else []
    except ValueError as exc:
        raise DomainError(f"bad domain spec {spec!r}") from exc
    builders = {"ball": (build_ball, 1), "par": (build_parallelogram, 2), "rect": (build_rectangle, 2),
                "cyl": (CylDomain, 2), "annulus": (build_annulus, 2)}
    if kind not in builders or len(nums) != builders[kind][1]:
        raise DomainError(f"bad domain spec {spec!r}")
    return builders[kind][0](*nums)
