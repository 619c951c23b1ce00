"""Frozen small instances for the structural checks.

The four-arc and disconnected-blue instances were found by exhaustive search
over small domains and are recorded here so that tests replay them directly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..config import M, P, BoundaryCondition, arc_faces, four_arc, pinned
from ..lattice import Domain, Face, build_ball, build_parallelogram, validate_domain


def _v(*faces) -> tuple:
    return tuple(sorted(Face(*f) for f in faces))


def with_collar(domain: Domain, name: str = "") -> Domain:
    """The domain together with its outer boundary layer."""
    return validate_domain(domain.face_set | domain.outer_boundary, name=name or f"{domain.name}+collar")


@dataclass(frozen=True)
class FourArcInstance:
    domain: Domain
    outer: Domain
    vertices: tuple
    tau_free: dict      # spins of outside faces not forced by the arcs

    @property
    def bc(self) -> BoundaryCondition:
        return four_arc(*self.vertices)

    def tau(self, free_values: dict | None = None) -> np.ndarray:
        """Outside red configuration on ``outer``; interior faces of ``domain`` are set to p (ignored)."""
        plus, minus = arc_faces(self.domain, self.vertices, outer=True)
        tau = np.full(self.outer.size, P, dtype=np.int8)
        for f in plus - minus:
            tau[self.outer.index[f]] = P
        for f in minus - plus:
            tau[self.outer.index[f]] = M
        for f, s in (free_values if free_values is not None else self.tau_free).items():
            tau[self.outer.index[Face(*f)]] = s
        return tau

    def free_faces(self) -> list[Face]:
        plus, minus = arc_faces(self.domain, self.vertices, outer=True)
        forced = (plus - minus) | (minus - plus)
        return sorted(f for f in self.outer.faces if f not in self.domain.interior_faces and f not in forced)


def four_arc_instance() -> FourArcInstance:
    """Par_{3,2} in its collar; the free outside faces set to m break equality."""
    d = build_parallelogram(3, 2)
    verts = (_v((0, 0), (1, -1), (1, 0)), _v((2, 0), (3, -1), (3, 0)),
             _v((3, 0), (3, 1), (4, 0)), _v((0, 2), (0, 3), (1, 2)))
    free = {(0, 3): M, (1, -1): M, (3, -1): M, (4, 0): M}
    return FourArcInstance(d, with_collar(d), verts, free)


def four_arc_wider() -> BoundaryCondition:
    """Marks on Par_{3,2} whose m arcs contain those of :func:`four_arc_instance`."""
    return four_arc(_v((0, 0), (1, -1), (1, 0)), _v((1, 0), (2, -1), (2, 0)),
                    _v((3, 0), (3, 1), (4, 0)), _v((3, 1), (3, 2), (4, 1)))


def four_arc_extended() -> Domain:
    """Par_{3,2} with one face added along the p arc (ab); the m arcs are unchanged."""
    d = build_parallelogram(3, 2)
    return validate_domain(d.face_set | {Face(2, -1)}, name="par:3,2+(2,-1)")


def fkg_negative_control() -> tuple[Domain, BoundaryCondition]:
    """Blue pinned to p on two opposite corners of Par_{2,1}: the lattice condition fails."""
    d = build_parallelogram(2, 1)
    return d, pinned(blue={(0, 0): P, (2, 1): P})


def fkg_connected_blue() -> tuple[Domain, BoundaryCondition]:
    """Blue pinned to p on the central hexagon of radius 1 inside the radius-2 ball."""
    d = build_ball(2)
    return d, pinned(blue={f: P for f in build_ball(1).faces})


def markov_instances() -> list[tuple[Domain, Domain, np.ndarray, np.ndarray, str]]:
    """Radius-1 ball inside the radius-2 ball, for both constant-red cases."""
    small, big = build_ball(1), build_ball(2)
    blue = np.full(big.size, P, dtype=np.int8)
    case_i = np.full(big.size, P, dtype=np.int8)
    case_ii = np.array([P if f in small.face_set else M for f in big.faces], dtype=np.int8)
    return [(small, big, case_i, blue, "i"), (small, big, case_ii, blue, "ii")]
