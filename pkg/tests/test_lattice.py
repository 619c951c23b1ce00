import pytest

from loopo2.lattice import (ORIGIN, CylDomain, DomainError, Disconnected, HasHole, NoInteriorEdges, ball_faces,
                            build_annulus, build_ball, build_parallelogram, build_rectangle, edge_vertices,
                            face_distance, make_edge, parse_domain, validate_domain)


def bfs_distance(a, b):
    from collections import deque
    from loopo2.lattice import DIRECTIONS
    seen = {tuple(a): 0}
    q = deque([tuple(a)])
    while q:
        f = q.popleft()
        if f == tuple(b):
            return seen[f]
        for dk, dl in DIRECTIONS:
            g = (f[0] + dk, f[1] + dl)
            if g not in seen:
                seen[g] = seen[f] + 1
                q.append(g)


@pytest.mark.parametrize("a,b,d", [((0, 0), (0, 0), 0), ((2, 0), (0, 0), 2), ((1, -2), (0, 0), 2)])
def test_face_distance_examples(a, b, d):
    assert face_distance(a, b) == d


def test_face_distance_matches_bfs():
    for k in range(-3, 4):
        for l in range(-3, 4):
            assert face_distance((k, l), (0, 0)) == bfs_distance((k, l), (0, 0))


def test_ball_one():
    d = build_ball(1)
    assert d.size == 7
    assert len(d.interior_edges) == 12
    assert len(d.boundary_edges) == 18
    assert d.interior_faces == {ORIGIN}


def test_ball_two_and_zero():
    assert build_ball(2).size == 19
    with pytest.raises(DomainError):
        build_ball(0)


def test_parallelogram():
    p = build_parallelogram(1, 1)
    assert p.size == 4
    assert len(p.interior_edges) == 5
    assert build_parallelogram(3, 1).size == 8
    with pytest.raises(DomainError):
        build_parallelogram(0, 1)


def test_annulus_counts():
    a = build_annulus(1, 2)
    assert a.outer.size == 19
    assert len(a.hole) == 7
    assert len(a.ring) == 12


def test_validate_domain_errors():
    assert validate_domain(ball_faces(1)).size == 7
    with pytest.raises(HasHole):
        validate_domain(ball_faces(1) - {ORIGIN})
    with pytest.raises(Disconnected):
        validate_domain({(0, 0), (5, 5)})
    with pytest.raises(NoInteriorEdges):
        validate_domain({(0, 0)})


def test_edges_are_canonical():
    e = make_edge((1, 0), (0, 0))
    assert e == make_edge((0, 0), (1, 0))
    a, b = edge_vertices(e)
    assert a != b


def test_rectangle_and_cylinder():
    r = build_rectangle(2, 2)
    assert r.size > 0 and len(r.interior_edges) > 0
    c = CylDomain(3, 2)
    assert c.size > 0
    # every face has at most six neighbours and the seam wraps
    assert c.neighbor_table.shape == (c.size, 6)


def test_parse_domain():
    assert parse_domain("ball:2").size == 19
    assert parse_domain("par:1,1").size == 4
    assert len(parse_domain("annulus:1,2").ring) == 12
    with pytest.raises((DomainError, ValueError)):
        parse_domain("blob:3")
