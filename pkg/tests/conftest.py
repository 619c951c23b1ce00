import pytest

from loopo2.config import M, P, spins_from
from loopo2.lattice import ORIGIN, build_ball, make_edge


@pytest.fixture(scope="session")
def ball1():
    return build_ball(1)


@pytest.fixture(scope="session")
def ball2():
    return build_ball(2)


def center_m(domain):
    return spins_from(domain, P, at={ORIGIN: M})


def hexagon(face=ORIGIN):
    """The six edges around a face."""
    from loopo2.lattice import DIRECTIONS
    f = tuple(face)
    return [make_edge(f, (f[0] + dk, f[1] + dl)) for dk, dl in DIRECTIONS]


def nested_pair(domain):
    """Central hexagon plus the loop around the distance-1 ring, as an edge list."""
    from loopo2.lattice import face_distance
    outer = [e for e in domain.interior_edges
             if sorted(face_distance(f, ORIGIN) for f in e) == [1, 2]]
    return hexagon() + outer


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS):
            terminalreporter.write_line(line)
