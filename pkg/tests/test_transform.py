from collections import Counter

import numpy as np
import pytest

from conftest import center_m, hexagon, nested_pair
from loopo2.config import P, ConfigError, OrientedLoopConfig, spins_from, validate_height, validate_loops
from loopo2.exact import enumerate_heights, enumerate_loops, enumerate_pairs
from loopo2.lattice import ORIGIN, build_parallelogram
from loopo2.transform import (assign_blue_uniform, color_loops_uniform, height_to_oriented_loops, loops_to_spins,
                              orient_uniform, oriented_loops_to_height, spins_to_loops)


def chi2_crit(k, z=3.09):
    """Wilson-Hilferty upper quantile of chi-square with k degrees of freedom."""
    return k * (1 - 2 / (9 * k) + z * np.sqrt(2 / (9 * k))) ** 3


def phi_center(domain, v):
    vals = {f: 0 for f in domain.faces}
    vals[ORIGIN] = v
    return validate_height(domain, vals)


def test_height_orientation(ball1):
    up = height_to_oriented_loops(phi_center(ball1, 1))
    assert up.loops.edges == frozenset(hexagon()) and up.clockwise == (True,)
    down = height_to_oriented_loops(phi_center(ball1, -1))
    assert down.clockwise == (False,)
    assert len(height_to_oriented_loops(phi_center(ball1, 0)).loops) == 0


def test_oriented_to_height(ball1):
    ol = OrientedLoopConfig(validate_loops(ball1, hexagon()), (True,))
    assert oriented_loops_to_height(ol)[ORIGIN] == 1
    empty = OrientedLoopConfig(validate_loops(ball1, []), ())
    assert not oriented_loops_to_height(empty).values.any()
    with pytest.raises(ConfigError):
        oriented_loops_to_height(OrientedLoopConfig(validate_loops(ball1, hexagon()), ()))


@pytest.mark.parametrize("name", ["ball2", "par22"])
def test_height_roundtrip_is_a_bijection(name, ball2):
    d = ball2 if name == "ball2" else build_parallelogram(2, 2)
    hs = enumerate_heights(d)
    seen = set()
    for h in hs:
        ol = height_to_oriented_loops(h)
        assert oriented_loops_to_height(ol) == h
        seen.add((ol.loops.edges, ol.clockwise))
    assert len(seen) == len(hs)


def test_nested_orientations(ball2):
    omega = validate_loops(ball2, nested_pair(ball2))
    values = set()
    for flags in [(a, b) for a in (True, False) for b in (True, False)]:
        values.add(oriented_loops_to_height(OrientedLoopConfig(omega, flags))[ORIGIN])
    assert values == {-2, 0, 2}


def test_orient_and_colour_uniform(ball1):
    omega = validate_loops(ball1, hexagon())
    rng = np.random.default_rng(7)
    n = 20000
    cw = sum(orient_uniform(omega, rng).clockwise[0] for _ in range(n))
    red = sum(bool(color_loops_uniform(omega, rng)[0].edges) for _ in range(n))
    for c in (cw, red):
        assert abs(c / n - 0.5) < 4 * np.sqrt(0.25 / n)
    empty = validate_loops(ball1, [])
    r, b = color_loops_uniform(empty, rng)
    assert not r.edges and not b.edges


def test_spins_loops_roundtrip(ball1):
    red = center_m(ball1)
    blue = spins_from(ball1, P)
    from loopo2.config import SpinPair
    wr, wb = spins_to_loops(SpinPair(ball1, red, blue))
    assert wr.edges == frozenset(hexagon()) and not wb.edges
    back = loops_to_spins(wr, wb, P, P)
    assert np.array_equal(back.red, red) and np.array_equal(back.blue, blue)
    const = loops_to_spins(validate_loops(ball1, []), validate_loops(ball1, []), P, P)
    assert (const.red == P).all() and (const.blue == P).all()
    with pytest.raises(ConfigError):
        loops_to_spins(wr, wr, P, P)


def test_pairs_roundtrip_on_red_pm(ball1):
    from loopo2.config import parse_bc
    for pair in enumerate_pairs(ball1, parse_bc("pm")).configs:
        wr, wb = spins_to_loops(pair)
        back = loops_to_spins(wr, wb, P, int(pair.blue[ball1.index[(1, 0)]]))
        assert np.array_equal(back.red, pair.red) and np.array_equal(back.blue, pair.blue)


def test_assign_blue_uniform_all_p(ball1):
    rng = np.random.default_rng(11)
    red = spins_from(ball1, P)
    n = 100_000
    weights = 1 << np.arange(ball1.size)
    codes = Counter()
    for _ in range(n):
        codes[int(((assign_blue_uniform(ball1, red, rng) > 0) * weights).sum())] += 1
    assert len(codes) == 128
    counts = np.array(list(codes.values()))
    stat = ((counts - n / 128) ** 2 / (n / 128)).sum()
    assert stat < chi2_crit(127)


def test_assign_blue_uniform_center_m(ball1):
    rng = np.random.default_rng(3)
    outcomes = {tuple(assign_blue_uniform(ball1, center_m(ball1), rng)) for _ in range(200)}
    assert len(outcomes) == 2
    assert all(len(set(o)) == 1 for o in outcomes)


def test_loop_marginal_of_heights_is_weighted(ball2):
    # pushing uniform heights forward gives each loop set weight 2^(number of loops)
    from loopo2.config import decompose_loops
    counts = Counter(height_to_oriented_loops(h).loops.edges for h in enumerate_heights(ball2))
    for omega in enumerate_loops(ball2):
        assert counts[omega.edges] == 2 ** len(decompose_loops(omega))
