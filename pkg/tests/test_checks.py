from fractions import Fraction

import pytest

from loopo2.config import FREE, compile_bc, parse_bc
from loopo2.exact import (check_bijection, check_crossing_bounds, check_domination, check_fkg_lattice,
                          check_four_arc_bounds, check_monochrome, check_spatial_markov, cylinder_identity,
                          replay_domination, replay_fkg)
from loopo2.exact.instances import fkg_connected_blue, fkg_negative_control, four_arc_instance, markov_instances
from loopo2.lattice import build_annulus, build_ball, build_parallelogram


def test_bijection_report(ball1):
    r = check_bijection(ball1)
    assert r.passed and r.stats == {"heights": 3, "loop_sum": 3}
    assert r.to_json()["pass"] is True


def test_fkg_free_and_conditioned(ball1):
    r = check_fkg_lattice(ball1, FREE)
    assert r.passed and r.stats["violations"] == 0
    d, bc = fkg_connected_blue()
    assert check_fkg_lattice(d, bc).passed


def test_fkg_negative_control_replays():
    d, bc = fkg_negative_control()
    r = check_fkg_lattice(d, bc)
    assert not r.passed and r.stats["violations"] >= 1
    assert replay_fkg(d, compile_bc(d, bc), r.counterexample)


@pytest.mark.parametrize("case", range(2))
def test_spatial_markov_cases(case):
    small, big, tau_r, tau_b, _ = markov_instances()[case]
    assert check_spatial_markov(small, big, tau_r).passed
    assert check_spatial_markov(small, big, tau_r, tau_b).passed


def test_four_arc_breaks_markov_within_bounds():
    inst = four_arc_instance()
    eq = check_spatial_markov(inst.domain, inst.outer, inst.tau(), rhs=inst.bc)
    assert not eq.passed and eq.counterexample is not None
    assert check_four_arc_bounds(inst.domain, inst.outer, inst.tau(), inst.vertices).passed


def test_domination(ball1):
    assert check_domination(ball1, parse_bc("pp"), parse_bc("pp")).passed
    for lo, hi in (("mm", "mp"), ("mp", "pm"), ("pm", "pp")):
        assert check_domination(build_ball(2), parse_bc(lo), parse_bc(hi)).passed
    r = check_domination(ball1, parse_bc("pp"), parse_bc("mm"))
    assert not r.passed
    assert replay_domination(ball1, parse_bc("pp"), parse_bc("mm"), r.counterexample)


@pytest.mark.parametrize("region", [build_parallelogram(1, 1), build_parallelogram(2, 2), build_annulus(1, 2)])
def test_monochrome(region):
    assert check_monochrome(region).passed


@pytest.mark.parametrize("n", [1, 2])
def test_crossing_bounds(n):
    r = check_crossing_bounds(n)
    assert r.passed
    assert Fraction(r.stats["simple_min"]) >= Fraction(1, 3)
    assert Fraction(r.stats["double_par"]) >= Fraction(1, 4)


def test_cylinder_identity():
    out = cylinder_identity()
    assert out["tv_pairs"] == 0 and out["tv_red"] == 0
