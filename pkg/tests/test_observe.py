import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import hexagon, nested_pair
from loopo2.config import FREE, ConfigError, BCError, validate_loops
from loopo2.lattice import ORIGIN, build_annulus, build_parallelogram
from loopo2.mcmc import ChainParams, run_chain
from loopo2.observe import (CircuitDouble, HeightDiffSq, RunningStats, SurroundLoopCount, alpha_hat, ball,
                            chain_series, count_surrounding_loops, duality_holds, estimate,
                            two_loops_surrounding)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=2, max_size=200), st.randoms())
def test_running_stats_merge(xs, rnd):
    whole = RunningStats()
    for x in xs:
        whole.push(x)
    parts = []
    rest = list(xs)
    rnd.shuffle(rest)
    while rest:
        k = rnd.randint(1, len(rest))
        parts.append(RunningStats().extend(rest[:k]))
        rest = rest[k:]
    rnd.shuffle(parts)
    acc = RunningStats()
    for p in parts:
        acc = RunningStats.merge(p, acc) if rnd.random() < 0.5 else RunningStats.merge(acc, p)
    assert acc.count == whole.count
    assert acc.mean == pytest.approx(whole.mean, rel=1e-12, abs=1e-9)
    assert acc.variance == pytest.approx(np.var(xs, ddof=1), rel=1e-9, abs=1e-9)


def test_loop_counts(ball1, ball2):
    hexa = validate_loops(ball1, hexagon())
    assert count_surrounding_loops(hexa, ORIGIN) == 1
    assert not two_loops_surrounding(hexa, {ORIGIN})
    assert not two_loops_surrounding(validate_loops(ball1, []), {ORIGIN})
    pair = validate_loops(ball2, nested_pair(ball2))
    assert count_surrounding_loops(pair, ORIGIN) == 2
    assert two_loops_surrounding(pair, {ORIGIN})
    assert not two_loops_surrounding(pair, ball(1))


def test_empty_event_list(ball1):
    assert estimate(ball1, FREE, [], [ChainParams(100)]) == []


def test_variance_on_ball1(ball1):
    chains = [ChainParams(20_000, burnin=100, seed=s) for s in range(2)]
    e = estimate(ball1, FREE, [HeightDiffSq()], chains)[0]
    assert abs(e.mean - 2 / 3) < 3 * e.stderr
    assert e.count == 2 * 19_900


def test_coupling_identity_on_ball2(ball2):
    p = ChainParams(40_000, burnin=200, seed=6)
    s = chain_series(ball2, FREE, [HeightDiffSq(), SurroundLoopCount()], p)
    from loopo2.mcmc import integrated_time
    d = s[:, 0] - s[:, 1]
    se = d.std(ddof=1) * np.sqrt(integrated_time(d) / len(d))
    assert abs(d.mean()) < 3 * se


def test_event_representation_mismatch(ball2):
    with pytest.raises(BCError):
        chain_series(ball2, FREE, [CircuitDouble(build_annulus(1, 2))], ChainParams(10))


def test_alpha_hat_errors():
    with pytest.raises(ConfigError):
        alpha_hat(1, 4, [ChainParams(10)])
    with pytest.raises(ConfigError):
        alpha_hat(4, 2, [ChainParams(10)])
    with pytest.raises(ConfigError):
        alpha_hat(2, 4, [ChainParams(10)])


def test_alpha_hat_reproducible():
    chains = [ChainParams(300, burnin=50, seed=1)]
    a = alpha_hat(3, 3, chains)
    assert a == alpha_hat(3, 3, chains)
    assert 0 <= a[0] <= 1


def test_duality_on_sampled_pairs():
    from loopo2.config import parse_bc
    d = build_parallelogram(3, 3)
    for bc in (parse_bc("pp"), parse_bc("pm"), parse_bc("mm")):
        for x in run_chain(d, bc, ChainParams(3000, thin=3, seed=2)):
            assert duality_holds(x[: d.size], x[d.size:], d)


def test_worker_invariance(ball2):
    chains = [ChainParams(2000, seed=3, chain_id=k) for k in range(3)]
    one = estimate(ball2, FREE, [HeightDiffSq()], chains, workers=1)
    two = estimate(ball2, FREE, [HeightDiffSq()], chains, workers=2)
    assert one == two
