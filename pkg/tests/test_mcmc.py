from collections import Counter

import numpy as np
import pytest

from loopo2.config import FREE, P, BCError, is_coherent, parse_bc, validate_height
from loopo2.exact import enumerate_pairs, red_table
from loopo2.lattice import ORIGIN, build_ball, face_distance
from loopo2.mcmc import (ChainParams, DiagnosticsError, convergence_diagnostics, edge_geometry, init_state,
                         integrated_time, read_spool, run_chain, sample_array, spin_metropolis_sweep, spool,
                         height_heatbath_sweep)


def test_sample_count():
    p = ChainParams(1000, burnin=100, thin=10)
    assert p.n_samples == 90
    assert len(list(run_chain(build_ball(1), FREE, p))) == 90


def test_params_validation():
    with pytest.raises(ValueError):
        ChainParams(10, burnin=10)
    with pytest.raises(ValueError):
        ChainParams(10, thin=0)


def test_determinism_and_seeds(ball2):
    a = sample_array(ball2, FREE, ChainParams(500, seed=4))
    b = sample_array(ball2, FREE, ChainParams(500, seed=4))
    c = sample_array(ball2, FREE, ChainParams(500, seed=5))
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, sample_array(ball2, FREE, ChainParams(500, seed=4, chain_id=1)))


def test_height_marginal_on_ball1(ball1):
    x = sample_array(ball1, FREE, ChainParams(10_100, burnin=100, seed=1))[:, ball1.index[ORIGIN]]
    freq = Counter(x.tolist())
    tv = sum(abs(freq[v] / len(x) - 1 / 3) for v in (-1, 0, 1)) / 2
    assert tv < 0.01


def test_validity_every_sweep(ball2):
    st = init_state(ball2, FREE, ChainParams(1), debug=True)
    for _ in range(300):
        height_heatbath_sweep(st, refresh=True)
        validate_height(ball2, st.config)
    for name in ("pp", "pm", "mm"):
        st = init_state(ball2, parse_bc(name), ChainParams(1, seed=3), debug=True)
        for _ in range(300):
            spin_metropolis_sweep(st)
            red, blue = st.config
            assert is_coherent(ball2, red, blue)


def test_spin_chain_uniform_on_red_pm(ball1):
    exact = {p.key() for p in enumerate_pairs(ball1, parse_bc("pm")).configs}
    n = 100_000
    xs = sample_array(ball1, parse_bc("pm"), ChainParams(n + 500, burnin=500, seed=8))
    keys = Counter(np.concatenate([r.astype(np.int8)[: ball1.size], r.astype(np.int8)[ball1.size:]]).tobytes()
                   for r in xs)
    assert len(keys) == 6
    tv = sum(abs(c / n - 1 / 6) for c in keys.values()) / 2
    assert tv < 0.02
    assert len(exact) == 6


def test_spin_chain_red_marginal_pp(ball2):
    target = red_table(ball2, parse_bc("pp")).probability(lambda r: r[ball2.index[ORIGIN]] == P)
    xs = sample_array(ball2, parse_bc("pp"), ChainParams(40_500, burnin=500, seed=2))
    ind = (xs[:, ball2.index[ORIGIN]] == P).astype(float)
    se = ind.std() * np.sqrt(integrated_time(ind) / len(ind))
    assert abs(ind.mean() - float(target)) < 3 * se


def test_incoherent_start_rejected(ball1):
    red = np.ones(ball1.size, dtype=np.int8)
    red[ball1.index[ORIGIN]] = -1
    blue = np.ones(ball1.size, dtype=np.int8)
    blue[ball1.index[ORIGIN]] = -1
    with pytest.raises(BCError):
        init_state(ball1, parse_bc("pp"), ChainParams(1), start=(red, blue))


def test_diagnostics_identical_seeds(ball1):
    a = sample_array(ball1, FREE, ChainParams(300, seed=1))[:, 0]
    with pytest.raises(DiagnosticsError):
        convergence_diagnostics([a, a.copy()])
    with pytest.raises(DiagnosticsError):
        convergence_diagnostics([a])


def pyramid(domain, sign):
    n = max(face_distance(f, ORIGIN) for f in domain.faces)
    return {f: sign * (n - face_distance(f, ORIGIN)) for f in domain.faces}


def test_diagnostics_flag_extremal_starts():
    d = build_ball(16)
    i = d.index[ORIGIN]
    streams = [sample_array(d, FREE, ChainParams(60, seed=k), start=pyramid(d, s))[:, i]
               for k, s in enumerate((1, -1, 1, -1))]
    assert convergence_diagnostics(streams).flagged


def test_diagnostics_settle_on_ball1(ball1):
    i = ball1.index[ORIGIN]
    streams = [sample_array(ball1, FREE, ChainParams(20_000, seed=k))[:, i] for k in range(4)]
    d = convergence_diagnostics(streams)
    assert not d.flagged and abs(d.ratio - 1) < 0.01


def test_integrated_time_of_ar1():
    rng = np.random.default_rng(0)
    a, n = 0.8, 200_000
    x = np.empty(n)
    x[0] = 0
    e = rng.normal(size=n)
    for t in range(1, n):
        x[t] = a * x[t - 1] + e[t]
    assert abs(integrated_time(x) - (1 + a) / (1 - a)) < 0.6


def test_spool_roundtrip(tmp_path, ball2):
    xs = list(run_chain(ball2, FREE, ChainParams(200, thin=20)))
    path = tmp_path / "s.bin"
    assert spool(xs, path) == 10
    back = read_spool(path)
    assert len(back) == 10
    assert all(np.array_equal(a, b) for a, b in zip(xs, back))


def _lower_to_zero(domain, phi):
    """Path of single-face moves to zero, each allowed by the heat-bath conditional."""
    nbr = edge_geometry(domain).nbr
    phi = phi.copy()
    moves = 0
    while phi.any():
        i = int(np.argmax(np.abs(phi)))
        target = phi[i] - np.sign(phi[i])
        ws = [phi[j] for j in nbr[i] if j >= 0]
        assert max(ws) - 1 <= target <= min(ws) + 1
        phi[i] = target
        moves += 1
    return moves


def test_heatbath_irreducible_on_ball3():
    d = build_ball(3)
    for seed in range(100):
        st = init_state(d, FREE, ChainParams(1, seed=seed))
        for _ in range(seed % 7 + 5):
            height_heatbath_sweep(st)
        _lower_to_zero(d, st.config)


def test_heatbath_hits_zero_on_ball2(ball2):
    for seed in range(10):
        st = init_state(ball2, FREE, ChainParams(1, seed=seed), start=pyramid(ball2, 1 if seed % 2 else -1))
        for _ in range(100_000):
            height_heatbath_sweep(st)
            if not st.config.any():
                break
        assert not st.config.any()
