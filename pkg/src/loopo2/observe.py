"""Events, detectors and Monte Carlo estimators on sampled configurations."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numba import njit

from ._kernels import uf_find, uf_union
from .config import (BCError, BoundaryCondition, ConfigError, LoopConfig, M, P, RED_MM, decompose_loops,
                     loops_surrounding, surrounds)
from .detect import (DoublePlan, circuit_double_exists, circuit_plan, crossing_exists, crossing_plan,
                     ray_crossing, run_double, run_simple)
from .lattice import ORIGIN, Annulus, Domain, DomainError, Face, FaceGraph, ball_faces, build_annulus, build_ball
from .mcmc import (HEIGHTS, ChainParams, DiagnosticsError, convergence_diagnostics, edge_geometry, integrated_time,
                   representation, run_chain)

__all__ = [
    "RunningStats", "SurroundLoopCount", "TwoLoopsSurrounding", "LoopSurrounding", "CircuitDouble", "CrossingSimple",
    "CrossingDouble", "HeightDiffSq", "crossing_exists", "circuit_double_exists", "count_surrounding_loops",
    "two_loops_surrounding", "estimate", "alpha_hat", "Estimate", "duality_holds",
]


# ---------------------------------------------------------------- running statistics

@dataclass
class RunningStats:
    """Welford accumulator; ``merge`` is the pairwise combination rule."""

    count: int = 0
    mean: float = 0.0
    M2: float = 0.0

    def push(self, x: float) -> None:
        self.count += 1
        d = x - self.mean
        self.mean += d / self.count
        self.M2 += d * (x - self.mean)

    def extend(self, xs) -> "RunningStats":
        xs = np.asarray(xs, dtype=float)
        if len(xs):
            self.merge_in(RunningStats(len(xs), float(xs.mean()), float(((xs - xs.mean()) ** 2).sum())))
        return self

    def merge_in(self, other: "RunningStats") -> None:
        n = self.count + other.count
        if n == 0:
            return
        d = other.mean - self.mean
        self.mean += d * other.count / n
        self.M2 += other.M2 + d * d * self.count * other.count / n
        self.count = n

    @staticmethod
    def merge(a: "RunningStats", b: "RunningStats") -> "RunningStats":
        out = RunningStats(a.count, a.mean, a.M2)
        out.merge_in(b)
        return out

    @property
    def variance(self) -> float:
        return self.M2 / (self.count - 1) if self.count > 1 else float("nan")


# ---------------------------------------------------------------- event specifications

@dataclass(frozen=True)
class SurroundLoopCount:
    face: tuple = ORIGIN
    name: str = "loopcount"


@dataclass(frozen=True)
class TwoLoopsSurrounding:
    region: frozenset
    name: str = "two_loops"


@dataclass(frozen=True)
class LoopSurrounding:
    """At least one loop using only edges of ``outer`` surrounds every face of ``inner``."""
    inner: frozenset
    outer: frozenset
    name: str = "loop_surrounding"


@dataclass(frozen=True)
class CircuitDouble:
    annulus: Annulus
    colour: str = "red"
    sign: int = P
    name: str = "circuit"


@dataclass(frozen=True)
class CrossingSimple:
    region: Domain
    direction: str = "h"
    sign: int = P
    name: str = "crossing_simple"


@dataclass(frozen=True)
class CrossingDouble:
    region: Domain
    direction: str = "h"
    colour: str = "red"
    sign: int = P
    name: str = "crossing"


@dataclass(frozen=True)
class HeightDiffSq:
    x: tuple = ORIGIN
    y: tuple | None = None      # None: any inner boundary face (height 0)
    name: str = "var"


LOOP_EVENTS = (SurroundLoopCount, TwoLoopsSurrounding, LoopSurrounding)
SPIN_EVENTS = (CircuitDouble, CrossingSimple, CrossingDouble)


# ---------------------------------------------------------------- loop detectors

def count_surrounding_loops(omega: LoopConfig, face=ORIGIN) -> int:
    return loops_surrounding(omega, face)


def _surrounds_all(loop, region) -> bool:
    return all(surrounds(loop, f) for f in region)


def two_loops_surrounding(omega: LoopConfig, region) -> bool:
    region = [Face(*f) for f in region]
    return sum(1 for lp in decompose_loops(omega) if _surrounds_all(lp, region)) >= 2


@njit(cache=True)
def count_loops(mask, ev, nv, cross, bad):
    """Loops of the edge set ``mask`` with odd ``cross`` parity and no ``bad`` edge."""
    parent = np.arange(nv)
    for e in range(mask.shape[0]):
        if mask[e]:
            uf_union(parent, ev[e, 0], ev[e, 1])
    par = np.zeros(nv, dtype=np.int8)
    spoilt = np.zeros(nv, dtype=np.bool_)
    for e in range(mask.shape[0]):
        if mask[e]:
            r = uf_find(parent, ev[e, 0])
            if cross[e]:
                par[r] ^= 1
            if bad[e]:
                spoilt[r] = True
    n = 0
    for v in range(nv):
        if par[v] == 1 and not spoilt[v]:
            n += 1
    return n


def _region_origin(faces) -> Face:
    faces = set(faces)
    return ORIGIN if ORIGIN in faces else min(faces)


# ---------------------------------------------------------------- compiled events

class _Evaluator:
    """Turns an event spec into a function of the flat per-face sample."""

    def __init__(self, spec, domain: FaceGraph, kind: str):
        self.spec = spec
        self.kind = kind
        n = domain.size
        if isinstance(spec, HeightDiffSq):
            if kind != HEIGHTS:
                raise BCError("height events need the height representation")
            self.i = domain.index[Face(*spec.x)]
            self.j = domain.index[Face(*spec.y)] if spec.y is not None else None
            self.fn = self._height
            return
        if isinstance(spec, LOOP_EVENTS):
            if not isinstance(domain, Domain):
                raise BCError("loop events need a planar domain")
            geo = edge_geometry(domain)
            faces = domain.faces
            self.dual, self.ev, self.nv = geo.dual, geo.ev, geo.nv
            edges = [(faces[i], faces[j]) for i, j in geo.dual]
            if isinstance(spec, SurroundLoopCount):
                origin, inner, outer, self.need = Face(*spec.face), set(), None, 0
            elif isinstance(spec, TwoLoopsSurrounding):
                inner = {Face(*f) for f in spec.region}
                origin, outer, self.need = _region_origin(inner), None, 2
            else:
                inner = {Face(*f) for f in spec.inner}
                outer = {Face(*f) for f in spec.outer}
                origin, self.need = _region_origin(inner), 1
            if origin not in domain:
                raise DomainError(f"{origin} is not a face of {domain.name}")
            self.cross = np.array([ray_crossing(e, 0, origin) for e in edges], dtype=np.bool_)
            self.bad = np.array([(a in inner and b in inner) or (outer is not None and not (a in outer and b in outer))
                                 for a, b in edges], dtype=np.bool_)
            self.n = n
            self.fn = self._loops
            return
        if isinstance(spec, SPIN_EVENTS):
            if kind == HEIGHTS:
                raise BCError("spin events need a spin boundary condition")
            self.offset = 0 if getattr(spec, "colour", "red") == "red" else n
            self.sign = spec.sign
            if isinstance(spec, CircuitDouble):
                self.plan = circuit_plan(spec.annulus, domain)
            elif isinstance(spec, CrossingDouble):
                self.plan = crossing_plan(spec.region, spec.direction, "double", domain)
            else:
                self.plan = crossing_plan(spec.region, spec.direction, "simple", domain)
            self.n = n
            self.fn = self._spins
            return
        raise TypeError(f"unknown event {spec!r}")

    def _height(self, x):
        d = x[self.i] - (x[self.j] if self.j is not None else 0)
        return float(d * d)

    def _omega(self, x):
        a, b = self.dual[:, 0], self.dual[:, 1]
        if self.kind == HEIGHTS:
            return x[a] != x[b]
        n = self.n
        return (x[a] != x[b]) | (x[n + a] != x[n + b])

    def _loops(self, x):
        k = count_loops(self._omega(x), self.ev, self.nv, self.cross, self.bad)
        return float(k) if self.need == 0 else float(k >= self.need)

    def _spins(self, x):
        s = np.ascontiguousarray(x[self.offset:self.offset + self.n], dtype=np.int8)
        if isinstance(self.plan, DoublePlan):
            return float(run_double(self.plan, s, self.sign))
        return float(run_simple(self.plan, s, self.sign))

    def __call__(self, x) -> float:
        return self.fn(x)


def event_label(spec) -> str:
    return spec.name


# ---------------------------------------------------------------- estimation

@dataclass(frozen=True)
class Estimate:
    event: str
    mean: float
    stderr: float
    count: int
    tau: float
    warning: str = ""

    def to_json(self) -> dict:
        return {"event": self.event, "mean": self.mean, "stderr": self.stderr, "count": self.count,
                "tau": self.tau, "warning": self.warning}


def chain_series(domain: FaceGraph, bc: BoundaryCondition, events: Sequence, params: ChainParams,
                 start=None) -> np.ndarray:
    """(samples, events) array of event values along one chain."""
    kind = representation(domain, bc)
    evals = [_Evaluator(e, domain, kind) for e in events]
    out = np.empty((params.n_samples, len(evals)))
    for t, x in enumerate(run_chain(domain, bc, params, start)):
        for k, f in enumerate(evals):
            out[t, k] = f(x)
    return out


def _series_job(args):
    return chain_series(*args)


def run_series(domain, bc, events, chains: Sequence[ChainParams], workers: int = 1, starts=None) -> list[np.ndarray]:
    starts = starts if starts is not None else [None] * len(chains)
    jobs = [(domain, bc, list(events), p, s) for p, s in zip(chains, starts)]
    if workers <= 1 or len(jobs) <= 1:
        return [_series_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_series_job, jobs))


def summarize(name: str, series: Sequence[np.ndarray]) -> Estimate:
    """Pooled mean and autocorrelation-corrected standard error over chains."""
    stats = RunningStats()
    for s in series:
        stats.extend(s)
    N = stats.count
    if N == 0:
        return Estimate(name, float("nan"), float("nan"), 0, float("nan"), "no samples")
    var_mean = 0.0
    taus = []
    for s in series:
        if len(s) < 2:
            continue
        tau = integrated_time(s)
        taus.append(tau)
        var_mean += (len(s) / N) ** 2 * float(np.var(s, ddof=1)) * tau / len(s)
    warning = ""
    if len(series) >= 2:
        try:
            if convergence_diagnostics(series).flagged:
                warning = "rhat>1.1"
        except DiagnosticsError as exc:
            warning = str(exc)
    tau = float(np.mean(taus)) if taus else float("nan")
    return Estimate(name, stats.mean, float(np.sqrt(var_mean)), N, tau, warning)


def estimate(domain: FaceGraph, bc: BoundaryCondition, events: Sequence, chains: Sequence[ChainParams],
             workers: int = 1, starts=None) -> list[Estimate]:
    if not events:
        return []
    runs = run_series(domain, bc, events, chains, workers, starts)
    return [summarize(event_label(e), [r[:, k] for r in runs]) for k, e in enumerate(events)]


def alpha_hat(n: int, rho: float, chains: Sequence[ChainParams], workers: int = 1) -> tuple[float, float]:
    """Probability of a double-p circuit around the radius-n ball inside radius 2n, mm-conditioned at radius rho n."""
    if n < 2 or rho <= 2:
        raise ConfigError("alpha_hat needs n >= 2 and rho > 2")
    if n < 3:
        raise ConfigError("annulus too thin: need at least 3 faces between the radius-n and radius-2n balls")
    big = build_ball(int(round(rho * n)))
    ann = build_annulus(n, 2 * n)
    est = estimate(big, RED_MM, [CircuitDouble(ann, "red", P, name="alpha")], chains, workers)[0]
    return est.mean, est.stderr


def duality_holds(pair_red, pair_blue, region: Domain, host: FaceGraph | None = None) -> bool:
    """Absence of red horizontal double crossings of both signs forces a blue vertical one."""
    if crossing_exists(pair_red, region, "h", "double", P, host) or crossing_exists(pair_red, region, "h", "double", M,
                                                                                      host):
        return True
    plan = crossing_plan(region, "v", "double", host if host is not None else region, ends="faces")
    b = np.asarray(pair_blue, dtype=np.int8)
    return run_double(plan, b, P) or run_double(plan, b, M)


def ball(n: int) -> frozenset:
    return frozenset(ball_faces(n))
