"""Exhaustive verification of structural properties of the double-spin measures.

Every check returns a :class:`CheckReport`; failing reports carry a
counterexample that :func:`replay` re-validates with the plain Python
predicates of :mod:`loopo2.config`.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

import networkx as nx
import numpy as np

from .._kernels import components_over_masks, fkg_violations
from ..config import (FREE, P, M, RED_PM, RED_PP, BoundaryCondition, ConfigError, Constraints, DOBRUSHIN,
                      DOBRUSHIN_CYL, arc_faces, as_array, compile_bc, four_arc, is_coherent, pinned, theta_of)
from ..detect import (batch, circuit_plan, crossing_plan, hole_to_outside_plan, run_dichotomy)
from ..lattice import Annulus, CylDomain, Domain, Face, FaceGraph, build_rectangle, validate_domain
from .enumerate import (DEFAULT_CAP, CapExceeded, EmptySupport, RedTable, bijection_sum, count_heights,
                        enumerate_pairs, red_table)

FLOW_CAP = 1 << 12
FKG_CAP = 20
MONO_CAP = 22


class FlowCapExceeded(CapExceeded):
    pass


class HypothesisError(ConfigError):
    pass


@dataclass
class CheckReport:
    check: str
    domain: str
    passed: bool
    cases: int
    counterexample: dict | None = None
    stats: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.passed and self.counterexample is None:
            raise ValueError("a failing report needs a counterexample")

    def __bool__(self) -> bool:
        return self.passed

    def to_json(self) -> dict:
        out = {"check": self.check, "domain": self.domain, "cases": self.cases, "pass": self.passed}
        if self.counterexample is not None:
            out["counterexample"] = self.counterexample
        if self.stats:
            out["stats"] = self.stats
        return out


def _spin_map(domain: FaceGraph, spins) -> dict:
    return {f.key(): ("p" if s > 0 else "m") for f, s in zip(domain.faces, spins)}


def _spins_from_map(domain: FaceGraph, mapping: dict) -> np.ndarray:
    return as_array(domain, {k: (P if v == "p" else M) for k, v in mapping.items()})


def python_weight(domain: FaceGraph, red, cons: Constraints) -> int:
    """Number of admissible blue completions of ``red``, by plain union-find."""
    red = np.asarray(red)
    if not cons.red_ok(red):
        return 0
    parent = list(range(domain.size))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    pairs = [(domain.index[u], domain.index[v]) for u, v in theta_of(domain, red)]
    pairs += [tuple(e) for e in cons.blue_equal.tolist()]
    for a, b in pairs:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
    colour: dict = {}
    for i in np.flatnonzero(cons.blue_pin):
        r = find(int(i))
        if colour.setdefault(r, int(cons.blue_pin[i])) != int(cons.blue_pin[i]):
            return 0
    roots = {find(i) for i in range(domain.size)}
    return 2 ** len(roots - set(colour))


def _as_cons(domain, bc) -> Constraints:
    return bc if isinstance(bc, Constraints) else compile_bc(domain, bc)


# ---------------------------------------------------------------- bijection

def check_bijection(domain: Domain) -> CheckReport:
    h = count_heights(domain)
    s = bijection_sum(domain)
    cex = None if h == s else {"heights": h, "loop_sum": s}
    return CheckReport("bijection", domain.name, h == s, h, cex, {"heights": h, "loop_sum": s})


# ---------------------------------------------------------------- FKG

def check_fkg_lattice(domain: FaceGraph, bc: BoundaryCondition | Constraints = FREE, cap: int = FKG_CAP,
                      max_report: int = 8) -> CheckReport:
    """Lattice condition for every pair of free faces and every configuration of the others."""
    cons = _as_cons(domain, bc)
    free_idx = cons.free_red.astype(np.int64)
    if len(free_idx) > cap:
        raise CapExceeded(f"{len(free_idx)} free faces exceed the cap of {cap}")
    base = cons.red_fixed.copy()
    kvals = components_over_masks(free_idx, base, domain.dual_edges, cons.blue_equal, cons.blue_pin)
    if cons.red_equal:
        masks = np.arange(len(kvals))
        bits = (masks[:, None] >> np.arange(len(free_idx))[None, :]) & 1
        reds = np.repeat(base[None, :], len(masks), axis=0)
        reds[:, free_idx] = 2 * bits - 1
        for g in cons.red_equal:
            sub = reds[:, g]
            kvals[~np.all(sub == sub[:, :1], axis=1)] = -1
    ncase, nviol, found = fkg_violations(kvals, len(free_idx), max_report)
    name = getattr(bc, "kind", "constraints")
    cex = None
    if nviol:
        mask, u, v = (int(x) for x in found[0])
        red = base.copy()
        red[free_idx] = np.where((mask >> np.arange(len(free_idx))) & 1, P, M)
        cex = {"kind": "fkg", "sigma": _spin_map(domain, red),
               "u": domain.faces[free_idx[u]].key(), "v": domain.faces[free_idx[v]].key(),
               "exponents": {ab: int(kvals[mask | (bu << u) | (bv << v)])
                             for ab, (bu, bv) in {"pp": (1, 1), "mm": (0, 0), "pm": (1, 0), "mp": (0, 1)}.items()}}
    return CheckReport("fkg", domain.name, nviol == 0, int(ncase), cex,
                       {"violations": int(nviol), "free_faces": int(len(free_idx)), "bc": name})


def replay_fkg(domain: FaceGraph, cons: Constraints, cex: dict) -> bool:
    """True when the recorded configuration does violate the lattice condition."""
    sigma = _spins_from_map(domain, cex["sigma"])
    u, v = domain.index[Face(*map(int, cex["u"].split(",")))], domain.index[Face(*map(int, cex["v"].split(",")))]
    w = {}
    for a, b in itertools.product((P, M), repeat=2):
        s = sigma.copy()
        s[u], s[v] = a, b
        w[(a, b)] = python_weight(domain, s, cons)
    return w[(P, P)] * w[(M, M)] < w[(P, M)] * w[(M, P)]


# ---------------------------------------------------------------- spatial Markov

def _outside(domain: Domain, outer: Domain, tau, region) -> dict:
    return {f: int(tau[outer.index[f]]) for f in outer.faces if f not in region}


def _restricted_red(table: RedTable, outer: FaceGraph, inner: FaceGraph) -> dict[bytes, int]:
    idx = np.array([outer.index[f] for f in inner.faces], dtype=np.int64)
    return table.restricted(idx)


def _normalise(w: dict) -> dict:
    tot = sum(w.values())
    return {k: Fraction(v, tot) for k, v in w.items()}


def _first_difference(p: dict, q: dict):
    for k in sorted(set(p) | set(q)):
        if p.get(k, 0) != q.get(k, 0):
            return k, p.get(k, 0), q.get(k, 0)
    return None


def _key_map(domain: FaceGraph, key: bytes) -> dict:
    n = domain.size
    arr = np.frombuffer(key, dtype=np.int8)
    out = {"red": _spin_map(domain, arr[:n])}
    if len(arr) > n:
        out["blue"] = _spin_map(domain, arr[n:])
    return out


def markov_case(domain: Domain, outer: Domain, tau_r) -> str:
    """Which case of the spatial Markov property an outside red configuration falls under."""
    if not domain.outer_boundary <= outer.face_set:
        raise HypothesisError("the outer boundary of the small domain must lie in the large one")
    tau_r = as_array(outer, tau_r)
    inner = {int(tau_r[outer.index[f]]) for f in domain.inner_boundary}
    out = {int(tau_r[outer.index[f]]) for f in domain.outer_boundary}
    if inner == {P} and out == {P}:
        return "i"
    if inner == {P} and out == {M}:
        return "ii"
    raise HypothesisError("red spins must be p on the inner boundary and constant on the outer boundary")


def check_spatial_markov(domain: Domain, outer: Domain, tau_r, tau_b=None,
                         rhs: BoundaryCondition | None = None, cap: int = DEFAULT_CAP) -> CheckReport:
    """Compare the conditional law inside ``domain`` with its boundary-condition measure.

    With ``tau_b`` the comparison is on coherent pairs; without it, on red
    marginals with blue free outside.  ``rhs`` overrides the automatic choice
    between the ``pp`` and ``pm`` measures (used for four-arc conditions).
    """
    tau_r = as_array(outer, tau_r)
    if not domain.face_set <= outer.face_set or not domain.outer_boundary <= outer.face_set:
        raise HypothesisError("the small domain and its outer boundary must lie in the large one")
    case = markov_case(domain, outer, tau_r) if rhs is None else "given"
    red_out = _outside(domain, outer, tau_r, domain.interior_faces)
    if tau_b is not None:
        tau_b = as_array(outer, tau_b)
        if not is_coherent(outer, tau_r, tau_b):
            raise HypothesisError("outside configurations are not coherent")
        blue_out = _outside(domain, outer, tau_b, domain.face_set)
        lhs_pairs = enumerate_pairs(outer, pinned(red_out, blue_out), cap)
        idx = np.array([outer.index[f] for f in domain.faces], dtype=np.int64)
        lhs = {p.red[idx].tobytes() + p.blue[idx].tobytes(): 1 for p in lhs_pairs.configs}
        bc = rhs or (RED_PP if case == "i" else RED_PM)
        rhs_pairs = enumerate_pairs(domain, bc, cap).configs
        if case == "ii":
            s = int(tau_b[outer.index[next(iter(sorted(domain.outer_boundary)))]])
            ring = [domain.index[f] for f in domain.inner_boundary]
            rhs_pairs = [p for p in rhs_pairs if p.blue[ring[0]] == s]
        rhs_w = {p.key(): 1 for p in rhs_pairs}
        level = "pairs"
    else:
        lhs = _restricted_red(red_table(outer, pinned(red_out), cap), outer, domain)
        bc = rhs or (RED_PP if case == "i" else RED_PM)
        t = red_table(domain, bc, cap)
        rhs_w = {r.tobytes(): 1 << int(k) for r, k in zip(t.reds, t.exponents)}
        level = "red"
    p, q = _normalise(lhs), _normalise(rhs_w)
    diff = _first_difference(p, q)
    cex = None
    if diff is not None:
        k, a, b = diff
        cex = {"kind": "markov", "config": _key_map(domain, k), "conditional": str(a), "boundary_measure": str(b)}
    tv = sum(abs(p.get(k, 0) - q.get(k, 0)) for k in set(p) | set(q)) / 2
    return CheckReport("spatial_markov", f"{domain.name}<{outer.name}", diff is None, len(set(p) | set(q)), cex,
                       {"case": case, "level": level, "bc": bc.kind, "tv": str(tv)})


# ---------------------------------------------------------------- four arcs

def imposes_four_arc(domain: Domain, outer: Domain, tau_r, vertices) -> bool:
    tau_r = as_array(outer, tau_r)
    plus, minus = arc_faces(domain, vertices, outer=True)
    for f in plus - minus:
        if f not in outer or tau_r[outer.index[f]] != P:
            return False
    for f in minus - plus:
        if f not in outer or tau_r[outer.index[f]] != M:
            return False
    return True


def check_four_arc_bounds(domain: Domain, outer: Domain, tau_r, vertices, cap: int = DEFAULT_CAP) -> CheckReport:
    """Ratios of the conditional red law to the four-arc measure lie in [1/8, 8]."""
    tau_r = as_array(outer, tau_r)
    if not imposes_four_arc(domain, outer, tau_r, vertices):
        raise HypothesisError("the outside configuration does not impose the four-arc condition")
    red_out = _outside(domain, outer, tau_r, domain.interior_faces)
    lhs = _normalise(_restricted_red(red_table(outer, pinned(red_out), cap), outer, domain))
    t = red_table(domain, four_arc(*vertices), cap)
    rhs = _normalise({r.tobytes(): 1 << int(k) for r, k in zip(t.reds, t.exponents)})
    lo, hi = Fraction(1, 8), Fraction(8)
    ratios = []
    cex = None
    for k in sorted(set(lhs) | set(rhs)):
        a, b = lhs.get(k, Fraction(0)), rhs.get(k, Fraction(0))
        if b == 0 or a == 0:
            ok = a == b
            r = None
        else:
            r = a / b
            ok = lo <= r <= hi
            ratios.append(r)
        if not ok and cex is None:
            cex = {"kind": "four_arc", "config": _key_map(domain, k), "conditional": str(a), "four_arc": str(b)}
    stats = {"min_ratio": str(min(ratios)), "max_ratio": str(max(ratios)),
             "equal": all(r == 1 for r in ratios) and cex is None}
    return CheckReport("four_arc_bounds", f"{domain.name}<{outer.name}", cex is None, len(ratios), cex, stats)


# ---------------------------------------------------------------- stochastic domination

def _marginal(domain: FaceGraph, bc, faces, cap) -> dict[tuple, int]:
    t = bc if isinstance(bc, RedTable) else red_table(domain, bc, cap)
    idx = np.array([domain.index[f] for f in faces], dtype=np.int64)
    out: dict[tuple, int] = {}
    for r, k in zip(t.reds, t.exponents):
        key = tuple(int(x) for x in r[idx])
        out[key] = out.get(key, 0) + (1 << int(k))
    return out


def dominates(low: dict[tuple, int], high: dict[tuple, int], flow_cap: int = FLOW_CAP):
    """Strassen test for ``low <=st high`` by max-flow.

    Returns (holds, witness, number of configurations in the flow network).
    The witness is an increasing set, given by its indicator over the free
    coordinates, with larger mass under ``low``.
    """
    n = len(next(iter(low)))
    lo_vals = [{k[i] for k in low} for i in range(n)]
    hi_vals = [{k[i] for k in high} for i in range(n)]
    coords = []
    for i in range(n):
        if len(lo_vals[i]) == 1 and len(hi_vals[i]) == 1:
            a, b = next(iter(lo_vals[i])), next(iter(hi_vals[i]))
            if a > b:
                # the event {face i is p} is certain under low and impossible under high
                return False, {"coords": [i], "upset": [1], "low_prob": "1", "high_prob": "0"}, 2
            continue
        coords.append(i)
    d = len(coords)
    if (1 << d) > flow_cap:
        raise FlowCapExceeded(f"{1 << d} configurations exceed the flow cap of {flow_cap}")

    def code(k):
        return sum(1 << b for b, i in enumerate(coords) if k[i] > 0)

    zl, zh = sum(low.values()), sum(high.values())
    g = nx.DiGraph()
    g.add_nodes_from(range(1 << d))
    for x in range(1 << d):
        for b in range(d):
            if not x >> b & 1:
                g.add_edge(x, x | (1 << b))
    wl: dict[int, int] = {}
    wh: dict[int, int] = {}
    for k, w in low.items():
        wl[code(k)] = wl.get(code(k), 0) + w
    for k, w in high.items():
        wh[code(k)] = wh.get(code(k), 0) + w
    for x, w in wl.items():
        g.add_edge("s", x, capacity=w * zh)
    for x, w in wh.items():
        g.add_edge(x, "t", capacity=w * zl)
    cut, (reach, _) = nx.minimum_cut(g, "s", "t")
    if cut == zl * zh:
        return True, None, 1 << d
    up = sorted(x for x in reach if x != "s")
    pl = Fraction(sum(wl.get(x, 0) for x in up), zl)
    ph = Fraction(sum(wh.get(x, 0) for x in up), zh)
    return False, {"coords": coords, "upset": up, "low_prob": str(pl), "high_prob": str(ph)}, 1 << d


def check_domination(domain: FaceGraph, bc_low, bc_high, flow_cap: int = FLOW_CAP, cap: int = DEFAULT_CAP,
                     low_domain: FaceGraph | None = None, high_domain: FaceGraph | None = None) -> CheckReport:
    """Decide whether the red marginal under ``bc_low`` is dominated by the one under ``bc_high``.

    Measures may live on larger graphs (``low_domain``/``high_domain``); both
    are then compared on the faces of ``domain``.
    """
    faces = domain.faces
    low = _marginal(low_domain or domain, bc_low, faces, cap)
    high = _marginal(high_domain or domain, bc_high, faces, cap)
    holds, witness, nodes = dominates(low, high, flow_cap)
    cex = None
    if not holds:
        cex = {"kind": "domination", **witness}
        if "coords" in witness:
            cex["faces"] = [faces[i].key() for i in witness["coords"]]
    name = lambda b: getattr(b, "kind", "table")
    return CheckReport("domination", domain.name, holds, nodes, cex,
                       {"low": name(bc_low), "high": name(bc_high)})


def replay_domination(domain: FaceGraph, bc_low, bc_high, cex: dict, cap: int = DEFAULT_CAP) -> bool:
    """The witness set is increasing and strictly more likely under the lower measure."""
    faces = domain.faces
    low = _marginal(domain, bc_low, faces, cap)
    high = _marginal(domain, bc_high, faces, cap)
    coords = cex["coords"]
    up = set(cex["upset"])
    d = len(coords)
    if any(x in up and (x | (1 << b)) not in up for x in range(1 << d) for b in range(d)):
        return False

    def prob(dist):
        hit = sum(w for k, w in dist.items() if sum(1 << b for b, i in enumerate(coords) if k[i] > 0) in up)
        return Fraction(hit, sum(dist.values()))

    return prob(low) > prob(high)


# ---------------------------------------------------------------- monochrome dichotomy

def check_monochrome(region, blue_ends: str = "faces") -> CheckReport:
    """Red horizontal double crossing or blue vertical double crossing, for every coherent pair.

    Red crossings end on non-corner side vertices.  Blue crossings end on
    vertices touching the top and bottom face layers (``blue_ends="faces"``),
    which is what the duality argument produces; ``"sides"`` applies the red
    rule to blue as well, and the failure count under that rule is always
    reported in the statistics.

    For an annulus: no red double circuit forces a blue double path from the
    hole to the outer boundary.
    """
    stats: dict = {}
    host = region.outer if isinstance(region, Annulus) else region
    if host.size > MONO_CAP:
        raise CapExceeded(f"{host.size} faces are too many for an exhaustive pair scan")
    if isinstance(region, Annulus):
        host = region.outer
        red_plan = circuit_plan(region, host)
        blue_plan = hole_to_outside_plan(region, host)
        name = f"annulus:{region.inner_radius},{host.name}"
    else:
        host = region
        red_plan = crossing_plan(region, "h", "double")
        blue_plan = crossing_plan(region, "v", "double", ends=blue_ends)
        name = region.name
        stats["blue_ends"] = blue_ends
        if blue_ends != "sides":
            strict = run_dichotomy(host.size, host.dual_edges, red_plan, crossing_plan(region, "v", "double"))
            stats["strict_failures"] = int(strict[1])
    total, fails, bad_red, bad_blue = run_dichotomy(host.size, host.dual_edges, red_plan, blue_plan)
    cex = None
    if fails:
        red = np.where((int(bad_red) >> np.arange(host.size)) & 1, P, M).astype(np.int8)
        cex = {"kind": "monochrome", "red": _spin_map(host, red), "blue": _spin_map(host, bad_blue)}
    stats["failures"] = int(fails)
    return CheckReport("monochrome", name, fails == 0, int(total), cex, stats)


# ---------------------------------------------------------------- crossing bounds

def par_with_collar(n: int) -> tuple[Domain, Domain]:
    """Par_{n,n} and the domain made of it and its outer boundary."""
    from ..lattice import build_parallelogram

    par = build_parallelogram(n, n)
    big = validate_domain(par.face_set | par.outer_boundary, name=f"par:{n},{n}+collar")
    return par, big


def simple_crossing_bound(n: int, cap: int = DEFAULT_CAP) -> dict:
    """Conditional simple-p vertical crossing probability for every admissible outside configuration."""
    par, big = par_with_collar(n)
    plan = crossing_plan(par, "v", "simple", big)
    tb = par.side_faces["Top"] | par.side_faces["Bottom"]
    fixed_p = sorted(tb)
    sweep = sorted(f for f in big.faces if f not in par.interior_faces and f not in tb)
    values = {}
    for bits in range(1 << len(sweep)):
        red = {f: P for f in fixed_p}
        red.update({f: (P if bits >> i & 1 else M) for i, f in enumerate(sweep)})
        t = red_table(big, pinned(red), cap)
        hit = batch(plan, t.reds, P)
        values[bits] = t.probability_mask(hit)
    all_m = values[0]
    lo = min(values.values())
    return {"n": n, "zeta_count": len(values), "min": lo, "all_m": all_m, "all_m_is_min": all_m == lo}


def double_crossing_bound(n: int, collar: bool, cap: int = DEFAULT_CAP) -> Fraction:
    par, big = par_with_collar(n)
    dom = big if collar else par
    plan = crossing_plan(par, "h", "double", dom)
    t = red_table(dom, RED_PM, cap)
    return t.probability_mask(batch(plan, t.reds, P))


def check_crossing_bounds(n: int, cap: int = DEFAULT_CAP) -> CheckReport:
    simple = simple_crossing_bound(n, cap)
    dbl = {"par": double_crossing_bound(n, False, cap), "collar": double_crossing_bound(n, True, cap)}
    ok_simple = simple["min"] >= Fraction(1, 3)
    ok_double = all(v >= Fraction(1, 4) for v in dbl.values())
    passed = ok_simple and ok_double
    cex = None
    if not passed:
        cex = {"kind": "crossing", "simple_min": str(simple["min"]), "double": {k: str(v) for k, v in dbl.items()}}
    stats = {"simple_min": str(simple["min"]), "simple_all_m": str(simple["all_m"]),
             "all_m_is_min": simple["all_m_is_min"], "double_par": str(dbl["par"]),
             "double_collar": str(dbl["collar"])}
    return CheckReport("crossing_bounds", f"par:{n},{n}", passed, simple["zeta_count"] + 2, cex, stats)


# ---------------------------------------------------------------- cylinder identity

def cylinder_identity(m: int = 3, n: int = 2, interior_seam_only: bool = False) -> dict:
    """Compare the rectangle Dobrushin measure with the conditioned cylinder measure.

    Returns the total-variation distance between the two pair measures and
    between their red marginals, in exact arithmetic.  With
    ``interior_seam_only`` the conditioning skips seam faces of the top and
    bottom rows.
    """
    cyl = CylDomain(m, n)
    rect = build_rectangle(m, n)
    seam = rect.side_inner_faces["Right"] | rect.side_inner_faces["Left"]
    cons = compile_bc(cyl, DOBRUSHIN_CYL)
    conflict = []
    for f in seam:
        if interior_seam_only and f in cyl.inner_boundary:
            continue
        i = cyl.index[f]
        if cons.red_fixed[i] == M:
            conflict.append(f.key())
        cons.red_fixed[i] = P if cons.red_fixed[i] == 0 else cons.red_fixed[i]
    try:
        cyl_pairs = enumerate_pairs(cyl, cons).configs
    except EmptySupport:
        cyl_pairs = []
    rect_pairs = enumerate_pairs(rect, DOBRUSHIN).configs
    # both graphs index faces in the same sorted order
    assert cyl.faces == rect.faces
    p = _normalise({c.key(): 1 for c in cyl_pairs}) if cyl_pairs else {}
    q = _normalise({c.key(): 1 for c in rect_pairs})
    tv_pairs = sum(abs(p.get(k, 0) - q.get(k, 0)) for k in set(p) | set(q)) / 2 if p else Fraction(1)
    pr: dict = {}
    qr: dict = {}
    for c in cyl_pairs:
        pr[c.red.tobytes()] = pr.get(c.red.tobytes(), 0) + 1
    for c in rect_pairs:
        qr[c.red.tobytes()] = qr.get(c.red.tobytes(), 0) + 1
    pr, qr = (_normalise(pr) if pr else {}), _normalise(qr)
    tv_red = sum(abs(pr.get(k, 0) - qr.get(k, 0)) for k in set(pr) | set(qr)) / 2 if pr else Fraction(1)
    return {"m": m, "n": n, "cylinder_pairs": len(cyl_pairs), "rectangle_pairs": len(rect_pairs),
            "tv_pairs": tv_pairs, "tv_red": tv_red, "conflicting_faces": sorted(conflict)}
