"""Command-line front end: ``loopo2 verify|enumerate|scan|sample``.

Exit codes: 0 success, 1 check or run failure, 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import dataclass

from .config import BCError, BoundaryCondition, ConfigError, RED_MM, RED_PM, parse_bc
from .exact import (CapExceeded, check_bijection, check_crossing_bounds, check_domination, check_fkg_lattice,
                    check_four_arc_bounds, check_monochrome, check_spatial_markov, cylinder_identity,
                    enumerate_heights, enumerate_loops, enumerate_pairs)
from .exact.enumerate import DEFAULT_CAP, EDGE_CAP, loop_weight
from .exact.instances import (fkg_connected_blue, fkg_negative_control, four_arc_extended, four_arc_instance,
                              four_arc_wider, markov_instances)
from .lattice import DomainError, build_annulus, build_ball, build_parallelogram, build_rectangle, parse_domain
from .config import pinned, P
from .mcmc import ChainParams, representation, run_chain, spool
from .observe import (CrossingDouble, HeightDiffSq, LoopSurrounding, SurroundLoopCount, alpha_hat, ball, estimate)

SUITES = ("all", "bijection", "fkg", "markov", "monochrome", "domination", "fourarc", "crossing")
SCAN_KINDS = ("variance", "loopcount", "circuit", "crossing", "alpha")
SCAN_HEADER = ["event", "n", "bc", "rho", "estimate", "stderr", "count", "seed"]
DEFAULTS = {"domain": "ball:1", "bc": "free", "seed": 0, "sweeps": 10000, "burnin": 1000, "thin": 1, "chains": 1,
            "workers": 1, "out": None, "format": "json", "cap": None, "suite": "all", "what": "heights",
            "kind": "variance", "sizes": None, "rho": None}
INTS = ("seed", "sweeps", "burnin", "thin", "chains", "workers", "cap")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- configuration

def read_config(path) -> dict:
    """Flat ``key=value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path) as fh:
        for no, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{no}: expected key=value")
            k, v = (x.strip() for x in line.split("=", 1))
            k = k.replace("-", "_")
            if k not in DEFAULTS:
                raise UsageError(f"{path}:{no}: unknown key {k!r}")
            out[k] = v
    return out


@dataclass(frozen=True)
class RunConfig:
    command: str
    domain: str
    bc: str
    seed: int
    sweeps: int
    burnin: int
    thin: int
    chains: int
    workers: int
    out: str | None
    format: str
    cap: int | None
    suite: str
    what: str
    kind: str
    sizes: tuple
    rho: float | None

    def chain_params(self) -> list[ChainParams]:
        base = ChainParams(self.sweeps, self.burnin, self.thin, self.seed)
        return [base.with_chain(i) for i in range(self.chains)]


def resolve(args: argparse.Namespace) -> RunConfig:
    merged = dict(DEFAULTS)
    if getattr(args, "config", None):
        merged.update(read_config(args.config))
    for k in DEFAULTS:
        v = getattr(args, k, None)
        if v is not None:
            merged[k] = v
    try:
        for k in INTS:
            if merged[k] is not None:
                merged[k] = int(merged[k])
        if merged["rho"] is not None:
            merged["rho"] = float(merged["rho"])
        sizes = merged["sizes"]
        if isinstance(sizes, str):
            sizes = tuple(int(x) for x in sizes.split(",") if x.strip())
        merged["sizes"] = tuple(sizes or ())
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if merged["format"] not in ("json", "csv"):
        raise UsageError(f"unknown format {merged['format']!r}")
    if merged["suite"] not in SUITES:
        raise UsageError(f"unknown suite {merged['suite']!r}")
    if merged["kind"] not in SCAN_KINDS:
        raise UsageError(f"unknown scan kind {merged['kind']!r}")
    if merged["chains"] < 1 or merged["workers"] < 1:
        raise UsageError("chains and workers must be >= 1")
    return RunConfig(command=args.command, **merged)


def _bc(name: str) -> BoundaryCondition:
    if name == "fourarc":
        return BoundaryCondition("fourarc")
    return parse_bc(name)


def _emit(text: str, path) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- verify

def _case(report, expect: bool = True) -> dict:
    out = report.to_json() if hasattr(report, "to_json") else dict(report)
    out["expected"] = "pass" if expect else "fail"
    out["ok"] = bool(out["pass"]) == expect
    return out


def suite_bijection():
    return [_case(check_bijection(d)) for d in (build_ball(1), build_ball(2), build_parallelogram(2, 2))]


def fkg_cases():
    """(domain, conditioning, expected) for the FKG suite."""
    small = [build_ball(1), build_parallelogram(1, 1), build_parallelogram(2, 2), build_parallelogram(2, 3),
             build_parallelogram(1, 5)]
    cases = [(d, BoundaryCondition("free"), True) for d in small]
    cases += [(d, parse_bc(k), True) for d in (build_ball(2), build_parallelogram(3, 3)) for k in ("pp", "mm")]
    b1 = build_ball(1)
    cases.append((b1, pinned(red={(0, 0): P}), True))
    cases.append((build_parallelogram(2, 2), pinned(red={(0, 0): P, (2, 2): -1}), True))
    cases.append((*fkg_connected_blue(), True))
    cases.append((*fkg_negative_control(), False))
    return cases


def suite_fkg():
    return [_case(check_fkg_lattice(d, bc), ok) for d, bc, ok in fkg_cases()]


def suite_markov():
    out = []
    for small, big, tau_r, tau_b, _ in markov_instances():
        out.append(_case(check_spatial_markov(small, big, tau_r)))
        out.append(_case(check_spatial_markov(small, big, tau_r, tau_b)))
    inst = four_arc_instance()
    out.append(_case(check_spatial_markov(inst.domain, inst.outer, inst.tau(), rhs=inst.bc), False))
    cyl = cylinder_identity()
    out.append(_case({"check": "cylinder_identity", "domain": "cyl:3,2", "pass": cyl["tv_pairs"] == 0,
                      "stats": {k: str(v) for k, v in cyl.items()}}))
    return out


def suite_fourarc():
    inst = four_arc_instance()
    return [
        _case(check_four_arc_bounds(inst.domain, inst.outer, inst.tau(), inst.vertices)),
        _case(check_domination(inst.domain, four_arc_wider(), inst.bc)),
        _case(check_domination(inst.domain, inst.bc, inst.bc, low_domain=four_arc_extended())),
        _case(check_domination(inst.domain, inst.bc, four_arc_wider()), False),
    ]


DOMINATION_CHAIN = ("mm", "mp", "pm", "pp")


def domination_domains():
    return [build_ball(1), build_ball(2), build_parallelogram(2, 2), build_parallelogram(3, 3),
            build_parallelogram(3, 4), build_parallelogram(4, 4), build_parallelogram(4, 5), build_rectangle(2, 2)]


def suite_domination():
    out = []
    for d in domination_domains():
        for lo, hi in zip(DOMINATION_CHAIN, DOMINATION_CHAIN[1:]):
            out.append(_case(check_domination(d, parse_bc(lo), parse_bc(hi))))
    out.append(_case(check_domination(build_ball(1), parse_bc("pp"), parse_bc("mm")), False))
    return out


def suite_monochrome():
    regions = [build_parallelogram(m, n) for m in (1, 2, 3) for n in (1, 2, 3)]
    return [_case(check_monochrome(r)) for r in regions] + [_case(check_monochrome(build_annulus(1, 2)))]


def suite_crossing():
    return [_case(check_crossing_bounds(n)) for n in (1, 2, 3)]


SUITE_FNS = {"bijection": suite_bijection, "fkg": suite_fkg, "markov": suite_markov, "fourarc": suite_fourarc,
             "domination": suite_domination, "monochrome": suite_monochrome, "crossing": suite_crossing}


def cmd_verify(cfg: RunConfig) -> int:
    names = [s for s in SUITES[1:]] if cfg.suite == "all" else [cfg.suite]
    report = {}
    ok = True
    for name in names:
        t = time.perf_counter()
        cases = SUITE_FNS[name]()
        good = all(c["ok"] for c in cases)
        ok &= good
        report[name] = {"ok": good, "seconds": round(time.perf_counter() - t, 3), "cases": cases}
        print(f"{name}: {'ok' if good else 'FAILED'} ({len(cases)} checks)", file=sys.stderr)
    text = json.dumps({"ok": ok, "suites": report}, indent=2, default=str) + "\n"
    if cfg.out:
        _emit(text, cfg.out)
    return 0 if ok else 1


# ---------------------------------------------------------------- enumerate

def cmd_enumerate(cfg: RunConfig) -> int:
    domain = parse_domain(cfg.domain)
    if cfg.what == "heights":
        recs = enumerate_heights(domain, cfg.cap or DEFAULT_CAP)
        rows = [(1, h.to_json()) for h in recs]
    elif cfg.what == "loops":
        recs = enumerate_loops(domain, cfg.cap or EDGE_CAP)
        rows = [(int(loop_weight(w)), w.to_json()) for w in recs]
    elif cfg.what == "pairs":
        recs = enumerate_pairs(domain, _bc(cfg.bc), cfg.cap or DEFAULT_CAP).configs
        rows = [(1, p.to_json()) for p in recs]
    else:
        raise UsageError(f"unknown enumeration target {cfg.what!r}")
    Z = sum(w for w, _ in rows)
    if cfg.format == "json":
        text = json.dumps({"domain": cfg.domain, "what": cfg.what, "bc": cfg.bc, "count": len(rows), "Z": Z,
                           "records": [{"weight": w, "config": c} for w, c in rows]}, indent=1) + "\n"
    else:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["index", "weight", "config"])
        for i, (w, c) in enumerate(rows):
            wr.writerow([i, w, json.dumps(c, separators=(",", ":"))])
        text = buf.getvalue()
    _emit(text, cfg.out)
    print(f"{cfg.what} on {cfg.domain}: {len(rows)} records, Z = {Z}", file=sys.stderr)
    return 0


# ---------------------------------------------------------------- scan

def scan_setup(kind: str, n: int, rho: float | None):
    """(domain, bc, event, rho reported) for one scan row."""
    if kind == "variance":
        return build_ball(n), parse_bc("free"), HeightDiffSq(name="variance"), None
    if kind == "loopcount":
        return build_ball(n), parse_bc("free"), SurroundLoopCount(name="loopcount"), None
    if kind == "circuit":
        if n % 2 or n < 2:
            raise ConfigError("circuit scan needs even n >= 2")
        r = rho if rho is not None else 2.0
        if r < 1:
            raise ConfigError("circuit scan needs rho >= 1")
        ev = LoopSurrounding(ball(n // 2), ball(n), name="circuit")
        return build_ball(int(round(r * n))), parse_bc("free"), ev, r
    if kind == "crossing":
        par = build_parallelogram(n, n)
        return par, RED_PM, CrossingDouble(par, "h", "red", P, name="crossing"), None
    raise ConfigError(f"unknown scan kind {kind!r}")


def scan_rows(cfg: RunConfig) -> list[dict]:
    rows = []
    chains = cfg.chain_params()
    for n in cfg.sizes:
        t = time.perf_counter()
        if cfg.kind == "alpha":
            rho = cfg.rho if cfg.rho is not None else 4.0
            est, se = alpha_hat(n, rho, chains, cfg.workers)
            count, tau, warning, bc = sum(p.n_samples for p in chains), float("nan"), "", RED_MM.kind
        else:
            domain, bcv, ev, rho = scan_setup(cfg.kind, n, cfg.rho)
            e = estimate(domain, bcv, [ev], chains, cfg.workers)[0]
            est, se, count, tau, warning, bc = e.mean, e.stderr, e.count, e.tau, e.warning, bcv.kind
        rows.append({"event": cfg.kind, "n": n, "bc": bc, "rho": "" if rho is None else rho, "estimate": est,
                     "stderr": se, "count": count, "seed": cfg.seed, "log_n": math.log(n), "tau": tau,
                     "ess": count / tau if tau == tau and tau > 0 else float("nan"),
                     "seconds": round(time.perf_counter() - t, 3), "warning": warning})
    return rows


def format_scan(rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        # wall time is the one non-reproducible field; keep it out of the file
        return json.dumps([{k: v for k, v in r.items() if k != "seconds"} for r in rows], indent=1) + "\n"
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(SCAN_HEADER)
    for r in rows:
        wr.writerow([r["event"], r["n"], r["bc"], r["rho"], repr(float(r["estimate"])), repr(float(r["stderr"])),
                     r["count"], r["seed"]])
    return buf.getvalue()


def cmd_scan(cfg: RunConfig) -> int:
    if not cfg.sizes:
        raise UsageError("empty size list")
    if list(cfg.sizes) != sorted(set(cfg.sizes)):
        raise UsageError("sizes must be strictly ascending")
    rows = scan_rows(cfg)
    _emit(format_scan(rows, "csv" if cfg.format == "csv" else "json"), cfg.out)
    for r in rows:
        flag = f" WARNING {r['warning']}" if r["warning"] else ""
        print(f"{r['event']} n={r['n']}: {r['estimate']:.5g} +- {r['stderr']:.2g} "
              f"(ess {r['ess']:.0f}, {r['seconds']} s){flag}", file=sys.stderr)
    return 0


# ---------------------------------------------------------------- sample

def cmd_sample(cfg: RunConfig) -> int:
    if len(cfg.chain_params()) != 1 and cfg.out:
        raise UsageError("sample spools a single chain; use --chains 1")
    domain = parse_domain(cfg.domain)
    if hasattr(domain, "outer") and not hasattr(domain, "faces"):
        raise DomainError("sampling needs a domain, not an annulus")
    bc = _bc(cfg.bc)
    kind = representation(domain, bc)
    params = cfg.chain_params()[0]
    stream = run_chain(domain, bc, params)
    if cfg.out:
        count = spool(stream, cfg.out)
    else:
        count = sum(1 for _ in stream)
    print(json.dumps({"domain": cfg.domain, "bc": cfg.bc, "representation": kind, "samples": count,
                      "faces": domain.size, "seed": cfg.seed}))
    return 0


# ---------------------------------------------------------------- entry point

COMMANDS = {"verify": cmd_verify, "enumerate": cmd_enumerate, "scan": cmd_scan, "sample": cmd_sample}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="loopo2", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key=value file; flags override it")
        p.add_argument("--domain", help="ball:n | par:m,n | rect:m,n | cyl:m,n | annulus:n,N")
        p.add_argument("--bc", help="free|pp|mm|pm|mp|dobrushin|dobrushin-cyl|fourarc")
        for k in ("seed", "sweeps", "burnin", "thin", "chains", "workers", "cap"):
            p.add_argument(f"--{k}")
        p.add_argument("--out")
        p.add_argument("--format")
        p.add_argument("--suite")
        p.add_argument("--what", help="heights|loops|pairs")
        p.add_argument("--kind")
        p.add_argument("--sizes", help="comma-separated, ascending")
        p.add_argument("--rho")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve(args)
        return COMMANDS[cfg.command](cfg)
    except (UsageError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (CapExceeded, BCError, DomainError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
