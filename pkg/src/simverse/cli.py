"""Command-line front door: reproducible experiments over the library.

Exit codes: 0 when every reported check passes, 1 when any verification
check fails, 2 on usage or configuration trouble (bad flags, malformed
inputs, fuel exhaustion). Fuel exhaustion is a budget statement and is
reported as its own status, never as a verification failure.

Environment: SIMVERSE_FUEL sets the default fuel; SIMVERSE_OUT is the
directory that relative --out report paths (and --save directories) are
resolved against.
"""

import argparse
import os
import sys
from fractions import Fraction

from . import graph, meta, report, selfsim, simulate, universe, vm
from .bits import (
    beq,
    bits,
    bits_to_nat,
    decode_pair,
    encode_pair,
    encode_tuple,
    length,
    nat_to_bits,
    to01,
)
from .errors import ExactnessViolation, OutOfFuel, SimverseError

DEFAULT_FUEL = 10 ** 6

PASS, FAIL, CONFIG = 0, 1, 2


def _fuel(args):
    if args.fuel is not None:
        return int(args.fuel)
    return int(os.environ.get("SIMVERSE_FUEL", DEFAULT_FUEL))


def _parse01(s):
    if s == "-":
        return ""
    if set(s) - {"0", "1"}:
        raise ValueError(f"not a bit string: {s!r}")
    return s


def _parse_grid(s):
    return tuple(int(t) for t in s.split(","))


def _load_program(args):
    if getattr(args, "code", None) is not None:
        text = _parse01(args.code)
    elif getattr(args, "program", None) is not None:
        with open(args.program) as f:
            text = _parse01("".join(f.read().split()))
    else:
        raise ValueError("need --code or --program")
    return vm.decode_program(text)


def _w_list(u, w0):
    if w0 == "all":
        return [format(v, f"0{u.w_width}b") for v in range(2 ** u.w_width)]
    w = _parse01(w0)
    if len(w) != u.w_width:
        raise ValueError(f"w0 must have width {u.w_width}")
    return [w]


def _verdict(failed, starved):
    if failed:
        return FAIL
    return CONFIG if starved else PASS


# ---------------------------------------------------------------------------
# subcommands


def _cmd_codec(args):
    rep = report.Report()
    if args.action == "pair":
        rep.raw(to01(encode_pair(_parse01(args.values[0]), _parse01(args.values[1]))) or "-")
    elif args.action == "unpair":
        a, b = decode_pair(_parse01(args.values[0]))
        rep.line("unpair", a=report.val(a), b=report.val(b))
    elif args.action == "tuple":
        rep.raw(to01(encode_tuple([_parse01(v) for v in args.values])) or "-")
    elif args.action == "nat":
        rep.raw(to01(nat_to_bits(int(args.values[0]))) or "-")
    else:
        rep.raw(str(bits_to_nat(_parse01(args.values[0]))))
    report.emit(rep, args.out)
    return PASS


def _cmd_run(args):
    fuel = _fuel(args)
    p = _load_program(args)
    x = _parse01(args.input)
    rep = report.Report()
    rep.line("config", cmd="run", input=report.val(x), fuel=fuel, seed=args.seed)
    rep.line("program", size=length(p.code), digest=vm.code_digest(p))
    r = vm.run(p, x, fuel)
    if r.halted:
        rep.line("run", status="halted", ticks=r.ticks, output=report.val(r.output))
    else:
        rep.line("run", status="out_of_fuel", ticks=r.ticks)
    report.emit(rep, args.out)
    return PASS if r.halted else CONFIG


def _cmd_fix(args):
    fuel = _fuel(args)
    q = _load_program(args)
    x = _parse01(args.input)
    f = meta.fix(q)
    rep = report.Report()
    rep.line("config", cmd="fix", input=report.val(x), fuel=fuel, seed=args.seed)
    rep.line("program", size=length(q.code), fixed_size=length(f.code))
    lhs = vm.run(f, x, fuel)
    rhs = vm.run(q, encode_pair(f.code, x), fuel)
    if not (lhs.halted and rhs.halted):
        rep.line("fix", status="out_of_fuel")
        report.emit(rep, args.out)
        return CONFIG
    exact = beq(lhs.output, rhs.output)
    rep.line(
        "fix",
        status="halted",
        law_exact=str(exact).lower(),
        ticks=lhs.ticks,
        output=report.val(lhs.output),
    )
    report.emit(rep, args.out)
    return PASS if exact else FAIL


def _cmd_universe(args):
    fuel = _fuel(args)
    u = universe.load_universe(args.universe)
    p = (
        _load_program(args)
        if (args.code is not None or args.program is not None)
        else vm.program([])
    )
    grid = _parse_grid(args.grid) if args.grid else (int(args.dt),)
    rep = report.Report()
    rep.line(
        "config",
        cmd="universe",
        universe=args.universe,
        grid=",".join(str(t) for t in grid),
        w0=args.w0,
        check_g=str(args.check_g).lower(),
        fuel=fuel,
        seed=args.seed,
    )
    failed = False
    g = universe.g_program(u) if args.check_g else None
    for dt in grid:
        for w0 in _w_list(u, args.w0):
            w, m = universe.evolve(u, dt, w0, p)
            kv = {"dt": dt, "w0": w0, "w": report.val(w), "m": report.val(m)}
            if g is not None:
                y = encode_tuple([nat_to_bits(dt), w0, vm.enc(vm.fresh(p))])
                r = vm.run(g, y, fuel)
                ok = r.halted and beq(r.output, encode_tuple((w, m)))
                kv["g_exact"] = str(bool(ok)).lower()
                failed = failed or not ok
            rep.line("state", **kv)
    rep.line("summary", ok=str(not failed).lower())
    report.emit(rep, args.out)
    return FAIL if failed else PASS


def _cmd_simulate(args):
    fuel = _fuel(args)
    host = universe.load_universe(args.host)
    target = universe.load_universe(args.target)
    grid = _parse_grid(args.grid)
    probes = graph.probe_programs()
    domain = [
        (dt, w0, p)
        for dt in grid
        for w0 in _w_list(target, args.w0)
        for p in probes
    ]
    rep = report.Report()
    rep.line(
        "config",
        cmd="simulate",
        host=args.host,
        target=args.target,
        grid=args.grid,
        w0=args.w0,
        fuel=fuel,
        seed=args.seed,
    )
    w = simulate.build_sim_witness(host, target, domain, fuel)
    chk = simulate.check_sim_witness(host, target, w)
    verdict = dict(chk.entries)
    failed = False
    for key in w.domain:
        dt, w0, pc = key
        status = verdict.get(key, "pass")
        failed = failed or status != "pass"
        rep.line(
            "entry",
            dt=dt,
            w0=w0,
            pc=report.val(pc),
            tau=w.tau[key],
            status=report.token(status),
        )
    for key, reason in w.dropped:
        rep.line(
            "entry",
            dt=key[0],
            w0=key[1],
            pc=report.val(key[2]),
            status="dropped",
            detail=report.token(reason),
        )
    rep.line(
        "summary",
        ok=str(chk.ok and not failed).lower(),
        entries=len(w.domain),
        dropped=len(w.dropped),
    )
    report.emit(rep, args.out)
    return _verdict(failed or not chk.ok, bool(w.dropped))


def _cmd_selfsim(args):
    fuel = _fuel(args)
    u = universe.load_universe(args.universe)
    dt = int(args.dt)
    rep = report.Report()
    rep.line(
        "config",
        cmd="selfsim",
        universe=args.universe,
        dt=dt,
        w0=args.w0,
        sweep=str(args.sweep).lower(),
        grid=args.grid or "-",
        fuel=fuel,
        seed=args.seed,
    )
    n_star = selfsim.self_sim_program(u, dt)
    rep.line("program", dt=dt, size=length(n_star.code), digest=vm.code_digest(n_star))
    failed = starved = False
    for w0 in _w_list(u, args.w0):
        try:
            r = selfsim.verify_self_sim(u, dt, w0, fuel)
            rep.line(
                "selfsim",
                dt=dt,
                w0=w0,
                exact=str(r.exact).lower(),
                tau=r.tau,
                min_delay=str(r.tau > dt).lower(),
            )
            failed = failed or not (r.exact and r.tau > dt)
        except ExactnessViolation:
            rep.line("selfsim", dt=dt, w0=w0, exact="false")
            failed = True
        except OutOfFuel:
            rep.line("selfsim", dt=dt, w0=w0, status="out_of_fuel")
            starved = True
    if args.sweep:
        for e in selfsim.min_delay_sweep(u, _parse_grid(args.grid or "1,2,3,4"), fuel):
            rep.line(
                "sweep",
                dt=e.dt,
                tau=e.tau,
                ratio=e.ratio,
                note=report.token(e.note),
            )
            failed = failed or e.tau <= e.dt
    rep.line("summary", ok=str(not failed).lower())
    report.emit(rep, args.out)
    return _verdict(failed, starved)


def _cmd_nested(args):
    u = universe.load_universe(args.universe)
    w0 = _w_list(u, args.w0)[0]
    rep = report.Report()
    rep.line(
        "config",
        cmd="nested",
        universe=args.universe,
        w0=w0,
        ticks=int(args.ticks),
        seed=args.seed,
    )
    trace = selfsim.nested_self_sim(u, w0, int(args.ticks))
    for i, (t, snap, d) in enumerate(
        zip(trace.times, trace.snapshots, trace.density_estimates), start=1
    ):
        rep.line(
            "round",
            i=i,
            t=t,
            snapshot=report.val(snap),
            density=d,
            below_one=str(d < 1).lower(),
        )
    est = selfsim.density_estimate(trace)
    increasing = all(a < b for a, b in zip(trace.times, trace.times[1:]))
    ok = increasing and all(d < 1 for d in trace.density_estimates)
    rep.line(
        "summary",
        rounds=len(trace.times),
        strictly_increasing=str(increasing).lower(),
        density=est.value,
        ok=str(ok).lower(),
    )
    report.emit(rep, args.out)
    return PASS if ok else FAIL


def _graph_report(rep, g):
    for name, u in g.nodes:
        rep.line("node", name=name, w_width=u.w_width, divisor=u.clock_divisor)
    for (s, d) in sorted(g.edges):
        e = g.edges[(s, d)]
        rep.line(
            "edge",
            src=s,
            dst=d,
            kind=e.witness.kind,
            entries=len(e.witness.domain),
            max_ratio=e.stats.max_ratio,
            slope="na" if e.stats.slope is None else f"{e.stats.slope:.6f}",
            flags=",".join(e.flags) or "-",
        )
    for (s, d), reason in sorted(g.failures.items()):
        rep.line("failure", src=s, dst=d, reason=report.token(reason))


def _cmd_graph(args):
    fuel = _fuel(args)
    rep = report.Report()
    if args.action == "build":
        names = args.names.split(",") if args.names else None
        files = args.universes
        if names is None:
            names = [os.path.splitext(os.path.basename(f))[0] for f in files]
        if len(names) != len(files):
            raise ValueError("--names must match the universe file count")
        nodes = [(n, universe.load_universe(f)) for n, f in zip(names, files)]
        grid = _parse_grid(args.grid)
        rep.line(
            "config",
            cmd="graph.build",
            nodes=",".join(names),
            grid=args.grid,
            fuel=fuel,
            seed=args.seed,
        )
        g = graph.build_graph(nodes, grid, fuel)
        _graph_report(rep, g)
        rep.line("summary", edges=len(g.edges), failures=len(g.failures))
        if args.save:
            graph.save_graph(g, report.resolve_out(args.save))
        report.emit(rep, args.out)
        return PASS
    g = graph.load_graph(args.load)
    if args.action == "filter":
        if args.cap is not None:
            g2 = graph.filter_time_bounded(g, float(args.cap))
            mode = f"time_bounded_cap_{args.cap}"
        else:
            g2 = graph.filter_time_ordered(g)
            mode = "time_ordered"
        rep.line("config", cmd="graph.filter", mode=mode, seed=args.seed)
        _graph_report(rep, g2)
        rep.line("summary", kept=len(g2.edges), dropped=len(g.edges) - len(g2.edges))
        if args.save:
            graph.save_graph(g2, report.resolve_out(args.save))
        report.emit(rep, args.out)
        return PASS
    if args.action == "compose":
        ab = tuple(args.ab.split(","))
        bc = tuple(args.bc.split(","))
        rep.line(
            "config",
            cmd="graph.compose",
            ab=args.ab,
            bc=args.bc,
            fuel=fuel,
            seed=args.seed,
        )
        bw = g.edges[bc].witness
        lo = min(k[0] for k in bw.domain)
        keys = tuple(k for k in bw.domain if k[0] == lo)
        w = graph.compose_edges(g, ab, bc, fuel, keys)
        chk = simulate.check_sim_witness(
            dict(g.nodes)[ab[0]], dict(g.nodes)[bc[1]], w
        )
        verdict = dict(chk.entries)
        for key in w.domain:
            rep.line(
                "entry",
                dt=key[0],
                w0=key[1],
                tau=w.tau[key],
                status=report.token(verdict.get(key, "pass")),
            )
        for key, reason in w.dropped:
            rep.line("entry", dt=key[0], w0=key[1], status="dropped", detail=report.token(reason))
        rep.line("summary", ok=str(chk.ok and not w.dropped).lower(), entries=len(w.domain))
        report.emit(rep, args.out)
        return _verdict(not chk.ok, bool(w.dropped))
    rep.raw(graph.export_dot(g))
    report.emit(rep, args.out)
    return PASS


# ---------------------------------------------------------------------------
# parser


def _add_common(sp):
    sp.add_argument("--fuel", type=int, default=None, help="tick budget per run")
    sp.add_argument("--out", default=None, help="also write the report to this file")
    sp.add_argument("--seed", type=int, default=0, help="seed echoed into the config line")


def _build_parser():
    ap = argparse.ArgumentParser(prog="simverse", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("codec", help="prefix-free pair and tuple codes")
    p.add_argument("action", choices=["pair", "unpair", "tuple", "nat", "unnat"])
    p.add_argument("values", nargs="+")
    _add_common(p)
    p.set_defaults(func=_cmd_codec)

    p = sub.add_parser("run", help="run a machine program")
    p.add_argument("--code", help="program code as 01 text")
    p.add_argument("--program", help="file holding program code as 01 text")
    p.add_argument("--input", default="-", help="input bit string (- for empty)")
    _add_common(p)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("fix", help="recursion-theorem fixed point of a program")
    p.add_argument("--code", help="program code as 01 text")
    p.add_argument("--program", help="file holding program code as 01 text")
    p.add_argument("--input", default="-")
    _add_common(p)
    p.set_defaults(func=_cmd_fix)

    p = sub.add_parser("universe", help="evolve a universe; optionally check its in-machine map")
    p.add_argument("--universe", required=True)
    p.add_argument("--dt", type=int, default=1)
    p.add_argument("--grid", help="comma list of dts (overrides --dt)")
    p.add_argument("--w0", default="all")
    p.add_argument("--code", help="machine program as 01 text (default: empty program)")
    p.add_argument("--program", help="file holding the machine program")
    p.add_argument("--check-g", action="store_true", dest="check_g")
    _add_common(p)
    p.set_defaults(func=_cmd_universe)

    p = sub.add_parser("simulate", help="build and check a cross-universe witness")
    p.add_argument("--host", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--grid", default="1,2")
    p.add_argument("--w0", default="all")
    _add_common(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("selfsim", help="self-simulation experiment and delay sweep")
    p.add_argument("--universe", required=True)
    p.add_argument("--dt", type=int, required=True)
    p.add_argument("--w0", default="all")
    p.add_argument("--sweep", action="store_true")
    p.add_argument("--grid", help="comma list of dts for --sweep (default 1,2,3,4)")
    _add_common(p)
    p.set_defaults(func=_cmd_selfsim)

    p = sub.add_parser("nested", help="greedy nested self-simulation trace")
    p.add_argument("--universe", required=True)
    p.add_argument("--w0", default="all")
    p.add_argument("--ticks", type=int, default=4000)
    _add_common(p)
    p.set_defaults(func=_cmd_nested)

    p = sub.add_parser("graph", help="witnessed simulation graph operations")
    p.add_argument("action", choices=["build", "filter", "compose", "export"])
    p.add_argument("--universes", nargs="*", default=[], help="universe files (build)")
    p.add_argument("--names", help="comma list of node names (build)")
    p.add_argument("--grid", default="1,2,4,8")
    p.add_argument("--save", help="directory to save the graph into")
    p.add_argument("--load", help="directory holding a saved graph")
    p.add_argument("--ab", help="src,mid edge (compose)")
    p.add_argument("--bc", help="mid,dst edge (compose)")
    p.add_argument("--cap", help="exponent cap (filter; default: time-ordered filter)")
    _add_common(p)
    p.set_defaults(func=_cmd_graph)
    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OutOfFuel as e:
        print(f"out_of_fuel: {e}", file=sys.stderr)
        return CONFIG
    except ExactnessViolation as e:
        print(f"verification_failure: {e}", file=sys.stderr)
        return FAIL
    except (SimverseError, ValueError, OSError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return CONFIG


if __name__ == "__main__":
    sys.exit(main())
