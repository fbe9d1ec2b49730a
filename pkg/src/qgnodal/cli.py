"""Command line front end.

Every subcommand prints one JSON summary object to stdout and, when --out
is given, writes its artifacts into that directory under fixed names. CSV
is the default artifact format for tabular data; --format json switches
everything to JSON. Exit status: 0 on success, 1 on a domain error (the
summary then is ``{"error": ...}``), 2 on a usage error.

Graphs are passed either as a path to a graph JSON file or as a builder
shorthand: ``interval[:LENGTH]``, ``star:S:EPS``, ``ladder:M:EPS``.
"""
from __future__ import annotations

import argparse
import os
import sys

from . import combolab, heatflow, nodal, spectral
from .errors import QGError
from .graphs import (build_interval, build_ladder, build_star, load_graph,
                     perturb_lengths, save_graph, topology, validate)
from .reports import dumps_json, fmt_float, write_csv, write_text
from .tolerances import DEFAULT


def _combo_type(text: str):
    """Parse ``k1:a1,k2:a2,...`` into (indices, coefficients)."""
    pairs = []
    try:
        for part in text.split(","):
            k, a = part.split(":")
            pairs.append((int(k), float(a)))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected k1:a1,k2:a2,... with integer indices, got {text!r}")
    if not pairs:
        raise argparse.ArgumentTypeError("empty combination")
    pairs.sort()
    ks = tuple(k for k, _ in pairs)
    if len(set(ks)) != len(ks):
        raise argparse.ArgumentTypeError(f"repeated index in {text!r}")
    return ks, tuple(a for _, a in pairs)


def _graph_arg(spec: str):
    """Load a graph from a file path or build one from shorthand."""
    if os.path.exists(spec):
        return load_graph(spec)
    parts = spec.split(":")
    try:
        if parts[0] == "interval":
            return build_interval(float(parts[1]) if len(parts) > 1 else 1.0)
        if parts[0] == "star" and len(parts) == 3:
            return build_star(int(parts[1]), float(parts[2]))
        if parts[0] == "ladder" and len(parts) == 3:
            return build_ladder(int(parts[1]), float(parts[2]))
    except ValueError:
        pass
    raise QGError(
        f"no such graph file and not a builder shorthand: {spec!r} "
        "(use interval[:LENGTH], star:S:EPS or ladder:M:EPS)")


def _out_path(args, name: str):
    if args.out is None:
        return None
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, name)


def _emit(args, obj: dict):
    sys.stdout.write(dumps_json(obj))


def _artifact(args, stem: str, obj: dict, header=None, rows=None):
    """Write ``stem`` as CSV (default, when rows are given) or JSON."""
    written = []
    if args.out is None:
        return written
    if args.format == "json" or rows is None:
        path = _out_path(args, f"{stem}.json")
        write_text(path, dumps_json(obj))
        written.append(path)
    else:
        path = _out_path(args, f"{stem}.csv")
        write_csv(path, header, rows)
        written.append(path)
    return written


def _tol(args):
    return DEFAULT.scaled(args.tol_scale)


# ── subcommands ─────────────────────────────────────────────────────────────

def cmd_construct(args) -> dict:
    if args.kind == "interval":
        g = build_interval(args.length)
    elif args.kind == "star":
        g = build_star(args.s, args.eps)
    else:
        g = build_ladder(args.m, args.eps)
    if args.perturb > 0.0:
        g = perturb_lengths(g, args.perturb, args.seed)
    files = []
    if args.out is not None:
        path = _out_path(args, "graph.json")
        save_graph(path, g)
        files.append(path)
    return {"kind": args.kind, "n_vertices": len(g.vertices),
            "n_edges": len(g.edges),
            "total_length": g.total_length,
            "edges": {str(e.id): e.length for e in g.edges},
            "files": files}


def cmd_validate(args) -> dict:
    g = _graph_arg(args.graph)
    rep = validate(g)
    files = _artifact(args, "validate", rep.to_obj(),
                      header=("issue",), rows=[(i,) for i in rep.issues])
    return {"valid": rep.valid, "connected": rep.connected,
            "issues": list(rep.issues), "files": files}


def cmd_topology(args) -> dict:
    g = _graph_arg(args.graph)
    topo = topology(g)
    obj = topo.to_obj()
    files = _artifact(args, "topology", obj,
                      header=tuple(obj), rows=[tuple(obj.values())])
    return {**obj, "files": files}


def cmd_spectrum(args) -> dict:
    g = _graph_arg(args.graph)
    tol = _tol(args)
    spec = spectral.scan_spectrum(g, args.count, tol=tol)
    gen = spectral.genericity_check(g, args.count, spectrum=spec, tol=tol)
    rows = [(p.index, p.lam, p.multiplicity, gen.ratios[i])
            for i, p in enumerate(spec.pairs)]
    obj = {"eigenvalues": [{"index": p.index, "lambda": p.lam,
                            "multiplicity": p.multiplicity,
                            "min_inner_vertex_ratio": gen.ratios[i]}
                           for i, p in enumerate(spec.pairs)],
           "generic": gen.generic}
    files = _artifact(args, "spectrum", obj,
                      header=("index", "lambda", "multiplicity",
                              "min_inner_vertex_ratio"), rows=rows)
    if args.plot and args.out is not None:
        from .plots import render_spectrum
        files.append(render_spectrum(spec, _out_path(args, "spectrum.png")))
    return {"count": len(spec), "lambda_min": spec.lam(1),
            "lambda_max": spec.lam(len(spec)), "generic": gen.generic,
            "files": files}


def cmd_eigenfunction(args) -> dict:
    g = _graph_arg(args.graph)
    tol = _tol(args)
    spec = spectral.scan_spectrum(g, args.index, tol=tol)
    pair = spec.pair(args.index)
    rows = []
    for e in g.edges:
        xs = pair.basis[e.id].xs
        vals = pair.value(e.id, xs)
        ders = pair.derivative(e.id, xs)
        rows.extend(zip([e.id] * len(xs), xs, vals, ders))
    obj = {"index": pair.index, "lambda": pair.lam,
           "multiplicity": pair.multiplicity,
           "residuals": {k: v for k, v in pair.residuals.items()},
           "samples": [{"edge_id": r[0], "x": float(r[1]),
                        "value": float(r[2]), "derivative": float(r[3])}
                       for r in rows]}
    stem = f"eigenfunction_k{args.index}"
    files = _artifact(args, stem, obj,
                      header=("edge_id", "x", "value", "derivative"),
                      rows=[(r[0], float(r[1]), float(r[2]), float(r[3]))
                            for r in rows])
    if args.plot and args.out is not None:
        from .plots import render_profile
        fn = nodal.FunctionOnGraph(spec, (args.index,), (1.0,))
        files.append(render_profile(fn, _out_path(args, f"{stem}.png")))
    return {"index": pair.index, "lambda": pair.lam,
            "multiplicity": pair.multiplicity, "files": files}


def _fn_from_args(args, g, tol):
    ks, coeffs = args.combo
    spec = spectral.scan_spectrum(g, max(ks), tol=tol)
    return nodal.FunctionOnGraph(spec, ks, coeffs), spec


def cmd_nodal(args) -> dict:
    g = _graph_arg(args.graph)
    tol = _tol(args)
    fn, _ = _fn_from_args(args, g, tol)
    rep = nodal.count_zeros(fn, tol)
    rows = [(z.kind, "" if z.edge_id is None else z.edge_id,
             "" if z.x is None else z.x,
             "" if z.vertex is None else z.vertex, z.residual)
            for z in rep.loci]
    files = _artifact(args, "nodal", rep.to_obj(),
                      header=("kind", "edge_id", "x", "vertex", "residual"),
                      rows=rows)
    if args.plot and args.out is not None:
        from .plots import render_nodal
        files.append(render_nodal(fn, rep, _out_path(args, "nodal.png")))
    return {"total": rep.total,
            "per_edge": {str(k): v for k, v in rep.per_edge.items()},
            "tangential_present": rep.tangential_present,
            "vertex_zero_present": rep.vertex_zero_present,
            "approximate": rep.approximate, "files": files}


def cmd_verify_bounds(args) -> dict:
    g = _graph_arg(args.graph)
    tol = _tol(args)
    ks, coeffs = args.combo
    cert = combolab.verify_bounds(g, ks, coeffs, tol=tol)
    obj = cert.to_obj()
    flat = {k: (str(v) if isinstance(v, (list, tuple)) else v)
            for k, v in obj.items()}
    files = _artifact(args, "bounds", obj,
                      header=tuple(flat), rows=[tuple(flat.values())])
    return {"lower": cert.lower, "upper": cert.upper,
            "measured": cert.measured, "scope": cert.scope,
            "passed": cert.passed, "files": files}


def cmd_generic_check(args) -> dict:
    g = _graph_arg(args.graph)
    tol = _tol(args)
    gen = spectral.genericity_check(g, args.count, tol=tol)
    obj = gen.to_obj()
    rows = [(i + 1, gen.ratios[i],
             gen.gaps[i] if i < len(gen.gaps) else "")
            for i in range(len(gen.ratios))]
    files = _artifact(args, "generic_check", obj,
                      header=("index", "min_inner_vertex_ratio", "gap_above"),
                      rows=rows)
    return {"generic": gen.generic, "failures": list(gen.failures),
            "files": files}


def cmd_select_eps(args) -> dict:
    tol = _tol(args)
    res = combolab.select_eps(args.s, args.count, j_max=args.j_max, tol=tol)
    obj = res.to_obj()
    files = _artifact(args, "select_eps", obj,
                      header=("j", "eps", "lam_max", "short_wave_ok",
                              "simple_ok"),
                      rows=[tuple(t) for t in res.trials])
    return {"eps": res.eps, "j": res.j, "lam_max": res.lam_max,
            "files": files}


def cmd_saturate(args) -> dict:
    tol = _tol(args)
    if args.eps is None:
        args.eps = combolab.select_eps(args.s, args.L, tol=tol).eps
    ens = combolab.generic_perturbed_star(args.s, args.eps, args.L,
                                          delta=args.delta, seed=args.seed,
                                          tol=tol)
    res = combolab.design_saturating_combo(ens.graph, args.L,
                                           spectrum=ens.spectrum,
                                           seed=args.seed, tol=tol)
    obj = {**res.to_obj(), "eps": args.eps, "delta": ens.delta,
           "graph_seed": ens.seed}
    files = _artifact(args, "saturate", obj)
    if args.plot and args.out is not None:
        from .plots import render_nodal
        fn = nodal.FunctionOnGraph(ens.spectrum, res.indices, res.coefficients)
        rep = nodal.count_zeros(fn, tol)
        files.append(render_nodal(fn, rep, _out_path(args, "saturate.png")))
    return {"s": res.s, "L": res.L, "target": res.target,
            "measured": res.measured, "achieved": res.achieved,
            "eps": args.eps, "delta": ens.delta, "files": files}


def cmd_find_b(args) -> dict:
    tol = _tol(args)
    ens = combolab.generic_perturbed_ladder(args.m, args.eps, 3,
                                            seed=args.seed, tol=tol)
    res = combolab.find_b(ens.graph, spectrum=ens.spectrum, tol=tol)
    obj = {**res.to_obj(), "m": args.m, "eps": args.eps,
           "graph_seed": ens.seed}
    files = _artifact(args, "find_b", obj)
    return {"b": res.b, "n_f2": res.n_f2, "n_f3": res.n_f3,
            "verified": res.verified, "files": files}


def cmd_heatflow(args) -> dict:
    g = _graph_arg(args.graph)
    tol = _tol(args)
    if args.adaptive and (args.y_min is not None or args.y_max is not None):
        raise ValueError("--adaptive excludes --y-min/--y-max")
    fn, _ = _fn_from_args(args, g, tol)
    trace = heatflow.evolve(fn, y_min=args.y_min, y_max=args.y_max,
                            dy=args.dy, threads=args.threads, tol=tol)
    events = heatflow.detect_events(trace, tol)
    audit = heatflow.audit_trace(trace, events, tol)
    files = []
    if args.out is not None:
        p = _out_path(args, "heatflow_trace.csv")
        write_csv(p, ("y", "edge_id", "x_zero", "curve_id"),
                  heatflow.trace_rows(trace))
        files.append(p)
        p = _out_path(args, "heatflow_events.csv")
        write_csv(p, ("y", "kind", "site", "delta"),
                  heatflow.event_rows(events))
        files.append(p)
        p = _out_path(args, "heatflow_audit.json")
        write_text(p, dumps_json(audit.to_obj()))
        files.append(p)
        if args.plot:
            from .plots import render_heatflow
            files.append(render_heatflow(trace, events,
                                         _out_path(args, "heatflow.png")))
    return {"n_slices": len(trace.slices),
            "y_range": [float(trace.ys[0]), float(trace.ys[-1])],
            "count_low_end": int(trace.counts[0]),
            "count_high_end": int(trace.counts[-1]),
            "events": [[fmt_float(e.y), e.kind, e.site_str(), e.delta]
                       for e in events],
            "audit_passed": audit.passed, "files": files}


# ── parser ──────────────────────────────────────────────────────────────────

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="qgnodal",
        description="Spectra, nodal counts and heat-flow nodal dynamics of "
                    "Schroedinger operators on metric graphs.")
    p.add_argument("--tol-scale", type=float, default=1.0,
                   help="multiply every tolerance by this factor")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, metavar="DIR",
                   help="directory for artifacts (created if missing)")
    p.add_argument("--format", choices=("csv", "json"), default="csv",
                   help="artifact format for tabular outputs")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--plot", action="store_true",
                   help="also render figures next to the artifacts")
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("construct", help="build a model graph file")
    q.add_argument("kind", choices=("interval", "star", "ladder"))
    q.add_argument("--length", type=float, default=1.0)
    q.add_argument("--s", type=int, default=3, help="number of short edges")
    q.add_argument("--m", type=int, default=3, help="number of rungs")
    q.add_argument("--eps", type=float, default=1.0 / 32.0)
    q.add_argument("--perturb", type=float, default=0.0,
                   help="relative length jitter on the short edges")
    q.set_defaults(fn=cmd_construct)

    q = sub.add_parser("validate", help="structural checks on a graph file")
    q.add_argument("graph")
    q.set_defaults(fn=cmd_validate)

    q = sub.add_parser("topology", help="cycle count and vertex-degree data")
    q.add_argument("graph")
    q.set_defaults(fn=cmd_topology)

    q = sub.add_parser("spectrum", help="first eigenvalues of a graph")
    q.add_argument("graph")
    q.add_argument("--count", type=int, default=10)
    q.set_defaults(fn=cmd_spectrum)

    q = sub.add_parser("eigenfunction", help="tabulate one eigenfunction")
    q.add_argument("graph")
    q.add_argument("--index", type=int, required=True)
    q.set_defaults(fn=cmd_eigenfunction)

    q = sub.add_parser("nodal", help="count zeros of a combination")
    q.add_argument("graph")
    q.add_argument("--combo", type=_combo_type, required=True,
                   metavar="K1:A1,K2:A2,...")
    q.set_defaults(fn=cmd_nodal)

    q = sub.add_parser("verify-bounds",
                       help="certify the two-sided zero-count bounds")
    q.add_argument("graph")
    q.add_argument("--combo", type=_combo_type, required=True,
                   metavar="K1:A1,K2:A2,...")
    q.set_defaults(fn=cmd_verify_bounds)

    q = sub.add_parser("generic-check",
                       help="inner-vertex values and gaps of a window")
    q.add_argument("graph")
    q.add_argument("--count", type=int, default=10)
    q.set_defaults(fn=cmd_generic_check)

    q = sub.add_parser("select-eps",
                       help="largest dyadic short-edge length for a star")
    q.add_argument("--s", type=int, required=True)
    q.add_argument("--count", type=int, required=True)
    q.add_argument("--j-max", type=int, default=20)
    q.set_defaults(fn=cmd_select_eps)

    q = sub.add_parser("saturate",
                       help="combination attaining the upper bound on a star")
    q.add_argument("--s", type=int, required=True)
    q.add_argument("--L", type=int, required=True)
    q.add_argument("--eps", type=float, default=None,
                   help="short-edge length (default: selected automatically)")
    q.add_argument("--delta", type=float, default=None,
                   help="jitter cap for the genericity retries")
    q.set_defaults(fn=cmd_saturate)

    q = sub.add_parser("find-b",
                       help="coefficient with a single zero on a ladder")
    q.add_argument("--m", type=int, required=True)
    q.add_argument("--eps", type=float, default=1.0 / 32.0)
    q.set_defaults(fn=cmd_find_b)

    q = sub.add_parser("heatflow",
                       help="propagate a combination and audit its events")
    q.add_argument("graph")
    q.add_argument("--combo", type=_combo_type, required=True,
                   metavar="K1:A1,K2:A2,...")
    q.add_argument("--y-min", type=float, default=None)
    q.add_argument("--y-max", type=float, default=None)
    q.add_argument("--adaptive", action="store_true",
                   help="extend the trace until both ends stabilize (default "
                        "when no explicit range is given)")
    q.add_argument("--dy", type=float, default=None)
    q.set_defaults(fn=cmd_heatflow)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        summary = args.fn(args)
    except (QGError, ValueError, OSError) as exc:
        sys.stdout.write(dumps_json({"error": str(exc)}))
        return 1
    _emit(args, summary)
    return 0


if __name__ == "__main__":
    sys.exit(main())
