"""Command-line front end: ``ncgn <subcommand> [options]``.

Every subcommand prints one JSON report with sorted keys.  Exit codes:
0 success, 1 invalid input (graph syntax or structure), 2 analysis
precondition not met, 64 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from . import __version__
from .ribbon_graph import GraphError, PreconditionError, parse_graph, position_str

SCHEMA_VERSION = 1
EXIT_OK, EXIT_INPUT, EXIT_PRECONDITION, EXIT_USAGE = 0, 1, 2, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit with 2, which is taken
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _jsonable(x):
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else x.numerator
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (set, frozenset)):
        return sorted(_jsonable(v) for v in x)
    if hasattr(x, "item"):  # numpy scalars
        return x.item()
    return x


def _load(path: str, relaxed: bool = False):
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise GraphError(f"cannot read {path}: {e.strerror}") from e
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as e:
        raise GraphError(f"{path} is not UTF-8 text") from e
    return parse_graph(text, relaxed=relaxed), hashlib.sha256(data).hexdigest()


def _ordered(graph, args):
    from .ribbon_graph import total_order

    tree = None
    if getattr(args, "tree", None):
        tree = [t for t in args.tree.split(",") if t]
    root = None
    if getattr(args, "root", None):
        v, _, p = args.root.partition(".")
        if not p.isdigit():
            raise PreconditionError(f"root must look like <vertex>.<position>, got {args.root!r}")
        root = (v, int(p))
    return total_order(graph, tree, root)


# --------------------------------------------------------------------------
# subcommands


def cmd_topology(args):
    from .orientation import orient, relations
    from .topology import intersection_matrices, trace_faces

    graph, digest = _load(args.graph)
    rep = trace_faces(graph)
    out = {"topology": rep.as_dict()}
    if graph.n:
        ordered = _ordered(graph, args)
        o = orient(ordered)
        im = intersection_matrices(ordered, relations(ordered), o)
        out["topology"]["intersection"] = {
            "loops": list(im.loops), "externals": list(im.externals),
            "Q_W": [list(r) for r in im.Q_W], "Q_XW": [list(r) for r in im.Q_XW],
            "rank_Q_W": im.rank_W, "rank_Q_XW": im.rank_XW,
        }
    return out, digest


def cmd_orient(args):
    from .orientation import GLYPH, orient, relations

    graph, digest = _load(args.graph)
    ordered = _ordered(graph, args)
    o = orient(ordered)
    rel = relations(ordered)
    return {"orientation": {
        "tree": sorted(ordered.tree),
        "root": position_str(ordered.root),
        "numbering": {position_str(p): k for p, k in ordered.numbering.items()},
        "lines": {l.id: {"ends": list(ordered.ends(l.id)), "class": o.classes[l.id],
                         "eps": o.eps[l.id], "epsilon": o.epsilon[l.id]} for l in graph.lines},
        "eta": dict(o.eta),
        "orientable": o.orientable,
        "relations": {f"{a} {GLYPH[r]} {b}": r for (a, b), r in rel.lines.items()},
        "external_relations": {f"{a} {GLYPH[r]} {x}": r for (a, x), r in rel.externals.items()},
    }}, digest


def cmd_rosette(args):
    from .orientation import orient, relations
    from .rosette import (agrees_with_oracle, omega_dress, rosette_general, rosette_orientable,
                          rosette_planar_regular)
    from .topology import trace_faces

    graph, digest = _load(args.graph)
    ordered = _ordered(graph, args)
    o = orient(ordered)
    rel = relations(ordered)
    if args.form == "general":
        ros = rosette_general(ordered, o, rel)
    elif args.form == "orientable":
        ros = rosette_orientable(ordered, o, rel)
    else:
        ros = rosette_planar_regular(ordered, o, rel, trace_faces(graph))
    phase = ros.phase
    out = {
        "form": args.form,
        "groups": {k: p.records() for k, p in ros.groups.items()},
        "phase": str(phase),
        "root_delta": str(ros.delta),
        "matches_oracle": agrees_with_oracle(ordered, o, phase),
    }
    if args.omega:
        out["phase_with_omega"] = str(omega_dress(phase, o))
    return {"rosette": out}, digest


def _read_mu(path: str) -> dict[str, int]:
    """Attribution file: ``<line> <scale>`` per line, or a JSON object."""
    text = Path(path).read_text()
    try:
        data = json.loads(text)
        if isinstance(data, dict):
            return {str(k): int(v) for k, v in data.items()}
    except (json.JSONDecodeError, ValueError):
        pass
    mu = {}
    for n, raw in enumerate(text.splitlines(), 1):
        body = raw.split("#", 1)[0].split()
        if not body:
            continue
        if len(body) != 2 or not body[1].isdigit():
            raise GraphError(f"{path}:{n}: expected '<line> <scale>'")
        mu[body[0]] = int(body[1])
    return mu


def _number(s: str):
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError) as e:
        raise PreconditionError(f"not a number: {s!r}") from e


def cmd_powercount(args):
    from .multiscale import (ScaleAttribution, _power, annotate, bound_exponent, gn_tree, growth_profile,
                             sum_attributions)

    graph, digest = _load(args.graph)
    if graph.is_vacuum:
        raise PreconditionError("power counting of vacuum graphs is not defined")
    M = _number(args.M)
    if not M > 1:
        raise PreconditionError("M must exceed 1")
    if args.mu:
        mu = ScaleAttribution(_read_mu(args.mu), args.rho)
    else:
        stored = graph.scales()
        mu = ScaleAttribution({l.id: stored.get(l.id, 0) for l in graph.lines}, args.rho)
    tree = annotate(gn_tree(graph, mu), massless=args.massless)
    e = bound_exponent(tree)
    out = {"gn_tree": tree.as_dict(), "M": str(M), "bound": float(_power(M, e)),
           "bound_exponent": e, "node_count": len(tree.nodes)}
    if args.enumerate:
        res = sum_attributions(graph, args.rho, M, budget=args.budget, jobs=args.jobs)
        out["attribution_sum"] = res.as_dict()
        out["attribution_sum"]["increments"] = [float(x) for x in growth_profile(res)]
    return {"multiscale": out}, digest


def cmd_classify_2pt(args):
    from .clifford import chains_cycles, parity_counterterm_class

    graph, digest = _load(args.graph)
    cls = parity_counterterm_class(graph, args.gamma01, lowest_line=args.lowest_line, massless=args.massless)
    return {"clifford": {"chains_cycles": chains_cycles(graph).as_dict(), "counterterms": cls.as_dict()}}, digest


def cmd_fierz(args):
    from .clifford import conjugation_tables, fierz_table

    return {"clifford": {"fierz": fierz_table(), "conjugation": conjugation_tables()}}, None


def cmd_kernel_check(args):
    from .kernel_numeric import PhysicalParams, masslet_check, verify_slice_bound

    p = PhysicalParams(theta=args.theta, Omega=args.omega, m=args.mass, M=args.M)
    lo, _, hi = args.i.partition("-")
    try:
        i_range = list(range(int(lo), int(hi or lo) + 1))
    except ValueError as e:
        raise PreconditionError(f"--i expects N or N-M, got {args.i!r}") from e
    fit = verify_slice_bound(i_range, p, samples=args.samples, seed=args.seed)
    control = verify_slice_bound(i_range, p, samples=args.samples, seed=args.seed, gaussian=False)
    masslets = {}
    for i in range(0, args.masslet_i + 1):
        for w in ((0.0, 0.0), (1.0, 0.0), (0.0, 4.0), (-3.0, 1.5)):
            masslets[f"i={i} w={w[0]:g},{w[1]:g}"] = masslet_check(i, w, p).as_dict()
    return {"kernel_numeric": {
        "params": {"theta": p.theta, "Omega": p.Omega, "m": p.m, "M": p.M, "Omega_tilde": p.Omega_tilde},
        "slice_bound": fit.as_dict(), "negative_control": control.as_dict(), "masslets": masslets,
        "seed": args.seed,
    }}, None


def cmd_vacuum_check(args):
    from .kernel_numeric import vacuum_invariance

    graph, digest = _load(args.graph, relaxed=args.relaxed)
    return {"kernel_numeric": {"vacuum": vacuum_invariance(graph).as_dict()}}, digest


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="ncgn", description="Ribbon-graph combinatorics, phases and power counting.")
    ap.add_argument("--version", action="version", version=f"ncgn {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def ordering(p):
        p.add_argument("--tree", help="comma-separated spanning-tree line ids")
        p.add_argument("--root", help="root position <vertex>.<position>")

    p = sub.add_parser("topology", help="faces, genus, broken faces and intersection matrices")
    p.add_argument("graph")
    ordering(p)
    p.set_defaults(func=cmd_topology)

    p = sub.add_parser("orient", help="numbering, line classes, signs and relations")
    p.add_argument("graph")
    ordering(p)
    p.set_defaults(func=cmd_orient)

    p = sub.add_parser("rosette", help="closed-form rosette phase")
    p.add_argument("graph")
    p.add_argument("--form", choices=("general", "orientable", "planar-regular"), default="general")
    p.add_argument("--omega", action="store_true", help="also list the Ω-dressed phase")
    ordering(p)
    p.set_defaults(func=cmd_rosette)

    p = sub.add_parser("powercount", help="GN tree, degrees and divergence classes")
    p.add_argument("graph")
    p.add_argument("--M", default="2")
    p.add_argument("--rho", type=int, default=8)
    p.add_argument("--mu", help="attribution file (<line> <scale> per line, or JSON)")
    p.add_argument("--enumerate", action="store_true", help="sum the bound over all attributions")
    p.add_argument("--budget", type=float, default=16.0)
    p.add_argument("--massless", action="store_true")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_powercount)

    p = sub.add_parser("classify-2pt", help="admissible counterterm forms of a 2-point graph")
    p.add_argument("graph")
    p.add_argument("--gamma01", action="store_true", help="lowest line contributes its γ⁰γ¹ term")
    p.add_argument("--lowest-line")
    p.add_argument("--massless", action="store_true")
    p.set_defaults(func=cmd_classify_2pt)

    p = sub.add_parser("fierz", help="interaction matrices and conjugation table")
    p.set_defaults(func=cmd_fierz)

    p = sub.add_parser("kernel-check", help="slice bound fit and masslet identity")
    p.add_argument("--i", default="1-8", help="slice range N-M")
    p.add_argument("--M", type=float, default=2.0)
    p.add_argument("--theta", type=float, default=1.0)
    p.add_argument("--omega", type=float, default=0.5)
    p.add_argument("--mass", type=float, default=1.0)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--masslet-i", type=int, default=6)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_kernel_check)

    p = sub.add_parser("vacuum-check", help="translation invariance of a vacuum graph")
    p.add_argument("graph")
    p.add_argument("--relaxed", action="store_true", help="accept non-orientable vertices and clashing lines")
    p.set_defaults(func=cmd_vacuum_check)
    return ap


def run(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(str(e), file=stderr)
        return EXIT_USAGE
    except SystemExit as e:  # --help / --version
        return int(e.code or 0)
    try:
        payload, digest = args.func(args)
    except GraphError as e:
        print(f"ncgn: invalid input: {e}", file=stderr)
        return EXIT_INPUT
    except PreconditionError as e:
        print(f"ncgn: precondition failed: {e}", file=stderr)
        return EXIT_PRECONDITION
    report = {
        "header": {"schema": SCHEMA_VERSION, "tool": "ncgn", "version": __version__,
                   "command": args.command, "graph_sha256": digest},
        "result": _jsonable(payload),
    }
    print(json.dumps(report, sort_keys=True, indent=2, ensure_ascii=False), file=stdout)
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
