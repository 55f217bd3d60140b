"""``cubeflip`` command line.

Meshes travel as CMF (one JSON object per line); ``-`` reads stdin.  Results
are printed as sorted-key JSON so identical invocations give identical
bytes.  Exit status: 0 on success, 1 on a domain error (JSON on stderr),
2 on a usage error.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import cmf
from .canon import boundary_key, canonicalize
from .catalog import class_table, enumerate_classes
from .complex import euler_and_homology, validate
from .errors import CubeflipError, NoPath, ParamOutOfRange
from .flips import FlipSequence, find_sites, flip_step, grid_refine, parity_sites, parity_step, pillow
from .planner import SearchBudget, component_census, disk_seeds, find_path, plan_reduction


def _dump(obj):
    return json.dumps(obj, sort_keys=True)


def _read_text(path):
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise CubeflipError(f"cannot read {path}: {exc.strerror}") from None


def _mesh(path):
    return cmf.parse(_read_text(path))


def _emit(text, out):
    if out and out != "-":
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _pair(text):
    try:
        x, y = (int(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected X,Y, got {text!r}") from None
    return (x, y)


def _ints(text):
    try:
        return tuple(int(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _point(text):
    try:
        p = tuple(float(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected x,y,z, got {text!r}") from None
    if len(p) != 3:
        raise argparse.ArgumentTypeError("a point needs three coordinates")
    return p


def _budget(args, cells):
    max_cells = args.max_cells if args.max_cells is not None else cells + 8
    return SearchBudget(max_cells=max_cells, max_states=args.max_states, max_depth=args.max_depth)


def _tolerance(args):
    from .geometry import ToleranceConfig

    return ToleranceConfig(args.tolerance)


def _site_dict(site):
    return {"class": [site.flip_class.X, site.flip_class.Y], "cells": list(site.cells),
            "map": {str(k): v for k, v in site.vertex_map}}


# -- commands -----------------------------------------------------------------------------


def cmd_catalog(args):
    classes, pairs = enumerate_classes(args.dim)
    if args.json:
        doc = {"dim": args.dim, "classes": len(classes), "pairs": [[list(a), list(b)] for a, b in pairs]}
        if args.dim in (2, 3):
            doc["table"] = class_table(args.dim)
        print(_dump(doc))
        return
    print(f"dimension {args.dim}: {len(classes)} classes, {len(pairs)} flip pairs")
    rows = class_table(args.dim)
    head = "class    inverse  before  after  new"
    print(head)
    for row in rows:
        cl = "({},{})".format(*row["class"])
        inv = "({},{})".format(*row["inverse"])
        print(f"{cl:<8} {inv:<8} {row['before_cells']:>6} {row['after_cells']:>6} {row.get('new_vertices', '-'):>4}")


def cmd_validate(args):
    c = _mesh(args.input)
    rep = validate(c, strict=args.strict)
    doc = rep.to_dict()
    if rep.ok:
        chi, betti = euler_and_homology(c)
        doc.update({"euler": chi, "betti": list(betti), "cells": len(c.cells),
                    "key": canonicalize(c).hex()})
    print(_dump(doc))


def cmd_flips_list(args):
    c = _mesh(args.input)
    if args.flip_class is not None:
        sites = find_sites(c, args.flip_class)
    else:
        sites = [s for cl in enumerate_classes(c.dim)[0] for s in find_sites(c, (cl.X, cl.Y))]
    print(_dump({"count": len(sites), "sites": [_site_dict(s) for s in sites]}))


def cmd_flips_apply(args):
    c = _mesh(args.input)
    sites = find_sites(c, args.flip_class)
    if not 0 <= args.index < len(sites):
        raise ParamOutOfRange(f"site index {args.index} out of range ({len(sites)} sites)", field="index")
    res, step = flip_step(c, sites[args.index])
    if args.record:
        seq = FlipSequence(canonicalize(c).hex(), [step])
        with open(args.record, "w") as fh:
            fh.write(seq.to_json() + "\n")
    _emit(cmf.serialize(res), args.output)


def cmd_parity(args):
    c = _mesh(args.input)
    if args.cells is None:
        sites = parity_sites(c)
        if not sites:
            raise ParamOutOfRange("no pair of quads shares exactly one edge", field="cells")
        cells = sites[0]
    else:
        cells = args.cells
    if len(cells) != 2:
        raise ParamOutOfRange("parity change needs two cell ids", field="cells")
    res, _ = parity_step(c, *cells)
    _emit(cmf.serialize(res), args.output)


def cmd_refine(args):
    _emit(cmf.serialize(grid_refine(_mesh(args.input), args.m)), args.output)


def cmd_pillow(args):
    _emit(cmf.serialize(pillow(_mesh(args.input), args.cell)), args.output)


def cmd_dual_build(args):
    from .dual import dualize

    _emit(dualize(_mesh(args.input)).to_json() + "\n", args.output)


def cmd_dual_rewrite(args):
    from .dual import CurveArrangement, RewriteOp, rewrite

    a = CurveArrangement.from_json(_read_text(args.input))
    try:
        op = RewriteOp.from_dict(json.loads(args.op))
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ParamOutOfRange(f"bad rewrite description: {exc}", field="op") from None
    _emit(rewrite(a, op).to_json() + "\n", args.output)


def cmd_dual_check(args):
    from .dual import CurveArrangement, three_connectivity

    a = CurveArrangement.from_json(_read_text(args.input))
    ok, witness = three_connectivity(a)
    print(_dump({"three_connected": ok, "witness": witness}))


def cmd_reduce(args):
    c = _mesh(args.input)
    budget = SearchBudget(max_cells=args.max_cells, max_states=args.max_states)
    plan = plan_reduction(c, budget)
    doc = json.loads(plan.sequence.to_json())
    doc["phases"] = plan.phases
    doc["length"] = len(plan.sequence)
    if args.plan:
        with open(args.plan, "w") as fh:
            fh.write(_dump(doc) + "\n")
    print(_dump(doc))


def cmd_path(args):
    a, b = _mesh(args.first), _mesh(args.second)
    budget = _budget(args, max(len(a.cells), len(b.cells)))
    try:
        seq = find_path(a, b, budget, allow_parity=args.allow_parity)
    except NoPath as exc:
        print(_dump({"result": "no_path", "reason": exc.details.get("reason", "exhausted"),
                     "states": exc.details.get("states")}))
        return
    doc = json.loads(seq.to_json())
    doc.update({"result": "path", "length": len(seq)})
    print(_dump(doc))


def cmd_census(args):
    seeds = [_mesh(p) for p in args.seeds] if args.seeds else disk_seeds(args.boundary)
    budget = SearchBudget(max_cells=args.max_cells, max_states=args.max_states, max_depth=args.max_depth)
    res = component_census(seeds, budget, allow_parity=args.allow_parity)
    doc = res.to_dict()
    if not args.entries:
        doc.pop("entries")
    print(_dump(doc))


def cmd_geom_check(args):
    from .geometry import Realization, check_realization

    r = Realization.from_complex(_mesh(args.input), _tolerance(args))
    print(_dump(check_realization(r).to_dict()))


def cmd_geom_flip(args):
    from .geometry import AUTOMATIC, Realization, check_flippability, realize_flip

    c = _mesh(args.input)
    r = Realization.from_complex(c, _tolerance(args))
    site = None
    if args.site is not None:
        sites = find_sites(c, args.flip_class)
        if not 0 <= args.site < len(sites):
            raise ParamOutOfRange(f"site index {args.site} out of range", field="site")
        site = sites[args.site]
    if tuple(args.flip_class) in AUTOMATIC:
        kw = {"t": args.t, "apex": args.apex, "point": args.point, "strict": not args.weak}
        if args.inset is not None:
            kw["inset"] = args.inset
        verdict = realize_flip(r, args.flip_class, site, **kw)
    else:
        verdict = check_flippability(r, args.flip_class, site,
                                     allow_self_intersecting=args.allow_self_intersecting, seed=args.seed)
    print(_dump(verdict.to_dict()))
    if args.output and verdict.realization is not None:
        _emit(cmf.serialize(verdict.realization.to_complex()), args.output)


def _param(text):
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    k, v = text.split("=", 1)
    try:
        val = json.loads(v)
    except json.JSONDecodeError:
        val = v
    return k.replace("-", "_"), val


def _topological(kind, params):
    from . import meshes

    table = {
        "cube": meshes.cube_boundary,
        "hex": meshes.single_hex,
        "quad": meshes.single_quad,
        "bicuboid": meshes.bicuboid,
        "bicuboid_boundary": meshes.bicuboid_boundary,
        "torus": meshes.quad_torus,
        "grid": meshes.quad_grid,
    }
    fn = table.get(kind)
    if fn is None:
        return None
    try:
        return fn(**params)
    except TypeError as exc:
        raise ParamOutOfRange(str(exc), field="params") from None


GEN_KINDS = ("cube", "hex", "quad", "bicuboid", "bicuboid_boundary", "torus", "grid", "random")


def cmd_gen(args):
    from .geometry import GENERATORS, generate, random_before

    params = dict(args.param or [])
    c = _topological(args.kind, params)
    if c is None:
        if args.kind == "random":
            cl = params.pop("class", [3, 0])
            r = random_before(tuple(cl), seed=args.seed, **params)
        elif args.kind in GENERATORS:
            r = generate(args.kind, **params)
        else:
            kinds = sorted(set(GEN_KINDS) | set(GENERATORS))
            raise ParamOutOfRange(f"unknown kind {args.kind!r}; choose from {', '.join(kinds)}", field="kind")
        c = r.to_complex()
    _emit(cmf.serialize(c), args.output)


def cmd_export(args):
    c = _mesh(args.input)
    text = cmf.to_off(c) if args.format == "off" else cmf.to_obj(c)
    _emit(text, args.output)


def cmd_key(args):
    c = _mesh(args.input)
    doc = {"key": canonicalize(c).hex()}
    if c.dim == 3 or not c.is_closed():
        doc["boundary_key"] = boundary_key(c).hex()
    print(_dump(doc))


# -- parser -------------------------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tolerance", type=float, default=1e-9, help="relative epsilon for geometric tests")

    budget = argparse.ArgumentParser(add_help=False)
    budget.add_argument("--max-cells", type=int, default=None)
    budget.add_argument("--max-states", type=int, default=200_000)
    budget.add_argument("--max-depth", type=int, default=None)

    p = argparse.ArgumentParser(prog="cubeflip", description="Flips on quad and hex meshes.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("catalog", parents=[common], help="flip classes of a dimension")
    s.add_argument("--dim", type=int, default=3)
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_catalog)

    s = sub.add_parser("validate", parents=[common], help="check a mesh")
    s.add_argument("input", nargs="?", default="-")
    s.add_argument("--strict", action="store_true", help="also reject degenerate cell unions")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("key", parents=[common], help="canonical keys of a mesh and its boundary")
    s.add_argument("input", nargs="?", default="-")
    s.set_defaults(func=cmd_key)

    flips = sub.add_parser("flips", help="list or apply flips")
    fsub = flips.add_subparsers(dest="action", required=True)
    s = fsub.add_parser("list", parents=[common])
    s.add_argument("input", nargs="?", default="-")
    s.add_argument("--class", dest="flip_class", type=_pair, default=None)
    s.set_defaults(func=cmd_flips_list)
    s = fsub.add_parser("apply", parents=[common])
    s.add_argument("input", nargs="?", default="-")
    s.add_argument("--class", dest="flip_class", type=_pair, required=True)
    s.add_argument("--index", type=int, default=0, help="which site, in listing order")
    s.add_argument("--record", help="write the step as FlipSequence JSON")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_flips_apply)

    s = sub.add_parser("parity-change", parents=[common], help="two quads to three")
    s.add_argument("input", nargs="?", default="-")
    s.add_argument("--cells", type=_ints, default=None, help="two quad ids (default: first eligible pair)")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_parity)

    s = sub.add_parser("refine", parents=[common], help="split every cell into an m-grid")
    s.add_argument("input", nargs="?", default="-")
    s.add_argument("--m", type=int, default=2)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_refine)

    s = sub.add_parser("pillow", parents=[common], help="split one hex into seven")
    s.add_argument("input", nargs="?", default="-")
    s.add_argument("--cell", type=int, default=0)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_pillow)

    dual = sub.add_parser("dual", help="curve arrangements")
    dsub = dual.add_subparsers(dest="action", required=True)
    s = dsub.add_parser("build", parents=[common])
    s.add_argument("input", nargs="?", default="-")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_dual_build)
    s = dsub.add_parser("rewrite", parents=[common])
    s.add_argument("input", nargs="?", default="-")
    s.add_argument("--op", required=True, help='JSON, e.g. {"kind": "add_circle", "location": [0]}')
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_dual_rewrite)
    s = dsub.add_parser("check3c", parents=[common])
    s.add_argument("input", nargs="?", default="-")
    s.set_defaults(func=cmd_dual_check)

    s = sub.add_parser("reduce", parents=[common], help="flip a sphere mesh down to the cube")
    s.add_argument("input", nargs="?", default="-")
    s.add_argument("--max-cells", type=int, default=None)
    s.add_argument("--max-states", type=int, default=200_000)
    s.add_argument("--plan", help="also write the plan JSON here")
    s.set_defaults(func=cmd_reduce)

    s = sub.add_parser("path", parents=[common, budget], help="flip path between two meshes")
    s.add_argument("first")
    s.add_argument("second")
    s.add_argument("--allow-parity", action="store_true")
    s.set_defaults(func=cmd_path)

    s = sub.add_parser("census", parents=[common], help="flip components of small disk meshes")
    s.add_argument("seeds", nargs="*")
    s.add_argument("--boundary", type=int, default=4)
    s.add_argument("--max-cells", type=int, default=9)
    s.add_argument("--max-states", type=int, default=200_000)
    s.add_argument("--max-depth", type=int, default=None)
    s.add_argument("--allow-parity", action="store_true")
    s.add_argument("--entries", action="store_true", help="list every mesh key")
    s.set_defaults(func=cmd_census)

    geom = sub.add_parser("geom", help="geometric checks and flips")
    gsub = geom.add_subparsers(dest="action", required=True)
    s = gsub.add_parser("check", parents=[common])
    s.add_argument("input", nargs="?", default="-")
    s.set_defaults(func=cmd_geom_check)
    s = gsub.add_parser("flip", parents=[common])
    s.add_argument("input", nargs="?", default="-")
    s.add_argument("--class", dest="flip_class", type=_pair, required=True)
    s.add_argument("--site", type=int, default=None)
    s.add_argument("--apex", type=_point, default=None)
    s.add_argument("--t", type=float, default=0.5)
    s.add_argument("--point", type=_point, default=None)
    s.add_argument("--inset", type=float, default=None)
    s.add_argument("--weak", action="store_true", help="accept cells with flat angles")
    s.add_argument("--allow-self-intersecting", action="store_true")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_geom_flip)

    s = sub.add_parser("gen", parents=[common], help="generate a mesh")
    s.add_argument("kind")
    s.add_argument("param", nargs="*", type=_param, help="key=value (values parsed as JSON)")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_gen)

    s = sub.add_parser("export", parents=[common], help="write OFF or OBJ")
    s.add_argument("input", nargs="?", default="-")
    s.add_argument("--format", choices=("off", "obj"), default="off")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_export)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "tolerance", 1.0) <= 0:
        parser.error("--tolerance must be positive")
    try:
        args.func(args)
    except CubeflipError as exc:
        sys.stderr.write(_dump(exc.to_dict()) + "\n")
        return 1
    sys.stdout.flush()
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
