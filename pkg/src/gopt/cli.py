"""Command-line entry point wiring ingestion, statistics, compilation and runs."""

from __future__ import annotations

import argparse
import json
import random
import sys
import time

from . import datagen
from .cbo import CostWeights, finalize_plan, random_plan
from .config import Config, load_config
from .errors import GoptError
from .executor import count_intermediate, execute, table_to_csv, table_to_json_rows
from .glogue import GLogue, build as build_glogue
from .graph import load_graph, load_schema, type_counts
from .parser import parse_param_value
from .pipeline import compile_query
from .plans import dump_physical, plan_to_json
from .report import BenchRow, write_bench_report
from .typecheck import INVALID, infer_and_validate


def _add_dataset_args(sub, graph_required=True):
    sub.add_argument("--schema", required=True, help="schema JSON file")
    sub.add_argument("--vertices", required=graph_required, help="vertices CSV file")
    sub.add_argument("--edges", required=graph_required, help="edges CSV file")


def _add_query_args(sub):
    sub.add_argument("query", nargs="?", help="query text")
    sub.add_argument("--file", help="read the query from a file")
    sub.add_argument(
        "--param",
        action="append",
        default=[],
        metavar="NAME=VALUE",
        help="bind a $parameter (value parsed as a literal or list)",
    )


def _query_text(args) -> str:
    if args.file:
        with open(args.file) as fh:
            return fh.read()
    if not args.query:
        raise GoptError("no query given (positional argument or --file)")
    return args.query


def _params(args) -> dict:
    out = {}
    for item in args.param:
        if "=" not in item:
            raise GoptError(f"--param expects NAME=VALUE, got {item!r}")
        name, _, value = item.partition("=")
        out[name] = parse_param_value(value)
    return out


def _load_dataset(args):
    schema = load_schema(args.schema)
    g = load_graph(schema, args.vertices, args.edges)
    return schema, g


def _stats(args, schema, g, config: Config):
    if getattr(args, "stats", None):
        gl = GLogue.load(args.stats)
    else:
        gl = build_glogue(g, schema, k=getattr(args, "k", None) or config.glogue_k)
    return gl, type_counts(g)


def cmd_gen(args) -> int:
    makers = {
        "marketplace": lambda s: datagen.marketplace_fixture(seed=s if s is not None else 5),
        "social": lambda s: datagen.social_fixture(
            scale=args.scale, seed=s if s is not None else 7
        ),
        "transfer": lambda s: datagen.transfer_fixture(seed=s if s is not None else 11),
    }
    schema, g = makers[args.fixture](args.seed)
    paths = datagen.write_graph_files(schema, g, args.out)
    print(f"wrote {args.fixture} fixture: |V|={g.num_vertices} |E|={g.num_edges}")
    for key, path in sorted(paths.items()):
        print(f"  {key}: {path}")
    return 0


def cmd_load(args) -> int:
    schema, g = _load_dataset(args)
    counts = type_counts(g)
    print(f"loaded |V|={g.num_vertices} |E|={g.num_edges}")
    for name in sorted(counts.vertices):
        print(f"  vertex {name}: {counts.vertices[name]}")
    for t in sorted(counts.edges):
        print(f"  edge {t[0]}-{t[1]}->{t[2]}: {counts.edges[t]}")
    return 0


def cmd_glogue(args) -> int:
    if args.glogue_cmd == "build":
        config = load_config(args.config)
        schema, g = _load_dataset(args)
        started = time.monotonic()
        gl = build_glogue(g, schema, k=args.k or config.glogue_k)
        elapsed = time.monotonic() - started
        gl.save(args.out)
        print(
            f"built catalogue k={gl.max_k}: {len(gl.freq)} patterns, "
            f"{len(gl.expand_edges)} expand edges, {len(gl.join_edges)} join edges "
            f"({elapsed:.1f}s) -> {args.out}"
        )
        return 0
    gl = GLogue.load(args.stats)
    print(
        f"catalogue k={gl.max_k}: {len(gl.freq)} patterns, "
        f"{len(gl.expand_edges)} expand edges, {len(gl.join_edges)} join edges"
    )
    if args.limit:
        import base64

        shown = sorted(gl.freq.items(), key=lambda kv: (-kv[1], kv[0]))[: args.limit]
        for code, freq in shown:
            print(f"  {freq:>12g}  {base64.b64encode(code).decode()[:60]}")
    return 0


def cmd_typecheck(args) -> int:
    schema = load_schema(args.schema)
    from .ir import match_to_pattern
    from .parser import parse
    from .rbo import apply_rules

    plan = apply_rules(parse(_query_text(args), schema, _params(args)))
    pattern = match_to_pattern(plan.match, schema)
    refined = infer_and_validate(pattern, schema)
    if refined is INVALID:
        print("INVALID")
        return 0
    for alias in sorted(refined.vertices):
        print(f"{alias}: {refined.vertices[alias].constraint.render()}")
    for alias in sorted(refined.edges):
        print(f"{alias}: {refined.edges[alias].constraint.render()}")
    return 0


def cmd_explain(args) -> int:
    config = load_config(args.config)
    schema, g = _load_dataset(args)
    gl, lo = _stats(args, schema, g, config)
    compiled = compile_query(
        _query_text(args),
        schema,
        gl,
        lo,
        params=_params(args),
        config=config,
        inference=not args.no_inference,
    )
    if compiled.invalid:
        print("INVALID")
        return 0
    if args.json:
        print(plan_to_json(compiled.physical))
        return 0
    print("== parsed ==")
    print(compiled.logical.dump())
    if args.explain_rbo:
        for name, dump in compiled.rbo_trace:
            print(f"== after {name} ==")
            print(dump)
    print("== after RBO ==")
    print(compiled.rewritten.dump())
    print("== typecheck ==")
    for alias in sorted(compiled.pattern.vertices):
        print(f"{alias}: {compiled.pattern.vertices[alias].constraint.render()}")
    for alias in sorted(compiled.pattern.edges):
        print(f"{alias}: {compiled.pattern.edges[alias].constraint.render()}")
    print("== physical ==")
    print(dump_physical(compiled.physical))
    if compiled.join_position is not None:
        print(f"join vertex position: ({compiled.join_position[0]}, {compiled.join_position[1]})")
    return 0


def cmd_run(args) -> int:
    config = load_config(args.config)
    schema, g = _load_dataset(args)
    gl, lo = _stats(args, schema, g, config)
    params = _params(args)
    compiled = compile_query(
        _query_text(args), schema, gl, lo, params=params, config=config,
        inference=not args.no_inference, edge_distinct=args.edge_distinct,
    )
    if compiled.invalid:
        print("pattern is INVALID under the schema; empty result", file=sys.stderr)
        return 0
    table = execute(
        compiled.physical, g, params,
        edge_distinct=args.edge_distinct,
        deadline_seconds=config.wall_clock_seconds,
    )
    if args.format == "json":
        print(json.dumps(table_to_json_rows(table, g), indent=2, sort_keys=True))
    else:
        sys.stdout.write(table_to_csv(table, g))
    return 0


def cmd_bench(args) -> int:
    config = load_config(args.config)
    schema, g = _load_dataset(args)
    gl, lo = _stats(args, schema, g, config)
    params = _params(args)
    compiled = compile_query(
        _query_text(args), schema, gl, lo, params=params, config=config
    )
    if compiled.invalid:
        print("pattern is INVALID under the schema; nothing to bench", file=sys.stderr)
        return 0
    weights = CostWeights(config.alpha_expand, config.alpha_join)
    tail = compiled.rewritten.tail()
    plans = [("optimized", compiled.physical, compiled.cost)]
    if args.plans.startswith("random:"):
        n = int(args.plans.split(":", 1)[1])
        rng = random.Random(args.seed)
        for i in range(n):
            tree, cost = random_plan(compiled.pattern, gl, lo, rng, weights)
            phys = finalize_plan(compiled.pattern, tree, tail, cost)
            plans.append((f"random{i}", phys, cost))
    elif args.plans == "all":
        from .cbo import enumerate_plans

        for i, (tree, cost) in enumerate(
            sorted(enumerate_plans(compiled.pattern, gl, lo, weights), key=lambda tc: tc[1])
        ):
            phys = finalize_plan(compiled.pattern, tree, tail, cost)
            plans.append((f"plan{i}", phys, cost))
    else:
        raise GoptError(f"--plans must be 'all' or 'random:N', got {args.plans!r}")
    rows = []
    for label, phys, cost in plans:
        started = time.monotonic()
        _, _, total = count_intermediate(phys, g, params)
        elapsed = time.monotonic() - started
        table = execute(phys, g, params)
        rows.append(
            BenchRow(
                label=label,
                kind="optimized" if label == "optimized" else "random",
                est_cost=cost,
                runtime_s=elapsed,
                intermediate_rows=total,
                result_rows=len(table.rows),
            )
        )
        print(
            f"{label:>12}  est_cost={cost:<12g} runtime={elapsed:.4f}s "
            f"intermediate={total} results={len(table.rows)}"
        )
    paths = write_bench_report(rows, args.out_dir, title=_query_text(args)[:60])
    print(f"report: {paths['csv']}  figure: {paths['figure']}")
    return 0


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="gopt",
        description="Optimize and execute pattern-relational graph queries",
    )
    ap.add_argument("--config", help="config JSON (or set GOPT_CONFIG)")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("gen", help="write a built-in fixture dataset")
    p.add_argument("--fixture", choices=["marketplace", "social", "transfer"], required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=None, help="defaults to the fixture's own seed")
    p.set_defaults(fn=cmd_gen)

    p = sub.add_parser("load", help="validate a schema and graph")
    _add_dataset_args(p)
    p.set_defaults(fn=cmd_load)

    p = sub.add_parser("glogue", help="statistics catalogue")
    gsub = p.add_subparsers(dest="glogue_cmd", required=True)
    pb = gsub.add_parser("build")
    _add_dataset_args(pb)
    pb.add_argument("--k", type=int, default=None)
    pb.add_argument("--out", required=True)
    ps = gsub.add_parser("show")
    ps.add_argument("--stats", required=True)
    ps.add_argument("--limit", type=int, default=0)
    p.set_defaults(fn=cmd_glogue)

    p = sub.add_parser("typecheck", help="infer and validate pattern types")
    p.add_argument("--schema", required=True)
    _add_query_args(p)
    p.set_defaults(fn=cmd_typecheck)

    p = sub.add_parser("explain", help="show plans after parse, RBO and CBO")
    _add_dataset_args(p)
    p.add_argument("--stats", help="prebuilt catalogue JSON")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--json", action="store_true", help="emit the physical plan as JSON")
    p.add_argument("--explain-rbo", action="store_true", help="plan after each rule pass")
    p.add_argument("--no-inference", action="store_true")
    _add_query_args(p)
    p.set_defaults(fn=cmd_explain)

    p = sub.add_parser("run", help="execute a query")
    _add_dataset_args(p)
    p.add_argument("--stats", help="prebuilt catalogue JSON")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--edge-distinct", action="store_true")
    p.add_argument("--no-inference", action="store_true")
    _add_query_args(p)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("bench", help="compare the optimized plan against alternatives")
    _add_dataset_args(p)
    p.add_argument("--stats", help="prebuilt catalogue JSON")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--plans", default="random:10", help="all | random:N")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default="bench_out")
    _add_query_args(p)
    p.set_defaults(fn=cmd_bench)
    return ap


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.fn(args)
    except GoptError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
