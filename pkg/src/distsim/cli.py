"""Command-line harness: graph generation, native runs, simulations, routing
demos and trace verification.

Exit codes are fixed so CI can consume the tool: 0 for a clean result, 1 when
a budget was violated or a claimed bound failed, 2 for usage or input errors.
Identical invocations produce byte-identical output files.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

from .adapters import (
    SimulationRefused,
    simulate_cc_on_semimpc,
    simulate_congest_on_semimpc,
    simulate_semimpc_on_cc,
)
from .algorithms import (
    cc_boruvka_connectivity,
    congest_flood_components,
    semimpc_forest_merge_connectivity,
)
from .core import Graph, GraphFormatError, RoundTrace, gen_graph, load_graph
from .engines import (
    ModelKind,
    ModelParams,
    check_trace,
    distribute_edges,
    run_clique,
    run_congest,
    run_mpc,
)
from .routing import DemandMatrix, execute_schedule, plan_routing

ALGORITHM_MODELS = {
    "boruvka": ModelKind.CLIQUE,
    "flood": ModelKind.CONGEST,
    "forest-merge": ModelKind.SEMI_MPC,
}

MODEL_FLAGS = {
    "clique": ModelKind.CLIQUE,
    "congest": ModelKind.CONGEST,
    "semimpc": ModelKind.SEMI_MPC,
}

CONSTANT_KEYS = ("c_space", "c_traffic", "c_total", "c_machines", "c_load",
                 "surcharge", "polylog_exp", "word_width")


class UsageError(Exception):
    pass


def _dump_json(doc: dict, path: str | None) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _digest(obj) -> str:
    blob = json.dumps(obj, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def _parse_constants(pairs: list[str]) -> dict[str, int]:
    out: dict[str, int] = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise UsageError(f"constants must look like key=value, got {pair!r}")
        key, _, value = pair.partition("=")
        if key not in CONSTANT_KEYS:
            raise UsageError(
                f"unknown constant {key!r}; expected one of {', '.join(CONSTANT_KEYS)}")
        try:
            out[key] = int(value)
        except ValueError:
            raise UsageError(f"constant {key} needs an integer, got {value!r}") from None
    return out


def _load_graph_file(path: str) -> Graph:
    return load_graph(Path(path).read_text(encoding="utf-8"))


def _make_program(algorithm: str, g: Graph, machines: int):
    if algorithm == "boruvka":
        return cc_boruvka_connectivity(g.n)
    if algorithm == "flood":
        return congest_flood_components(g.n)
    if algorithm == "forest-merge":
        return semimpc_forest_merge_connectivity(g.n, machines)
    raise UsageError(f"unknown algorithm {algorithm!r}")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_gen(args) -> int:
    g = gen_graph(args.kind, args.n, prob=args.p, seed=args.seed)
    Path(args.out).write_text(g.to_edge_list_text(), encoding="utf-8")
    print(f"wrote {args.kind} graph: n={g.n} m={g.m} -> {args.out}")
    return 0


def cmd_run(args) -> int:
    constants = _parse_constants(args.constants)
    g = _load_graph_file(args.graph)
    model = MODEL_FLAGS[args.model]
    if ALGORITHM_MODELS[args.algorithm] != model:
        raise UsageError(
            f"algorithm {args.algorithm!r} runs on "
            f"{ALGORITHM_MODELS[args.algorithm].value}, not {model.value}")

    c_space = constants.get("c_space", 4)
    c_traffic = constants.get("c_traffic", 4)
    width = constants.get("word_width")
    prog = _make_program(args.algorithm, g, args.machines)
    if model == ModelKind.CLIQUE:
        params = ModelParams.clique(g.n, word_width_bits=width,
                                    c_space=c_space, c_traffic=c_traffic)
        result = run_clique(prog, g, params)
    elif model == ModelKind.CONGEST:
        params = ModelParams.congest(g.n, word_width_bits=width,
                                     c_space=c_space, c_traffic=c_traffic)
        result = run_congest(prog, g, params)
    else:
        if not (1 <= args.machines <= g.n):
            raise UsageError(f"need 1 <= machines <= {g.n}")
        params = ModelParams.semi_mpc(
            g.n, args.machines, ell=2 * g.m, word_width_bits=width,
            c_space=c_space, c_traffic=c_traffic).with_min_delta()
        inputs = distribute_edges(g, args.machines, args.seed)
        result = run_mpc(prog, inputs, params)
        result.graph = g

    doc = result.to_json_dict()
    doc["config"] = {
        "algorithm": args.algorithm,
        "model": args.model,
        "graph": str(args.graph),
        "machines": args.machines,
        "seed": args.seed,
        "constants": constants,
    }
    _dump_json(doc, args.out)

    print(f"model={args.model} algorithm={args.algorithm} n={g.n} m={g.m}")
    print(f"rounds={result.rounds_used} "
          f"max_traffic={result.trace.max_traffic()} "
          f"max_space={max(result.trace.space_high_water(), default=0)}")
    print(f"violations={len(result.violations)} "
          f"output_digest={_digest(result.outputs)}")
    if result.violations:
        worst = result.violations[0]
        print(f"first violation: {worst.rule} at round {worst.round} "
              f"(measured {worst.measured}, allowed {worst.allowed})")
        return 1
    return 0


def cmd_simulate(args) -> int:
    constants = _parse_constants(args.constants)
    g = _load_graph_file(args.graph)
    source = MODEL_FLAGS[args.source]
    target = MODEL_FLAGS[args.target]
    if ALGORITHM_MODELS[args.algorithm] != source:
        raise UsageError(
            f"algorithm {args.algorithm!r} runs on "
            f"{ALGORITHM_MODELS[args.algorithm].value}, not {source.value}")

    c_space = constants.get("c_space", 4)
    c_traffic = constants.get("c_traffic", 4)
    prog = _make_program(args.algorithm, g, args.machines)

    if (source, target) == (ModelKind.CLIQUE, ModelKind.SEMI_MPC):
        report = simulate_cc_on_semimpc(prog, g, c_space=c_space,
                                        c_traffic=c_traffic, seed=args.seed)
    elif (source, target) == (ModelKind.SEMI_MPC, ModelKind.CLIQUE):
        if not (1 <= args.machines <= g.n):
            raise UsageError(f"need 1 <= machines <= {g.n}")
        params = ModelParams.semi_mpc(
            g.n, args.machines, ell=2 * g.m,
            c_space=c_space, c_traffic=c_traffic).with_min_delta()
        inputs = distribute_edges(g, args.machines, args.seed)
        report = simulate_semimpc_on_cc(
            prog, inputs, params,
            surcharge=constants.get("surcharge", 2))
    elif (source, target) == (ModelKind.CONGEST, ModelKind.SEMI_MPC):
        report = simulate_congest_on_semimpc(
            prog, g, round_budget=args.round_budget,
            c_space=c_space, c_traffic=c_traffic,
            c_machines=constants.get("c_machines", 2),
            c_load=constants.get("c_load", 2), seed=args.seed)
    else:
        raise UsageError(f"unsupported pair: {args.source} -> {args.target}")

    doc = report.to_json_dict()
    doc["config"] = {
        "algorithm": args.algorithm,
        "from": args.source,
        "to": args.target,
        "graph": str(args.graph),
        "machines": args.machines,
        "round_budget": args.round_budget,
        "seed": args.seed,
        "constants": constants,
    }
    _dump_json(doc, args.out)

    print(f"simulate {args.source} -> {args.target} "
          f"algorithm={args.algorithm} n={g.n} m={g.m}")
    print(f"native_rounds={report.native.rounds_used} "
          f"simulated_rounds={report.simulated.rounds_used}")
    for name, good in sorted(report.bound_checks.items()):
        print(f"  {name}: {'pass' if good else 'FAIL'}")
    if not report.all_ok:
        failed = [k for k, v in sorted(report.bound_checks.items()) if not v]
        print(f"bound failure: {', '.join(failed)}")
        return 1
    return 0


def cmd_route(args) -> int:
    doc = json.loads(Path(args.demand).read_text(encoding="utf-8"))
    rows = doc["matrix"] if isinstance(doc, dict) else doc
    if not isinstance(rows, list) or not rows:
        raise UsageError("demand file must hold a dense square array")
    dm = DemandMatrix.from_rows(rows)
    constants = _parse_constants(args.constants)
    sched = plan_routing(dm, c_traffic=constants.get("c_traffic", 4))
    payloads = {(s, d, q): (s * 31 + d * 7 + q) % (1 << 8)
                for (s, d, q) in sched.assignment}
    record = execute_schedule(sched, payloads, value_width=8)

    out = record.run.to_json_dict()
    out["routing"] = sched.to_json_dict()
    out["delivered_words"] = sum(len(t) for t in record.delivered)
    _dump_json(out, args.out)

    print(f"demand n={dm.n} words={dm.total_words} max_degree={dm.max_degree}")
    print(f"schedule_rounds={sched.num_rounds} "
          f"engine_rounds={record.run.rounds_used} "
          f"delivered={out['delivered_words']}")
    return 0 if record.run.clean else 1


def cmd_verify(args) -> int:
    try:
        doc = json.loads(Path(args.trace).read_text(encoding="utf-8"))
        params = ModelParams.from_json_dict(doc["params"])
        trace = RoundTrace.from_per_round_json(params.p, doc["per_round"])
        graph = None
        if doc.get("graph") is not None:
            graph = Graph(n=doc["graph"]["n"],
                          edges=tuple((int(u), int(v))
                                      for u, v in doc["graph"]["edges"]))
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: malformed trace file: {exc}", file=sys.stderr)
        return 2
    if params.kind == ModelKind.CONGEST and graph is None:
        print("error: CONGEST trace lacks its graph", file=sys.stderr)
        return 2

    violations = check_trace(trace, params, graph)
    print(f"model={params.kind.value} rounds={trace.num_rounds} "
          f"violations={len(violations)}")
    for v in violations[:10]:
        print(f"  {v.rule} at round {v.round}: "
              f"measured {v.measured}, allowed {v.allowed}")
    return 0 if not violations else 1


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="distsim",
        description="Round-based simulator for CONGEST, congested clique, "
                    "MPC and semi-MPC with budget checking and cross-model "
                    "simulation adapters.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate an edge-list graph file")
    p.add_argument("--kind", required=True,
                   choices=["path", "cycle", "complete", "gnp", "star"])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float, default=None,
                   help="edge probability for gnp")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("run", help="run an algorithm natively under a model")
    p.add_argument("--model", required=True, choices=sorted(MODEL_FLAGS))
    p.add_argument("--algorithm", required=True,
                   choices=sorted(ALGORITHM_MODELS))
    p.add_argument("--graph", required=True)
    p.add_argument("--machines", type=int, default=4,
                   help="machine count for semi-MPC runs")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--constants", nargs="*", default=[],
                   metavar="KEY=VALUE")
    p.add_argument("--out", default="run_result.json")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("simulate",
                       help="run an algorithm through a simulation adapter")
    p.add_argument("--from", dest="source", required=True,
                   choices=sorted(MODEL_FLAGS))
    p.add_argument("--to", dest="target", required=True,
                   choices=sorted(MODEL_FLAGS))
    p.add_argument("--algorithm", required=True,
                   choices=sorted(ALGORITHM_MODELS))
    p.add_argument("--graph", required=True)
    p.add_argument("--machines", type=int, default=4)
    p.add_argument("--round-budget", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--constants", nargs="*", default=[],
                   metavar="KEY=VALUE")
    p.add_argument("--out", default="simulation_report.json")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("route",
                       help="plan and execute a routing demand matrix")
    p.add_argument("--demand", required=True,
                   help="JSON file holding a dense n x n word-count array")
    p.add_argument("--constants", nargs="*", default=[],
                   metavar="KEY=VALUE")
    p.add_argument("--out", default="route_result.json")
    p.set_defaults(func=cmd_route)

    p = sub.add_parser("verify", help="re-check an emitted trace file")
    p.add_argument("--trace", required=True)
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except GraphFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SimulationRefused as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
