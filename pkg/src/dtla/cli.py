"""Command line entry point: ``dtla <command> FILE [options]``."""

from __future__ import annotations

import argparse
import json
import sys

from . import bounds, classify, diffs, normalize, removal
from .errors import DtlaError, NotApplicable, NotTotal, ParseError, PreconditionViolation, SemanticError, TreeError
from .fileformat import load, unparse
from .transducer import check_input_tree, eval_state, eval_tree, is_initialized, trim, validate
from .trees import format_address, parse_address, parse_tree, to_text

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INVALID = 3
EXIT_NOT_APPLICABLE = 4


class UsageError(Exception):
    pass


def _emit(payload: dict, as_json: bool, lines: list[str]) -> None:
    if as_json:
        print(json.dumps(payload, indent=2, sort_keys=False))
    else:
        print("\n".join(lines))


def _write(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _tree_arg(text: str):
    try:
        return parse_tree(text)
    except TreeError as exc:
        raise UsageError(f"bad --tree: {exc}") from exc


def cmd_validate(M, args) -> int:
    rep = validate(M)
    print(f"ok: {len(M.states)} states, {len(M.P)} look-ahead states, {len(M.rules)} rules")
    for f in rep.findings:
        print(f"warning: {f}", file=sys.stderr)
    return EXIT_OK


def cmd_run(M, args) -> int:
    s = _tree_arg(args.tree)
    try:
        check_input_tree(M, s, extended=args.extended)
    except SemanticError as exc:
        raise UsageError(f"bad --tree: {exc}") from exc
    if args.state is not None:
        if args.state not in M.states:
            raise UsageError(f"unknown state {args.state!r}")
        out = eval_state(M, args.state, s)
    else:
        out = eval_tree(M, s)
    print("undefined" if out is None else to_text(out))
    return EXIT_OK


def cmd_classify(M, args) -> int:
    rep = classify.classify(M)
    data = rep.to_json()
    _emit(data, args.json, [f"{k}: {json.dumps(v)}" for k, v in data.items()])
    return EXIT_OK


def cmd_normalize(M, args) -> int:
    trace = normalize.normalize(M, args.to)
    text = unparse(trace.result)
    if args.json:
        print(json.dumps(trace.to_json(), indent=2), file=sys.stderr if args.output in (None, "-") else sys.stdout)
    _write(text, args.output)
    return EXIT_OK


def cmd_bounds(M, args) -> int:
    rep = bounds.bound_report(M)
    if args.auto:
        if rep.auto is None:
            raise NotApplicable(f"no difference bound: {rep.class_reason}; {rep.h_a.justification}")
        if args.json:
            print(json.dumps({"auto": rep.auto, "autoSource": rep.auto_source}))
        else:
            print(rep.auto)
        return EXIT_OK
    data = rep.to_json()
    _emit(data, args.json, [f"{k}: {json.dumps(v)}" for k, v in data.items()])
    return EXIT_OK


def cmd_diff(M, args) -> int:
    if args.max_context_nodes < 1:
        raise UsageError("--max-context-nodes must be positive")
    rep = diffs.enumerate_diffs(trim(M), args.max_context_nodes)
    data = rep.to_json()
    lines = [f"budget: {rep.budget} context nodes ({rep.contexts} contexts explored)"]
    lines += [f"tree: {t}" for t in data["trees"]]
    lines += ["tuple: (" + ", ".join(t) + ")" for t in data["tuples"]]
    lines.append(f"max height: {data['maxHeight']}")
    if not rep.exhausted:
        lines.append("note: exploration hit its behaviour limit; values are lower bounds")
    _emit(data, args.json, lines)
    return EXIT_OK


def cmd_remove_la(M, args) -> int:
    if args.unbounded:
        bound = "unbounded"
    elif args.bound is not None:
        bound = args.bound
    else:
        bound = "auto"
    out = removal.remove_lookahead(M, bound, cap=args.cap, node_cap=args.node_cap or None)
    data = out.to_json()
    if out.dtop is not None and out.answer == "yes":
        header = "".join(f"# {q} = ({', '.join(tup)})\n" for q, tup in out.tuples.items())
        text = header + unparse(out.dtop)
        if args.output is not None:
            _write(text, args.output)
        elif not args.json:
            sys.stdout.write(text)
        data["dtop"] = unparse(out.dtop)
    if args.json:
        print(json.dumps(data, indent=2))
    elif out.answer != "yes":
        print(f"answer: {out.answer}")
        print(f"reason: {out.reason}")
        print(f"bound: {out.bound}")
        if out.witness:
            for k, v in out.witness.items():
                print(f"  {k}: {v}")
    if out.reason == "cap-exceeded":
        print("search limit reached; the answer is unknown", file=sys.stderr)
    return EXIT_OK


def _initialized_uniform(M):
    """M itself when already initialized and la-uniform, else the prepared form."""
    T = trim(M)
    if is_initialized(T) and classify.infer_la_map(T).ok:
        return classify.with_la_map(T)
    return bounds.prepare(T)


def cmd_depgraph(M, args) -> int:
    W = _initialized_uniform(M)
    G = bounds.build_depgraph(W)
    if args.dot:
        _write(G.to_dot(), args.output)
        return EXIT_OK
    wd = bounds.weak_depth_uniform(W, G)
    data = {
        "nodes": len(G.nodes),
        "entries": ["|".join(map(str, n)) for n in G.entries],
        "edges": [
            {"src": "|".join(map(str, e.src)), "dst": "|".join(map(str, e.dst)), "label": e.label_text(), "weight": e.weight}
            for e in G.edges
        ],
        "weakDepthUniform": wd.ok,
        "hPrime": wd.h_prime,
        "violations": [w.to_json() for w in wd.violations],
    }
    text = json.dumps(data, indent=2) + "\n"
    _write(text, args.output)
    return EXIT_OK


def cmd_origin(M, args) -> int:
    s = _tree_arg(args.tree)
    try:
        check_input_tree(M, s, extended=False)
        v = parse_address(args.node)
    except (SemanticError, TreeError) as exc:
        raise UsageError(str(exc)) from exc
    W = _initialized_uniform(M)
    o = diffs.origin(W, s, v)
    view = diffs.origin_rhs_view(W, s, o)
    print(
        json.dumps(
            {
                "node": format_address(v),
                "state": o.state,
                "inputNode": format_address(o.node),
                "rhsNode": format_address(o.rhs_node),
                "rhsView": None if view is None else to_text(view),
            },
            indent=2,
        )
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dtla", description="Top-down tree transducers with regular look-ahead.")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, help):
        p = sub.add_parser(name, help=help)
        p.add_argument("file", help="transducer file")
        p.set_defaults(fn=fn)
        return p

    add("validate", cmd_validate, "parse and check a transducer file")

    p = add("run", cmd_run, "translate one input tree")
    p.add_argument("--tree", required=True)
    p.add_argument("--state", help="translate with this state instead of the axiom")
    p.add_argument("--extended", action="store_true", help="allow look-ahead states as leaves")

    p = add("classify", cmd_classify, "report syntactic and normal-form classes")
    p.add_argument("--json", action="store_true")

    p = add("normalize", cmd_normalize, "bring into a normal form")
    p.add_argument("--to", choices=normalize.STAGES, default="canonical")
    p.add_argument("-o", "--output")
    p.add_argument("--json", action="store_true", help="also print the normalization trace")

    p = add("bounds", cmd_bounds, "difference bounds")
    p.add_argument("--json", action="store_true")
    p.add_argument("--auto", action="store_true", help="print only the bound remove-la would use")

    p = add("diff", cmd_diff, "enumerate difference trees and tuples up to a context budget")
    p.add_argument("--max-context-nodes", type=int, required=True)
    p.add_argument("--json", action="store_true")

    p = add("remove-la", cmd_remove_la, "decide whether look-ahead can be removed")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--bound", type=int)
    g.add_argument("--auto-bound", action="store_true")
    g.add_argument("--unbounded", action="store_true")
    p.add_argument("--cap", type=int, default=100_000, help="maximum number of synthesized states")
    p.add_argument("--node-cap", type=int, default=200_000, help="maximum size of one state tuple, 0 for none")
    p.add_argument("-o", "--output")
    p.add_argument("--json", action="store_true")

    p = add("depgraph", cmd_depgraph, "dependency graph of the prepared transducer")
    p.add_argument("--dot", action="store_true")
    p.add_argument("-o", "--output")

    p = add("origin", cmd_origin, "input origin of an output node")
    p.add_argument("--tree", required=True)
    p.add_argument("--node", required=True)
    return ap


def main(argv: list[str] | None = None) -> int:
    sys.setrecursionlimit(max(sys.getrecursionlimit(), 100_000))
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        M = load(args.file)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        print(f"{args.file}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except SemanticError as exc:
        print(f"{args.file}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        return args.fn(M, args)
    except BrokenPipeError:
        sys.stderr.close()
        return EXIT_OK
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NotApplicable as exc:
        print(f"not applicable: {exc}", file=sys.stderr)
        return EXIT_NOT_APPLICABLE
    except (NotTotal, PreconditionViolation, SemanticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except DtlaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
