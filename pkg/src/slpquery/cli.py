"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 input error, 3 budget or limit hit.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import sys
import time
from pathlib import Path

from . import _accel
from .automaton import AnnA, determinize, naive_eval, parse_anna, serialize_anna
from .edits import EditSession, UnsupportedEdit, concat, parse_database, parse_script
from .errors import InputError, LimitError, SlpQueryError
from .evaluation import build_query_structure
from .ecs.enumerate import EnumerationSession
from .families import counter_automaton
from .slp import doubling_slp, expand, iter_content_lines, parse_slp
from .spanners import (
    ExtendedVA,
    SuccinctAnnA,
    VarSetVA,
    compile_spanner,
    eva_run_search,
    format_mapping,
    mapping_of_annotation,
    parse_spanner,
    spanner_session,
    va_run_search,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FileInput(f"{path}: {exc.strerror}") from None


class FileInput(InputError):
    pass


def _header(text: str) -> str:
    for _, toks in iter_content_lines(text):
        return toks[0]
    return ""


def load_query(path: str):
    text = _read(path)
    head = _header(text)
    if head == "anna":
        return parse_anna(text)
    if head in ("eva", "va"):
        return parse_spanner(text)
    raise FileInput(f"{path}: unknown query header {head!r}")


def _emit(line: str) -> None:
    sys.stdout.write(line + "\n")


def format_annotation(ann) -> str:
    if not ann:
        return "()"
    return " ".join(f"{sym}@{pos}" for sym, pos in ann)


def _print_results(results, spanner: bool, fmt: str) -> int:
    count = 0
    for item in results:
        count += 1
        if spanner:
            if fmt == "json-lines":
                _emit(json.dumps({"mapping": {x: [s.i, s.j] for x, s in sorted(item.items())}}))
            else:
                _emit(format_mapping(item))
        else:
            if fmt == "json-lines":
                _emit(json.dumps({"pairs": [[str(s), p] for s, p in item]}, ensure_ascii=False))
            else:
                _emit(format_annotation(item))
    return count


def _take(it, limit):
    # islice stops before pulling the element past the limit
    return it if limit is None else itertools.islice(it, limit)


# ---------------------------------------------------------------------------
# commands


def cmd_validate(args) -> int:
    text = _read(args.file)
    head = _header(text)
    if head == "slp":
        slp = parse_slp(text)
        root = slp.start
        info = f"slp ok: {len(slp.rules)} rules, size {slp.size}"
        if root is not None:
            info += f", doc_len({root}) = {slp.lens[root]}"
        else:
            info += ", rootless"
    elif head == "anna":
        a = parse_anna(text)
        info = f"anna ok: {len(a.states)} states, {len(a.transitions)} transitions"
    elif head in ("eva", "va"):
        q = parse_spanner(text)
        info = f"{head} ok: {len(q.states)} states, variables {','.join(sorted(q.variables)) or '-'}"
    else:
        raise FileInput(f"{args.file}: unknown header {head!r}")
    _emit(info)
    return 0


def cmd_expand(args) -> int:
    slp = parse_slp(_read(args.slp))
    _emit(expand(slp, args.root, limit=args.limit))
    return 0


def cmd_eval(args) -> int:
    slp = parse_slp(_read(args.slp))
    query = load_query(args.query)
    spanner = not isinstance(query, AnnA)
    if args.naive:
        doc = expand(slp, limit=args.limit)
        if isinstance(query, ExtendedVA):
            found = eva_run_search(query, doc)
            results = [dict(m) for m in sorted(found)]
        elif isinstance(query, VarSetVA):
            results = [dict(m) for m in sorted(va_run_search(query, doc))]
        else:
            a = determinize(query) if args.determinize else query
            results = sorted(naive_eval(a, doc), key=lambda ann: [(p, str(s)) for s, p in ann])
        n = _print_results(_take(results, args.max_outputs), spanner, args.format)
        if args.stats:
            print(f"outputs={n} mode=naive", file=sys.stderr)
        return 0
    t0 = time.perf_counter()
    if spanner:
        compiled = compile_spanner(query, deterministic=args.determinize)
        session = spanner_session(query, slp, compiled=compiled)
        variables = query.variables
        results = (mapping_of_annotation(ann, variables) for ann in session)
    else:
        a = determinize(query) if args.determinize else query
        qds = build_query_structure(a, slp)
        session = EnumerationSession(qds.arena, qds.root_node)
        session.qds = qds
        results = session
    build_ms = (time.perf_counter() - t0) * 1000
    n = _print_results(_take(results, args.max_outputs), spanner, args.format)
    if args.stats:
        ops = session.qds.op_counts()
        print(
            "preprocess_ops={} ({}) preprocess_ms={:.2f} arena_nodes={} outputs={} "
            "max_delay_steps={} backend={}".format(
                sum(ops.values()),
                " ".join(f"{k}={v}" for k, v in ops.items()),
                build_ms,
                len(session.qds.arena),
                n,
                session.max_delay_steps,
                _accel.BACKEND,
            ),
            file=sys.stderr,
        )
    return 0


def cmd_compile_spanner(args) -> int:
    query = load_query(args.query)
    if isinstance(query, AnnA):
        raise FileInput("compile-spanner expects an `eva v1` or `va v1` file")
    compiled = compile_spanner(query, deterministic=args.determinize)
    if isinstance(compiled, SuccinctAnnA):
        sers = compiled.sers
        _emit(f"# succinct automaton: {len(compiled.states)} states, {len(compiled.transitions)} transitions")
        _emit(f"# marker-set store: {sers.node_count} nodes, succinct size {compiled.succinct_size()}")
        for t in compiled.transitions:
            if hasattr(t, "out"):
                sets = sorted(",".join(sorted(s)) for s in sers.language(t.out))
                _emit(f"write {t.src} '{t.char}' {t.out} {t.dst}  # {len(sets)} sets")
            else:
                _emit(f"read {t.src} '{t.char}' {t.dst}")
        return 0
    sys.stdout.write(serialize_anna(compiled))
    return 0


def cmd_determinize(args) -> int:
    a = parse_anna(_read(args.anna))
    sys.stdout.write(serialize_anna(determinize(a, max_states=args.max_states)))
    return 0


def cmd_edit(args) -> int:
    db = parse_database(_read(args.db))
    script = parse_script(_read(args.script))
    queries = [load_query(p) for p in args.queries]
    automata, marked = [], []
    for q in queries:
        if isinstance(q, AnnA):
            automata.append(q)
            marked.append(False)
        else:
            automata.append(compile_spanner(q, deterministic=args.determinize))
            marked.append(True)
    session = EditSession(db, automata, marked)
    for new, names in script:
        rep = session.concat(concat(*names), new)
        ops = ",".join(str(o) for o in rep["ops"]) or "-"
        _emit(f"concat {new}: nonterminal {rep['nonterminal']} new_rules={len(rep['new_rules'])} ops={ops}")
    _emit(f"edits applied: {len(script)}")
    if args.query:
        if not automata:
            raise UsageError("--query needs at least one query file")
        s = session.query(args.query)
        if marked[0]:
            variables = queries[0].variables
            _print_results((mapping_of_annotation(a, variables) for a in s), True, args.format)
        else:
            _print_results(s, False, args.format)
    return 0


def cmd_bench(args) -> int:
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["size", "states", "doc_len", "preprocess_ops", "preprocess_ms", "outputs", "max_delay_steps"])
    if args.family == "doubling":
        cases = [(n, args.states) for n in range(args.min, args.max + 1)]
    else:
        cases = [(args.n, m) for m in args.state_list]
    for n, m in cases:
        slp = doubling_slp(n)
        a = counter_automaton(m)
        t0 = time.perf_counter()
        qds = build_query_structure(a, slp)
        ms = (time.perf_counter() - t0) * 1000
        session = EnumerationSession(qds.arena, qds.root_node)
        outputs = sum(1 for _ in _take(session, args.max_outputs))
        ops = sum(qds.op_counts().values())
        w.writerow([slp.size, m, slp.lens[slp.start], ops, f"{ms:.3f}", outputs, session.max_delay_steps])
        sys.stdout.flush()
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="slpquery", description="Query SLP-compressed documents with annotated automata.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("validate", help="parse and check an slp/anna/eva/va file")
    s.add_argument("file")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("expand", help="print the document of an SLP")
    s.add_argument("slp")
    s.add_argument("--root")
    s.add_argument("--limit", type=int, default=10**6)
    s.set_defaults(func=cmd_expand)

    s = sub.add_parser("eval", help="enumerate query results over a compressed document")
    s.add_argument("slp")
    s.add_argument("query")
    s.add_argument("--naive", action="store_true", help="decompress and use the brute-force oracle")
    s.add_argument("--limit", type=int, default=10**6, help="expansion limit for --naive")
    s.add_argument("--max-outputs", type=int, default=None)
    s.add_argument("--stats", action="store_true")
    s.add_argument("--determinize", action="store_true")
    s.add_argument("--format", choices=["compact", "json-lines"], default="compact")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("compile-spanner", help="compile an eva/va file to an annotated automaton")
    s.add_argument("query")
    s.add_argument("--determinize", action="store_true")
    s.set_defaults(func=cmd_compile_spanner)

    s = sub.add_parser("edit", help="apply a concat script to a document database")
    s.add_argument("db")
    s.add_argument("script")
    s.add_argument("queries", nargs="*")
    s.add_argument("--query", metavar="DOC")
    s.add_argument("--determinize", action="store_true")
    s.add_argument("--format", choices=["compact", "json-lines"], default="compact")
    s.set_defaults(func=cmd_edit)

    s = sub.add_parser("bench", help="CSV of preprocessing cost over generated families")
    s.add_argument("--family", choices=["doubling", "states"], default="doubling")
    s.add_argument("--min", type=int, default=10)
    s.add_argument("--max", type=int, default=20)
    s.add_argument("--states", type=int, default=3)
    s.add_argument("--n", type=int, default=12, help="grammar depth for --family states")
    s.add_argument("--state-list", type=lambda v: [int(x) for x in v.split(",")], default=[2, 4, 8])
    s.add_argument("--max-outputs", type=int, default=10, help="outputs enumerated per row; outputs here grow with doc length")
    s.set_defaults(func=cmd_bench)

    s = sub.add_parser("determinize", help="subset construction on an anna file")
    s.add_argument("anna")
    s.add_argument("--max-states", type=int, default=None)
    s.set_defaults(func=cmd_determinize)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, UnsupportedEdit) as exc:
        print(f"slpquery: {exc}", file=sys.stderr)
        return 1
    except LimitError as exc:
        print(f"slpquery: limit: {exc}", file=sys.stderr)
        return 3
    except OverflowError as exc:
        print(f"slpquery: limit: {exc}", file=sys.stderr)
        return 3
    except InputError as exc:
        print(f"slpquery: input error: {exc}", file=sys.stderr)
        return 2
    except SlpQueryError as exc:
        print(f"slpquery: {exc}", file=sys.stderr)
        return 2
    except BrokenPipeError:
        return 0


if __name__ == "__main__":
    sys.exit(main())
