"""Document databases over a rootless CNF grammar, edited by concatenation.

Edits only ever append rules and arena nodes, so results of earlier
documents stay valid and enumerate identically after any number of edits.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Union

from .errors import FormatError, MarkerInUse, NameClash, UnknownDoc
from .evaluation import QueryDataStructure
from .slp import (
    IDENT_RE,
    NonTerminal,
    Slp,
    Terminal,
    binarize,
    iter_content_lines,
    make_slp,
    parse_slp_lines,
    serialize_slp,
)
from .spanners import END
from .ecs.enumerate import EnumerationSession


@dataclass(frozen=True)
class Concat:
    left: "ConcatExpr"
    right: "ConcatExpr"


ConcatExpr = Union[str, Concat]


def expr_size(phi: ConcatExpr) -> int:
    """Number of concat operations."""
    if isinstance(phi, str):
        return 0
    return 1 + expr_size(phi.left) + expr_size(phi.right)


def concat(*names: ConcatExpr) -> ConcatExpr:
    """Left-nested chain ``concat(concat(a, b), c)``."""
    out = names[0]
    for nm in names[1:]:
        out = Concat(out, nm)
    return out


class DocDatabase:
    """Rootless CNF grammar plus named documents.

    ``rules`` and ``lens`` are append-only; ``docs`` maps names to
    non-terminals.
    """

    def __init__(self, slp: Slp, docs: dict[str, str]):
        if slp.start is not None:
            slp = make_slp(slp.rules)
        slp = binarize(slp)
        self.rules: dict[str, tuple] = dict(slp.rules)
        self.lens: dict[str, int] = dict(slp.lens)
        self.order: list[str] = list(slp.order)
        self.docs: dict[str, str] = {}
        self._fresh = 0
        self.companions: dict[str, str] = {}
        self.end_rule: str | None = None
        for name, nt in docs.items():
            if nt not in self.rules:
                raise UnknownDoc(f"doc {name} refers to missing non-terminal {nt}")
            self.docs[name] = nt

    # ------------------------------------------------------------------

    def slp(self) -> Slp:
        return make_slp(self.rules)

    def terminals(self) -> set[str]:
        return {y.char for body in self.rules.values() for y in body if isinstance(y, Terminal)}

    def doc_len(self, name: str) -> int:
        return self.lens[self.nonterminal(name)]

    def nonterminal(self, name: str) -> str:
        try:
            return self.docs[name]
        except KeyError:
            raise UnknownDoc(f"no document named {name}") from None

    def _new_nt(self, base: str) -> str:
        while True:
            self._fresh += 1
            cand = f"{base}__{self._fresh}"
            if cand not in self.rules:
                return cand

    def _append(self, name: str, body: tuple) -> None:
        self.rules[name] = body
        self.lens[name] = sum(1 if isinstance(y, Terminal) else self.lens[y.name] for y in body)
        self.order.append(name)

    # ------------------------------------------------------------------

    def apply_concat(self, phi: ConcatExpr, new_name: str) -> tuple[str, list[str]]:
        """Add document ``new_name`` = eval(phi). Returns (its non-terminal, new rules)."""
        if new_name in self.docs:
            raise NameClash(f"document {new_name} already exists")
        if not IDENT_RE.match(new_name):
            raise NameClash(f"invalid document name {new_name!r}")
        _check_leaves(self, phi)
        if isinstance(phi, str):
            self.docs[new_name] = self.docs[phi]
            return self.docs[phi], []
        created: list[str] = []
        # post-order without recursion
        value: dict[int, str] = {}
        stack: list[tuple[ConcatExpr, bool]] = [(phi, False)]
        while stack:
            node, ready = stack.pop()
            if isinstance(node, str):
                value[id(node)] = self.docs[node]
                continue
            if not ready:
                stack.append((node, True))
                stack.append((node.right, False))
                stack.append((node.left, False))
                continue
            l = value[id(node.left)] if not isinstance(node.left, str) else self.docs[node.left]
            r = value[id(node.right)] if not isinstance(node.right, str) else self.docs[node.right]
            nt = new_name if node is phi and new_name not in self.rules else self._new_nt(new_name)
            self._append(nt, (NonTerminal(l), NonTerminal(r)))
            created.append(nt)
            value[id(node)] = nt
        self.docs[new_name] = value[id(phi)]
        return value[id(phi)], created

    def attach_end_marker(self) -> list[str]:
        """Add ``H -> '#'`` and ``A_end -> A H`` for every named doc; returns new rules."""
        if self.end_rule is None and END in self.terminals():
            raise MarkerInUse("'#' already occurs in the database")
        created = []
        if self.end_rule is None:
            self.end_rule = self._new_nt("H")
            self._append(self.end_rule, (Terminal(END),))
            created.append(self.end_rule)
        for name, nt in self.docs.items():
            if nt in self.companions:
                continue
            comp = self._new_nt(f"{nt}_end")
            self._append(comp, (NonTerminal(nt), NonTerminal(self.end_rule)))
            self.companions[nt] = comp
            created.append(comp)
        return created

    def companion(self, name: str) -> str:
        nt = self.nonterminal(name)
        if nt not in self.companions:
            self.attach_end_marker()
        return self.companions[nt]

    def serialize(self) -> str:
        text = serialize_slp(make_slp(self.rules))
        return text + "".join(f"doc {n} {nt}\n" for n, nt in self.docs.items())


def _check_leaves(db: DocDatabase, phi: ConcatExpr) -> None:
    stack = [phi]
    while stack:
        node = stack.pop()
        if isinstance(node, str):
            if node not in db.docs:
                raise UnknownDoc(f"no document named {node}")
        else:
            stack.extend((node.left, node.right))


def attach_end_marker(db: DocDatabase) -> DocDatabase:
    db.attach_end_marker()
    return db


def parse_database(text: str) -> DocDatabase:
    lines = iter(iter_content_lines(text))
    first = next(lines, None)
    if first is None or first[1] != ["slp", "v1"]:
        raise FormatError("missing `slp v1` header", first[0] if first else 1)
    slp_lines = []
    docs: dict[str, str] = {}
    for lineno, toks in lines:
        if toks[0] == "doc":
            if len(toks) != 3:
                raise FormatError("expected `doc <name> <NonTerminal>`", lineno)
            if toks[1] in docs:
                raise NameClash(f"line {lineno}: duplicate doc {toks[1]}")
            docs[toks[1]] = toks[2]
        else:
            slp_lines.append((lineno, toks))
    slp = parse_slp_lines(slp_lines)
    return DocDatabase(slp, docs)


# ---------------------------------------------------------------------------
# query structures


def build_database_structure(db: DocDatabase, anna) -> QueryDataStructure:
    qds = QueryDataStructure(anna)
    qds.add_rules(db.rules)
    qds.process(db.order)
    return qds


def extend_query_structure(qds: QueryDataStructure, new_rules: Iterable[str], db: DocDatabase | dict) -> QueryDataStructure:
    """Matrices for new (CNF) rules, bottom-up; nothing existing is touched."""
    rules = db.rules if isinstance(db, DocDatabase) else db
    names = list(new_rules)
    qds.add_rules({n: rules[n] for n in names})
    qds.process(names)
    return qds


def query_doc(qds: QueryDataStructure, db: DocDatabase, doc_name: str, end_marked: bool = False) -> EnumerationSession:
    nt = db.companion(doc_name) if end_marked else db.nonterminal(doc_name)
    if nt not in qds.rules:
        extend_query_structure(qds, [n for n in db.order if n not in qds.rules], db)
    node = qds.accepting_node(nt)
    session = EnumerationSession(qds.arena, node)
    session.qds = qds
    return session


class EditSession:
    """A database plus one query structure per automaton, kept in sync."""

    def __init__(self, db: DocDatabase, automata: Iterable = (), end_marked: Iterable[bool] | None = None):
        self.db = db
        self.automata = list(automata)
        self.end_marked = list(end_marked) if end_marked is not None else [False] * len(self.automata)
        if any(self.end_marked):
            db.attach_end_marker()
        self.structures = [build_database_structure(db, a) for a in self.automata]

    def concat(self, phi: ConcatExpr, new_name: str) -> dict:
        before = [q.arena.counters.copy() for q in self.structures]
        nt, created = self.db.apply_concat(phi, new_name)
        if any(self.end_marked):
            created += self.db.attach_end_marker()
        for qds in self.structures:
            extend_query_structure(qds, created, self.db)
        ops = [int((q.arena.counters - b).sum()) for q, b in zip(self.structures, before)]
        return {"doc": new_name, "nonterminal": nt, "new_rules": created, "ops": ops}

    def query(self, doc_name: str, which: int = 0) -> EnumerationSession:
        return query_doc(self.structures[which], self.db, doc_name, self.end_marked[which])


def parse_script(text: str) -> list[tuple[str, list[str]]]:
    """``concat <new> = <n1> <n2> ...`` lines; anything else is rejected."""
    out = []
    for lineno, toks in iter_content_lines(text):
        op = toks[0]
        if op != "concat":
            raise UnsupportedEdit(op, lineno)
        if len(toks) < 4 or toks[2] != "=":
            raise FormatError("expected `concat <new> = <name1> <name2>`", lineno)
        out.append((toks[1], toks[3:]))
    return out


class UnsupportedEdit(Exception):
    """Only concatenation is implemented; extract/delete/insert/copy are not."""

    def __init__(self, op: str, line: int | None = None):
        self.op = op
        self.line = line
        super().__init__(
            f"line {line}: edit operation {op!r} is out of scope; only `concat` is supported"
        )
