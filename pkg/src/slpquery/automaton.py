"""Annotated automata: read and read-write transitions, plus oracles.

An annotation is a tuple of ``(symbol, position)`` pairs with strictly
increasing 1-based positions.
"""

from __future__ import annotations

import itertools
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Hashable, Iterable, NamedTuple, Sequence

from .errors import BudgetExceeded, DuplicateTransition, FormatError, LimitExceeded, UnknownState
from .slp import IDENT_RE, iter_content_lines, quote_char, unquote_char

Annotation = tuple  # tuple[tuple[str, int], ...]

DEFAULT_BUDGET = 1 << 20


class Read(NamedTuple):
    src: str
    char: str
    dst: str


class ReadWrite(NamedTuple):
    src: str
    char: str
    out: Hashable
    dst: str


@dataclass(frozen=True, eq=False)
class AnnA:
    """Annotated automaton. ``transitions`` keeps file order and has no duplicates."""

    states: tuple[str, ...]
    initial: str
    finals: tuple[str, ...]
    transitions: tuple[Read | ReadWrite, ...]
    _index: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        known = set(self.states)
        if len(known) != len(self.states):
            raise FormatError("duplicate state name")
        for q in (self.initial, *self.finals):
            if q not in known:
                raise UnknownState(f"unknown state {q}")
        seen = set()
        for t in self.transitions:
            if t.src not in known or t.dst not in known:
                raise UnknownState(f"transition {tuple(t)} references an unknown state")
            if t in seen:
                raise DuplicateTransition(f"duplicate transition {tuple(t)}")
            seen.add(t)

    @property
    def input_alphabet(self) -> frozenset[str]:
        return frozenset(t.char for t in self.transitions)

    @property
    def output_alphabet(self) -> frozenset:
        return frozenset(t.out for t in self.transitions if isinstance(t, ReadWrite))

    @property
    def size(self) -> int:
        return len(self.states) + len(self.transitions)

    def reads(self) -> list[Read]:
        return [t for t in self.transitions if isinstance(t, Read)]

    def writes(self) -> list[ReadWrite]:
        return [t for t in self.transitions if isinstance(t, ReadWrite)]

    def moves(self) -> dict[tuple[str, str], list[tuple[Hashable | None, str]]]:
        """(state, char) -> [(output or None, target)] in file order."""
        if "moves" not in self._index:
            table: dict = defaultdict(list)
            for t in self.transitions:
                table[(t.src, t.char)].append((t.out if isinstance(t, ReadWrite) else None, t.dst))
            self._index["moves"] = dict(table)
        return self._index["moves"]


def make_anna(states, initial, finals, transitions) -> AnnA:
    return AnnA(tuple(states), initial, tuple(finals), tuple(transitions))


# ---------------------------------------------------------------------------
# text format


def parse_anna(text: str) -> AnnA:
    lines = iter(iter_content_lines(text))
    first = next(lines, None)
    if first is None or first[1] != ["anna", "v1"]:
        raise FormatError("missing `anna v1` header", first[0] if first else 1)
    states: list[str] | None = None
    init = None
    finals: list[str] = []
    trans: list = []
    seen = set()
    for lineno, toks in lines:
        head = toks[0]
        if head == "states":
            if states is not None:
                raise FormatError("duplicate states line", lineno)
            states = toks[1:]
            for q in states:
                _check_ident(q, lineno)
        elif head == "init":
            if len(toks) != 2:
                raise FormatError("expected `init <state>`", lineno)
            init = toks[1]
        elif head == "final":
            finals.extend(toks[1:])
        elif head == "read":
            if len(toks) != 4 or not toks[2].startswith("'"):
                raise FormatError("expected `read p 'a' q`", lineno)
            t = Read(toks[1], unquote_char(toks[2], lineno), toks[3])
            if t in seen:
                raise DuplicateTransition(f"line {lineno}: duplicate transition")
            seen.add(t)
            trans.append(t)
        elif head == "write":
            if len(toks) != 5 or not toks[2].startswith("'") or not toks[3].startswith("@") or len(toks[3]) < 2:
                raise FormatError("expected `write p 'a' @omega q`", lineno)
            t = ReadWrite(toks[1], unquote_char(toks[2], lineno), toks[3][1:], toks[4])
            if t in seen:
                raise DuplicateTransition(f"line {lineno}: duplicate transition")
            seen.add(t)
            trans.append(t)
        else:
            raise FormatError(f"unknown directive {head!r}", lineno)
    if states is None:
        raise FormatError("missing states line")
    if init is None:
        raise FormatError("missing init line")
    known = set(states)
    for q in [init, *finals] + [x for t in trans for x in (t.src, t.dst)]:
        if q not in known:
            raise UnknownState(f"unknown state {q}")
    return make_anna(states, init, finals, trans)


def _check_ident(name: str, lineno: int | None) -> None:
    if not IDENT_RE.match(name):
        raise FormatError(f"invalid state name {name!r}", lineno)


def serialize_anna(a: AnnA) -> str:
    out = ["anna v1", "states " + " ".join(a.states), f"init {a.initial}"]
    if a.finals:
        out.append("final " + " ".join(a.finals))
    for t in a.transitions:
        if isinstance(t, Read):
            out.append(f"read {t.src} {quote_char(t.char)} {t.dst}")
        else:
            out.append(f"write {t.src} {quote_char(t.char)} @{t.out} {t.dst}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# semantics oracles


def partial_runs(
    a: AnnA, doc: str, start: str | None = None, budget: int = DEFAULT_BUDGET
) -> dict[str, set[Annotation]]:
    """Annotations of partial runs from ``start`` over ``doc``, grouped by end state."""
    moves = a.moves()
    cur: dict[str, set] = {start if start is not None else a.initial: {()}}
    spent = 1
    for pos, c in enumerate(doc, 1):
        nxt: dict[str, set] = defaultdict(set)
        for p, anns in cur.items():
            for out, q in moves.get((p, c), ()):
                bucket = nxt[q]
                if out is None:
                    bucket.update(anns)
                else:
                    pair = (out, pos)
                    bucket.update(ann + (pair,) for ann in anns)
                spent += len(anns)
                if spent > budget:
                    raise BudgetExceeded(f"naive evaluation exceeded {budget} steps")
        cur = nxt
    return dict(cur)


def naive_eval(a: AnnA, doc: str, budget: int = DEFAULT_BUDGET) -> set[Annotation]:
    ends = partial_runs(a, doc, budget=budget)
    result: set = set()
    for f in a.finals:
        result |= ends.get(f, set())
    return result


def run_search(a: AnnA, doc: str, limit: int = 200_000) -> list[Annotation]:
    """Explicit DFS over accepting runs; one entry per run (used on tiny inputs)."""
    moves = a.moves()
    finals = set(a.finals)
    found: list = []
    stack = [(a.initial, 0, ())]
    visited = 0
    while stack:
        q, i, ann = stack.pop()
        visited += 1
        if visited > limit:
            raise BudgetExceeded("run search limit hit")
        if i == len(doc):
            if q in finals:
                found.append(ann)
            continue
        for out, r in moves.get((q, doc[i]), ()):
            stack.append((r, i + 1, ann if out is None else ann + ((out, i + 1),)))
    return found


def is_deterministic(a: AnnA) -> bool:
    keys = set()
    for t in a.transitions:
        key = (t.src, t.char) if isinstance(t, Read) else (t.src, t.char, t.out)
        if key in keys:
            return False
        keys.add(key)
    return True


def check_unambiguous(a: AnnA, max_len: int, budget: int = DEFAULT_BUDGET) -> bool:
    """Exhaustively check every document of length <= max_len over the input alphabet."""
    sigma = sorted(a.input_alphabet)
    moves = a.moves()
    finals = set(a.finals)
    spent = 0
    # frontier: doc prefix -> state -> Counter(annotation -> run count)
    frontier = {"": {a.initial: Counter({(): 1})}}
    for length in range(max_len + 1):
        for doc, conf in frontier.items():
            totals: Counter = Counter()
            for f in finals:
                totals.update(conf.get(f, {}))
            if any(v > 1 for v in totals.values()):
                return False
        if length == max_len:
            break
        nxt = {}
        for doc, conf in frontier.items():
            for c in sigma:
                new: dict[str, Counter] = defaultdict(Counter)
                pos = length + 1
                for p, counts in conf.items():
                    for out, q in moves.get((p, c), ()):
                        tgt = new[q]
                        for ann, k in counts.items():
                            tgt[ann if out is None else ann + ((out, pos),)] += k
                            spent += 1
                if spent > budget:
                    raise BudgetExceeded("unambiguity check exceeded its budget")
                nxt[doc + c] = new
        frontier = nxt
    return True


def determinize(a: AnnA, max_states: int | None = None) -> AnnA:
    """Subset construction over labels ``a`` and ``(a, omega)``; reachable subsets only."""
    index = {q: i for i, q in enumerate(a.states)}
    out_edges: dict[str, list] = defaultdict(list)
    for t in a.transitions:
        label = (t.char, None) if isinstance(t, Read) else (t.char, t.out)
        out_edges[t.src].append((label, t.dst))
    finals = set(a.finals)

    def name(subset: frozenset) -> str:
        return "d" + "_".join(str(index[q]) for q in sorted(subset, key=index.__getitem__))

    start = frozenset([a.initial])
    names = {start: name(start)}
    queue = [start]
    trans: list = []
    for subset in queue:
        targets: dict = {}
        for q in sorted(subset, key=index.__getitem__):
            for label, r in out_edges[q]:
                targets.setdefault(label, set()).add(r)
        for label, dst in targets.items():
            dst = frozenset(dst)
            if dst not in names:
                names[dst] = name(dst)
                queue.append(dst)
                if max_states is not None and len(names) > max_states:
                    raise LimitExceeded(f"determinization exceeded {max_states} states")
            char, out = label
            if out is None:
                trans.append(Read(names[subset], char, names[dst]))
            else:
                trans.append(ReadWrite(names[subset], char, out, names[dst]))
    fin = [names[s] for s in queue if s & finals]
    return make_anna([names[s] for s in queue], names[start], fin, trans)


def trim_anna(a: AnnA) -> AnnA:
    """Drop states that are unreachable from q0 or cannot reach a final state."""
    fwd: dict = defaultdict(set)
    bwd: dict = defaultdict(set)
    for t in a.transitions:
        fwd[t.src].add(t.dst)
        bwd[t.dst].add(t.src)

    def closure(start, edges):
        seen = set(start)
        todo = list(seen)
        while todo:
            u = todo.pop()
            for v in edges[u]:
                if v not in seen:
                    seen.add(v)
                    todo.append(v)
        return seen

    keep = closure([a.initial], fwd) & closure(a.finals, bwd)
    keep.add(a.initial)
    return make_anna(
        [q for q in a.states if q in keep],
        a.initial,
        [f for f in a.finals if f in keep],
        [t for t in a.transitions if t.src in keep and t.dst in keep],
    )


def all_docs(sigma: Iterable[str], max_len: int) -> Iterable[str]:
    sigma = sorted(sigma)
    for n in range(max_len + 1):
        for tup in itertools.product(sigma, repeat=n):
            yield "".join(tup)


def is_annotation(ann: Sequence) -> bool:
    return all(ann[i][1] < ann[i + 1][1] for i in range(len(ann) - 1))
