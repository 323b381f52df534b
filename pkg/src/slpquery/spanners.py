"""Spanner frontends: extended VA and variable-set VA reduced to annotated automata.

Markers are strings ``open:x`` / ``close:x``. A marker set used as an output
symbol is its sorted, comma-joined form, so set equality is string equality.
Both reductions read a reserved end-of-document letter ``#``.
"""

from __future__ import annotations

import warnings
from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, NamedTuple, Protocol, Sequence

from .automaton import AnnA, Read, ReadWrite, determinize, make_anna, trim_anna
from .ecs._kernels import BOT, EPS, OUT, PROD, SHIFT, UNION
from .ecs.arena import EcsArena, sem_oracle
from .ecs.enumerate import EnumerationSession, StepCounter, Walker
from .errors import (
    BudgetExceeded,
    FormatError,
    InconsistentMarkers,
    MarkerConflict,
    MarkerInUse,
    NotSequential,
    UnknownState,
)
from .evaluation import build_query_structure
from .slp import IDENT_RE, NonTerminal, Slp, Terminal, iter_content_lines, make_slp, quote_char, unquote_char

END = "#"


class Span(NamedTuple):
    i: int
    j: int

    def __str__(self) -> str:
        return f"[{self.i},{self.j})"


def marker(kind: str, var: str) -> str:
    return f"{kind}:{var}"


def split_marker(m: str) -> tuple[str, str]:
    kind, _, var = m.partition(":")
    if kind not in ("open", "close") or not IDENT_RE.match(var):
        raise FormatError(f"bad marker {m!r}")
    return kind, var


def set_symbol(markers: Iterable[str]) -> str:
    return ",".join(sorted(markers))


def freeze_mapping(mu: Mapping[str, Span]) -> tuple:
    return tuple(sorted(mu.items()))


def format_mapping(mu: Mapping[str, Span]) -> str:
    if not mu:
        return "()"
    return " ".join(f"{x}={mu[x]}" for x in sorted(mu))


# ---------------------------------------------------------------------------
# models


@dataclass(frozen=True, eq=False)
class ExtendedVA:
    states: tuple[str, ...]
    initial: str
    finals: tuple[str, ...]
    letters: tuple[Read, ...]
    sets: tuple[tuple[str, frozenset, str], ...]

    def __post_init__(self):
        _check_states(self.states, self.initial, self.finals, [(t.src, t.dst) for t in self.letters] + [(p, q) for p, _, q in self.sets])
        for p, s, q in self.sets:
            if not s:
                raise MarkerConflict(f"empty marker set on {p} -> {q}")
            for m in s:
                split_marker(m)

    @property
    def variables(self) -> frozenset[str]:
        return frozenset(split_marker(m)[1] for _, s, _ in self.sets for m in s)


@dataclass(frozen=True, eq=False)
class VarSetVA:
    states: tuple[str, ...]
    initial: str
    finals: tuple[str, ...]
    letters: tuple[Read, ...]
    markers: tuple[tuple[str, str, str], ...]

    def __post_init__(self):
        _check_states(self.states, self.initial, self.finals, [(t.src, t.dst) for t in self.letters] + [(p, q) for p, _, q in self.markers])
        for _, m, _ in self.markers:
            split_marker(m)

    @property
    def variables(self) -> frozenset[str]:
        return frozenset(split_marker(m)[1] for _, m, _ in self.markers)


def _check_states(states, initial, finals, edges) -> None:
    known = set(states)
    for q in (initial, *finals):
        if q not in known:
            raise UnknownState(f"unknown state {q}")
    for p, q in edges:
        if p not in known or q not in known:
            raise UnknownState(f"transition {p} -> {q} references an unknown state")


def parse_spanner(text: str) -> ExtendedVA | VarSetVA:
    lines = iter(iter_content_lines(text))
    first = next(lines, None)
    if first is None or first[1] not in (["eva", "v1"], ["va", "v1"]):
        raise FormatError("missing `eva v1` or `va v1` header", first[0] if first else 1)
    extended = first[1][0] == "eva"
    states = None
    init = None
    finals: list[str] = []
    letters: list[Read] = []
    sets: list = []
    marks: list = []
    for lineno, toks in lines:
        head = toks[0]
        if head == "states":
            states = toks[1:]
        elif head == "init" and len(toks) == 2:
            init = toks[1]
        elif head == "final":
            finals.extend(toks[1:])
        elif head == "letter" and len(toks) == 4 and toks[2].startswith("'"):
            letters.append(Read(toks[1], unquote_char(toks[2], lineno), toks[3]))
        elif head == "markers" and extended and len(toks) >= 4:
            body = " ".join(toks[2:-1])
            if not (body.startswith("{") and body.endswith("}")):
                raise FormatError("expected `markers p {open:x,...} q`", lineno)
            items = [m.strip() for m in body[1:-1].split(",") if m.strip()]
            try:
                for m in items:
                    split_marker(m)
            except FormatError as exc:
                raise FormatError(str(exc), lineno) from None
            sets.append((toks[1], frozenset(items), toks[-1]))
        elif head in ("open", "close") and not extended and len(toks) == 4:
            if not IDENT_RE.match(toks[2]):
                raise FormatError(f"bad variable {toks[2]!r}", lineno)
            marks.append((toks[1], marker(head, toks[2]), toks[3]))
        else:
            raise FormatError(f"unexpected line {' '.join(toks)!r}", lineno)
    if states is None or init is None:
        raise FormatError("missing states or init line")
    if extended:
        return ExtendedVA(tuple(states), init, tuple(finals), tuple(letters), tuple(sets))
    return VarSetVA(tuple(states), init, tuple(finals), tuple(letters), tuple(marks))


# ---------------------------------------------------------------------------
# mappings


def mapping_of_annotation(ann: Sequence[tuple[str, int]], variables: Iterable[str] | None = None) -> dict[str, Span]:
    """Turn ``(marker set, position)`` pairs into a mapping."""
    opened: dict[str, int] = {}
    closed: dict[str, int] = {}
    allowed = set(variables) if variables is not None else None
    for sym, pos in ann:
        for m in sym.split(","):
            kind, var = split_marker(m)
            if allowed is not None and var not in allowed:
                raise InconsistentMarkers(f"undeclared variable {var}")
            table = opened if kind == "open" else closed
            if var in table:
                raise InconsistentMarkers(f"{kind} marker for {var} appears twice")
            table[var] = pos
    if opened.keys() != closed.keys():
        raise InconsistentMarkers("unmatched open/close markers")
    out = {}
    for var, i in opened.items():
        j = closed[var]
        if j < i:
            raise InconsistentMarkers(f"{var} is closed before it is opened")
        out[var] = Span(i, j)
    return out


def _valid_marker_run(seq: Sequence[tuple[str, int]]) -> dict[str, Span] | None:
    # markers in run order; a close may not precede its open even at one position
    opened: dict[str, int] = {}
    closed: dict[str, int] = {}
    for m, pos in seq:
        kind, var = split_marker(m)
        if kind == "open":
            if var in opened:
                return None
            opened[var] = pos
        else:
            if var not in opened or var in closed:
                return None
            closed[var] = pos
    if opened.keys() != closed.keys():
        return None
    return {v: Span(opened[v], closed[v]) for v in opened}


def va_run_search(va: VarSetVA, doc: str, limit: int = 500_000, strict: bool = False) -> set[tuple]:
    """Mappings of valid accepting runs, by explicit search (oracle).

    With ``strict`` an accepting invalid run raises ``NotSequential``.
    """
    letters = defaultdict(list)
    for t in va.letters:
        letters[(t.src, t.char)].append(t.dst)
    marks = defaultdict(list)
    for p, m, q in va.markers:
        marks[p].append((m, q))
    finals = set(va.finals)
    n = len(doc)
    found: set = set()
    stack = [(va.initial, 1, ())]
    seen = 0
    while stack:
        q, i, seq = stack.pop()
        seen += 1
        if seen > limit:
            raise BudgetExceeded("VA run search limit hit")
        if i == n + 1 and q in finals:
            mu = _valid_marker_run(seq)
            if mu is not None:
                found.add(freeze_mapping(mu))
            elif strict:
                raise NotSequential("an accepting run is not valid")
        used = {m for m, _ in seq}
        for m, r in marks[q]:
            if m not in used:
                stack.append((r, i, seq + ((m, i),)))
        if i <= n:
            for r in letters[(q, doc[i - 1])]:
                stack.append((r, i + 1, seq))
    return found


def eva_run_search(eva: ExtendedVA, doc: str, limit: int = 500_000) -> set[tuple]:
    letters = defaultdict(list)
    for t in eva.letters:
        letters[(t.src, t.char)].append(t.dst)
    sets = defaultdict(list)
    for p, s, q in eva.sets:
        sets[p].append((s, q))
    finals = set(eva.finals)
    n = len(doc)
    found: set = set()
    # phase 0: may take a set transition at position i; phase 1: must read or stop
    stack = [(eva.initial, 1, 0, ())]
    seen = 0
    while stack:
        q, i, phase, seq = stack.pop()
        seen += 1
        if seen > limit:
            raise BudgetExceeded("eVA run search limit hit")
        if phase == 0:
            for s, r in sets[q]:
                stack.append((r, i, 1, seq + tuple((m, i) for m in sorted(s, key=_open_first))))
        if i == n + 1:
            if q in finals:
                mu = _valid_marker_run(seq)
                if mu is not None:
                    found.add(freeze_mapping(mu))
            continue
        for r in letters[(q, doc[i - 1])]:
            stack.append((r, i + 1, 0, seq))
    return found


def _open_first(m: str) -> tuple:
    kind, var = split_marker(m)
    return (0 if kind == "open" else 1, var)


# ---------------------------------------------------------------------------
# extended VA -> AnnA


def _fresh_state(states: Iterable[str], base: str) -> str:
    taken = set(states)
    name = base
    k = 0
    while name in taken:
        k += 1
        name = f"{base}{k}"
    return name


def compile_extended_va(eva: ExtendedVA, trim: bool = True) -> AnnA:
    """AnnA over letters plus ``#`` whose outputs are marker-set symbols.

    A set transition is pushed onto the letter (or end marker) that follows
    it, so the set lands on that letter's position.
    """
    if any(t.char == END for t in eva.letters):
        raise MarkerInUse("'#' is reserved for the end of the document")
    end = _fresh_state(eva.states, "q_end")
    out_letters = defaultdict(list)
    for t in eva.letters:
        out_letters[t.src].append(t)
    finals = set(eva.finals)
    trans: list = list(eva.letters)
    seen = set(trans)

    def emit(t):
        if t not in seen:
            seen.add(t)
            trans.append(t)

    for p in eva.finals:
        emit(Read(p, END, end))
    for p, s, q in eva.sets:
        sym = set_symbol(s)
        if not out_letters[q] and q not in finals:
            warnings.warn(f"dropping dead marker-set transition {p} -> {q}", stacklevel=2)
            continue
        for t in out_letters[q]:
            emit(ReadWrite(p, t.char, sym, t.dst))
        if q in finals:
            emit(ReadWrite(p, END, sym, end))
    a = make_anna([*eva.states, end], eva.initial, [end], trans)
    return trim_anna(a) if trim else a


def with_end_marker(slp: Slp, root: str | None = None) -> Slp:
    """A rooted copy of ``slp`` whose document is ``doc(root) + '#'``."""
    root = root if root is not None else slp.start
    if root is None:
        raise MarkerInUse("need a root to append the end marker")
    if END in slp.terminals():
        raise MarkerInUse("'#' already occurs in the document")
    h = _fresh_state(slp.rules, "H_end")
    top = _fresh_state(list(slp.rules) + [h], f"{root}_end")
    rules = dict(slp.rules)
    rules[h] = (Terminal(END),)
    rules[top] = (NonTerminal(root), NonTerminal(h))
    return make_slp(rules, top)


# ---------------------------------------------------------------------------
# marker-set SERS


class Sers(Protocol):
    def size(self, rep) -> int: ...

    def language(self, rep) -> set[frozenset]: ...

    def enumerator(self, rep) -> "SersEnumerator": ...


class MarkerSetRep:
    """A handle into a :class:`MarkerSetSers`; usable as an output symbol."""

    __slots__ = ("sers", "node")

    def __init__(self, sers: "MarkerSetSers", node: int):
        self.sers = sers
        self.node = int(node)

    def __hash__(self):
        return hash((id(self.sers), self.node))

    def __eq__(self, other):
        return isinstance(other, MarkerSetRep) and other.sers is self.sers and other.node == self.node

    def __repr__(self):
        return f"MarkerSetRep({self.node})"

    def __str__(self):
        return f"rep{self.node}"

    def walker(self, counter: StepCounter) -> Walker:
        return Walker(self.sers.arena, self.node, counter)

    @staticmethod
    def render(pairs: Sequence[tuple[str, int]]) -> str:
        return set_symbol(m for m, _ in pairs)


class SersEnumerator:
    """Pull-based: each ``next_set`` returns ``(marker set, end)``; restarts after end."""

    def __init__(self, rep: MarkerSetRep):
        self.rep = rep
        self.counter = StepCounter()
        self._walker: Walker | None = None

    def next_set(self) -> tuple[str, bool]:
        w = self._walker
        if w is None:
            w = self._walker = self.rep.walker(self.counter)
            w.start()
        cur = MarkerSetRep.render(w.current())
        if not w.advance():
            self._walker = None
            return cur, True
        return cur, False


class MarkerSetSers:
    """Shift-free ECS over single markers; a node denotes a set of marker sets."""

    def __init__(self, debug: bool = False):
        self.arena = EcsArena(debug=debug)

    def add(self, m: str) -> int:
        split_marker(m)
        return self.arena.add(m)

    def union(self, a: int, b: int) -> int:
        return self.arena.union(a, b)

    def prod(self, a: int, b: int) -> int:
        return self.arena.prod(a, b)

    def rep(self, node: int) -> MarkerSetRep:
        return MarkerSetRep(self, node)

    def size(self, rep: MarkerSetRep) -> int:
        seen = set()
        todo = [rep.node]
        K, L, R = self.arena.kind, self.arena.left, self.arena.right
        while todo:
            u = todo.pop()
            if u in seen or u < 0:
                continue
            seen.add(u)
            k = int(K[u])
            if k in (UNION, PROD):
                todo.extend((int(L[u]), int(R[u])))
            elif k == SHIFT:
                todo.append(int(L[u]))
        return len(seen)

    def language(self, rep: MarkerSetRep) -> set[frozenset]:
        return {frozenset(m for m, _ in w) for w in sem_oracle(self.arena, rep.node)}

    def enumerator(self, rep: MarkerSetRep) -> SersEnumerator:
        return SersEnumerator(rep)

    @property
    def node_count(self) -> int:
        return len(self.arena)


@dataclass(frozen=True, eq=False)
class SuccinctAnnA(AnnA):
    """AnnA whose read-write outputs are :class:`MarkerSetRep` handles."""

    sers: MarkerSetSers | None = None

    def transition_size_total(self) -> int:
        """Sum over transitions of |t|: 1 for reads, |r| + 1 for read-writes."""
        total = 0
        memo: dict[int, int] = {}
        for t in self.transitions:
            if isinstance(t, ReadWrite):
                if t.out.node not in memo:
                    memo[t.out.node] = self.sers.size(t.out)
                total += memo[t.out.node] + 1
            else:
                total += 1
        return total

    def succinct_size(self) -> int:
        """|Q| + |transitions| + nodes of the shared marker-set store."""
        return len(self.states) + len(self.transitions) + self.sers.node_count


# ---------------------------------------------------------------------------
# variable-set VA -> succinct AnnA


def trim_va(va: VarSetVA) -> VarSetVA:
    fwd = defaultdict(set)
    bwd = defaultdict(set)
    for t in va.letters:
        fwd[t.src].add(t.dst)
        bwd[t.dst].add(t.src)
    for p, _, q in va.markers:
        fwd[p].add(q)
        bwd[q].add(p)
    reach = _closure([va.initial], fwd)
    coreach = _closure(va.finals, bwd)
    keep = reach & coreach
    keep.add(va.initial)
    states = tuple(q for q in va.states if q in keep)
    return VarSetVA(
        states,
        va.initial,
        tuple(f for f in va.finals if f in keep),
        tuple(t for t in va.letters if t.src in keep and t.dst in keep),
        tuple(t for t in va.markers if t[0] in keep and t[2] in keep),
    )


def _closure(start: Iterable[str], edges) -> set[str]:
    seen = set(start)
    todo = list(seen)
    while todo:
        u = todo.pop()
        for v in edges[u]:
            if v not in seen:
                seen.add(v)
                todo.append(v)
    return seen


def _marker_topo_order(va: VarSetVA) -> list[str]:
    indeg = {q: 0 for q in va.states}
    succ = defaultdict(list)
    for p, _, q in va.markers:
        succ[p].append(q)
        indeg[q] += 1
    ready = deque(q for q in va.states if indeg[q] == 0)
    out = []
    while ready:
        u = ready.popleft()
        out.append(u)
        for v in succ[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                ready.append(v)
    if len(out) != len(va.states):
        raise NotSequential("variable transitions form a cycle")
    return out


def marker_paths(
    va: VarSetVA, sers: MarkerSetSers | None = None, rows: Iterable[str] | None = None
) -> tuple[MarkerSetSers, dict[tuple[str, str], int]]:
    """K[p, q]: marker sets of variable-only paths from p to q.

    Rows are independent, so ``rows`` limits the work to the sources that
    matter (by default every state).
    """
    sers = sers if sers is not None else MarkerSetSers()
    order = _marker_topo_order(va)
    out_marks = defaultdict(list)
    for p, m, q in va.markers:
        out_marks[p].append((m, q))
    row_set = set(va.states if rows is None else rows)
    K: dict[tuple[str, str], int] = {(q, q): EPS for q in va.states if q in row_set}
    # sources[q]: rows p' with K[p', q] != BOT, in insertion order
    sources: dict[str, list[str]] = {q: ([q] if q in row_set else []) for q in va.states}
    for p in order:
        for m, q in out_marks[p]:
            if not sources[p]:
                continue
            u = sers.add(m)
            for src in sources[p]:
                w = sers.prod(K[(src, p)], u)
                old = K.get((src, q), BOT)
                if old == BOT:
                    sources[q].append(src)
                K[(src, q)] = sers.union(old, w)
    return sers, K


def letter_entry_states(va: VarSetVA) -> list[str]:
    """States where a run can stand right before a marker block: q0 and letter targets."""
    entry = {va.initial} | {t.dst for t in va.letters}
    return [q for q in va.states if q in entry]


def compile_va(va: VarSetVA, trim: bool = True) -> SuccinctAnnA:
    if any(t.char == END for t in va.letters):
        raise MarkerInUse("'#' is reserved for the end of the document")
    if trim:
        va = trim_va(va)
    sers, K = marker_paths(va, rows=letter_entry_states(va))
    end = _fresh_state(va.states, "q_end")
    out_letters = defaultdict(list)
    for t in va.letters:
        out_letters[t.src].append(t)
    finals = set(va.finals)
    trans: list = list(va.letters)
    seen = set(trans)

    def emit(t):
        if t not in seen:
            seen.add(t)
            trans.append(t)

    for p in va.finals:
        emit(Read(p, END, end))
    for (p, q), node in K.items():
        if p == q or node == BOT:
            continue
        rep = sers.rep(node)
        for t in out_letters[q]:
            emit(ReadWrite(p, t.char, rep, t.dst))
        if q in finals:
            emit(ReadWrite(p, END, rep, end))
    states = [*va.states, end]
    if trim:
        # states only entered through marker transitions drop out here
        fwd = defaultdict(set)
        for t in trans:
            fwd[t.src].add(t.dst)
        live = _closure([va.initial], fwd) | {end}
        states = [q for q in states if q in live]
        trans = [t for t in trans if t.src in live]
    return SuccinctAnnA(tuple(states), va.initial, (end,), tuple(trans), sers=sers)


def evaluate_succinct(t: SuccinctAnnA, slp: Slp) -> EnumerationSession:
    qds = build_query_structure(t, slp)
    session = EnumerationSession(qds.arena, qds.root_node)
    session.qds = qds
    return session


# ---------------------------------------------------------------------------
# end-to-end


def compile_spanner(query: ExtendedVA | VarSetVA, deterministic: bool = False) -> AnnA:
    if isinstance(query, ExtendedVA):
        a = compile_extended_va(query)
        return determinize(a) if deterministic else a
    return compile_va(query)


def evaluate_spanner(query, slp: Slp, compiled: AnnA | None = None, deterministic: bool = False) -> Iterator[dict[str, Span]]:
    """Mappings of ``query`` over ``doc(slp)``, via the end-marked grammar."""
    a = compiled if compiled is not None else compile_spanner(query, deterministic)
    session = evaluate_succinct(a, with_end_marker(slp))
    variables = query.variables
    for ann in session:
        yield mapping_of_annotation(ann, variables)


def spanner_session(query, slp: Slp, compiled: AnnA | None = None, deterministic: bool = False) -> EnumerationSession:
    a = compiled if compiled is not None else compile_spanner(query, deterministic)
    return evaluate_succinct(a, with_end_marker(slp))
