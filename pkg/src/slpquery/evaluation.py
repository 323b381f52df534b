"""Bottom-up evaluation of an annotated automaton over an SLP.

For every grammar symbol X the query structure holds a |Q| x |Q| matrix of
arena handles; entry [p, q] denotes the annotations of partial runs from p
to q over the expansion of X. The initial state always has index 0.
"""

from __future__ import annotations

from collections import Counter
from typing import Iterable, Mapping, Sequence

import numpy as np

from .automaton import AnnA, Read, ReadWrite
from .ecs import _kernels as kern
from .ecs._kernels import BOT, EPS
from .ecs.arena import EcsArena
from .ecs.enumerate import EnumerationSession
from .errors import DimensionMismatch, UnknownSymbol
from .slp import NonTerminal, Slp, Symbol, Terminal

NodeMatrix = np.ndarray


def state_order(anna) -> list[str]:
    return [anna.initial] + [q for q in anna.states if q != anna.initial]


def identity_matrix(m: int) -> NodeMatrix:
    out = np.zeros((m, m), dtype=np.int64)
    np.fill_diagonal(out, EPS)
    return out


def mat_mul(arena: EcsArena, m1: NodeMatrix, m2: NodeMatrix) -> NodeMatrix:
    if m1.shape != m2.shape or m1.shape[0] != m1.shape[1]:
        raise DimensionMismatch(f"cannot multiply {m1.shape} by {m2.shape}")
    m = m1.shape[0]
    arena.reserve((kern.WORST_PROD + kern.WORST_UNION) * m**3)
    return kern.mat_mul(*arena.cols(), arena.counters, _c(m1), _c(m2))


def mat_shift(arena: EcsArena, m1: NodeMatrix, k: int) -> NodeMatrix:
    m = m1.shape[0]
    arena.reserve(kern.WORST_SHIFT * m * m)
    return kern.mat_shift(*arena.cols(), arena.counters, _c(m1), int(k))


def _c(m: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(m, dtype=np.int64)


class _CharTable:
    __slots__ = ("wsrc", "wdst", "wsym", "rsrc", "rdst")

    def __init__(self):
        self.wsrc: list[int] = []
        self.wdst: list[int] = []
        self.wsym: list[int] = []
        self.rsrc: list[int] = []
        self.rdst: list[int] = []

    def arrays(self):
        return tuple(np.asarray(x, dtype=np.int64) for x in (self.wsrc, self.wdst, self.wsym, self.rsrc, self.rdst))


def _char_tables(anna, arena: EcsArena, index: Mapping[str, int]) -> dict[str, _CharTable]:
    tables: dict[str, _CharTable] = {}
    for t in anna.transitions:
        tab = tables.setdefault(t.char, _CharTable())
        if isinstance(t, ReadWrite):
            tab.wsrc.append(index[t.src])
            tab.wdst.append(index[t.dst])
            tab.wsym.append(arena.intern(t.out))
        else:
            tab.rsrc.append(index[t.src])
            tab.rdst.append(index[t.dst])
    return tables


def _terminal(arena: EcsArena, m: int, tab: _CharTable | None) -> NodeMatrix:
    if tab is None:
        return np.zeros((m, m), dtype=np.int64)
    arrs = tab.arrays()
    arena.reserve((kern.WORST_ADD + kern.WORST_UNION) * len(tab.wsrc) + kern.WORST_UNION * len(tab.rsrc))
    return kern.terminal_matrix(*arena.cols(), arena.counters, m, *arrs)


def terminal_matrix(arena: EcsArena, a: str | Terminal, anna) -> NodeMatrix:
    char = a.char if isinstance(a, Terminal) else a
    order = state_order(anna)
    index = {q: i for i, q in enumerate(order)}
    tables = _char_tables(anna, arena, index)
    return _terminal(arena, len(order), tables.get(char))


class QueryDataStructure:
    """Node matrices per symbol over one arena, for one automaton.

    The structure only grows: new rules can be added later (see edits) and
    existing matrices and nodes are never touched.
    """

    def __init__(self, anna, arena: EcsArena | None = None):
        self.anna = anna
        self.arena = arena if arena is not None else EcsArena()
        self.order = state_order(anna)
        self.index = {q: i for i, q in enumerate(self.order)}
        self.m = len(self.order)
        self.final_idx = [self.index[f] for f in anna.finals]
        self.matrices: dict[Symbol, NodeMatrix] = {}
        self.lens: dict[Symbol, int] = {}
        self.rules: dict[str, tuple[Symbol, ...]] = {}
        self.calls: Counter = Counter()
        self.root_node: int | None = None
        self._tables = _char_tables(anna, self.arena, self.index)
        self._accept: dict[str, int] = {}

    # ------------------------------------------------------------------

    def matrix(self, sym: Symbol | str) -> NodeMatrix:
        if isinstance(sym, str):
            sym = NonTerminal(sym)
        if sym not in self.matrices:
            if isinstance(sym, Terminal):
                self._terminal(sym)
            else:
                self.process([sym.name])
        return self.matrices[sym]

    def _terminal(self, t: Terminal) -> None:
        self.calls[t] += 1
        self.matrices[t] = _terminal(self.arena, self.m, self._tables.get(t.char))
        self.lens[t] = 1

    def _nonterminal(self, name: str) -> None:
        nt = NonTerminal(name)
        self.calls[nt] += 1
        arena = self.arena
        body = self.rules[name]
        # identity (x) M equals M, so the first factor needs no products
        cur = self.matrices[body[0]].copy()
        length = self.lens[body[0]]
        m3 = self.m**3
        for y in body[1:]:
            my = self.matrices[y]
            arena.reserve((kern.WORST_PROD + kern.WORST_UNION) * m3 + kern.WORST_SHIFT * self.m * self.m)
            cur = kern.mat_shift_mul(*arena.cols(), arena.counters, cur, my, length)
            length += self.lens[y]
        self.matrices[nt] = cur
        self.lens[nt] = length

    def add_rules(self, rules: Mapping[str, Sequence[Symbol]]) -> None:
        for name, body in rules.items():
            if name in self.rules and tuple(body) != self.rules[name]:
                raise UnknownSymbol(f"rule {name} already defined differently")
            self.rules[name] = tuple(body)

    def process(self, targets: Iterable[str]) -> None:
        """Compute matrices for ``targets`` and everything below, children first."""
        for root in targets:
            if root not in self.rules:
                raise UnknownSymbol(f"no rule for {root}")
            if NonTerminal(root) in self.matrices:
                continue
            stack = [(root, 0)]
            while stack:
                name, idx = stack[-1]
                body = self.rules[name]
                while idx < len(body):
                    y = body[idx]
                    if y in self.matrices:
                        idx += 1
                    elif isinstance(y, Terminal):
                        self._terminal(y)
                        idx += 1
                    else:
                        break
                if idx == len(body):
                    stack.pop()
                    if NonTerminal(name) not in self.matrices:
                        self._nonterminal(name)
                    continue
                stack[-1] = (name, idx)
                child = body[idx].name
                if child not in self.rules:
                    raise UnknownSymbol(f"no rule for {child}")
                stack.append((child, 0))

    def accepting_node(self, name: str) -> int:
        """union over finals f (file order) of M[q0, f] for non-terminal ``name``."""
        node = self._accept.get(name)
        if node is None:
            mx = self.matrix(name)
            node = BOT
            for f in self.final_idx:
                node = self.arena.union(node, int(mx[0, f]))
            self._accept[name] = node
        return node

    def op_counts(self) -> dict[str, int]:
        return self.arena.op_counts()


def build_query_structure(anna, slp: Slp, root: str | None = None) -> QueryDataStructure:
    qds = QueryDataStructure(anna)
    qds.add_rules(slp.rules)
    root = root if root is not None else slp.start
    if root is None:
        qds.process(slp.order)
    else:
        qds.process([root])
        qds.root_node = qds.accepting_node(root)
    return qds


def evaluate(anna, slp: Slp) -> EnumerationSession:
    if slp.start is None:
        raise UnknownSymbol("evaluate needs a rooted SLP")
    qds = build_query_structure(anna, slp)
    session = EnumerationSession(qds.arena, qds.root_node)
    session.qds = qds
    return session


def op_counter(qds: QueryDataStructure) -> dict[str, int]:
    return qds.op_counts()
