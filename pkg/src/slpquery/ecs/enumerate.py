"""Stack-based enumeration over a Shift-ECS.

A walker keeps a stack of ``(node, accumulated shift)`` entries for the
union path currently selected, and a cursor tree for the selected output
node. Products hold one sub-walker per factor and advance like an odometer
with the right factor as the fast digit.

Every node visit, stack push/pop, cursor visit and emitted pair costs one
step. ``DELAY_CONSTANT`` bounds the steps between two outputs by
``DELAY_CONSTANT * (len(output) + 1)``.
"""

from __future__ import annotations

from typing import Hashable, Iterator, Protocol

from ._kernels import BOT, EPS, OUT, PROD, SHIFT, UNION
from .arena import EcsArena, NodeId

DELAY_CONSTANT = 64

_LEAF = 0
_EMPTY = 1
_PRODC = 2
_NESTED = 3


class Representation(Protocol):
    """A symbol whose value is itself an enumerable set (see spanners)."""

    def walker(self, counter: "StepCounter") -> "Walker": ...


class StepCounter:
    __slots__ = ("steps",)

    def __init__(self):
        self.steps = 0


class Walker:
    """Enumerates the set below one node. ``start`` then ``advance`` until False."""

    __slots__ = ("arena", "root", "ctr", "stack", "cur", "_K", "_L", "_R", "_V", "_syms", "weight")

    def __init__(self, arena: EcsArena, root: NodeId, counter: StepCounter | None = None):
        self.arena = arena
        self.root = int(root)
        self.ctr = counter if counter is not None else StepCounter()
        self._K = arena.kind
        self._L = arena.left
        self._R = arena.right
        self._V = arena.value
        self._syms = arena.symbols
        self.stack: list | None = None
        self.cur = None
        self.weight = 0

    # stack helpers ------------------------------------------------------

    def _trav(self, u: int, s: int, st: list) -> list:
        K, L, V = self._K, self._L, self._V
        ctr = self.ctr
        while True:
            ctr.steps += 1
            k = K[u]
            if k == SHIFT:
                s += int(V[u])
                u = int(L[u])
            elif k == UNION:
                st.append((u, s))
                ctr.steps += 1
                u = int(L[u])
            else:
                break
        st.append((u, s))
        ctr.steps += 1
        return st

    def _move(self, st: list) -> None:
        # drop the current leaf and its union, then walk the union's right branch
        st.pop()
        u, s = st.pop()
        self.ctr.steps += 2
        self._trav(int(self._R[u]), s, st)

    def _open(self, v: int, s: int) -> list:
        K = self._K
        if K[v] == UNION or K[v] == SHIFT:
            return self._trav(v, s, [])
        self.ctr.steps += 1
        return [(v, s)]

    # cursors ------------------------------------------------------------

    def _build(self, v: int, s: int):
        """Cursor for the first element below output node ``v`` shifted by ``s``."""
        K, L, R, V = self._K, self._L, self._R, self._V
        ctr = self.ctr
        holder = [None]
        work = [(v, s, holder, 0)]
        while work:
            u, sh, box, slot = work.pop()
            ctr.steps += 1
            k = K[u]
            if k == OUT:
                sym = self._syms[int(V[u])]
                make = getattr(sym, "walker", None)
                if make is not None:
                    inner = make(ctr)
                    inner.start()
                    cur = [_NESTED, inner, sh + 1, sym]
                else:
                    cur = [_LEAF, sym, sh + 1]
            elif k == PROD:
                st1 = self._open(int(L[u]), sh)
                st2 = self._open(int(R[u]), sh)
                cur = [_PRODC, st1, st2, None, None, u, sh]
                top1 = st1[-1]
                top2 = st2[-1]
                work.append((top2[0], top2[1], cur, 4))
                work.append((top1[0], top1[1], cur, 3))
            elif k == EPS:
                cur = [_EMPTY]
            else:  # pragma: no cover - stacks only expose output nodes
                raise AssertionError(f"unexpected node kind {k} at stack top")
            box[slot] = cur
        return holder[0]

    def _advance_cursor(self, cur) -> bool:
        ctr = self.ctr
        frames = [(cur, 0)]
        res = False
        while frames:
            c, state = frames.pop()
            ctr.steps += 1
            t = c[0]
            if state == 0:
                if t == _PRODC:
                    frames.append((c, 1))
                    frames.append((c[4], 0))
                elif t == _NESTED:
                    res = c[1].advance()
                else:
                    res = False
                continue
            if state == 1:
                if res:
                    continue
                st2 = c[2]
                if len(st2) > 1:
                    self._move(st2)
                    top = st2[-1]
                    c[4] = self._build(top[0], top[1])
                    res = True
                    continue
                frames.append((c, 2))
                frames.append((c[3], 0))
                continue
            # state 2: left factor came back from its own advance
            if not res:
                st1 = c[1]
                if len(st1) == 1:
                    continue
                self._move(st1)
                top = st1[-1]
                c[3] = self._build(top[0], top[1])
                res = True
            self._reset_right(c)
        return res

    def _reset_right(self, c) -> None:
        st2 = self._open(int(self._R[c[5]]), c[6])
        c[2] = st2
        top = st2[-1]
        c[4] = self._build(top[0], top[1])

    # public -------------------------------------------------------------

    def start(self) -> bool:
        if self.root == BOT:
            self.ctr.steps += 1
            self.stack = []
            self.cur = None
            return False
        self.stack = self._open(self.root, 0)
        top = self.stack[-1]
        self.cur = self._build(top[0], top[1])
        return True

    def advance(self) -> bool:
        if self.cur is None:
            return False
        if self._advance_cursor(self.cur):
            return True
        st = self.stack
        if len(st) > 1:
            self._move(st)
            top = st[-1]
            self.cur = self._build(top[0], top[1])
            return True
        self.cur = None
        return False

    def current(self) -> list:
        """Pairs of the selected element, in left-to-right order.

        Sets ``weight``: pairs counted by their nested size, at least 1 each.
        """
        ctr = self.ctr
        out: list = []
        weight = 0
        todo = [self.cur]
        while todo:
            c = todo.pop()
            ctr.steps += 1
            t = c[0]
            if t == _LEAF:
                out.append((c[1], c[2]))
                weight += 1
            elif t == _PRODC:
                todo.append(c[4])
                todo.append(c[3])
            elif t == _NESTED:
                inner = c[1].current()
                out.append((c[3].render(inner), c[2]))
                weight += max(1, len(inner))
        ctr.steps += len(out)
        self.weight = weight
        return out


class EnumerationSession(Iterator[tuple]):
    """Iterator over annotations with step accounting.

    ``steps_since_yield`` is the number of steps consumed since the last
    yielded output; ``delays`` records, per output, the steps spent to
    produce it (``final_steps`` covers the last, unproductive, call).
    """

    def __init__(self, arena: EcsArena, root: NodeId, record: bool = True):
        self._ctr = StepCounter()
        self._walker = Walker(arena, root, self._ctr)
        self._started = False
        self._done = False
        self.record = record
        self.delays: list[tuple[int, int]] = []
        self.final_steps: int | None = None
        self.last_weight = 0
        self.count = 0

    @property
    def steps_since_yield(self) -> int:
        return self._ctr.steps

    def __iter__(self):
        return self

    def __next__(self) -> tuple:
        if self._done:
            raise StopIteration
        w = self._walker
        if not self._started:
            self._started = True
            ok = w.start()
        else:
            ok = w.advance()
        if not ok:
            self._done = True
            self.final_steps = self._ctr.steps
            raise StopIteration
        ann = tuple(w.current())
        self.last_weight = w.weight
        if self.record:
            self.delays.append((self._ctr.steps, self.last_weight))
        self._ctr.steps = 0
        self.count += 1
        return ann

    def within_bound(self, constant: int = DELAY_CONSTANT) -> bool:
        # detecting the end is charged to the last output; with none it must be O(1)
        ok = all(steps <= constant * (size + 1) for steps, size in self.delays)
        return ok and (self.final_steps is None or self.final_steps <= constant * (self.last_weight + 1))

    def max_ratio(self) -> float:
        if not self.delays:
            return 0.0
        return max(steps / (size + 1) for steps, size in self.delays)

    @property
    def max_delay_steps(self) -> int:
        vals = [s for s, _ in self.delays]
        if self.final_steps is not None:
            vals.append(self.final_steps)
        return max(vals, default=0)


def enumerate_node(arena: EcsArena, v: NodeId) -> EnumerationSession:
    return EnumerationSession(arena, v)


def step_counter(session: EnumerationSession) -> int:
    return session.steps_since_yield
