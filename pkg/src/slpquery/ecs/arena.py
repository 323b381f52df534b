"""Append-only Shift-ECS node store.

Handles are plain ints. ``BOT`` (0) and ``EPS`` (1) exist in every arena.
Nodes are never changed after creation, so every handle stays valid and
keeps its meaning.
"""

from __future__ import annotations

from typing import Hashable, Iterable

import numpy as np

from ..errors import BudgetExceeded, ContractViolation
from . import _kernels as kern
from ._kernels import BOT, EPS, OUT, PROD, SHIFT, UNION

NodeId = int

KIND_NAMES = {BOT: "bot", EPS: "eps", OUT: "out", UNION: "union", PROD: "prod", SHIFT: "shift"}


class EcsArena:
    """Columns of a Shift-ECS plus a symbol table for output nodes.

    With ``debug=True`` every union checks disjointness and every product
    checks unique decomposition via :func:`sem_oracle` on small operands.
    """

    def __init__(self, capacity: int = 1024, debug: bool = False, debug_budget: int = 4096):
        capacity = max(capacity, 16)
        self.kind = np.zeros(capacity, dtype=np.int8)
        self.left = np.full(capacity, -1, dtype=np.int64)
        self.right = np.full(capacity, -1, dtype=np.int64)
        self.value = np.zeros(capacity, dtype=np.int64)
        self.odepth = np.zeros(capacity, dtype=np.int8)
        self._n = np.zeros(1, dtype=np.int64)
        self.counters = np.zeros(4, dtype=np.int64)
        self.kind[EPS] = EPS
        self._n[0] = 2
        self.symbols: list[Hashable] = []
        self._sym_ids: dict[Hashable, int] = {}
        self.debug = debug
        self.debug_budget = debug_budget

    # -- storage -----------------------------------------------------------

    def __len__(self) -> int:
        return int(self._n[0])

    @property
    def node_count(self) -> int:
        return int(self._n[0])

    def reserve(self, extra: int) -> None:
        need = int(self._n[0]) + extra
        cap = self.kind.shape[0]
        if need <= cap:
            return
        while cap < need:
            cap *= 2
        grow = cap - self.kind.shape[0]
        self.kind = np.concatenate([self.kind, np.zeros(grow, dtype=np.int8)])
        self.left = np.concatenate([self.left, np.full(grow, -1, dtype=np.int64)])
        self.right = np.concatenate([self.right, np.full(grow, -1, dtype=np.int64)])
        self.value = np.concatenate([self.value, np.zeros(grow, dtype=np.int64)])
        self.odepth = np.concatenate([self.odepth, np.zeros(grow, dtype=np.int8)])

    def cols(self):
        return self.kind, self.left, self.right, self.value, self.odepth, self._n

    def intern(self, symbol: Hashable) -> int:
        sid = self._sym_ids.get(symbol)
        if sid is None:
            sid = len(self.symbols)
            self.symbols.append(symbol)
            self._sym_ids[symbol] = sid
        return sid

    # -- node inspection ---------------------------------------------------

    def label(self, v: NodeId) -> str:
        k = int(self.kind[v])
        if k == OUT:
            return f"out({self.symbols[int(self.value[v])]})"
        if k == SHIFT:
            return f"shift({int(self.value[v])})"
        return KIND_NAMES[k]

    def is_output(self, v: NodeId) -> bool:
        return int(self.kind[v]) in (OUT, PROD)

    def dump(self) -> str:
        """One line per node: ``id label left right``."""
        lines = []
        for v in range(len(self)):
            l = int(self.left[v])
            r = int(self.right[v])
            lines.append(f"{v} {self.label(v)} {'-' if l < 0 else l} {'-' if r < 0 else r}")
        return "\n".join(lines) + "\n"

    # -- the four operations -------------------------------------------------

    def add(self, symbol: Hashable) -> NodeId:
        self.reserve(kern.WORST_ADD)
        return int(kern.op_add(*self.cols(), self.counters, self.intern(symbol)))

    def shift(self, v: NodeId, k: int) -> NodeId:
        k = _as_i64(k)
        self.reserve(kern.WORST_SHIFT)
        return int(kern.op_shift(*self.cols(), self.counters, v, k))

    def union(self, v3: NodeId, v4: NodeId) -> NodeId:
        if self.debug:
            self._check_disjoint(v3, v4)
        self.reserve(kern.WORST_UNION)
        return int(kern.op_union(*self.cols(), self.counters, v3, v4))

    def prod(self, v1: NodeId, v2: NodeId) -> NodeId:
        if self.debug:
            self._check_decomposition(v1, v2)
        self.reserve(kern.WORST_PROD)
        return int(kern.op_prod(*self.cols(), self.counters, v1, v2))

    def union_all(self, nodes: Iterable[NodeId]) -> NodeId:
        acc = BOT
        for v in nodes:
            acc = self.union(acc, v)
        return acc

    def op_counts(self) -> dict[str, int]:
        c = self.counters
        return {"unions": int(c[0]), "prods": int(c[1]), "shifts": int(c[2]), "adds": int(c[3])}

    # -- debug contracts ---------------------------------------------------

    def _small_sem(self, v: NodeId):
        try:
            return sem_oracle(self, v, budget=self.debug_budget)
        except BudgetExceeded:
            return None

    def _check_disjoint(self, v3: NodeId, v4: NodeId) -> None:
        s3 = self._small_sem(v3)
        s4 = self._small_sem(v4) if s3 is not None else None
        if s3 is not None and s4 is not None and s3 & s4:
            raise ContractViolation(f"union operands {v3} and {v4} overlap")

    def _check_decomposition(self, v1: NodeId, v2: NodeId) -> None:
        s1 = self._small_sem(v1)
        s2 = self._small_sem(v2) if s1 is not None else None
        if s1 is None or s2 is None:
            return
        if len({a + b for a in s1 for b in s2}) != len(s1) * len(s2):
            raise ContractViolation(f"product of {v1} and {v2} is not uniquely decomposable")


def _as_i64(k: int) -> int:
    k = int(k)
    if not kern.I64_MIN <= k <= kern.I64_MAX:
        raise OverflowError("shift value overflows signed 64-bit")
    return k


# ---------------------------------------------------------------------------
# independent checks (do not trust cached bookkeeping)


def sem_oracle(arena: EcsArena, v: NodeId, budget: int = 10**6) -> frozenset:
    """The set denoted by ``v``, by direct recursive definition (iterative)."""
    K, L, R, V = arena.kind, arena.left, arena.right, arena.value
    memo: dict[int, frozenset] = {BOT: frozenset(), EPS: frozenset([()])}
    stack = [int(v)]
    while stack:
        u = stack[-1]
        if u in memo:
            stack.pop()
            continue
        k = int(K[u])
        kids = [int(L[u])] + ([int(R[u])] if k in (UNION, PROD) else []) if k != OUT else []
        pending = [c for c in kids if c not in memo]
        if pending:
            stack.extend(pending)
            continue
        stack.pop()
        if k == OUT:
            res = frozenset([((arena.symbols[int(V[u])], 1),)])
        elif k == SHIFT:
            d = int(V[u])
            res = frozenset(tuple((s, i + d) for s, i in w) for w in memo[kids[0]])
        elif k == UNION:
            res = memo[kids[0]] | memo[kids[1]]
        else:
            a, b = memo[kids[0]], memo[kids[1]]
            if len(a) * len(b) > budget:
                raise BudgetExceeded("semantic oracle budget exceeded")
            res = frozenset(x + y for x in a for y in b)
        if len(res) > budget:
            raise BudgetExceeded("semantic oracle budget exceeded")
        memo[u] = res
    return memo[int(v)]


def structural_odepth(arena: EcsArena) -> np.ndarray:
    """Output-depth recomputed from the children, bottom-up over ids."""
    n = len(arena)
    K, L = arena.kind, arena.left
    out = np.zeros(n, dtype=np.int64)
    for u in range(n):
        if int(K[u]) in (UNION, SHIFT):
            out[u] = out[int(L[u])] + 1
    return out


def reaches_eps(arena: EcsArena) -> np.ndarray:
    """``True`` where the node has EPS as a strict descendant."""
    n = len(arena)
    K, L, R = arena.kind, arena.left, arena.right
    res = np.zeros(n, dtype=bool)
    for u in range(2, n):
        k = int(K[u])
        if k == OUT:
            continue
        for c in (int(L[u]), int(R[u])) if k in (UNION, PROD) else (int(L[u]),):
            if c == EPS or res[c]:
                res[u] = True
                break
    return res


def is_safe(arena: EcsArena, v: NodeId, depth: np.ndarray | None = None) -> bool:
    K, L, R = arena.kind, arena.left, arena.right
    if depth is None:
        depth = structural_odepth(arena)
    if int(K[v]) != SHIFT:
        return False
    c = int(L[v])
    kc = int(K[c])
    if kc in (OUT, PROD):
        return True
    if kc != UNION or depth[c] != 1:
        return False
    r = int(R[c])
    return int(K[r]) == SHIFT and depth[r] <= 2


def is_eps_safe(arena: EcsArena, v: NodeId, depth=None, eps_below=None) -> bool:
    if depth is None:
        depth = structural_odepth(arena)
    if eps_below is None:
        eps_below = reaches_eps(arena)
    if v == EPS:
        return True
    if is_safe(arena, v, depth) and not eps_below[v]:
        return True
    K, L, R = arena.kind, arena.left, arena.right
    if int(K[v]) == UNION and int(L[v]) == EPS:
        r = int(R[v])
        return is_safe(arena, r, depth) and not eps_below[r]
    return False


def eps_condition_holds(arena: EcsArena) -> bool:
    """EPS only ever appears as the left child of a union."""
    K, L, R = arena.kind, arena.left, arena.right
    for u in range(2, len(arena)):
        k = int(K[u])
        if k == OUT:
            continue
        if k in (UNION, PROD) and int(R[u]) == EPS:
            return False
        if int(L[u]) == EPS and k != UNION:
            return False
    return True


def children_well_formed(arena: EcsArena) -> bool:
    K, L, R = arena.kind, arena.left, arena.right
    for u in range(len(arena)):
        k = int(K[u])
        l, r = int(L[u]), int(R[u])
        if k in (UNION, PROD):
            ok = 0 <= l < u and 0 <= r < u
        elif k == SHIFT:
            ok = 0 <= l < u and r == -1
        else:
            ok = l == -1 and r == -1
        if not ok:
            return False
    return True
