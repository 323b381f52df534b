"""Random instance generators for the oracle suites."""

from __future__ import annotations

import random
from itertools import product
from pathlib import Path

from slpquery.ecs import BOT, EPS, EcsArena
from slpquery.automaton import Read, ReadWrite, determinize, make_anna, trim_anna
from slpquery.slp import NonTerminal, Terminal, make_slp
from slpquery.spanners import ExtendedVA, VarSetVA, marker

DATA = Path(__file__).parent / "data"


def read_data(name: str) -> str:
    return (DATA / name).read_text()


def random_nfa(rng: random.Random, n_states: int, alphabet: str, outputs=("x", "y"), density=0.35):
    states = [f"q{i}" for i in range(n_states)]
    trans = []
    for p, a, q in product(states, alphabet, states):
        if rng.random() < density:
            trans.append(Read(p, a, q))
        for w in outputs:
            if rng.random() < density / 2:
                trans.append(ReadWrite(p, a, w, q))
    finals = [q for q in states if rng.random() < 0.5] or [rng.choice(states)]
    return make_anna(states, states[0], finals, trans)


def random_det_anna(rng: random.Random, max_states: int = 4, alphabet: str = "ab", outputs=("x", "y")):
    """Determinized random NFA with at most ``max_states`` states."""
    while True:
        nfa = random_nfa(rng, rng.randint(1, 3), alphabet, outputs)
        det = trim_anna(determinize(nfa))
        if len(det.states) <= max_states:
            return det


def random_slp(rng: random.Random, alphabet: str = "ab", max_len: int = 120, max_rules: int = 8):
    while True:
        k = rng.randint(1, max_rules)
        rules = {}
        lens = {}
        for i in range(k):
            body = []
            for _ in range(rng.randint(1, 4)):
                if i > 0 and rng.random() < 0.6:
                    body.append(NonTerminal(f"N{rng.randrange(i)}"))
                else:
                    body.append(Terminal(rng.choice(alphabet)))
            rules[f"N{i}"] = tuple(body)
            lens[i] = sum(1 if isinstance(y, Terminal) else lens[int(y.name[1:])] for y in body)
        if lens[k - 1] <= max_len:
            return make_slp(rules, f"N{k - 1}")


def _status_name(b, st, last=None, post=False):
    tag = "".join(map(str, st))
    if post:
        return f"b{b}s{tag}p"
    return f"b{b}s{tag}l{last + 1}"


def _random_dfa(rng, n, alphabet):
    delta = {}
    for b in range(n):
        for a in alphabet:
            if rng.random() < 0.85:
                delta[(b, a)] = rng.randrange(n)
    finals = {b for b in range(n) if rng.random() < 0.6} or {0}
    return delta, finals


def random_sequential_va(rng: random.Random, alphabet: str = "ab", max_vars: int = 2, max_base: int = 2, p_marker=0.7):
    """Sequential and unambiguous by construction.

    A deterministic base automaton is paired with a status per variable
    (unopened/open/closed); markers at one position must come in a fixed
    order, tracked by the index of the last marker taken.
    """
    k = rng.randint(1, max_vars)
    nb = rng.randint(1, max_base)
    delta, bfin = _random_dfa(rng, nb, alphabet)
    order = [m for j in range(k) for m in (marker("open", f"x{j}"), marker("close", f"x{j}"))]
    start = (0, (0,) * k, -1)
    seen = {start}
    todo = [start]
    letters, marks = [], []
    while todo:
        b, st, last = todo.pop()
        src = _status_name(b, st, last)
        succ = []
        for a in alphabet:
            if (b, a) in delta:
                nxt = (delta[(b, a)], st, -1)
                letters.append(Read(src, a, _status_name(*nxt)))
                succ.append(nxt)
        for idx in range(last + 1, 2 * k):
            var, is_close = divmod(idx, 2)
            if st[var] != is_close or rng.random() > p_marker:
                continue
            new_st = list(st)
            new_st[var] += 1
            nxt = (b, tuple(new_st), idx)
            marks.append((src, order[idx], _status_name(*nxt)))
            succ.append(nxt)
        for s in succ:
            if s not in seen:
                seen.add(s)
                todo.append(s)
    states = sorted(_status_name(*s) for s in seen)
    init = _status_name(*start)
    states.remove(init)
    states.insert(0, init)
    finals = [_status_name(*s) for s in seen if s[0] in bfin and all(x != 1 for x in s[1])]
    return VarSetVA(tuple(states), init, tuple(sorted(finals)), tuple(letters), tuple(marks))


def random_sequential_eva(rng: random.Random, alphabet: str = "ab", max_vars: int = 2, max_base: int = 2, p_set=0.5):
    """Deterministic per (state, marker set); set transitions lead to post-states that must read."""
    k = rng.randint(1, max_vars)
    nb = rng.randint(1, max_base)
    delta, bfin = _random_dfa(rng, nb, alphabet)
    start = (0, (0,) * k)
    seen = {start}
    todo = [start]
    letters, sets, posts = [], [], set()
    finals = set()

    def options(st):
        per_var = []
        for j, s in enumerate(st):
            o, c = marker("open", f"x{j}"), marker("close", f"x{j}")
            if s == 0:
                per_var.append([(), (o,), (o, c)])
            elif s == 1:
                per_var.append([(), (c,)])
            else:
                per_var.append([()])
        for combo in product(*per_var):
            ms = frozenset(m for part in combo for m in part)
            if ms:
                yield ms

    def after(st, ms):
        st = list(st)
        for m in ms:
            kind, var = m.split(":")
            j = int(var[1:])
            st[j] = max(st[j], 1 if kind == "open" else 2)
        return tuple(st)

    def read_from(name, b, st):
        for a in alphabet:
            if (b, a) in delta:
                nxt = (delta[(b, a)], st)
                letters.append(Read(name, a, _status_name(nxt[0], nxt[1], -1)))
                if nxt not in seen:
                    seen.add(nxt)
                    todo.append(nxt)

    while todo:
        b, st = todo.pop()
        name = _status_name(b, st, -1)
        if b in bfin and all(x != 1 for x in st):
            finals.add(name)
        read_from(name, b, st)
        for ms in options(st):
            if rng.random() > p_set:
                continue
            nst = after(st, ms)
            post = _status_name(b, nst, post=True) + "_" + str(len(posts))
            posts.add(post)
            sets.append((name, ms, post))
            read_from(post, b, nst)
            if b in bfin and all(x != 1 for x in nst):
                finals.add(post)
    init = _status_name(*start, -1)
    states = sorted({_status_name(b, st, -1) for b, st in seen} | posts)
    states.remove(init)
    states.insert(0, init)
    return ExtendedVA(tuple(states), init, tuple(sorted(finals)), tuple(letters), tuple(sets))


def random_doc(rng: random.Random, alphabet: str, lo: int = 1, hi: int = 8) -> str:
    return "".join(rng.choice(alphabet) for _ in range(rng.randint(lo, hi)))


class EcsFuzzer:
    """Random add/shift/union/prod over a pool of handles, respecting the contracts.

    Every ``add`` uses a fresh symbol, so products of handles with disjoint
    symbol sets decompose uniquely and unions of such handles are disjoint
    unless both contain the empty annotation.
    """

    def __init__(self, rng: random.Random, arena: EcsArena | None = None, max_shift: int = 5):
        self.rng = rng
        self.arena = arena if arena is not None else EcsArena()
        self.max_shift = max_shift
        # (handle, symbols, contains_eps)
        self.pool: list[tuple[int, frozenset, bool]] = [(EPS, frozenset(), True)]
        self.fresh = 0
        self.growth: list[int] = []
        self.returned: list[int] = []

    def _pick(self, pred=lambda e: True):
        cands = [e for e in self.pool[-64:] if pred(e)]
        return self.rng.choice(cands) if cands else None

    def step(self) -> int:
        rng, arena = self.rng, self.arena
        before = len(arena)
        op = rng.choice(("add", "add", "shift", "union", "prod", "prod"))
        entry = None
        if op == "shift":
            v, syms, eps = self._pick()
            entry = (arena.shift(v, rng.randint(0, self.max_shift)), syms, eps)
        elif op in ("union", "prod"):
            a = self._pick()
            b = self._pick(lambda e: not (e[1] & a[1]) and not (op == "union" and e[2] and a[2]) and e is not a)
            if b is not None:
                if rng.random() < 0.5:
                    a, b = b, a
                if op == "union":
                    entry = (arena.union(a[0], b[0]), a[1] | b[1], a[2] or b[2])
                else:
                    entry = (arena.prod(a[0], b[0]), a[1] | b[1], a[2] and b[2])
        if entry is None:
            self.fresh += 1
            entry = (arena.add(f"s{self.fresh}"), frozenset([self.fresh]), False)
        self.growth.append(len(arena) - before)
        self.returned.append(entry[0])
        if entry[0] != BOT:
            self.pool.append(entry)
        return entry[0]

    def run(self, n: int) -> "EcsFuzzer":
        for _ in range(n):
            self.step()
        return self


def ab_marker():
    """Deterministic: marks every b that directly follows an a (one output per doc)."""
    return make_anna(
        ["s0", "s1"],
        "s0",
        ["s0", "s1"],
        [Read("s0", "a", "s1"), Read("s0", "b", "s0"), Read("s1", "a", "s1"), ReadWrite("s1", "b", "ab", "s0")],
    )


def b_then_a():
    """Unambiguous: one b marked x, then a later a marked y (quadratically many outputs)."""
    loops = [Read(q, c, q) for q in ("q0", "q1", "q2") for c in "ab"]
    return make_anna(
        ["q0", "q1", "q2"],
        "q0",
        ["q2"],
        loops + [ReadWrite("q0", "b", "x", "q1"), ReadWrite("q1", "a", "y", "q2")],
    )
