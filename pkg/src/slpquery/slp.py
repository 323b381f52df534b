"""Straight-line programs: parsing, validation, expansion and normal form."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, Union

from .errors import (
    CyclicGrammar,
    DocTooLarge,
    DuplicateRule,
    EmptyRuleBody,
    FormatError,
    LimitExceeded,
    MissingRule,
    UnknownSymbol,
)

MAX_DOC_LEN = 1 << 63
IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


@dataclass(frozen=True, slots=True)
class Terminal:
    char: str

    def __post_init__(self):
        if len(self.char) != 1:
            raise ValueError(f"terminal must be a single character, got {self.char!r}")

    def __str__(self) -> str:
        return quote_char(self.char)


@dataclass(frozen=True, slots=True)
class NonTerminal:
    name: str

    def __str__(self) -> str:
        return self.name


Symbol = Union[Terminal, NonTerminal]


@dataclass(frozen=True)
class SlpStats:
    size: int
    doc_len: Mapping[str, int]


@dataclass(frozen=True, eq=False)
class Slp:
    """An SLP. ``start`` is ``None`` for rootless grammars.

    Build instances with :func:`make_slp` or :func:`parse_slp`, which
    validate. ``order`` lists non-terminals children-first.
    """

    rules: Mapping[str, tuple[Symbol, ...]]
    start: str | None = None
    order: tuple[str, ...] = field(default=(), repr=False)
    lens: Mapping[str, int] = field(default_factory=dict, repr=False)

    @property
    def nonterminals(self) -> frozenset[str]:
        return frozenset(self.rules)

    @property
    def size(self) -> int:
        return sum(len(body) for body in self.rules.values())

    def terminals(self) -> frozenset[str]:
        return frozenset(
            y.char for body in self.rules.values() for y in body if isinstance(y, Terminal)
        )

    def stats(self) -> SlpStats:
        return SlpStats(self.size, dict(self.lens))

    def structurally_equal(self, other: "Slp") -> bool:
        return self.start == other.start and dict(self.rules) == dict(other.rules)


def make_slp(rules: Mapping[str, Sequence[Symbol]], start: str | None = None) -> Slp:
    frozen = {name: tuple(body) for name, body in rules.items()}
    for name, body in frozen.items():
        if not IDENT_RE.match(name):
            raise FormatError(f"invalid identifier {name!r}")
        if not body:
            raise EmptyRuleBody(f"rule {name} has an empty body")
        for y in body:
            if isinstance(y, NonTerminal) and y.name not in frozen:
                raise MissingRule(f"{y.name} (used in {name}) has no rule")
    if start is not None and start not in frozen:
        raise MissingRule(f"start symbol {start} has no rule")
    order = _topological_order(frozen)
    lens: dict[str, int] = {}
    for name in order:
        total = 0
        for y in frozen[name]:
            total += 1 if isinstance(y, Terminal) else lens[y.name]
        if total >= MAX_DOC_LEN:
            raise DocTooLarge(f"doc_len({name}) = {total} does not fit in 63 bits")
        lens[name] = total
    return Slp(frozen, start, tuple(order), lens)


def _topological_order(rules: Mapping[str, tuple[Symbol, ...]]) -> list[str]:
    # iterative DFS, children before parents
    state: dict[str, int] = {}
    order: list[str] = []
    for root in rules:
        if root in state:
            continue
        stack = [(root, 0)]
        state[root] = 1
        while stack:
            name, idx = stack[-1]
            body = rules[name]
            while idx < len(body) and not isinstance(body[idx], NonTerminal):
                idx += 1
            if idx == len(body):
                stack.pop()
                state[name] = 2
                order.append(name)
                continue
            stack[-1] = (name, idx + 1)
            child = body[idx].name
            mark = state.get(child, 0)
            if mark == 1:
                raise CyclicGrammar(f"rule graph has a cycle through {child}")
            if mark == 0:
                state[child] = 1
                stack.append((child, 0))
    return order


# ---------------------------------------------------------------------------
# text format

_ESCAPES = {"'": "'", "\\": "\\", "n": "\n", "t": "\t"}
_TOKEN_RE = re.compile(
    r"\s*(?:(?P<quoted>'(?:\\u\{[0-9A-Fa-f]+\}|\\.|[^'\\])')|(?P<word>[^\s']+)|(?P<comment>#.*))"
)


def unquote_char(tok: str, line: int | None = None) -> str:
    inner = tok[1:-1]
    if inner.startswith("\\u{"):
        try:
            return chr(int(inner[3:-1], 16))
        except (ValueError, OverflowError):
            raise FormatError(f"bad unicode escape {tok}", line) from None
    if inner.startswith("\\"):
        if inner[1:] not in _ESCAPES:
            raise FormatError(f"unknown escape {tok}", line)
        return _ESCAPES[inner[1:]]
    return inner


def quote_char(c: str) -> str:
    if c == "'":
        return "'\\''"
    if c == "\\":
        return "'\\\\'"
    if c == "\n":
        return "'\\n'"
    if c == "\t":
        return "'\\t'"
    if not c.isprintable() or c.isspace():
        return "'\\u{%X}'" % ord(c)
    return f"'{c}'"


def tokenize_line(text: str, lineno: int | None = None) -> list[str]:
    """Split a line into words and quoted chars, dropping a trailing comment."""
    out: list[str] = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos:].strip() == "":
            break
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            raise FormatError(f"cannot tokenize {text[pos:].strip()!r}", lineno)
        if m.group("comment") is not None:
            break
        word = m.group("word")
        if word is not None and "#" in word:
            # comment glued to a word, e.g. "A#note"
            head = word.split("#", 1)[0]
            if head:
                out.append(head)
            break
        out.append(m.group("quoted") or word)
        pos = m.end()
    return out


def parse_symbol(tok: str, lineno: int | None = None) -> Symbol:
    if tok.startswith("'"):
        return Terminal(unquote_char(tok, lineno))
    if not IDENT_RE.match(tok):
        raise FormatError(f"invalid symbol {tok!r}", lineno)
    return NonTerminal(tok)


def parse_slp_lines(lines: Iterable[tuple[int, list[str]]]) -> Slp:
    rules: dict[str, tuple[Symbol, ...]] = {}
    start = None
    for lineno, toks in lines:
        head = toks[0]
        if head == "start":
            if len(toks) != 2 or not IDENT_RE.match(toks[1]):
                raise FormatError("expected `start <Id>`", lineno)
            if start is not None:
                raise FormatError("duplicate start line", lineno)
            start = toks[1]
        elif head == "rule":
            if len(toks) < 3 or toks[2] != "=" or not IDENT_RE.match(toks[1]):
                raise FormatError("expected `rule <Id> = <sym> ...`", lineno)
            name = toks[1]
            if name in rules:
                raise DuplicateRule(f"line {lineno}: second rule for {name}")
            body = tuple(parse_symbol(t, lineno) for t in toks[3:])
            if not body:
                raise EmptyRuleBody(f"line {lineno}: rule {name} has an empty body")
            rules[name] = body
        else:
            raise FormatError(f"unknown directive {head!r}", lineno)
    return make_slp(rules, start)


def iter_content_lines(text: str) -> Iterable[tuple[int, list[str]]]:
    for lineno, raw in enumerate(text.splitlines(), 1):
        toks = tokenize_line(raw, lineno)
        if toks:
            yield lineno, toks


def parse_slp(text: str) -> Slp:
    lines = iter(iter_content_lines(text))
    first = next(lines, None)
    if first is None or first[1] != ["slp", "v1"]:
        raise FormatError("missing `slp v1` header", first[0] if first else 1)
    return parse_slp_lines(lines)


def serialize_slp(slp: Slp) -> str:
    out = ["slp v1"]
    if slp.start is not None:
        out.append(f"start {slp.start}")
    for name, body in slp.rules.items():
        out.append(f"rule {name} = " + " ".join(str(y) for y in body))
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# queries


def _resolve(slp: Slp, root: Symbol | str) -> Symbol:
    if isinstance(root, str):
        root = NonTerminal(root)
    if isinstance(root, NonTerminal) and root.name not in slp.rules:
        raise UnknownSymbol(f"no such non-terminal {root.name}")
    return root


def doc_len(slp: Slp, root: Symbol | str) -> int:
    root = _resolve(slp, root)
    if isinstance(root, Terminal):
        return 1
    return slp.lens[root.name]


def expand(slp: Slp, root: Symbol | str | None = None, limit: int = 10**6) -> str:
    if root is None:
        if slp.start is None:
            raise UnknownSymbol("rootless SLP needs an explicit root")
        root = slp.start
    root = _resolve(slp, root)
    if isinstance(root, Terminal):
        if limit < 1:
            raise LimitExceeded("expansion of 1 character exceeds the limit")
        return root.char
    n = slp.lens[root.name]
    if n > limit:
        raise LimitExceeded(f"doc_len({root.name}) = {n} exceeds limit {limit}")
    memo: dict[str, str] = {}
    for name in slp.order:
        memo[name] = "".join(y.char if isinstance(y, Terminal) else memo[y.name] for y in slp.rules[name])
        if name == root.name:
            break
    if root.name not in memo:  # pragma: no cover - order covers every rule
        raise UnknownSymbol(root.name)
    return memo[root.name]


def is_cnf(slp: Slp) -> bool:
    for body in slp.rules.values():
        if len(body) == 1 and isinstance(body[0], Terminal):
            continue
        if len(body) == 2 and all(isinstance(y, NonTerminal) for y in body):
            continue
        return False
    return True


def binarize(slp: Slp) -> Slp:
    """Return an equivalent CNF grammar keeping every original name.

    Long bodies become chains ``A = Y1 A__1, A__1 = Y2 A__2, ...``; a
    terminal inside a body of length two or more gets its own wrapper rule.
    Unit rules ``A = B`` copy B's normalized body.
    """
    if is_cnf(slp):
        return slp
    taken = set(slp.rules)
    out: dict[str, tuple[Symbol, ...]] = {}
    counters: dict[str, int] = {}

    def fresh(base: str) -> str:
        k = counters.get(base, 0)
        while True:
            k += 1
            name = f"{base}__{k}"
            if name not in taken:
                break
        counters[base] = k
        taken.add(name)
        return name

    for name in slp.order:
        body = slp.rules[name]
        if len(body) == 1:
            y = body[0]
            out[name] = body if isinstance(y, Terminal) else out[y.name]
            continue
        items: list[NonTerminal] = []
        for y in body:
            if isinstance(y, Terminal):
                w = fresh(name)
                out[w] = (y,)
                items.append(NonTerminal(w))
            else:
                items.append(y)
        head = name
        while len(items) > 2:
            nxt = fresh(name)
            out[head] = (items[0], NonTerminal(nxt))
            head = nxt
            items = items[1:]
        out[head] = (items[0], items[1])
    # keep original rules first for readable serialization
    ordered = {n: out[n] for n in slp.rules}
    ordered.update((n, b) for n, b in out.items() if n not in ordered)
    return make_slp(ordered, slp.start)


def slp_from_string(text: str, name: str = "S") -> Slp:
    """Tiny grammar builder: balanced split with one rule per distinct substring."""
    if not text:
        raise EmptyRuleBody("cannot build an SLP for the empty document")
    rules: dict[str, tuple[Symbol, ...]] = {}
    ids: dict[str, str] = {}

    def nt_for(s: str) -> str:
        # iterative post-order over distinct substrings
        stack = [s]
        while stack:
            cur = stack[-1]
            if cur in ids:
                stack.pop()
                continue
            if len(cur) == 1:
                ids[cur] = f"T{len(ids)}"
                rules[ids[cur]] = (Terminal(cur),)
                stack.pop()
                continue
            mid = 1 << ((len(cur) - 1).bit_length() - 1)
            left, right = cur[:mid], cur[mid:]
            pending = [p for p in (left, right) if p not in ids]
            if pending:
                stack.extend(pending)
                continue
            ids[cur] = f"N{len(ids)}"
            rules[ids[cur]] = (NonTerminal(ids[left]), NonTerminal(ids[right]))
            stack.pop()
        return ids[s]

    top = nt_for(text)
    rules[name] = (NonTerminal(top),)
    return make_slp(rules, name)


def doubling_slp(n: int, leaf: str = "a", prefix: str = "A") -> Slp:
    """``A_0 = leaf``, ``A_i = A_{i-1} A_{i-1}``; doc length 2**n."""
    rules: dict[str, tuple[Symbol, ...]] = {f"{prefix}0": (Terminal(leaf),)}
    for i in range(1, n + 1):
        prev = NonTerminal(f"{prefix}{i - 1}")
        rules[f"{prefix}{i}"] = (prev, prev)
    return make_slp(rules, f"{prefix}{n}")
