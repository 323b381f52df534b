"""Generated workloads shared by the benchmark command and the tests."""

from __future__ import annotations

from .automaton import AnnA, Read, ReadWrite, make_anna
from .spanners import VarSetVA


def counter_automaton(m: int, alphabet: str = "a") -> AnnA:
    """Deterministic and dense: on each letter, stay, or jump by j emitting ``w{j}``.

    Every (p, q) pair gets a transition, so every matrix product does the full
    |Q|^3 work.
    """
    states = [f"s{i}" for i in range(m)]
    trans = []
    for p in range(m):
        for a in alphabet:
            trans.append(Read(states[p], a, states[p]))
            for j in range(1, m):
                trans.append(ReadWrite(states[p], a, f"w{j}", states[(p + j) % m]))
    return make_anna(states, states[0], [states[0]], trans)


def chain_va(n: int, letter: str = "a") -> VarSetVA:
    """Any subset of x1..xn as empty spans at position 1 (2**n mappings on ``letter``)."""
    states = [f"c{i}" for i in range(n + 1)] + [f"o{j}" for j in range(1, n + 1)] + ["f"]
    marks = []
    for i in range(1, n + 1):
        for j in range(i, n + 1):
            marks.append((f"c{i - 1}", f"open:x{j}", f"o{j}"))
    for j in range(1, n + 1):
        marks.append((f"o{j}", f"close:x{j}", f"c{j}"))
    letters = [Read(f"c{j}", letter, "f") for j in range(n + 1)] + [Read("f", letter, "f")]
    return VarSetVA(tuple(states), "c0", ("f",), tuple(letters), tuple(marks))
