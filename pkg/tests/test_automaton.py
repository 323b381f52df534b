import random

import pytest
from hypothesis import given, strategies as st

from helpers import random_det_anna, random_doc, random_nfa, read_data
from slpquery.automaton import (
    Read,
    ReadWrite,
    all_docs,
    check_unambiguous,
    determinize,
    is_annotation,
    is_deterministic,
    make_anna,
    naive_eval,
    parse_anna,
    partial_runs,
    run_search,
    serialize_anna,
    trim_anna,
)
from slpquery.errors import BudgetExceeded, DuplicateTransition, FormatError, LimitExceeded, UnknownState

THREE_B = parse_anna(read_data("three_b.anna"))
BARBARA_RESULT = {
    (("mark", 1), ("mark", 4), ("mark", 8)),
    (("mark", 4), ("mark", 8), ("mark", 10)),
    (("mark", 8), ("mark", 10), ("mark", 14)),
}


def test_three_b_shape():
    assert len(THREE_B.states) == 4
    assert THREE_B.input_alphabet == {"a", "b", "r"}
    assert THREE_B.output_alphabet == {"mark"}
    assert len(THREE_B.writes()) == 3
    # q0 and q3 loop on all of {a,b,r}; q1 and q2 loop on {a,r}
    assert len(THREE_B.transitions) == 3 + 3 + 3 + 2 + 2
    assert THREE_B.size == 4 + 13


def test_three_b_on_barbara():
    assert naive_eval(THREE_B, "barbarababaraba") == BARBARA_RESULT


def test_round_trip():
    again = parse_anna(serialize_anna(THREE_B))
    assert again.transitions == THREE_B.transitions
    assert again.states == THREE_B.states and again.finals == THREE_B.finals


def test_empty_finals():
    a = make_anna(["q0"], "q0", [], [Read("q0", "a", "q0")])
    for d in all_docs("a", 4):
        assert naive_eval(a, d) == set()


def test_unknown_state():
    with pytest.raises(UnknownState):
        parse_anna("anna v1\nstates q0\ninit q0\nread q0 'a' q9\n")
    with pytest.raises(UnknownState):
        make_anna(["q0"], "q1", [], [])


def test_duplicate_transition():
    with pytest.raises(DuplicateTransition):
        parse_anna("anna v1\nstates q0\ninit q0\nread q0 'a' q0\nread q0 'a' q0\n")


@pytest.mark.parametrize(
    "text",
    [
        "states q0\n",
        "anna v1\ninit q0\n",
        "anna v1\nstates q0\n",
        "anna v1\nstates q0\ninit q0\nwrite q0 'a' omega q0\n",
        "anna v1\nstates q0\ninit q0\nread q0 a q0\n",
    ],
)
def test_malformed(text):
    with pytest.raises(FormatError):
        parse_anna(text)


def test_empty_document():
    a = make_anna(["q0", "q1"], "q0", ["q0"], [Read("q0", "a", "q1")])
    assert naive_eval(a, "") == {()}
    b = make_anna(["q0", "q1"], "q0", ["q1"], [Read("q0", "a", "q1")])
    assert naive_eval(b, "") == set()


def test_partial_runs_from_other_state():
    assert partial_runs(THREE_B, "ba", start="q1") == {"q2": {(("mark", 1),)}}
    # q2 has no plain b-read, so the second b is forced to mark
    assert partial_runs(THREE_B, "bab", start="q1") == {"q3": {(("mark", 1), ("mark", 3))}}


def test_budget():
    with pytest.raises(BudgetExceeded):
        naive_eval(THREE_B, "b" * 200, budget=1000)


@given(st.integers(0, 2**32))
def test_naive_matches_run_search(seed):
    rng = random.Random(seed)
    a = random_nfa(rng, 3, "ab")
    d = random_doc(rng, "ab", 0, 8)
    runs = run_search(a, d)
    assert naive_eval(a, d) == set(runs)


@given(st.integers(0, 2**32))
def test_naive_outputs_are_annotations(seed):
    rng = random.Random(seed)
    a = random_nfa(rng, 3, "abc")
    d = random_doc(rng, "abc", 0, 10)
    for ann in naive_eval(a, d):
        assert is_annotation(ann)


def test_determinize_three_b_is_already_deterministic():
    assert is_deterministic(THREE_B)
    d = determinize(THREE_B)
    assert is_deterministic(d)
    for doc in all_docs("abr", 5):
        assert naive_eval(d, doc) == naive_eval(THREE_B, doc)


def test_determinize_two_reads():
    nfa = make_anna(["q0", "q1"], "q0", ["q1"], [Read("q0", "a", "q1"), Read("q0", "a", "q0")])
    assert not is_deterministic(nfa)
    d = determinize(nfa)
    assert is_deterministic(d)
    for doc in all_docs("a", 4):
        assert naive_eval(d, doc) == naive_eval(nfa, doc)


def test_determinize_drops_unreachable():
    a = make_anna(["q0", "q1", "z"], "q0", ["q1"], [Read("q0", "a", "q1"), Read("z", "a", "q1")])
    d = determinize(a)
    assert all("2" not in q for q in d.states)
    assert len(d.states) == 2


def test_determinize_state_limit():
    a = random_nfa(random.Random(3), 3, "ab", density=0.6)
    full = determinize(a)
    with pytest.raises(LimitExceeded):
        determinize(a, max_states=len(full.states) - 1)


def test_is_deterministic_cases():
    assert is_deterministic(make_anna(["q0"], "q0", [], []))
    # read and read-write on the same letter are distinguished by their label
    a = make_anna(["q0", "q1"], "q0", ["q1"], [Read("q0", "a", "q0"), ReadWrite("q0", "a", "x", "q1")])
    assert is_deterministic(a)


def test_unambiguity():
    assert check_unambiguous(THREE_B, 6)
    # two parallel annotation-free runs over "a"
    amb = make_anna(["q0", "q1", "q2"], "q0", ["q1", "q2"], [Read("q0", "a", "q1"), Read("q0", "a", "q2")])
    assert not check_unambiguous(amb, 2)
    # same runs but different outputs are fine
    ok = make_anna(
        ["q0", "q1", "q2"], "q0", ["q1", "q2"], [ReadWrite("q0", "a", "x", "q1"), ReadWrite("q0", "a", "y", "q2")]
    )
    assert check_unambiguous(ok, 3)


@given(st.integers(0, 2**32), st.sampled_from(["ab", "abc"]))
def test_determinize_preserves_semantics(seed, sigma):
    rng = random.Random(seed)
    nfa = random_nfa(rng, rng.randint(1, 3), sigma)
    d = determinize(nfa)
    assert is_deterministic(d)
    assert check_unambiguous(d, 3 if len(sigma) == 3 else 4)
    docs = list(all_docs(sigma, 3 if len(sigma) == 3 else 5))
    docs += [random_doc(rng, sigma, 6, 12) for _ in range(4)]
    for doc in docs:
        assert naive_eval(d, doc) == naive_eval(nfa, doc)


def test_determinize_long_docs():
    rng = random.Random(11)
    checked = 0
    while checked < 200:
        nfa = random_nfa(rng, 3, "abc")
        d = determinize(nfa)
        doc = random_doc(rng, "abc", 6, 14)
        try:
            want = naive_eval(nfa, doc, budget=1 << 16)
        except BudgetExceeded:
            continue
        assert naive_eval(d, doc) == want
        checked += 1


def test_trim_keeps_semantics():
    rng = random.Random(5)
    for _ in range(30):
        a = random_nfa(rng, 3, "ab")
        t = trim_anna(a)
        for doc in all_docs("ab", 4):
            assert naive_eval(t, doc) == naive_eval(a, doc)


def test_random_det_anna_is_small():
    rng = random.Random(0)
    for _ in range(20):
        a = random_det_anna(rng)
        assert len(a.states) <= 4 and is_deterministic(a)
