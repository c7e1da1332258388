"""WFST core: semiring laws, text round-trips, composition vs brute force."""

import math

import numpy as np
import pytest

from ctcwfst.errors import EnumerationOverflowError, FstParseError
from ctcwfst.wfst import (
    EPSILON,
    ONE,
    ZERO,
    Arc,
    SymbolTable,
    Wfst,
    arc_sort,
    compose,
    connect,
    format_weight,
    read_fst_text,
    read_symbols,
    transduce_all,
    tropical_plus,
    tropical_times,
    write_fst_text,
    write_symbols,
)


def test_semiring_laws():
    rng = np.random.default_rng(3)
    values = [float(v) for v in rng.uniform(0, 50, size=30)] + [0.0, ZERO]
    for a in values:
        for b in values:
            assert tropical_plus(a, b) == tropical_plus(b, a)
            assert tropical_times(a, ONE) == a
            assert tropical_plus(a, ZERO) == a
            for c in values:
                assert tropical_plus(a, tropical_plus(b, c)) == tropical_plus(
                    tropical_plus(a, b), c
                )
                assert tropical_times(a, tropical_times(b, c)) == pytest.approx(
                    tropical_times(tropical_times(a, b), c), abs=1e-12
                )


def test_infinity_orders_after_finite():
    assert tropical_plus(ZERO, 5.0) == 5.0
    assert ZERO > 1e300


# -- text format ----------------------------------------------------------------


def test_read_single_arc():
    g = read_fst_text("0 1 1 1 0.5\n1")
    assert g.num_states == 2
    assert g.start == 0
    assert g.arcs(0) == [Arc(1, 1, 0.5, 1)]
    assert g.final(1) == 0.0
    assert not g.is_final(0)


def test_read_single_state():
    g = read_fst_text("0")
    assert g.num_states == 1
    assert g.start == 0
    assert g.final(0) == 0.0
    assert g.num_arcs() == 0


def test_write_final_only():
    g = Wfst(num_states=1, start=0)
    g.set_final(0, 0.0)
    assert write_fst_text(g) == "0 0\n"


def test_write_single_arc():
    g = read_fst_text("0 1 1 1 0.5\n1")
    assert write_fst_text(g) == "0 1 1 1 0.5\n1 0\n"


def test_read_missing_arc_weight_defaults_to_zero():
    g = read_fst_text("0 1 2 3\n1 0.25")
    assert g.arcs(0) == [Arc(2, 3, 0.0, 1)]
    assert g.final(1) == 0.25


def test_start_is_first_mentioned_state():
    g = read_fst_text("3 1 1 1 0.5\n1")
    assert g.start == 3
    assert g.num_states == 4


def test_parse_errors_carry_line_numbers():
    with pytest.raises(FstParseError, match="line 2"):
        read_fst_text("0 1 1 1 0.5\n0 1 1\n")
    with pytest.raises(FstParseError, match="line 1"):
        read_fst_text("0 1 -2 1 0.5\n")
    with pytest.raises(FstParseError, match="weight"):
        read_fst_text("0 1 1 1 abc\n")
    with pytest.raises(FstParseError):
        read_fst_text("")


def _random_wfst(rng, max_states=6, max_labels=4):
    n = int(rng.integers(1, max_states + 1))
    g = Wfst(num_states=n, start=int(rng.integers(0, n)))
    for s in range(n):
        for _ in range(int(rng.integers(0, 4))):
            g.add_arc(
                s,
                Arc(
                    int(rng.integers(0, max_labels + 1)),
                    int(rng.integers(0, max_labels + 1)),
                    round(float(rng.uniform(0, 5)), 3),
                    int(rng.integers(0, n)),
                ),
            )
    for s in range(n):
        if rng.random() < 0.5:
            g.set_final(s, round(float(rng.uniform(0, 3)), 3))
    # keep every state mentioned so serialization cannot drop it; the text
    # format also cannot express a start state with no arcs and no final
    mentioned = {a.nextstate for s in range(n) for a in g.arcs(s)}
    mentioned.update(s for s in range(n) if g.arcs(s) or g.is_final(s))
    for s in range(n):
        if s not in mentioned:
            g.set_final(s, round(float(rng.uniform(0, 3)), 3))
    if not g.arcs(g.start) and not g.is_final(g.start):
        g.set_final(g.start, 0.0)
    return g


def test_serialization_round_trip_random():
    rng = np.random.default_rng(11)
    for _ in range(200):
        g = _random_wfst(rng)
        assert read_fst_text(write_fst_text(g)) == g


def test_format_weight_round_trips():
    rng = np.random.default_rng(5)
    for w in [0.0, 0.5, 17.0, 1e-9, math.pi, -3.25, 1234.5678, *rng.uniform(-50, 50, 50)]:
        assert float(format_weight(float(w))) == float(w)


# -- arc_sort -------------------------------------------------------------------


def test_arc_sort_orders_and_is_idempotent():
    g = Wfst(num_states=2, start=0)
    for lab in (3, 1, 2):
        g.add_arc(0, Arc(lab, 4 - lab, 0.1 * lab, 1))
    g.set_final(1)
    s1 = arc_sort(g, "ilabel")
    assert [a.ilabel for a in s1.arcs(0)] == [1, 2, 3]
    assert arc_sort(s1, "ilabel") == s1
    s2 = arc_sort(g, "olabel")
    assert [a.olabel for a in s2.arcs(0)] == [1, 2, 3]


def test_arc_sort_preserves_paths():
    rng = np.random.default_rng(13)
    for _ in range(30):
        g = _random_wfst(rng, max_states=4, max_labels=2)
        try:
            rel = transduce_all(g, [1, 2], max_paths=5000)
            rel_sorted = transduce_all(arc_sort(g, "ilabel"), [1, 2], max_paths=5000)
        except EnumerationOverflowError:
            continue
        assert rel.keys() == rel_sorted.keys()
        for k in rel:
            assert rel[k] == pytest.approx(rel_sorted[k], abs=1e-12)


def test_arc_sort_rejects_bad_key():
    with pytest.raises(ValueError):
        arc_sort(Wfst(num_states=1, start=0), "weight")


# -- transduce_all --------------------------------------------------------------


def _identity_transducer(labels, arc_cost=0.25, final_cost=0.5):
    g = Wfst(num_states=1, start=0)
    g.set_final(0, final_cost)
    for lab in labels:
        g.add_arc(0, Arc(lab, lab, arc_cost, 0))
    return g


def test_transduce_identity():
    g = _identity_transducer([1, 2])
    assert transduce_all(g, [1]) == {(1,): 0.75}
    assert transduce_all(g, []) == {(): 0.5}


def test_transduce_empty_input_non_final_start():
    g = Wfst(num_states=2, start=0)
    g.set_final(1, 0.0)
    g.add_arc(0, Arc(1, 1, 0.0, 1))
    assert transduce_all(g, []) == {}


def test_transduce_epsilon_cycle_overflows():
    g = Wfst(num_states=1, start=0)
    g.set_final(0, 0.0)
    g.add_arc(0, Arc(EPSILON, 1, 0.0, 0))
    with pytest.raises(EnumerationOverflowError):
        transduce_all(g, [], max_paths=100)


# -- compose --------------------------------------------------------------------


def test_compose_identity():
    path = Wfst(num_states=3, start=0)
    path.add_arc(0, Arc(1, 1, 0.5, 1))
    path.add_arc(1, Arc(2, 2, 0.25, 2))
    path.set_final(2, 0.0)
    ident = _identity_transducer([1, 2], arc_cost=0.1, final_cost=0.0)
    got = transduce_all(compose(path, ident), [1, 2])
    assert set(got) == {(1, 2)}
    assert got[(1, 2)] == pytest.approx(0.5 + 0.25 + 0.1 + 0.1, abs=1e-12)


def test_compose_with_empty_is_empty():
    g = _identity_transducer([1])
    assert compose(g, Wfst.empty()).is_empty
    assert compose(Wfst.empty(), g).is_empty


def _acyclic_wfst(rng, max_states=5, max_labels=3):
    """Random acyclic transducer (all arcs strictly forward) so brute-force
    path enumeration stays cheap. Cyclic behavior is covered elsewhere."""
    n = int(rng.integers(2, max_states + 1))
    g = Wfst(num_states=n, start=0)
    for s in range(n - 1):
        for _ in range(int(rng.integers(1, 4))):
            g.add_arc(
                s,
                Arc(
                    int(rng.integers(0, max_labels + 1)),
                    int(rng.integers(0, max_labels + 1)),
                    round(float(rng.uniform(0, 5)), 3),
                    int(rng.integers(s + 1, n)),
                ),
            )
        if rng.random() < 0.3:
            g.set_final(s, round(float(rng.uniform(0, 3)), 3))
    g.set_final(n - 1, round(float(rng.uniform(0, 3)), 3))
    return g


def test_compose_matches_relational_composition():
    rng = np.random.default_rng(101)
    checked = 0
    attempts = 0
    inputs = [()]
    for length in range(3):
        inputs = inputs + [
            x + (lab,) for x in inputs for lab in (1, 2, 3) if len(x) == length
        ]
    while checked < 12 and attempts < 100:
        attempts += 1
        a = _acyclic_wfst(rng)
        b = _acyclic_wfst(rng)
        ab = compose(a, b)
        try:
            for x in inputs:
                rel_a = transduce_all(a, x, max_paths=10_000)
                expected = {}
                for y, c1 in rel_a.items():
                    for z, c2 in transduce_all(b, y, max_paths=10_000).items():
                        total = c1 + c2
                        if z not in expected or total < expected[z]:
                            expected[z] = total
                got = transduce_all(ab, x, max_paths=20_000)
                assert got.keys() == expected.keys()
                for z in expected:
                    assert got[z] == pytest.approx(expected[z], abs=1e-9)
        except EnumerationOverflowError:
            continue
        checked += 1
    assert checked >= 8, "too few composable random instances"


def test_connect_removes_dead_states():
    g = Wfst(num_states=4, start=0)
    g.add_arc(0, Arc(1, 1, 0.0, 1))
    g.add_arc(0, Arc(2, 2, 0.0, 2))  # state 2 never reaches a final state
    g.add_arc(3, Arc(1, 1, 0.0, 1))  # state 3 unreachable
    g.set_final(1, 0.0)
    trimmed = connect(g)
    assert trimmed.num_states == 2
    assert transduce_all(trimmed, [1]) == transduce_all(g, [1])


def test_connect_empty_when_no_accepting_path():
    g = Wfst(num_states=2, start=0)
    g.add_arc(0, Arc(1, 1, 0.0, 1))
    assert connect(g).is_empty


# -- symbol tables ---------------------------------------------------------------


def test_symbol_table_round_trip():
    t = SymbolTable()
    t.add("hello")
    t.add("world", 7)
    parsed = read_symbols(write_symbols(t))
    assert parsed.id("hello") == t.id("hello")
    assert parsed.id("world") == 7
    assert parsed.symbol(0) == "<eps>"


def test_symbol_table_requires_epsilon_first():
    with pytest.raises(FstParseError):
        read_symbols("foo 1\n<eps> 0\n")
    with pytest.raises(FstParseError):
        read_symbols("")
