"""Weighted finite-state transducers over the tropical semiring.

Weights are plain floats interpreted as costs (negative log probabilities):
path weights combine by addition, alternatives by min, and the zero element
is +inf. Graphs are built mutably and treated as immutable once handed to
the decoder or to composition.
"""

from __future__ import annotations

import math
from typing import Iterable, Iterator, NamedTuple

from .errors import EnumerationOverflowError, FstParseError, SymbolTableError

EPSILON = 0
NO_STATE = -1

# Tropical semiring constants: plus = min, times = +.
ZERO = math.inf
ONE = 0.0


def tropical_plus(a: float, b: float) -> float:
    return a if a <= b else b


def tropical_times(a: float, b: float) -> float:
    return a + b


def format_weight(w: float) -> str:
    """Shortest decimal form that parses back to the same float."""
    if math.isfinite(w) and w == math.floor(w) and abs(w) < 1e16:
        return str(int(w))
    return repr(w)


class Arc(NamedTuple):
    ilabel: int
    olabel: int
    weight: float
    nextstate: int


class SymbolTable:
    """Bijective symbol <-> integer id map with id 0 reserved for epsilon."""

    def __init__(self, epsilon_symbol: str = "<eps>"):
        self._sym2id = {epsilon_symbol: EPSILON}
        self._id2sym = {EPSILON: epsilon_symbol}

    def add(self, symbol: str, sym_id: int | None = None) -> int:
        if symbol in self._sym2id:
            existing = self._sym2id[symbol]
            if sym_id is not None and sym_id != existing:
                raise SymbolTableError(
                    f"symbol {symbol!r} already mapped to id {existing}"
                )
            return existing
        if sym_id is None:
            sym_id = max(self._id2sym) + 1
        if sym_id in self._id2sym:
            raise SymbolTableError(
                f"id {sym_id} already mapped to {self._id2sym[sym_id]!r}"
            )
        if sym_id < 0:
            raise SymbolTableError(f"negative symbol id {sym_id}")
        self._sym2id[symbol] = sym_id
        self._id2sym[sym_id] = symbol
        return sym_id

    def id(self, symbol: str) -> int:
        try:
            return self._sym2id[symbol]
        except KeyError:
            raise SymbolTableError(f"unknown symbol {symbol!r}") from None

    def symbol(self, sym_id: int) -> str:
        try:
            return self._id2sym[sym_id]
        except KeyError:
            raise SymbolTableError(f"unknown symbol id {sym_id}") from None

    def __contains__(self, symbol: str) -> bool:
        return symbol in self._sym2id

    def __len__(self) -> int:
        return len(self._sym2id)

    def items(self) -> Iterator[tuple[str, int]]:
        return iter(sorted(self._sym2id.items(), key=lambda kv: kv[1]))

    def max_id(self) -> int:
        return max(self._id2sym)


def read_symbols(text: str) -> SymbolTable:
    """Parse "symbol id" lines; the first entry must be the epsilon symbol at 0."""
    table = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise FstParseError(f"expected 'symbol id', got {raw!r}", lineno)
        sym, id_text = parts
        try:
            sym_id = int(id_text)
        except ValueError:
            raise FstParseError(f"bad symbol id {id_text!r}", lineno) from None
        if table is None:
            if sym_id != 0:
                raise FstParseError("first entry must map the epsilon symbol to 0", lineno)
            table = SymbolTable(epsilon_symbol=sym)
            continue
        try:
            table.add(sym, sym_id)
        except SymbolTableError as e:
            raise FstParseError(str(e), lineno) from None
    if table is None:
        raise FstParseError("empty symbol table")
    return table


def write_symbols(table: SymbolTable) -> str:
    return "".join(f"{sym} {sym_id}\n" for sym, sym_id in table.items())


class Wfst:
    """Mutable-at-construction WFST: states 0..n-1, per-state arc lists,
    final weights as a state -> cost map."""

    __slots__ = ("start", "_arcs", "finals", "_flat")

    def __init__(self, num_states: int = 0, start: int = NO_STATE):
        self.start = start
        self._arcs: list[list[Arc]] = [[] for _ in range(num_states)]
        self.finals: dict[int, float] = {}
        self._flat = None  # decoder's flattened-arc cache

    @property
    def num_states(self) -> int:
        return len(self._arcs)

    @property
    def is_empty(self) -> bool:
        return not self._arcs

    def add_state(self) -> int:
        self._arcs.append([])
        return len(self._arcs) - 1

    def add_states(self, n: int) -> None:
        self._arcs.extend([] for _ in range(n))

    def set_start(self, state: int) -> None:
        self._check_state(state)
        self.start = state

    def add_arc(self, state: int, arc: Arc) -> None:
        self._check_state(state)
        self._check_state(arc.nextstate)
        self._arcs[state].append(arc)

    def set_final(self, state: int, weight: float = ONE) -> None:
        self._check_state(state)
        if math.isinf(weight) and weight > 0:
            self.finals.pop(state, None)
        else:
            self.finals[state] = weight

    def final(self, state: int) -> float:
        return self.finals.get(state, ZERO)

    def is_final(self, state: int) -> bool:
        return state in self.finals

    def arcs(self, state: int) -> list[Arc]:
        return self._arcs[state]

    def states(self) -> range:
        return range(len(self._arcs))

    def num_arcs(self) -> int:
        return sum(len(a) for a in self._arcs)

    def _check_state(self, state: int) -> None:
        if not 0 <= state < len(self._arcs):
            raise ValueError(f"state {state} out of range (num_states={len(self._arcs)})")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Wfst):
            return NotImplemented
        return (
            self.start == other.start
            and self._arcs == other._arcs
            and self.finals == other.finals
        )

    def __repr__(self) -> str:
        return (
            f"Wfst(states={self.num_states}, arcs={self.num_arcs()}, "
            f"start={self.start}, finals={len(self.finals)})"
        )

    @classmethod
    def empty(cls) -> "Wfst":
        return cls(num_states=0, start=NO_STATE)


def read_fst_text(text: str) -> Wfst:
    """Parse AT&T/OpenFST-style text: "src dst ilabel olabel [weight]" arcs and
    "state [weight]" finals. The first line's source state is the start state;
    a missing weight means 0.0."""
    arcs: list[tuple[int, Arc]] = []
    finals: dict[int, float] = {}
    start = NO_STATE
    max_state = -1

    def parse_int(tok: str, what: str, lineno: int) -> int:
        try:
            value = int(tok)
        except ValueError:
            raise FstParseError(f"bad {what} {tok!r}", lineno) from None
        if value < 0:
            raise FstParseError(f"negative {what} {value}", lineno)
        return value

    def parse_weight(tok: str, lineno: int) -> float:
        try:
            return float(tok)
        except ValueError:
            raise FstParseError(f"bad weight {tok!r}", lineno) from None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        parts = raw.split()
        if not parts:
            continue
        if len(parts) in (1, 2):
            state = parse_int(parts[0], "state", lineno)
            weight = parse_weight(parts[1], lineno) if len(parts) == 2 else 0.0
            finals[state] = weight
            max_state = max(max_state, state)
            if start == NO_STATE:
                start = state
        elif len(parts) in (4, 5):
            src = parse_int(parts[0], "state", lineno)
            dst = parse_int(parts[1], "state", lineno)
            ilabel = parse_int(parts[2], "input label", lineno)
            olabel = parse_int(parts[3], "output label", lineno)
            weight = parse_weight(parts[4], lineno) if len(parts) == 5 else 0.0
            arcs.append((src, Arc(ilabel, olabel, weight, dst)))
            max_state = max(max_state, src, dst)
            if start == NO_STATE:
                start = src
        else:
            raise FstParseError(f"expected 2, 4, or 5 fields, got {len(parts)}", lineno)

    if start == NO_STATE:
        raise FstParseError("no states found")
    g = Wfst(num_states=max_state + 1, start=start)
    for src, arc in arcs:
        g.add_arc(src, arc)
    for state, weight in finals.items():
        g.set_final(state, weight)
    return g


def write_fst_text(g: Wfst) -> str:
    """Inverse of read_fst_text: start state first, remaining states ascending,
    each state's final line after its arcs. Weights are always printed."""
    if g.is_empty:
        return ""
    out: list[str] = []

    def emit(state: int) -> None:
        for arc in g.arcs(state):
            out.append(
                f"{state} {arc.nextstate} {arc.ilabel} {arc.olabel} "
                f"{format_weight(arc.weight)}\n"
            )
        if g.is_final(state):
            out.append(f"{state} {format_weight(g.final(state))}\n")

    emit(g.start)
    for state in g.states():
        if state != g.start:
            emit(state)
    return "".join(out)


def arc_sort(g: Wfst, key: str = "ilabel") -> Wfst:
    """Return a copy with every state's arcs stably sorted by ilabel or olabel."""
    if key not in ("ilabel", "olabel"):
        raise ValueError(f"sort key must be 'ilabel' or 'olabel', got {key!r}")
    idx = 0 if key == "ilabel" else 1
    out = Wfst(num_states=g.num_states, start=g.start)
    for state in g.states():
        for arc in sorted(g.arcs(state), key=lambda a: a[idx]):
            out.add_arc(state, arc)
    out.finals = dict(g.finals)
    return out


def compose(a: Wfst, b: Wfst) -> Wfst:
    """Weighted composition matching a's output labels to b's input labels.

    Epsilon handling is the simple strategy: an epsilon output on a advances a
    alone, an epsilon input on b advances b alone. Parallel epsilon moves can
    generate redundant paths; under min-cost decoding the duplicates are
    harmless. Only states reachable from the start are constructed.
    """
    if a.is_empty or b.is_empty:
        return Wfst.empty()

    # Index b's arcs by ilabel once; matching is then a dict lookup.
    b_by_ilabel: list[dict[int, list[Arc]]] = []
    for state in b.states():
        by_label: dict[int, list[Arc]] = {}
        for arc in b.arcs(state):
            by_label.setdefault(arc.ilabel, []).append(arc)
        b_by_ilabel.append(by_label)

    out = Wfst()
    state_ids: dict[tuple[int, int], int] = {}

    def state_of(pair: tuple[int, int]) -> int:
        sid = state_ids.get(pair)
        if sid is None:
            sid = out.add_state()
            state_ids[pair] = sid
            queue.append(pair)
        return sid

    queue: list[tuple[int, int]] = []
    start_pair = (a.start, b.start)
    out.set_start(state_of(start_pair))

    head = 0
    while head < len(queue):
        qa, qb = queue[head]
        src = state_ids[(qa, qb)]
        head += 1

        fa, fb = a.final(qa), b.final(qb)
        if math.isfinite(fa) and math.isfinite(fb):
            out.set_final(src, fa + fb)

        for arc_a in a.arcs(qa):
            if arc_a.olabel == EPSILON:
                dst = state_of((arc_a.nextstate, qb))
                out.add_arc(src, Arc(arc_a.ilabel, EPSILON, arc_a.weight, dst))
            else:
                for arc_b in b_by_ilabel[qb].get(arc_a.olabel, ()):
                    dst = state_of((arc_a.nextstate, arc_b.nextstate))
                    out.add_arc(
                        src,
                        Arc(arc_a.ilabel, arc_b.olabel, arc_a.weight + arc_b.weight, dst),
                    )
        for arc_b in b_by_ilabel[qb].get(EPSILON, ()):
            dst = state_of((qa, arc_b.nextstate))
            out.add_arc(src, Arc(EPSILON, arc_b.olabel, arc_b.weight, dst))

    return out


def connect(g: Wfst) -> Wfst:
    """Trim: keep only states on some path from the start to a final state."""
    if g.is_empty or g.start == NO_STATE:
        return Wfst.empty()

    accessible = [False] * g.num_states
    stack = [g.start]
    accessible[g.start] = True
    while stack:
        s = stack.pop()
        for arc in g.arcs(s):
            if not accessible[arc.nextstate]:
                accessible[arc.nextstate] = True
                stack.append(arc.nextstate)

    reverse: list[list[int]] = [[] for _ in range(g.num_states)]
    for s in g.states():
        for arc in g.arcs(s):
            reverse[arc.nextstate].append(s)
    coaccessible = [False] * g.num_states
    stack = [s for s in g.finals if accessible[s]]
    for s in stack:
        coaccessible[s] = True
    while stack:
        s = stack.pop()
        for p in reverse[s]:
            if not coaccessible[p]:
                coaccessible[p] = True
                stack.append(p)

    keep = [s for s in g.states() if accessible[s] and coaccessible[s]]
    if not keep or not coaccessible[g.start]:
        return Wfst.empty()
    remap = {old: new for new, old in enumerate(keep)}
    out = Wfst(num_states=len(keep), start=remap[g.start])
    for old in keep:
        for arc in g.arcs(old):
            if arc.nextstate in remap:
                out.add_arc(remap[old], Arc(arc.ilabel, arc.olabel, arc.weight, remap[arc.nextstate]))
        if g.is_final(old):
            out.set_final(remap[old], g.final(old))
    return out


def transduce_all(
    g: Wfst, input_labels: Iterable[int], max_paths: int = 100_000
) -> dict[tuple[int, ...], float]:
    """Brute-force enumeration oracle: all accepting paths whose non-epsilon
    input labels equal `input_labels`, as a map from output label sequence to
    the minimum path cost (arc costs plus final weight).

    Every path step counts against max_paths, so epsilon cycles surface as an
    EnumerationOverflowError instead of nontermination.
    """
    if g.is_empty:
        return {}
    input_seq = tuple(input_labels)
    results: dict[tuple[int, ...], float] = {}
    budget = max_paths

    stack: list[tuple[int, int, float, tuple[int, ...]]] = [(g.start, 0, 0.0, ())]
    while stack:
        state, pos, cost, outputs = stack.pop()
        if pos == len(input_seq) and g.is_final(state):
            total = cost + g.final(state)
            prev = results.get(outputs)
            if prev is None or total < prev:
                results[outputs] = total
        for arc in g.arcs(state):
            if arc.ilabel == EPSILON:
                next_pos = pos
            elif pos < len(input_seq) and arc.ilabel == input_seq[pos]:
                next_pos = pos + 1
            else:
                continue
            budget -= 1
            if budget < 0:
                raise EnumerationOverflowError(
                    f"more than {max_paths} path steps; shrink the instance"
                )
            next_out = outputs + (arc.olabel,) if arc.olabel != EPSILON else outputs
            stack.append((arc.nextstate, next_pos, cost + arc.weight, next_out))
    return results
