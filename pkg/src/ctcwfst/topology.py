"""CTC token-transducer builders and the reference collapse rule.

Acoustic tokens are dense indices 0..V (blank included). On WFST arcs they
appear shifted by one (ilabel = acoustic index + 1) so that label 0 stays
reserved for epsilon.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import GraphError
from .wfst import EPSILON, Arc, SymbolTable, Wfst


@dataclass(frozen=True)
class UnitInventory:
    """Acoustic token set: symbol table (ids = acoustic index + 1) plus the
    acoustic index of the blank token."""

    units: SymbolTable
    blank_id: int

    def __post_init__(self):
        if self.num_units < 1:
            raise GraphError("unit inventory has no acoustic tokens")
        if not 0 <= self.blank_id < self.num_units:
            raise GraphError(
                f"blank id {self.blank_id} outside acoustic range 0..{self.num_units - 1}"
            )
        if self.num_nonblank < 1:
            raise GraphError("unit inventory needs at least one non-blank token")

    @property
    def num_units(self) -> int:
        """Number of acoustic tokens, blank included."""
        return len(self.units) - 1

    @property
    def num_nonblank(self) -> int:
        return self.num_units - 1

    def ilabel(self, acoustic_index: int) -> int:
        return acoustic_index + 1

    def nonblank_indices(self) -> list[int]:
        return [i for i in range(self.num_units) if i != self.blank_id]

    @classmethod
    def from_symbols(cls, units: SymbolTable, blank_symbol: str) -> "UnitInventory":
        return cls(units=units, blank_id=units.id(blank_symbol) - 1)


def ctc_collapse(seq: Sequence[int], blank_id: int) -> list[int]:
    """Reference CTC decoding rule: merge adjacent duplicates, then drop blanks."""
    out: list[int] = []
    prev = None
    for tok in seq:
        if tok != prev:
            out.append(tok)
        prev = tok
    return [t for t in out if t != blank_id]


def build_ctc_topo_normal(inv: UnitInventory) -> Wfst:
    """Token transducer encoding both CTC rules: blank is never emitted, and a
    repeated output token requires an intervening blank on the input.

    State 0 is the start; each non-blank unit u owns a state entered by u:u,
    with a u:eps self-loop, a blank:eps return to the start, and v:v arcs to
    every other unit state. All states are final.
    """
    nonblank = inv.nonblank_indices()
    g = Wfst(num_states=1 + len(nonblank), start=0)
    g.set_final(0, 0.0)
    blank_il = inv.ilabel(inv.blank_id)
    state_of = {u: i + 1 for i, u in enumerate(nonblank)}

    g.add_arc(0, Arc(blank_il, EPSILON, 0.0, 0))
    for u in nonblank:
        g.add_arc(0, Arc(inv.ilabel(u), inv.ilabel(u), 0.0, state_of[u]))
    for u in nonblank:
        q = state_of[u]
        g.set_final(q, 0.0)
        g.add_arc(q, Arc(inv.ilabel(u), EPSILON, 0.0, q))
        g.add_arc(q, Arc(blank_il, EPSILON, 0.0, 0))
        for v in nonblank:
            if v != u:
                g.add_arc(q, Arc(inv.ilabel(v), inv.ilabel(v), 0.0, state_of[v]))
    return g


def build_ctc_topo_compact(inv: UnitInventory) -> Wfst:
    """Smaller token transducer that drops the repeat-merge rule: each unit
    state returns to the start through an eps:eps arc, so a repeated input
    token may come out either merged (self-loop) or repeated (return + re-enter)."""
    nonblank = inv.nonblank_indices()
    g = Wfst(num_states=1 + len(nonblank), start=0)
    g.set_final(0, 0.0)
    blank_il = inv.ilabel(inv.blank_id)
    state_of = {u: i + 1 for i, u in enumerate(nonblank)}

    g.add_arc(0, Arc(blank_il, EPSILON, 0.0, 0))
    for u in nonblank:
        g.add_arc(0, Arc(inv.ilabel(u), inv.ilabel(u), 0.0, state_of[u]))
    for u in nonblank:
        q = state_of[u]
        g.set_final(q, 0.0)
        g.add_arc(q, Arc(inv.ilabel(u), EPSILON, 0.0, q))
        g.add_arc(q, Arc(EPSILON, EPSILON, 0.0, 0))
    return g
