"""Per-utterance word boosting.

A boost table maps word ids to additive graph costs (a boost of m is stored
as cost -m, since decoding minimizes cost). Attached to a channel it behaves
exactly like composing the decoding graph on the right with a single-state
acceptor whose self-loops carry those costs: every expanded arc with a
non-epsilon output label pays the table cost for that label.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .decoder import DecodeState
from .errors import BoostError, BoostParseError
from .wfst import Arc, SymbolTable, Wfst


@dataclass(frozen=True)
class BoostTable:
    entries: dict[int, float] = field(default_factory=dict)  # word id -> cost

    def __post_init__(self):
        if 0 in self.entries:
            raise BoostError("epsilon (label 0) cannot be boosted")

    def __len__(self) -> int:
        return len(self.entries)


def load_boost_table(text: str, words: SymbolTable) -> tuple[BoostTable, list[str]]:
    """Parse "word<tab>magnitude" lines. In-vocabulary words map to cost
    -magnitude; out-of-vocabulary lines are skipped and returned for
    reporting, never raised."""
    entries: dict[int, float] = {}
    skipped: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise BoostParseError(f"expected 'word magnitude', got {raw!r}", lineno)
        word, mag_text = parts
        try:
            magnitude = float(mag_text)
        except ValueError:
            raise BoostParseError(f"bad boost magnitude {mag_text!r}", lineno) from None
        if word in words:
            entries[words.id(word)] = -magnitude
        else:
            skipped.append(word)
    return BoostTable(entries=entries), skipped


def boost_costs(table: BoostTable, max_olabel: int) -> np.ndarray | None:
    """Dense cost array indexed by word label, or None for an empty table so
    the unboosted decode path stays bit-identical."""
    if not table.entries:
        return None
    costs = np.zeros(max_olabel + 1, dtype=np.float64)
    for word_id, cost in table.entries.items():
        if 0 < word_id <= max_olabel:
            costs[word_id] = cost
    return costs


def attach_boost(ch: DecodeState, table: BoostTable) -> None:
    """Bind a boost table to a channel that has not decoded any frame yet."""
    ch.set_boost(boost_costs(table, ch.graph.max_olabel))


def build_boost_fsa(table: BoostTable, words: SymbolTable) -> Wfst:
    """The explicit one-state acceptor equivalent: a self-loop per vocabulary
    word, weighted by the table cost (0 when unboosted). Composing the
    decoding graph with this on the right is the reference semantics that
    attach_boost reproduces on the fly."""
    g = Wfst(num_states=1, start=0)
    g.set_final(0, 0.0)
    for _, word_id in words.items():
        if word_id == 0:
            continue
        g.add_arc(0, Arc(word_id, word_id, table.entries.get(word_id, 0.0), 0))
    return g
