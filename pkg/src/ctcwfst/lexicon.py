"""Lexicon transducer: acoustic-unit pronunciations to word labels.

Word labels are pushed as far left as possible by construction: each entry
emits its word id on the first unit arc, so LM and boosting costs reach the
beam search as early as possible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import LexiconError
from .topology import UnitInventory
from .wfst import EPSILON, Arc, SymbolTable, Wfst


@dataclass(frozen=True)
class LexiconEntry:
    word: str
    pronunciation: tuple[int, ...]  # acoustic unit indices
    cost: float = 0.0

    def __post_init__(self):
        if not self.pronunciation:
            raise LexiconError(f"word {self.word!r} has an empty pronunciation")


def parse_lexicon(text: str, inv: UnitInventory) -> list[LexiconEntry]:
    """Parse "word<tab>unit unit ..." lines into entries, resolving unit
    symbols through the inventory."""
    entries = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) < 2:
            raise LexiconError(f"line {lineno}: expected 'word unit...', got {raw!r}")
        word, unit_syms = parts[0], parts[1:]
        pron = []
        for sym in unit_syms:
            if sym not in inv.units:
                raise LexiconError(
                    f"line {lineno}: word {word!r} uses unknown unit {sym!r}"
                )
            pron.append(inv.units.id(sym) - 1)
        entries.append(LexiconEntry(word=word, pronunciation=tuple(pron)))
    return entries


def word_symbols(entries: list[LexiconEntry]) -> SymbolTable:
    """Word symbol table over a lexicon, ids assigned in sorted word order."""
    table = SymbolTable()
    for word in sorted({e.word for e in entries}):
        table.add(word)
    return table


def build_lexicon_fst(
    entries: list[LexiconEntry], inv: UnitInventory, words: SymbolTable
) -> Wfst:
    """Left-pushed lexicon with closure built in: every pronunciation starts at
    the shared start state, emits its word id on the first unit arc, and loops
    back to the start through an eps:eps arc. Homophones are allowed."""
    if not entries:
        raise LexiconError("empty lexicon")
    g = Wfst(num_states=1, start=0)
    g.set_final(0, 0.0)
    for entry in entries:
        if entry.word not in words:
            raise LexiconError(f"word {entry.word!r} missing from the word symbol table")
        for u in entry.pronunciation:
            if not 0 <= u < inv.num_units:
                raise LexiconError(
                    f"word {entry.word!r} uses unit index {u} outside 0..{inv.num_units - 1}"
                )
        olabel = words.id(entry.word)
        prev = 0
        for i, u in enumerate(entry.pronunciation):
            nxt = g.add_state()
            if i == 0:
                g.add_arc(prev, Arc(inv.ilabel(u), olabel, entry.cost, nxt))
            else:
                g.add_arc(prev, Arc(inv.ilabel(u), EPSILON, 0.0, nxt))
            prev = nxt
        g.add_arc(prev, Arc(EPSILON, EPSILON, 0.0, 0))
    return g
