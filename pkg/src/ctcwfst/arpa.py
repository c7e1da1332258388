"""ARPA n-gram language models: parsing, conversion to a backoff acceptor,
and an independent sentence scorer.

Weight convention: ARPA stores log10 probabilities; arcs and final weights
carry natural-log costs (-log10(p) * ln 10) so they live on the same scale as
acoustic log-likelihoods. The scorer accumulates exactly the same per-term
products in path order, so its totals match graph path costs bit-for-bit
whenever explicit n-grams are no more expensive than their backoff route.
"""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass
from typing import NamedTuple, Sequence

from .errors import ArpaParseError
from .wfst import EPSILON, Arc, SymbolTable, Wfst

log = logging.getLogger(__name__)

LN10 = math.log(10.0)

BOS = "<s>"
EOS = "</s>"


class NgramEntry(NamedTuple):
    logp: float  # log10 probability
    backoff: float | None  # log10 backoff weight, None if absent


@dataclass
class ArpaModel:
    orders: dict[int, dict[tuple[str, ...], NgramEntry]]
    max_order: int

    def entry(self, gram: tuple[str, ...]) -> NgramEntry | None:
        return self.orders.get(len(gram), {}).get(gram)

    def backoff(self, context: tuple[str, ...]) -> float:
        """log10 backoff weight of a context, 0.0 when absent or implied."""
        e = self.entry(context)
        if e is None or e.backoff is None:
            return 0.0
        return e.backoff

    def vocabulary(self) -> set[str]:
        return {g[0] for g in self.orders.get(1, {})}


_SECTION_RE = re.compile(r"\\(\d+)-grams:$")


def parse_arpa(text: str) -> ArpaModel:
    """Parse standard text ARPA. Declared counts are not enforced; section
    structure is."""
    lines = text.splitlines()
    i = 0
    n = len(lines)

    while i < n and lines[i].strip() != "\\data\\":
        if lines[i].strip().startswith("\\") and lines[i].strip() != "\\data\\":
            raise ArpaParseError(f"expected \\data\\ header, got {lines[i].strip()!r}", i + 1)
        i += 1
    if i == n:
        raise ArpaParseError("no \\data\\ section found")
    i += 1

    declared: dict[int, int] = {}
    while i < n:
        line = lines[i].strip()
        if not line:
            i += 1
            continue
        if line.startswith("\\"):
            break
        m = re.match(r"ngram\s+(\d+)\s*=\s*(\d+)$", line)
        if not m:
            raise ArpaParseError(f"bad ngram count line {line!r}", i + 1)
        declared[int(m.group(1))] = int(m.group(2))
        i += 1
    if not declared:
        raise ArpaParseError("\\data\\ section declares no ngram orders")

    orders: dict[int, dict[tuple[str, ...], NgramEntry]] = {}
    max_order = max(declared)
    while i < n:
        line = lines[i].strip()
        if not line:
            i += 1
            continue
        if line == "\\end\\":
            break
        m = _SECTION_RE.match(line)
        if not m:
            raise ArpaParseError(f"expected \\k-grams: or \\end\\, got {line!r}", i + 1)
        k = int(m.group(1))
        if k < 1 or k > max_order:
            raise ArpaParseError(f"ngram order {k} not declared in \\data\\", i + 1)
        section: dict[tuple[str, ...], NgramEntry] = {}
        i += 1
        while i < n:
            line = lines[i].strip()
            if not line:
                i += 1
                continue
            if line.startswith("\\"):
                break
            parts = line.split()
            if len(parts) not in (k + 1, k + 2):
                raise ArpaParseError(
                    f"expected {k}-gram line with {k + 1} or {k + 2} fields, got {len(parts)}",
                    i + 1,
                )
            try:
                logp = float(parts[0])
            except ValueError:
                raise ArpaParseError(f"bad log probability {parts[0]!r}", i + 1) from None
            gram = tuple(parts[1 : 1 + k])
            backoff = None
            if len(parts) == k + 2:
                try:
                    backoff = float(parts[-1])
                except ValueError:
                    raise ArpaParseError(f"bad backoff weight {parts[-1]!r}", i + 1) from None
            section[gram] = NgramEntry(logp, backoff)
            i += 1
        orders[k] = section
    else:
        raise ArpaParseError("missing \\end\\ marker")

    if 1 not in orders:
        raise ArpaParseError("model has no unigram section")
    return ArpaModel(orders=orders, max_order=max_order)


def build_grammar_fst(model: ArpaModel, words: SymbolTable) -> Wfst:
    """Standard backoff acceptor: one state per n-gram context, word arcs
    weighted -log10(p)*ln(10), epsilon backoff arcs, end-of-sentence as final
    weights. N-grams mentioning words missing from the symbol table are
    dropped (pruned LMs routinely reference <unk>); the dropped count is
    logged."""
    known = lambda w: w in words or w in (BOS, EOS)
    dropped = 0

    kept: dict[int, dict[tuple[str, ...], NgramEntry]] = {}
    for k, section in model.orders.items():
        kept_k = {}
        for gram, entry in section.items():
            if all(known(w) for w in gram):
                kept_k[gram] = entry
            else:
                dropped += 1
        kept[k] = kept_k
    if dropped:
        log.warning("dropped %d n-grams with out-of-vocabulary words", dropped)

    # Context states: every kept gram of order < max that could carry history.
    g = Wfst()
    state_of: dict[tuple[str, ...], int] = {(): g.add_state()}
    for k in range(1, model.max_order):
        for gram in kept.get(k, {}):
            if gram[-1] != EOS and gram not in state_of:
                state_of[gram] = g.add_state()

    def dest_context(gram: tuple[str, ...]) -> int:
        hist = gram[max(0, len(gram) - (model.max_order - 1)) :]
        while hist and hist not in state_of:
            hist = hist[1:]
        return state_of[hist]

    for k in sorted(kept):
        for gram, entry in kept[k].items():
            w = gram[-1]
            context = gram[:-1]
            if context not in state_of:
                continue  # context unreachable (its own gram was dropped)
            src = state_of[context]
            weight = -LN10 * entry.logp
            if w == EOS:
                if not g.is_final(src) or weight < g.final(src):
                    g.set_final(src, weight)
            elif w == BOS:
                pass  # start-of-sentence is a context, never an emission
            else:
                g.add_arc(src, Arc(words.id(w), words.id(w), weight, dest_context(gram)))

    for context, src in state_of.items():
        if context:
            bow = -LN10 * model.backoff(context)
            hist = context[1:]
            while hist and hist not in state_of:
                hist = hist[1:]
            g.add_arc(src, Arc(EPSILON, EPSILON, bow, state_of[hist]))

    if not g.finals:
        log.warning("model has no %s entries; making every context accepting", EOS)
        for src in state_of.values():
            g.set_final(src, 0.0)

    g.set_start(state_of.get((BOS,), state_of[()]))
    return g


def score_sentence(model: ArpaModel, sentence: Sequence[str]) -> float:
    """Natural-log cost of a sentence under the backoff recursion, including
    the end-of-sentence term. Costs accumulate per ARPA term in the same order
    a grammar-graph path applies them."""
    total = 0.0
    hist = (BOS,) if model.entry((BOS,)) is not None else ()
    hist = hist[max(0, len(hist) - (model.max_order - 1)) :]
    for w in tuple(sentence) + (EOS,):
        h = hist
        while True:
            entry = model.entry(h + (w,))
            if entry is not None:
                total += -LN10 * entry.logp
                break
            if not h:
                raise ArpaParseError(f"word {w!r} not in the model vocabulary")
            total += -LN10 * model.backoff(h)
            h = h[1:]
        hist = (hist + (w,))[max(0, len(hist) + 1 - (model.max_order - 1)) :]
    return total
