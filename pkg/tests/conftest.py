"""Shared toy-system builders for the test suite.

Systems are small enough for brute-force oracles: a handful of acoustic
units, a short lexicon, and a unigram or bigram grammar generated as ARPA
text (so the parser is always on the path).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import pytest

from ctcwfst.arpa import ArpaModel, build_grammar_fst, parse_arpa
from ctcwfst.graph import build_tlg
from ctcwfst.lexicon import LexiconEntry, build_lexicon_fst, word_symbols
from ctcwfst.topology import UnitInventory, build_ctc_topo_compact, build_ctc_topo_normal
from ctcwfst.wfst import SymbolTable, Wfst

UNIT_NAMES = "abcde"


@dataclass
class ToySystem:
    inv: UnitInventory
    entries: list[LexiconEntry]
    words: SymbolTable
    arpa_text: str
    model: ArpaModel
    t: Wfst
    l: Wfst
    g: Wfst
    tlg: Wfst

    def word_id(self, word: str) -> int:
        return self.words.id(word)

    def word_str(self, word_ids) -> list[str]:
        return [self.words.symbol(w) for w in word_ids]


def make_inventory(num_units: int) -> UnitInventory:
    units = SymbolTable()
    units.add("<blk>")
    for name in UNIT_NAMES[:num_units]:
        units.add(name)
    return UnitInventory(units=units, blank_id=0)


def random_lexicon(rng, inv: UnitInventory, num_words: int, max_pron: int = 3):
    prons = set()
    while len(prons) < num_words:
        length = int(rng.integers(1, max_pron + 1))
        prons.add(tuple(int(rng.integers(1, inv.num_units)) for _ in range(length)))
    return [
        LexiconEntry(
            word="".join(UNIT_NAMES[u - 1] for u in pron) + "_w",
            pronunciation=pron,
        )
        for pron in sorted(prons)
    ]


def random_arpa_text(rng, vocab: list[str], order: int) -> str:
    """Valid ARPA over the vocabulary. Explicit n-gram probabilities are
    clamped to be at least as likely as their backoff route, so the grammar
    graph's min-cost path agrees with the deterministic backoff recursion."""
    probs = rng.dirichlet(np.ones(len(vocab) + 1))  # words + </s>
    lp1 = {w: math.log10(max(p, 1e-6)) for w, p in zip(vocab, probs[:-1])}
    lp1["</s>"] = math.log10(max(probs[-1], 1e-6))

    lines = ["\\data\\", f"ngram 1={len(vocab) + 2}"]
    if order == 1:
        lines += ["", "\\1-grams:", "-99\t<s>"]
        lines.append(f"{lp1['</s>']:.6f}\t</s>")
        for w in vocab:
            lines.append(f"{lp1[w]:.6f}\t{w}")
        lines += ["", "\\end\\", ""]
        return "\n".join(lines)

    contexts = ["<s>"] + vocab
    bows = {h: math.log10(rng.uniform(0.2, 0.8)) for h in contexts}
    bigrams = []
    for h in contexts:
        followers = [w for w in vocab + ["</s>"] if rng.random() < 0.6]
        if not followers:
            followers = [vocab[int(rng.integers(0, len(vocab)))]]
        mass = rng.uniform(0.4, 0.9)
        weights = rng.dirichlet(np.ones(len(followers)))
        for w, q in zip(followers, weights):
            lp2 = math.log10(max(mass * q, 1e-6))
            lp2 = max(lp2, bows[h] + lp1[w] + 0.05)  # explicit beats backoff route
            bigrams.append((h, w, lp2))

    lines.append(f"ngram 2={len(bigrams)}")
    lines += ["", "\\1-grams:"]
    lines.append(f"-99\t<s>\t{bows['<s>']:.6f}")
    lines.append(f"{lp1['</s>']:.6f}\t</s>")
    for w in vocab:
        lines.append(f"{lp1[w]:.6f}\t{w}\t{bows[w]:.6f}")
    lines += ["", "\\2-grams:"]
    for h, w, lp2 in bigrams:
        lines.append(f"{lp2:.6f}\t{h} {w}")
    lines += ["", "\\end\\", ""]
    return "\n".join(lines)


def make_toy_system(
    seed: int,
    num_units: int = 3,
    num_words: int = 5,
    order: int = 1,
    compact: bool = True,
    max_pron: int = 3,
) -> ToySystem:
    rng = np.random.default_rng(seed)
    inv = make_inventory(num_units)
    entries = random_lexicon(rng, inv, num_words, max_pron=max_pron)
    words = word_symbols(entries)
    arpa_text = random_arpa_text(rng, sorted(e.word for e in entries), order)
    model = parse_arpa(arpa_text)
    t = build_ctc_topo_compact(inv) if compact else build_ctc_topo_normal(inv)
    l = build_lexicon_fst(entries, inv, words)
    g = build_grammar_fst(model, words)
    tlg = build_tlg(t, l, g)
    assert tlg.num_states <= 200, f"toy TLG too large: {tlg.num_states}"
    return ToySystem(
        inv=inv, entries=entries, words=words, arpa_text=arpa_text, model=model,
        t=t, l=l, g=g, tlg=tlg,
    )


def planted_frames(
    rng,
    system: ToySystem,
    min_frames: int = 20,
    max_frames: int = 100,
    gap: float = 12.0,
    noise: float = 0.5,
    with_path: bool = False,
):
    """Log-likelihoods favoring a random word sequence rendered as CTC frames
    (repeats plus separating blanks) by `gap` nats over the other tokens."""
    inv = system.inv
    num_frames = int(rng.integers(min_frames, max_frames + 1))
    path: list[int] = []
    while True:
        entry = system.entries[int(rng.integers(0, len(system.entries)))]
        rendered = []
        for u in entry.pronunciation:
            rendered.extend([u] * int(rng.integers(1, 3)))
            rendered.append(inv.blank_id)
        if len(path) + len(rendered) > num_frames:
            break
        path.extend(rendered)
    path.extend([inv.blank_id] * (num_frames - len(path)))  # whole words only
    mat = rng.normal(-gap, noise, size=(num_frames, inv.num_units))
    mat[np.arange(num_frames), path] = rng.normal(-0.05, 0.02, size=num_frames)
    if with_path:
        return mat, path
    return mat


def random_frames(rng, system: ToySystem, min_frames: int = 20, max_frames: int = 100) -> np.ndarray:
    num_frames = int(rng.integers(min_frames, max_frames + 1))
    return rng.normal(-3.0, 2.5, size=(num_frames, system.inv.num_units))


@pytest.fixture
def toy_system() -> ToySystem:
    return make_toy_system(seed=7, num_units=3, num_words=4, order=1)
