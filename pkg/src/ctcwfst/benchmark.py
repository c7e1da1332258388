"""Synthetic decoding workloads and the compiled-vs-pure kernel benchmark."""

from __future__ import annotations

import math
import time

import numpy as np

from . import kernels
from .decoder import DecoderConfig, DecodeState, Hypothesis, best_path, flatten
from .graph import build_tlg
from .lexicon import LexiconEntry, build_lexicon_fst, word_symbols
from .topology import UnitInventory, build_ctc_topo_compact
from .wfst import Arc, SymbolTable, Wfst

_UNIT_NAMES = "abcdefghijklmnopqrstuvwxyz"


def synthetic_system(
    num_units: int = 5, num_words: int = 30, max_pron: int = 4, seed: int = 0
):
    """Small decoding system: random lexicon over num_units non-blank units,
    uniform unigram grammar, compact topology."""
    rng = np.random.default_rng(seed)
    units = SymbolTable()
    units.add("<blk>")
    for name in _UNIT_NAMES[:num_units]:
        units.add(name)
    inv = UnitInventory(units=units, blank_id=0)

    prons = set()
    while len(prons) < num_words:
        length = int(rng.integers(1, max_pron + 1))
        prons.add(tuple(int(rng.integers(1, num_units + 1)) for _ in range(length)))
    entries = [
        LexiconEntry(word="w_" + "".join(_UNIT_NAMES[u - 1] for u in pron), pronunciation=pron)
        for pron in sorted(prons)
    ]
    words = word_symbols(entries)
    lexicon = build_lexicon_fst(entries, inv, words)

    grammar = Wfst(num_states=1, start=0)
    grammar.set_final(0, 0.0)
    word_cost = -math.log(1.0 / len(entries))
    for _, word_id in words.items():
        if word_id != 0:
            grammar.add_arc(0, Arc(word_id, word_id, word_cost, 0))

    tlg = build_tlg(build_ctc_topo_compact(inv), lexicon, grammar)
    return tlg, inv, words, entries


def synthetic_utterances(
    inv: UnitInventory,
    entries,
    num_utts: int,
    frames: int,
    seed: int = 0,
    favored_loglik: float = -0.1,
    other_loglik: float = -6.0,
):
    """Log-likelihood matrices with a planted unit path per utterance: a
    random word sequence rendered as favored tokens frame by frame, blanks
    between words, plus noise."""
    rng = np.random.default_rng(seed)
    num_tokens = inv.num_units
    utts = []
    for _ in range(num_utts):
        path = []
        while len(path) < frames:
            entry = entries[int(rng.integers(0, len(entries)))]
            for u in entry.pronunciation:
                path.extend([u] * int(rng.integers(1, 3)))
                path.append(inv.blank_id)
        path = path[:frames]
        mat = np.full((frames, num_tokens), other_loglik, dtype=np.float64)
        mat += rng.normal(0.0, 0.25, size=mat.shape)
        mat[np.arange(frames), path] = favored_loglik
        utts.append(mat)
    return utts


def _decode_with_kernel(tlg, config, utts, kernel) -> tuple[list[Hypothesis], float]:
    fg = flatten(tlg)
    start = time.perf_counter()
    hyps = []
    for mat in utts:
        ch = DecodeState(fg, config, kernel=kernel)
        ch.advance_frames(mat)
        hyps.append(best_path(ch))
    return hyps, time.perf_counter() - start


def run_kernel_benchmark(
    num_utts: int = 20,
    frames: int = 200,
    num_words: int = 30,
    beam: float = 17.0,
    max_active: int = 10_000,
    seed: int = 0,
    frame_shift_ms: float = 10.0,
) -> dict:
    """Decode the same workload with the pure-Python kernel and, when built,
    the compiled one; report wall times, RTFx, and whether outputs agree
    bit-for-bit."""
    tlg, inv, words, entries = synthetic_system(num_words=num_words, seed=seed)
    utts = synthetic_utterances(inv, entries, num_utts, frames, seed=seed + 1)
    config = DecoderConfig(beam=beam, max_active=max_active)
    audio_seconds = num_utts * frames * frame_shift_ms / 1e3

    py_hyps, py_time = _decode_with_kernel(tlg, config, utts, kernels.python_advance_chunk)
    report = {
        "num_utterances": num_utts,
        "frames_per_utterance": frames,
        "graph_states": tlg.num_states,
        "graph_arcs": tlg.num_arcs(),
        "audio_seconds": audio_seconds,
        "python_seconds": py_time,
        "python_rtfx": audio_seconds / py_time,
        "compiled_available": kernels.compiled_available(),
    }
    if kernels.compiled_available():
        from . import _kernel

        c_hyps, c_time = _decode_with_kernel(tlg, config, utts, _kernel.advance_chunk)
        report["compiled_seconds"] = c_time
        report["compiled_rtfx"] = audio_seconds / c_time
        report["speedup"] = py_time / c_time
        report["outputs_identical"] = all(
            a.words == b.words and a.total_cost == b.total_cost
            for a, b in zip(py_hyps, c_hyps)
        )
    return report
