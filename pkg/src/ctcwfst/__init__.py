"""WFST beam-search decoding for CTC acoustic models.

Graph construction (CTC topologies, lexicon, ARPA grammar, TLG composition),
a frame-synchronous beam-search decoder with word boosting and streaming
support, and an M/D/1 queueing analyzer. The decoding inner loop runs on a
compiled kernel when the extension is built, with a bit-identical pure-Python
fallback (see ctcwfst.kernels.KERNEL_NAME).
"""

from .arpa import ArpaModel, build_grammar_fst, parse_arpa, score_sentence
from .boosting import BoostTable, attach_boost, build_boost_fsa, load_boost_table
from .decoder import (
    DecodeFailure,
    DecoderConfig,
    DecodeState,
    Hypothesis,
    Token,
    advance,
    best_path,
    create_channel,
    decode_batch,
    decode_utterance,
    prune,
)
from .graph import build_tlg
from .kernels import KERNEL_NAME, compiled_available
from .lexicon import LexiconEntry, build_lexicon_fst, parse_lexicon, word_symbols
from .logits import read_loglik, write_loglik
from .oracle import viterbi_decode
from .queueing import (
    LatencyStats,
    MD1Params,
    SimResult,
    compute_stats,
    md1_latency,
    rtfx,
    simulate_md1,
)
from .streaming import BatcherConfig, Chunk, StreamPool
from .topology import UnitInventory, build_ctc_topo_compact, build_ctc_topo_normal, ctc_collapse
from .wfst import (
    Arc,
    SymbolTable,
    Wfst,
    arc_sort,
    compose,
    connect,
    read_fst_text,
    read_symbols,
    transduce_all,
    write_fst_text,
    write_symbols,
)

__version__ = "0.1.0"
