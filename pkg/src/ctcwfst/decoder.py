"""Frame-synchronous WFST beam search over per-frame acoustic log-likelihoods.

Each frame runs three stages: expand emitting arcs from the active token set
(recombining to at most one token per graph state), relax epsilon arcs to a
fixpoint, and prune by beam width and max_active. Survivors are appended to a
per-frame backpointer history from which the best path is read out.

Arc input label i consumes frame value i-1 (label 0 is epsilon); all state a
decode carries lives in a DecodeState, so one shared graph serves any number
of concurrent channels.
"""

from __future__ import annotations

import bisect
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from . import kernels
from .errors import DecodeError
from .wfst import EPSILON, Wfst

INF = math.inf

# max_active is clamped so the compiled kernel can hold it in an int64.
_MAX_ACTIVE_CAP = 2**60


@dataclass(frozen=True)
class DecoderConfig:
    beam: float = 17.0
    max_active: int = 10_000
    acoustic_scale: float = 1.0
    nonemitting_relax_epsilon: float = 1e-9
    max_nonemitting_iters: int | None = None  # None: 2 x graph states

    def __post_init__(self):
        if not self.beam > 0:
            raise ValueError(f"beam must be positive, got {self.beam}")
        if self.max_active < 1:
            raise ValueError(f"max_active must be >= 1, got {self.max_active}")
        if not self.acoustic_scale > 0:
            raise ValueError(f"acoustic_scale must be positive, got {self.acoustic_scale}")


class Token(NamedTuple):
    state: int
    cost: float
    backpointer: int  # global record index, -1 at the root


@dataclass(frozen=True)
class Hypothesis:
    words: tuple[int, ...]
    total_cost: float
    frame_count: int


@dataclass(frozen=True)
class DecodeFailure:
    index: int
    error: Exception


class FlatGraph:
    """Arc-array view of a Wfst shared by both kernels. Arcs are stored
    stably sorted by input label, so each state's epsilon arcs occupy
    [off[s], eps_end[s]) and the emitting arcs [eps_end[s], off[s+1])."""

    __slots__ = (
        "num_states",
        "start",
        "off",
        "eps_end",
        "ilabel",
        "olabel",
        "weight",
        "nextstate",
        "final",
        "max_ilabel",
        "max_olabel",
    )

    def __init__(self, g: Wfst):
        if g.is_empty:
            raise DecodeError("empty graph")
        n = g.num_states
        num_arcs = g.num_arcs()
        self.num_states = n
        self.start = g.start
        self.off = np.zeros(n + 1, dtype=np.int64)
        self.eps_end = np.zeros(n, dtype=np.int64)
        self.ilabel = np.zeros(num_arcs, dtype=np.int32)
        self.olabel = np.zeros(num_arcs, dtype=np.int32)
        self.weight = np.zeros(num_arcs, dtype=np.float64)
        self.nextstate = np.zeros(num_arcs, dtype=np.int32)
        self.final = np.full(n, INF, dtype=np.float64)
        pos = 0
        max_il = 0
        max_ol = 0
        for s in g.states():
            self.off[s] = pos
            arcs = sorted(g.arcs(s), key=lambda a: a.ilabel)
            eps_end = pos
            for arc in arcs:
                self.ilabel[pos] = arc.ilabel
                self.olabel[pos] = arc.olabel
                self.weight[pos] = arc.weight
                self.nextstate[pos] = arc.nextstate
                if arc.ilabel == EPSILON:
                    eps_end = pos + 1
                if arc.ilabel > max_il:
                    max_il = arc.ilabel
                if arc.olabel > max_ol:
                    max_ol = arc.olabel
                pos += 1
            self.eps_end[s] = eps_end
        self.off[n] = pos
        for s, w in g.finals.items():
            self.final[s] = w
        self.max_ilabel = max_il
        self.max_olabel = max_ol


_flatten_lock = threading.Lock()


def flatten(g: Wfst) -> FlatGraph:
    """Flatten once per graph instance; safe under concurrent callers."""
    with _flatten_lock:
        if g._flat is None:
            g._flat = FlatGraph(g)
        return g._flat


@dataclass
class _FrameRecords:
    prev: np.ndarray  # int64, global record index of the predecessor
    state: np.ndarray  # int32
    cost: np.ndarray  # float64
    olab_off: np.ndarray  # int64, len(records)+1
    olab_pool: np.ndarray  # int32


class DecodeState:
    """All mutable state of one decoding channel: current tokens, per-frame
    token history, frame counter, and the optional boost table."""

    def __init__(self, graph: FlatGraph, config: DecoderConfig, kernel=None):
        self.graph = graph
        self.config = config
        self.frame_count = 0
        self.num_tokens: int | None = None
        self.boost: np.ndarray | None = None
        self.frames: list[_FrameRecords] = []
        self.frame_base: list[int] = []
        self.next_record = 0
        self._kernel = kernel if kernel is not None else kernels.advance_chunk
        self._max_ne_iters = (
            config.max_nonemitting_iters
            if config.max_nonemitting_iters is not None
            else 2 * graph.num_states
        )
        self._seed_initial_tokens()

    # -- initial epsilon closure -------------------------------------------

    def _seed_initial_tokens(self):
        """Token at the start state plus its epsilon closure, run with the
        same pass discipline as the kernels' nonemitting stage."""
        fg = self.graph
        off = fg.off
        eps_end = fg.eps_end
        states = [fg.start]
        costs = [0.0]
        chains: list[tuple[int, ...]] = [()]
        slot_of = {fg.start: 0}
        relax_eps = self.config.nonemitting_relax_epsilon
        iters = 0
        while True:
            iters += 1
            if iters > self._max_ne_iters:
                raise DecodeError("epsilon iteration cap exceeded while seeding the channel")
            max_improve = 0.0
            j = 0
            while j < len(states):
                s = states[j]
                c = costs[j]
                ch = chains[j]
                for a in range(off[s], eps_end[s]):
                    nc = c + fg.weight[a]
                    ol = int(fg.olabel[a])
                    if self.boost is not None and ol != 0:
                        nc = nc + self.boost[ol]
                    if not nc < INF:
                        continue
                    d = int(fg.nextstate[a])
                    k = slot_of.get(d)
                    nch = ch + (ol,) if ol != 0 else ch
                    if k is None:
                        slot_of[d] = len(states)
                        states.append(d)
                        costs.append(nc)
                        chains.append(nch)
                        max_improve = INF
                    elif nc < costs[k]:
                        if costs[k] - nc > max_improve:
                            max_improve = costs[k] - nc
                        costs[k] = nc
                        chains[k] = nch
                j += 1
            if max_improve <= relax_eps:
                break
        order = sorted(range(len(states)), key=lambda j: states[j])
        self.act_state = np.asarray([states[j] for j in order], dtype=np.int32)
        self.act_cost = np.asarray([costs[j] for j in order], dtype=np.float64)
        self.act_bp = np.full(len(order), -1, dtype=np.int64)
        pool: list[int] = []
        offs = [0]
        for j in order:
            pool.extend(chains[j])
            offs.append(len(pool))
        self.act_chain_off = np.asarray(offs, dtype=np.int64)
        self.act_chain_pool = np.asarray(pool, dtype=np.int32)

    def set_boost(self, boost: np.ndarray | None):
        """Bind a dense per-word-label boost cost array. Only allowed before
        the first frame; the initial epsilon closure is re-run so boosted
        epsilon arcs are costed from the start."""
        if self.frame_count != 0:
            raise DecodeError("boost table must be attached before any frame is decoded")
        self.boost = boost
        self._seed_initial_tokens()

    # -- introspection ------------------------------------------------------

    def active_tokens(self) -> list[Token]:
        return [
            Token(int(s), float(c), int(b))
            for s, c, b in zip(self.act_state, self.act_cost, self.act_bp)
        ]

    def active_states(self) -> set[int]:
        return {int(s) for s in self.act_state}

    def history_records(self) -> list[list[tuple[int, tuple[int, ...], int, float]]]:
        """Per-frame (prev, olabels, state, cost) record lists."""
        out = []
        for fr in self.frames:
            rows = []
            for i in range(len(fr.state)):
                ols = tuple(int(o) for o in fr.olab_pool[fr.olab_off[i] : fr.olab_off[i + 1]])
                rows.append((int(fr.prev[i]), ols, int(fr.state[i]), float(fr.cost[i])))
            out.append(rows)
        return out

    # -- advancing ----------------------------------------------------------

    def advance_frames(self, loglik: np.ndarray):
        """Advance over a chunk of frames (rows of log-likelihoods). The
        chunk either commits entirely or, on error, leaves the channel
        unchanged."""
        fg = self.graph
        loglik = np.ascontiguousarray(loglik, dtype=np.float64)
        if loglik.ndim != 2:
            raise DecodeError("log-likelihoods must be a (frames, tokens) matrix")
        if loglik.shape[0] == 0:
            return
        width = loglik.shape[1]
        if self.num_tokens is None:
            if width < fg.max_ilabel:
                raise DecodeError(
                    f"frame has {width} tokens but the graph expects at least {fg.max_ilabel}"
                )
            self.num_tokens = width
        elif width != self.num_tokens:
            raise DecodeError(
                f"frame has {width} tokens, channel was created with {self.num_tokens}"
            )

        (status, err_frame, counts, prev, state, cost, olab_off, olab_pool) = self._kernel(
            fg.off,
            fg.eps_end,
            fg.ilabel,
            fg.olabel,
            fg.weight,
            fg.nextstate,
            self.act_state,
            self.act_cost,
            self.act_bp,
            self.act_chain_off,
            self.act_chain_pool,
            loglik,
            self.config.acoustic_scale,
            self.config.beam,
            min(self.config.max_active, _MAX_ACTIVE_CAP),
            self.config.nonemitting_relax_epsilon,
            self._max_ne_iters,
            self.boost,
            self.next_record,
        )
        if status == kernels.ERR_EPS_ITERS:
            raise DecodeError(
                f"nonemitting iteration cap exceeded at frame "
                f"{self.frame_count + int(err_frame)} (epsilon cycle?)"
            )
        if status == kernels.ERR_NO_SURVIVORS:
            raise DecodeError(
                f"no tokens survive frame {self.frame_count + int(err_frame)}"
            )

        first = 0
        for f in range(len(counts)):
            n = int(counts[f])
            self.frames.append(
                _FrameRecords(
                    prev=prev[first : first + n],
                    state=state[first : first + n],
                    cost=cost[first : first + n],
                    olab_off=olab_off[first : first + n + 1] - olab_off[first],
                    olab_pool=olab_pool[olab_off[first] : olab_off[first + n]],
                )
            )
            self.frame_base.append(self.next_record)
            self.next_record += n
            first += n
        self.frame_count += len(counts)

        last = self.frames[-1]
        self.act_state = last.state
        self.act_cost = last.cost
        self.act_bp = np.arange(
            self.frame_base[-1], self.frame_base[-1] + len(last.state), dtype=np.int64
        )
        self.act_chain_off = np.zeros(len(last.state) + 1, dtype=np.int64)
        self.act_chain_pool = np.zeros(0, dtype=np.int32)


def create_channel(graph: Wfst | FlatGraph, config: DecoderConfig | None = None) -> DecodeState:
    """Fresh decoding channel: start-state token with its epsilon closure
    already expanded, zero frames, empty history."""
    if config is None:
        config = DecoderConfig()
    fg = graph if isinstance(graph, FlatGraph) else flatten(graph)
    return DecodeState(fg, config)


def advance(ch: DecodeState, frame: Sequence[float] | np.ndarray):
    """Process one frame of log-likelihoods (one value per acoustic token)."""
    row = np.ascontiguousarray(frame, dtype=np.float64)
    if row.ndim != 1:
        raise DecodeError("advance takes a single frame vector; see advance_frames")
    ch.advance_frames(row[None, :])


def prune(tokens: Sequence[Token], beam: float, max_active: int) -> list[Token]:
    """Reference pruning rule: drop tokens above min cost + beam, then keep at
    most max_active ranked by (cost, state id). The kernels implement the same
    selection inline."""
    if not tokens:
        raise ValueError("prune needs a non-empty token set")
    min_cost = min(t.cost for t in tokens)
    cutoff = min_cost + beam
    survivors = [t for t in tokens if t.cost <= cutoff]
    if len(survivors) > max_active:
        survivors.sort(key=lambda t: (t.cost, t.state))
        survivors = survivors[:max_active]
    survivors.sort(key=lambda t: t.state)
    return survivors


def best_path(ch: DecodeState) -> Hypothesis:
    """Least-cost hypothesis over the current active tokens, preferring final
    graph states and falling back to all states when none is final. The
    channel is left untouched, so streaming callers can keep advancing."""
    if ch.frame_count == 0:
        raise DecodeError("no frames decoded")
    fg = ch.graph
    best_idx = -1
    best_cost = INF
    any_final = False
    for i in range(len(ch.act_state)):
        fw = fg.final[ch.act_state[i]]
        if fw != INF:
            total = ch.act_cost[i] + fw
            if not any_final or total < best_cost:
                any_final = True
                best_cost = total
                best_idx = i
    if not any_final:
        for i in range(len(ch.act_state)):
            total = ch.act_cost[i]
            if total < best_cost:
                best_cost = total
                best_idx = i
    if best_idx < 0:
        raise DecodeError("no surviving hypotheses")

    segments: list[np.ndarray] = []
    rec = int(ch.act_bp[best_idx])
    while rec >= 0:
        frame = _frame_of_record(ch, rec)
        fr = ch.frames[frame]
        i = rec - ch.frame_base[frame]
        segments.append(fr.olab_pool[fr.olab_off[i] : fr.olab_off[i + 1]])
        rec = int(fr.prev[i])
    words: list[int] = []
    for seg in reversed(segments):
        words.extend(int(o) for o in seg)
    return Hypothesis(words=tuple(words), total_cost=float(best_cost), frame_count=ch.frame_count)


def _frame_of_record(ch: DecodeState, rec: int) -> int:
    return bisect.bisect_right(ch.frame_base, rec) - 1


def decode_utterance(
    graph: Wfst | FlatGraph,
    config: DecoderConfig,
    loglik: np.ndarray,
    boost: np.ndarray | None = None,
) -> Hypothesis:
    """Offline decode of one utterance (whole log-likelihood matrix)."""
    ch = create_channel(graph, config)
    if boost is not None:
        ch.set_boost(boost)
    ch.advance_frames(loglik)
    return best_path(ch)


def decode_batch(
    graph: Wfst | FlatGraph,
    config: DecoderConfig,
    utterances: Sequence[np.ndarray],
    workers: int = 1,
    boost: np.ndarray | None = None,
) -> list[Hypothesis | DecodeFailure]:
    """Decode utterances independently on a thread pool. Results keep the
    input order and are bit-identical for any worker count; failures are
    reported per index instead of aborting the batch.

    Thread scaling needs the compiled kernel (it releases the GIL); with the
    pure-Python kernel the batch still decodes correctly but serially.
    """
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    fg = graph if isinstance(graph, FlatGraph) else flatten(graph)

    def run(i: int) -> Hypothesis | DecodeFailure:
        try:
            return decode_utterance(fg, config, utterances[i], boost=boost)
        except Exception as e:  # noqa: BLE001 - reported per index
            return DecodeFailure(index=i, error=e)

    if workers == 1 or len(utterances) <= 1:
        return [run(i) for i in range(len(utterances))]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, range(len(utterances))))
