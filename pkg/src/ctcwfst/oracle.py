"""Exact Viterbi reference decoder.

A plain dynamic program over (frame, state) with epsilon closure run to a
fixpoint each step. It shares no code with the beam-search engine and does no
pruning, so it serves as the ground truth the engine is tested against on
small graphs.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DecodeError
from .wfst import EPSILON, Wfst

INF = math.inf


def viterbi_decode(
    g: Wfst,
    loglik: np.ndarray,
    acoustic_scale: float = 1.0,
    boost: dict[int, float] | None = None,
) -> tuple[tuple[int, ...], float]:
    """Best word sequence and cost for a log-likelihood matrix (frames x
    acoustic tokens) over graph g. Arc ilabel i consumes frame value i-1;
    boost costs, when given, apply to every arc with a boosted output label.

    Falls back to non-final states only when no final state holds a token,
    mirroring the engine's end-of-utterance rule.
    """
    if g.is_empty:
        raise DecodeError("empty graph")
    loglik = np.asarray(loglik, dtype=np.float64)
    if loglik.ndim != 2 or loglik.shape[0] < 1:
        raise DecodeError("need a (frames, tokens) log-likelihood matrix")
    num_frames = loglik.shape[0]
    boost = boost or {}

    def extra(arc):
        return boost.get(arc.olabel, 0.0) if arc.olabel != EPSILON else 0.0

    def eps_closure(cost, back):
        """Relax epsilon-input arcs to a fixpoint; back[s] records the best
        (prev_state, olabel) entry into s."""
        for _ in range(g.num_states + 1):
            changed = False
            for s in g.states():
                c = cost[s]
                if c == INF:
                    continue
                for arc in g.arcs(s):
                    if arc.ilabel != EPSILON:
                        continue
                    nc = c + arc.weight + extra(arc)
                    if nc < cost[arc.nextstate]:
                        cost[arc.nextstate] = nc
                        back[arc.nextstate] = (s, arc.olabel)
                        changed = True
            if not changed:
                return
        raise DecodeError("epsilon closure did not converge (negative epsilon cycle?)")

    def closure_trace(cost, eps_back, emit_back):
        """Fold each state's within-step epsilon chain plus its emitting entry
        into (prev_state_before_step, olabels_in_order)."""
        trace: list[tuple[int, tuple[int, ...]] | None] = [None] * g.num_states
        for s in g.states():
            if cost[s] == INF:
                continue
            olabels: list[int] = []
            cur = s
            hops = 0
            while eps_back[cur] is not None:
                prev, ol = eps_back[cur]
                if ol != EPSILON:
                    olabels.append(ol)
                cur = prev
                hops += 1
                if hops > g.num_states:
                    raise DecodeError("epsilon backtrace cycle")
            if emit_back is None:
                trace[s] = (-1, tuple(reversed(olabels)))
            elif emit_back[cur] is not None:
                prev, ol = emit_back[cur]
                if ol != EPSILON:
                    olabels.append(ol)
                trace[s] = (prev, tuple(reversed(olabels)))
        return trace

    cost = [INF] * g.num_states
    cost[g.start] = 0.0
    eps_back: list[tuple[int, int] | None] = [None] * g.num_states
    eps_closure(cost, eps_back)
    initial_trace = closure_trace(cost, eps_back, None)

    history = []
    for f in range(num_frames):
        frame = loglik[f]
        new_cost = [INF] * g.num_states
        emit_back: list[tuple[int, int] | None] = [None] * g.num_states
        for s in g.states():
            c = cost[s]
            if c == INF:
                continue
            for arc in g.arcs(s):
                if arc.ilabel == EPSILON:
                    continue
                nc = c + (-acoustic_scale * frame[arc.ilabel - 1]) + arc.weight + extra(arc)
                if nc < new_cost[arc.nextstate]:
                    new_cost[arc.nextstate] = nc
                    emit_back[arc.nextstate] = (s, arc.olabel)
        cost = new_cost
        eps_back = [None] * g.num_states
        eps_closure(cost, eps_back)
        history.append(closure_trace(cost, eps_back, emit_back))

    finals = [s for s in g.states() if g.is_final(s) and cost[s] != INF]
    if finals:
        best = min(finals, key=lambda s: (cost[s] + g.final(s), s))
        best_cost = cost[best] + g.final(best)
    else:
        alive = [s for s in g.states() if cost[s] != INF]
        if not alive:
            raise DecodeError("no surviving hypotheses")
        best = min(alive, key=lambda s: (cost[s], s))
        best_cost = cost[best]

    words: list[int] = []
    state = best
    for f in range(num_frames - 1, -1, -1):
        entry = history[f][state]
        if entry is None:
            raise DecodeError("broken oracle backtrace")
        prev, olabels = entry
        words[:0] = olabels
        state = prev
    entry = initial_trace[state]
    if entry is not None:
        words[:0] = entry[1]
    return tuple(words), best_cost
