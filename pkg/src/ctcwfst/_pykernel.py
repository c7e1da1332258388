"""Pure-Python beam-search frame kernel.

This is the fallback for the compiled extension in _kernel.pyx. Both
implementations execute the identical sequence of float operations in the
identical order, so their outputs are bit-for-bit equal; keep any change here
mirrored there.

Per frame: expand emitting arcs from the previous token set with recombination
(min cost per destination state, first-writer wins on exact ties), relax
epsilon arcs to a fixpoint, prune by beam and max_active, then append the
survivors as backpointer records.
"""

from __future__ import annotations

import math

import numpy as np

INF = math.inf

# Error codes shared with the compiled kernel.
OK = 0
ERR_EPS_ITERS = 1
ERR_NO_SURVIVORS = 2


def advance_chunk(
    off,
    eps_end,
    ilabel,
    olabel,
    weight,
    nextstate,
    act_state,
    act_cost,
    act_bp,
    act_chain_off,
    act_chain_pool,
    loglik,
    acoustic_scale,
    beam,
    max_active,
    relax_eps,
    max_ne_iters,
    boost,
    base,
):
    """Advance one channel over a chunk of frames.

    Returns (status, err_frame, counts, rec_prev, rec_state, rec_cost,
    rec_olab_off, rec_olab_pool); on a non-OK status the record arrays cover
    the frames completed before the failure.
    """
    off = off.tolist()
    eps_end = eps_end.tolist()
    ilabel = ilabel.tolist()
    olabel = olabel.tolist()
    weight = weight.tolist()
    nextstate = nextstate.tolist()
    boost_list = boost.tolist() if boost is not None else None

    src_state = act_state.tolist()
    src_cost = act_cost.tolist()
    src_bp = act_bp.tolist()

    # Pending output labels carried by the sources (non-empty only right after
    # channel creation) become chain nodes so the first frame inherits them.
    chain_ol: list[int] = []
    chain_parent: list[int] = []
    src_chain: list[int] = []
    chain_offsets = act_chain_off.tolist()
    chain_pool = act_chain_pool.tolist()
    for i in range(len(src_state)):
        head = -1
        for k in range(chain_offsets[i], chain_offsets[i + 1]):
            chain_ol.append(chain_pool[k])
            chain_parent.append(head)
            head = len(chain_ol) - 1
        src_chain.append(head)

    num_frames = loglik.shape[0]
    counts: list[int] = []
    rec_prev: list[int] = []
    rec_state: list[int] = []
    rec_cost: list[float] = []
    rec_olab_off: list[int] = [0]
    rec_olab_pool: list[int] = []

    status = OK
    err_frame = -1

    for f in range(num_frames):
        row = loglik[f].tolist()
        chain_base = len(chain_ol)

        slot_of: dict[int, int] = {}
        slot_state: list[int] = []
        slot_cost: list[float] = []
        slot_prev: list[int] = []
        slot_chain: list[int] = []

        # Emitting expansion.
        for i in range(len(src_state)):
            s = src_state[i]
            c = src_cost[i]
            bp = src_bp[i]
            ch = src_chain[i]
            for a in range(eps_end[s], off[s + 1]):
                nc = c + (-acoustic_scale * row[ilabel[a] - 1]) + weight[a]
                ol = olabel[a]
                if boost_list is not None and ol != 0:
                    nc = nc + boost_list[ol]
                if not nc < INF:
                    continue
                d = nextstate[a]
                j = slot_of.get(d)
                if j is None:
                    if ol != 0:
                        chain_ol.append(ol)
                        chain_parent.append(ch)
                        nch = len(chain_ol) - 1
                    else:
                        nch = ch
                    slot_of[d] = len(slot_state)
                    slot_state.append(d)
                    slot_cost.append(nc)
                    slot_prev.append(bp)
                    slot_chain.append(nch)
                elif nc < slot_cost[j]:
                    if ol != 0:
                        chain_ol.append(ol)
                        chain_parent.append(ch)
                        nch = len(chain_ol) - 1
                    else:
                        nch = ch
                    slot_cost[j] = nc
                    slot_prev[j] = bp
                    slot_chain[j] = nch

        # Nonemitting (epsilon) relaxation, Gauss-Seidel passes until quiet.
        iters = 0
        while True:
            iters += 1
            if iters > max_ne_iters:
                status = ERR_EPS_ITERS
                err_frame = f
                break
            max_improve = 0.0
            j = 0
            while j < len(slot_state):
                s = slot_state[j]
                c = slot_cost[j]
                bp = slot_prev[j]
                ch = slot_chain[j]
                for a in range(off[s], eps_end[s]):
                    nc = c + weight[a]
                    ol = olabel[a]
                    if boost_list is not None and ol != 0:
                        nc = nc + boost_list[ol]
                    if not nc < INF:
                        continue
                    d = nextstate[a]
                    k = slot_of.get(d)
                    if k is None:
                        if ol != 0:
                            chain_ol.append(ol)
                            chain_parent.append(ch)
                            nch = len(chain_ol) - 1
                        else:
                            nch = ch
                        slot_of[d] = len(slot_state)
                        slot_state.append(d)
                        slot_cost.append(nc)
                        slot_prev.append(bp)
                        slot_chain.append(nch)
                        max_improve = INF
                    elif nc < slot_cost[k]:
                        improve = slot_cost[k] - nc
                        if ol != 0:
                            chain_ol.append(ol)
                            chain_parent.append(ch)
                            nch = len(chain_ol) - 1
                        else:
                            nch = ch
                        slot_cost[k] = nc
                        slot_prev[k] = bp
                        slot_chain[k] = nch
                        if improve > max_improve:
                            max_improve = improve
                j += 1
            if status != OK or max_improve <= relax_eps:
                break
        if status != OK:
            break

        if not slot_state:
            status = ERR_NO_SURVIVORS
            err_frame = f
            break

        # Prune: beam cutoff from the frame minimum, then max_active by
        # (cost, state id); records stored in state order.
        min_cost = INF
        for c in slot_cost:
            if c < min_cost:
                min_cost = c
        cutoff = min_cost + beam
        survivors = [j for j in range(len(slot_state)) if slot_cost[j] <= cutoff]
        if len(survivors) > max_active:
            survivors.sort(key=lambda j: (slot_cost[j], slot_state[j]))
            survivors = survivors[:max_active]
        survivors.sort(key=lambda j: slot_state[j])

        rec_first = len(rec_state)
        for j in survivors:
            rec_prev.append(slot_prev[j])
            rec_state.append(slot_state[j])
            rec_cost.append(slot_cost[j])
            seg: list[int] = []
            node = slot_chain[j]
            while node >= 0:
                seg.append(chain_ol[node])
                node = chain_parent[node]
            seg.reverse()
            rec_olab_pool.extend(seg)
            rec_olab_off.append(len(rec_olab_pool))
        counts.append(len(survivors))

        # Survivors become the next frame's sources; their pending chains are
        # now stored in the records.
        src_state = rec_state[rec_first:]
        src_cost = rec_cost[rec_first:]
        src_bp = list(range(base + rec_first, base + len(rec_state)))
        src_chain = [-1] * len(src_state)
        del chain_ol[chain_base:]
        del chain_parent[chain_base:]

    return (
        status,
        err_frame,
        np.asarray(counts, dtype=np.int64),
        np.asarray(rec_prev, dtype=np.int64),
        np.asarray(rec_state, dtype=np.int32),
        np.asarray(rec_cost, dtype=np.float64),
        np.asarray(rec_olab_off, dtype=np.int64),
        np.asarray(rec_olab_pool, dtype=np.int32),
    )
