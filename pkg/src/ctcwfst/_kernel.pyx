# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled beam-search frame kernel.

Mirror of _pykernel.advance_chunk with the GIL released across the frame
loop, which is what lets decode_batch scale across threads. The float
operation order is identical to the pure-Python kernel so results are
bit-for-bit equal; keep the two in sync.
"""

from libc.stdlib cimport free, malloc, qsort, realloc

import numpy as np

cdef double INF = float("inf")

OK = 0
ERR_EPS_ITERS = 1
ERR_NO_SURVIVORS = 2
cdef int C_OK = 0
cdef int C_ERR_EPS_ITERS = 1
cdef int C_ERR_NO_SURVIVORS = 2
cdef int C_ERR_OOM = 3

cdef struct RankEntry:
    double cost
    int state
    int slot


cdef int _cmp_cost_state(const void* pa, const void* pb) noexcept nogil:
    cdef const RankEntry* a = <const RankEntry*> pa
    cdef const RankEntry* b = <const RankEntry*> pb
    if a.cost < b.cost:
        return -1
    if a.cost > b.cost:
        return 1
    if a.state < b.state:
        return -1
    if a.state > b.state:
        return 1
    return 0


cdef int _cmp_state(const void* pa, const void* pb) noexcept nogil:
    cdef const RankEntry* a = <const RankEntry*> pa
    cdef const RankEntry* b = <const RankEntry*> pb
    if a.state < b.state:
        return -1
    if a.state > b.state:
        return 1
    return 0


cdef struct Buf:
    char* data
    size_t len
    size_t cap
    size_t item


cdef int _buf_init(Buf* b, size_t item, size_t cap) noexcept nogil:
    b.item = item
    b.len = 0
    b.cap = cap
    b.data = <char*> malloc(item * cap)
    return 0 if b.data != NULL else -1


cdef int _buf_grow(Buf* b) noexcept nogil:
    cdef size_t ncap = b.cap * 2
    cdef char* nd = <char*> realloc(b.data, b.item * ncap)
    if nd == NULL:
        return -1
    b.data = nd
    b.cap = ncap
    return 0


cdef inline long long* _i64(Buf* b) noexcept nogil:
    return <long long*> b.data


cdef inline int* _i32(Buf* b) noexcept nogil:
    return <int*> b.data


cdef inline double* _f64(Buf* b) noexcept nogil:
    return <double*> b.data


cdef inline int _push_i64(Buf* b, long long v) noexcept nogil:
    if b.len == b.cap and _buf_grow(b) != 0:
        return -1
    (<long long*> b.data)[b.len] = v
    b.len += 1
    return 0


cdef inline int _push_i32(Buf* b, int v) noexcept nogil:
    if b.len == b.cap and _buf_grow(b) != 0:
        return -1
    (<int*> b.data)[b.len] = v
    b.len += 1
    return 0


cdef inline int _push_f64(Buf* b, double v) noexcept nogil:
    if b.len == b.cap and _buf_grow(b) != 0:
        return -1
    (<double*> b.data)[b.len] = v
    b.len += 1
    return 0


def advance_chunk(
    off_arr,
    eps_end_arr,
    ilabel_arr,
    olabel_arr,
    weight_arr,
    nextstate_arr,
    act_state_arr,
    act_cost_arr,
    act_bp_arr,
    act_chain_off_arr,
    act_chain_pool_arr,
    loglik_arr,
    double acoustic_scale,
    double beam,
    long long max_active,
    double relax_eps,
    long long max_ne_iters,
    boost_arr,
    long long base,
):
    cdef const long long[::1] off = off_arr
    cdef const long long[::1] eps_end = eps_end_arr
    cdef const int[::1] ilabel = ilabel_arr
    cdef const int[::1] olabel = olabel_arr
    cdef const double[::1] weight = weight_arr
    cdef const int[::1] nextstate = nextstate_arr
    cdef const int[::1] act_state = act_state_arr
    cdef const double[::1] act_cost = act_cost_arr
    cdef const long long[::1] act_bp = act_bp_arr
    cdef const long long[::1] act_chain_off = act_chain_off_arr
    cdef const int[::1] act_chain_pool = act_chain_pool_arr
    cdef const double[:, ::1] loglik = loglik_arr

    cdef bint has_boost = boost_arr is not None
    cdef const double[::1] boost_mv
    cdef const double* boost = NULL
    if has_boost:
        boost_mv = boost_arr
        boost = &boost_mv[0]

    cdef long long num_states = off.shape[0] - 1
    cdef long long num_frames = loglik.shape[0]
    cdef long long n_src = act_state.shape[0]

    cdef int status = C_OK
    cdef long long err_frame = -1

    cdef int* slot_of = <int*> malloc(num_states * sizeof(int))
    cdef long long* slot_gen = <long long*> malloc(num_states * sizeof(long long))
    if slot_of == NULL or slot_gen == NULL:
        free(slot_of)
        free(slot_gen)
        raise MemoryError()

    cdef Buf slot_state, slot_cost, slot_prev, slot_chain
    cdef Buf chain_ol, chain_parent
    cdef Buf src_state, src_cost, src_bp, src_chain
    cdef Buf rec_prev, rec_state, rec_cost, rec_olab_off, rec_olab_pool, counts
    cdef Buf rank

    cdef bint failed = False
    failed |= _buf_init(&slot_state, sizeof(int), 256) != 0
    failed |= _buf_init(&slot_cost, sizeof(double), 256) != 0
    failed |= _buf_init(&slot_prev, sizeof(long long), 256) != 0
    failed |= _buf_init(&slot_chain, sizeof(long long), 256) != 0
    failed |= _buf_init(&chain_ol, sizeof(int), 256) != 0
    failed |= _buf_init(&chain_parent, sizeof(long long), 256) != 0
    failed |= _buf_init(&src_state, sizeof(int), 256) != 0
    failed |= _buf_init(&src_cost, sizeof(double), 256) != 0
    failed |= _buf_init(&src_bp, sizeof(long long), 256) != 0
    failed |= _buf_init(&src_chain, sizeof(long long), 256) != 0
    failed |= _buf_init(&rec_prev, sizeof(long long), 1024) != 0
    failed |= _buf_init(&rec_state, sizeof(int), 1024) != 0
    failed |= _buf_init(&rec_cost, sizeof(double), 1024) != 0
    failed |= _buf_init(&rec_olab_off, sizeof(long long), 1024) != 0
    failed |= _buf_init(&rec_olab_pool, sizeof(int), 1024) != 0
    failed |= _buf_init(&counts, sizeof(long long), 64) != 0
    failed |= _buf_init(&rank, sizeof(RankEntry), 256) != 0
    if failed:
        status = C_ERR_OOM

    cdef long long i, f, j, k, a, s, d, node, seg_first, seg_last
    cdef long long chain_base, rec_first, n_slots, n_surv, iters, gen
    cdef double c, nc, improve, max_improve, min_cost, cutoff
    cdef int ol
    cdef long long bp, ch
    cdef RankEntry* entries

    with nogil:
        if status == C_OK:
            for i in range(num_states):
                slot_gen[i] = -1
            gen = -1
            if _push_i64(&rec_olab_off, 0) != 0:
                status = C_ERR_OOM

        # Seed the source set and its pending olabel chains.
        if status == C_OK:
            for i in range(n_src):
                if _push_i32(&src_state, act_state[i]) != 0 \
                        or _push_f64(&src_cost, act_cost[i]) != 0 \
                        or _push_i64(&src_bp, act_bp[i]) != 0:
                    status = C_ERR_OOM
                    break
                node = -1
                for k in range(act_chain_off[i], act_chain_off[i + 1]):
                    if _push_i32(&chain_ol, act_chain_pool[k]) != 0 \
                            or _push_i64(&chain_parent, node) != 0:
                        status = C_ERR_OOM
                        break
                    node = <long long> chain_ol.len - 1
                if status != C_OK:
                    break
                if _push_i64(&src_chain, node) != 0:
                    status = C_ERR_OOM
                    break

        if status == C_OK:
            for f in range(num_frames):
                chain_base = <long long> chain_ol.len
                gen += 1
                slot_state.len = 0
                slot_cost.len = 0
                slot_prev.len = 0
                slot_chain.len = 0

                # Emitting expansion with recombination per destination state.
                for i in range(<long long> src_state.len):
                    s = _i32(&src_state)[i]
                    c = _f64(&src_cost)[i]
                    bp = _i64(&src_bp)[i]
                    ch = _i64(&src_chain)[i]
                    for a in range(eps_end[s], off[s + 1]):
                        nc = c + (-acoustic_scale * loglik[f, ilabel[a] - 1]) + weight[a]
                        ol = olabel[a]
                        if has_boost and ol != 0:
                            nc = nc + boost[ol]
                        if not nc < INF:
                            continue
                        d = nextstate[a]
                        if slot_gen[d] != gen:
                            if ol != 0:
                                if _push_i32(&chain_ol, ol) != 0 \
                                        or _push_i64(&chain_parent, ch) != 0:
                                    status = C_ERR_OOM
                                    break
                                node = <long long> chain_ol.len - 1
                            else:
                                node = ch
                            slot_gen[d] = gen
                            slot_of[d] = <int> slot_state.len
                            if _push_i32(&slot_state, <int> d) != 0 \
                                    or _push_f64(&slot_cost, nc) != 0 \
                                    or _push_i64(&slot_prev, bp) != 0 \
                                    or _push_i64(&slot_chain, node) != 0:
                                status = C_ERR_OOM
                                break
                        elif nc < _f64(&slot_cost)[slot_of[d]]:
                            if ol != 0:
                                if _push_i32(&chain_ol, ol) != 0 \
                                        or _push_i64(&chain_parent, ch) != 0:
                                    status = C_ERR_OOM
                                    break
                                node = <long long> chain_ol.len - 1
                            else:
                                node = ch
                            j = slot_of[d]
                            _f64(&slot_cost)[j] = nc
                            _i64(&slot_prev)[j] = bp
                            _i64(&slot_chain)[j] = node
                    if status != C_OK:
                        break
                if status != C_OK:
                    err_frame = f
                    break

                # Nonemitting (epsilon) relaxation, Gauss-Seidel passes.
                iters = 0
                while True:
                    iters += 1
                    if iters > max_ne_iters:
                        status = C_ERR_EPS_ITERS
                        break
                    max_improve = 0.0
                    j = 0
                    while j < <long long> slot_state.len:
                        s = _i32(&slot_state)[j]
                        c = _f64(&slot_cost)[j]
                        bp = _i64(&slot_prev)[j]
                        ch = _i64(&slot_chain)[j]
                        for a in range(off[s], eps_end[s]):
                            nc = c + weight[a]
                            ol = olabel[a]
                            if has_boost and ol != 0:
                                nc = nc + boost[ol]
                            if not nc < INF:
                                continue
                            d = nextstate[a]
                            if slot_gen[d] != gen:
                                if ol != 0:
                                    if _push_i32(&chain_ol, ol) != 0 \
                                            or _push_i64(&chain_parent, ch) != 0:
                                        status = C_ERR_OOM
                                        break
                                    node = <long long> chain_ol.len - 1
                                else:
                                    node = ch
                                slot_gen[d] = gen
                                slot_of[d] = <int> slot_state.len
                                if _push_i32(&slot_state, <int> d) != 0 \
                                        or _push_f64(&slot_cost, nc) != 0 \
                                        or _push_i64(&slot_prev, bp) != 0 \
                                        or _push_i64(&slot_chain, node) != 0:
                                    status = C_ERR_OOM
                                    break
                                max_improve = INF
                            elif nc < _f64(&slot_cost)[slot_of[d]]:
                                improve = _f64(&slot_cost)[slot_of[d]] - nc
                                if ol != 0:
                                    if _push_i32(&chain_ol, ol) != 0 \
                                            or _push_i64(&chain_parent, ch) != 0:
                                        status = C_ERR_OOM
                                        break
                                    node = <long long> chain_ol.len - 1
                                else:
                                    node = ch
                                k = slot_of[d]
                                _f64(&slot_cost)[k] = nc
                                _i64(&slot_prev)[k] = bp
                                _i64(&slot_chain)[k] = node
                                if improve > max_improve:
                                    max_improve = improve
                        if status != C_OK:
                            break
                        j += 1
                    if status != C_OK or max_improve <= relax_eps:
                        break
                if status != C_OK:
                    err_frame = f
                    break

                n_slots = <long long> slot_state.len
                if n_slots == 0:
                    status = C_ERR_NO_SURVIVORS
                    err_frame = f
                    break

                # Prune: beam cutoff, then max_active by (cost, state id).
                min_cost = INF
                for j in range(n_slots):
                    if _f64(&slot_cost)[j] < min_cost:
                        min_cost = _f64(&slot_cost)[j]
                cutoff = min_cost + beam

                rank.len = 0
                for j in range(n_slots):
                    if _f64(&slot_cost)[j] <= cutoff:
                        if rank.len == rank.cap and _buf_grow(&rank) != 0:
                            status = C_ERR_OOM
                            break
                        entries = <RankEntry*> rank.data
                        entries[rank.len].cost = _f64(&slot_cost)[j]
                        entries[rank.len].state = _i32(&slot_state)[j]
                        entries[rank.len].slot = <int> j
                        rank.len += 1
                if status != C_OK:
                    err_frame = f
                    break

                entries = <RankEntry*> rank.data
                n_surv = <long long> rank.len
                if n_surv > max_active:
                    qsort(entries, rank.len, sizeof(RankEntry), _cmp_cost_state)
                    n_surv = max_active
                qsort(entries, <size_t> n_surv, sizeof(RankEntry), _cmp_state)

                rec_first = <long long> rec_state.len
                for j in range(n_surv):
                    k = entries[j].slot
                    if _push_i64(&rec_prev, _i64(&slot_prev)[k]) != 0 \
                            or _push_i32(&rec_state, _i32(&slot_state)[k]) != 0 \
                            or _push_f64(&rec_cost, _f64(&slot_cost)[k]) != 0:
                        status = C_ERR_OOM
                        break
                    # Chains are linked newest-first; records store oldest-first.
                    seg_first = <long long> rec_olab_pool.len
                    node = _i64(&slot_chain)[k]
                    while node >= 0:
                        if _push_i32(&rec_olab_pool, _i32(&chain_ol)[node]) != 0:
                            status = C_ERR_OOM
                            break
                        node = _i64(&chain_parent)[node]
                    if status != C_OK:
                        break
                    seg_last = <long long> rec_olab_pool.len - 1
                    while seg_first < seg_last:
                        ol = _i32(&rec_olab_pool)[seg_first]
                        _i32(&rec_olab_pool)[seg_first] = _i32(&rec_olab_pool)[seg_last]
                        _i32(&rec_olab_pool)[seg_last] = ol
                        seg_first += 1
                        seg_last -= 1
                    if _push_i64(&rec_olab_off, <long long> rec_olab_pool.len) != 0:
                        status = C_ERR_OOM
                        break
                if status != C_OK:
                    err_frame = f
                    break
                if _push_i64(&counts, n_surv) != 0:
                    status = C_ERR_OOM
                    err_frame = f
                    break

                # Survivors become the next frame's sources.
                src_state.len = 0
                src_cost.len = 0
                src_bp.len = 0
                src_chain.len = 0
                for j in range(n_surv):
                    if _push_i32(&src_state, _i32(&rec_state)[rec_first + j]) != 0 \
                            or _push_f64(&src_cost, _f64(&rec_cost)[rec_first + j]) != 0 \
                            or _push_i64(&src_bp, base + rec_first + j) != 0 \
                            or _push_i64(&src_chain, -1) != 0:
                        status = C_ERR_OOM
                        break
                if status != C_OK:
                    err_frame = f
                    break
                chain_ol.len = <size_t> chain_base
                chain_parent.len = <size_t> chain_base

    counts_np = np.empty(counts.len, dtype=np.int64)
    rec_prev_np = np.empty(rec_prev.len, dtype=np.int64)
    rec_state_np = np.empty(rec_state.len, dtype=np.int32)
    rec_cost_np = np.empty(rec_cost.len, dtype=np.float64)
    rec_olab_off_np = np.empty(rec_olab_off.len, dtype=np.int64)
    rec_olab_pool_np = np.empty(rec_olab_pool.len, dtype=np.int32)

    cdef long long[::1] counts_mv = counts_np
    cdef long long[::1] rec_prev_mv = rec_prev_np
    cdef int[::1] rec_state_mv = rec_state_np
    cdef double[::1] rec_cost_mv = rec_cost_np
    cdef long long[::1] rec_olab_off_mv = rec_olab_off_np
    cdef int[::1] rec_olab_pool_mv = rec_olab_pool_np

    for i in range(<long long> counts.len):
        counts_mv[i] = _i64(&counts)[i]
    for i in range(<long long> rec_prev.len):
        rec_prev_mv[i] = _i64(&rec_prev)[i]
        rec_state_mv[i] = _i32(&rec_state)[i]
        rec_cost_mv[i] = _f64(&rec_cost)[i]
    for i in range(<long long> rec_olab_off.len):
        rec_olab_off_mv[i] = _i64(&rec_olab_off)[i]
    for i in range(<long long> rec_olab_pool.len):
        rec_olab_pool_mv[i] = _i32(&rec_olab_pool)[i]

    free(slot_of)
    free(slot_gen)
    free(slot_state.data)
    free(slot_cost.data)
    free(slot_prev.data)
    free(slot_chain.data)
    free(chain_ol.data)
    free(chain_parent.data)
    free(src_state.data)
    free(src_cost.data)
    free(src_bp.data)
    free(src_chain.data)
    free(rank.data)
    free(rec_prev.data)
    free(rec_state.data)
    free(rec_cost.data)
    free(rec_olab_off.data)
    free(rec_olab_pool.data)
    free(counts.data)

    if status == C_ERR_OOM:
        raise MemoryError()
    return (
        status,
        err_frame,
        counts_np,
        rec_prev_np,
        rec_state_np,
        rec_cost_np,
        rec_olab_off_np,
        rec_olab_pool_np,
    )
