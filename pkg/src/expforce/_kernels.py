"""Numba kernels for the outbreak simulators.

Every run is seeded from its own entry of ``rng_seeds`` so results do not
depend on how runs are spread over threads. Workspaces are allocated once
per chunk and reset through the list of touched nodes.
"""

import numpy as np
from numba import config, njit, prange

# the bundled TBB is too old for numba; skip probing it
config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

SUSCEPTIBLE = 0
INFECTED = 1
RECOVERED = 2
RESUSCEPTIBLE = 3  # SIS: susceptible again after an infection

SI, SIS, SIR = 0, 1, 2

REACHED = 0  # ever-infected count hit the threshold
EXTINCT = 1  # no infected nodes (SI: no infected-susceptible arcs) left
TRUNCATED = 2  # event cap hit first
TRANSMISSION_CAP = 3  # SI: stopped at the requested transmission count

N_FIELDS = 6  # ever, transmissions, threshold time, first transmission time, end time, code


@njit(cache=True)
def _add_arc(a, si_list, si_pos, n_si):
    si_pos[a] = n_si
    si_list[n_si] = a
    return n_si + 1


@njit(cache=True)
def _drop_arc(a, si_list, si_pos, n_si):
    p = si_pos[a]
    last = si_list[n_si - 1]
    si_list[p] = last
    si_pos[last] = p
    si_pos[a] = -1
    return n_si - 1


@njit(cache=True)
def _scratch_si_weight(indptr, indices, weights, state):
    s = 0.0
    for u in range(len(indptr) - 1):
        if state[u] == INFECTED:
            for a in range(indptr[u], indptr[u + 1]):
                t = state[indices[a]]
                if t == SUSCEPTIBLE or t == RESUSCEPTIBLE:
                    s += weights[a]
    return s


@njit(cache=True)
def _continuous(indptr, indices, weights, wmax, src, in_ptr, in_arc,
                seed_node, model, beta, threshold, max_trans, event_cap, debug,
                state, si_list, si_pos, inf_list, inf_pos, touched, out):
    n_si = 0
    n_inf = 0
    n_touched = 0
    n_rec = 0
    wsum = 0.0
    ever = 0
    trans = 0
    t = 0.0
    t_thr = np.nan
    t_first = np.nan
    code = EXTINCT
    events = 0

    # infect the seed
    v = seed_node
    state[v] = INFECTED
    touched[n_touched] = v
    n_touched += 1
    ever = 1
    inf_pos[v] = n_inf
    inf_list[n_inf] = v
    n_inf += 1
    for a in range(indptr[v], indptr[v + 1]):
        n_si = _add_arc(a, si_list, si_pos, n_si)
        wsum += weights[a]

    if ever >= threshold:
        t_thr = 0.0
        code = REACHED
    else:
        while True:
            if model == SI:
                if n_si == 0:
                    code = EXTINCT
                    break
                rate_t = wsum
                rate_r = 0.0
            else:
                if n_inf == 0:
                    code = EXTINCT
                    break
                rate_t = beta * wsum if n_si > 0 else 0.0
                rate_r = float(n_inf)
            if events >= event_cap:
                code = TRUNCATED
                break
            events += 1
            total = rate_t + rate_r
            t += np.random.exponential(1.0 / total)
            if rate_r == 0.0 or np.random.random() * total < rate_t:
                # transmission along an infected-susceptible arc, chosen by weight
                while True:
                    a = si_list[np.random.randint(0, n_si)]
                    if weights[a] >= wmax or np.random.random() * wmax < weights[a]:
                        break
                v = indices[a]
                if state[v] == SUSCEPTIBLE:
                    ever += 1
                    touched[n_touched] = v
                    n_touched += 1
                state[v] = INFECTED
                inf_pos[v] = n_inf
                inf_list[n_inf] = v
                n_inf += 1
                for k in range(in_ptr[v], in_ptr[v + 1]):
                    b = in_arc[k]
                    if state[src[b]] == INFECTED:
                        n_si = _drop_arc(b, si_list, si_pos, n_si)
                        wsum -= weights[b]
                for b in range(indptr[v], indptr[v + 1]):
                    s = state[indices[b]]
                    if s == SUSCEPTIBLE or s == RESUSCEPTIBLE:
                        n_si = _add_arc(b, si_list, si_pos, n_si)
                        wsum += weights[b]
                if n_si == 0:
                    wsum = 0.0
                trans += 1
                if trans == 1:
                    t_first = t
            else:
                # recovery of a uniformly chosen infected node
                v = inf_list[np.random.randint(0, n_inf)]
                p = inf_pos[v]
                last = inf_list[n_inf - 1]
                inf_list[p] = last
                inf_pos[last] = p
                inf_pos[v] = -1
                n_inf -= 1
                for b in range(indptr[v], indptr[v + 1]):
                    s = state[indices[b]]
                    if s == SUSCEPTIBLE or s == RESUSCEPTIBLE:
                        n_si = _drop_arc(b, si_list, si_pos, n_si)
                        wsum -= weights[b]
                if model == SIS:
                    state[v] = RESUSCEPTIBLE
                    for k in range(in_ptr[v], in_ptr[v + 1]):
                        b = in_arc[k]
                        if state[src[b]] == INFECTED:
                            n_si = _add_arc(b, si_list, si_pos, n_si)
                            wsum += weights[b]
                else:
                    state[v] = RECOVERED
                    n_rec += 1
                if n_si == 0:
                    wsum = 0.0
            if debug:
                ref = _scratch_si_weight(indptr, indices, weights, state)
                if abs(ref - wsum) > 1e-9 * max(1.0, ref):
                    raise AssertionError("incremental SI weight diverged from recount")
                if model == SIR and ever != n_inf + n_rec:
                    raise AssertionError("SIR ever-infected != |I| + |R|")
            if ever >= threshold:
                t_thr = t
                code = REACHED
                break
            if max_trans > 0 and trans >= max_trans:
                t_thr = t
                code = TRANSMISSION_CAP
                break

    out[0] = ever
    out[1] = trans
    out[2] = t_thr
    out[3] = t_first
    out[4] = t
    out[5] = code

    # reset workspace
    for k in range(n_si):
        si_pos[si_list[k]] = -1
    for k in range(n_touched):
        state[touched[k]] = SUSCEPTIBLE
        inf_pos[touched[k]] = -1


@njit(cache=True)
def _discrete(indptr, indices, seed_node, model, r, threshold, round_cap,
              state, cur, nxt, touched, out):
    n_touched = 1
    touched[0] = seed_node
    state[seed_node] = INFECTED
    cur[0] = seed_node
    n_cur = 1
    ever = 1
    trans = 0
    rounds = 0
    t_thr = np.nan
    t_first = np.nan
    code = EXTINCT
    if ever >= threshold:
        t_thr = 0.0
        code = REACHED
    else:
        while n_cur > 0:
            if rounds >= round_cap:
                code = TRUNCATED
                break
            rounds += 1
            n_nxt = 0
            for i in range(n_cur):
                u = cur[i]
                for a in range(indptr[u], indptr[u + 1]):
                    v = indices[a]
                    s = state[v]
                    if s == SUSCEPTIBLE or s == RESUSCEPTIBLE:
                        if np.random.random() < r:
                            if s == SUSCEPTIBLE:
                                ever += 1
                                touched[n_touched] = v
                                n_touched += 1
                            state[v] = INFECTED
                            nxt[n_nxt] = v
                            n_nxt += 1
                            trans += 1
            if trans > 0 and np.isnan(t_first):
                t_first = float(rounds)
            for i in range(n_cur):
                state[cur[i]] = RESUSCEPTIBLE if model == SIS else RECOVERED
            for i in range(n_nxt):
                cur[i] = nxt[i]
            n_cur = n_nxt
            if ever >= threshold:
                t_thr = float(rounds)
                code = REACHED
                break
    out[0] = ever
    out[1] = trans
    out[2] = t_thr
    out[3] = t_first
    out[4] = float(rounds)
    out[5] = code
    for k in range(n_touched):
        state[touched[k]] = SUSCEPTIBLE


@njit(parallel=True, cache=True)
def batch_continuous(indptr, indices, weights, src, in_ptr, in_arc, seeds, rng_seeds,
                     model, beta, threshold, max_trans, event_cap, debug, n_chunks):
    n = len(indptr) - 1
    m = len(indices)
    k, s = rng_seeds.shape
    out = np.empty((k, s, N_FIELDS))
    wmax = weights.max() if m > 0 else 1.0
    tasks = k * s
    n_chunks = max(1, min(tasks, n_chunks))
    for c in prange(n_chunks):
        state = np.zeros(n, dtype=np.int8)
        si_list = np.empty(max(m, 1), dtype=np.int64)
        si_pos = np.full(max(m, 1), -1, dtype=np.int64)
        inf_list = np.empty(n, dtype=np.int64)
        inf_pos = np.full(n, -1, dtype=np.int64)
        touched = np.empty(n, dtype=np.int64)
        for task in range(c, tasks, n_chunks):
            i = task // s
            j = task % s
            np.random.seed(rng_seeds[i, j])
            _continuous(indptr, indices, weights, wmax, src, in_ptr, in_arc,
                        seeds[i], model, beta, threshold, max_trans, event_cap, debug,
                        state, si_list, si_pos, inf_list, inf_pos, touched, out[i, j])
    return out


@njit(parallel=True, cache=True)
def batch_discrete(indptr, indices, seeds, rng_seeds, model, r, threshold, round_cap, n_chunks):
    n = len(indptr) - 1
    k, s = rng_seeds.shape
    out = np.empty((k, s, N_FIELDS))
    tasks = k * s
    n_chunks = max(1, min(tasks, n_chunks))
    for c in prange(n_chunks):
        state = np.zeros(n, dtype=np.int8)
        cur = np.empty(n, dtype=np.int64)
        nxt = np.empty(n, dtype=np.int64)
        touched = np.empty(n, dtype=np.int64)
        for task in range(c, tasks, n_chunks):
            i = task // s
            j = task % s
            np.random.seed(rng_seeds[i, j])
            _discrete(indptr, indices, seeds[i], model, r, threshold, round_cap,
                      state, cur, nxt, touched, out[i, j])
    return out
