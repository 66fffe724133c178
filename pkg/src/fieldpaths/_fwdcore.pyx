# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled forwarding kernel.

Line-for-line twin of ``_fwdpure.run_stretch``; the two must produce
bitwise-identical results (the parity tests enforce it).
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()

REASON_RAN_ALL = 0
REASON_DYING = 1
REASON_MISMATCH = 2

FAIL_DELIVERED = -1
FAIL_NO_GENERATION = -2


def run_stretch(long n_max, long t0, long n_nodes, long ctrl,
                cnp.int32_t[::1] path_flat, cnp.int32_t[::1] path_off,
                cnp.int32_t[::1] rate, cnp.uint8_t[::1] active,
                cnp.int32_t[::1] consumer, cnp.int32_t[::1] exp_fail,
                cnp.float64_t[::1] lat_m, cnp.float64_t[::1] eps_m,
                cnp.uint8_t[::1] enabled_m, cnp.uint8_t[::1] online,
                cnp.float64_t[::1] energy, cnp.float64_t[::1] reserve,
                double l_max, double remaining_in,
                cnp.float64_t[::1] fwd_total, cnp.int64_t[::1] gen_out,
                cnp.int64_t[::1] del_out, cnp.int64_t[::1] lost_out,
                cnp.float64_t[::1] maxlat_out, cnp.uint8_t[::1] viol_out,
                cnp.float64_t[::1] remaining_out, cnp.float64_t[::1] fwd_node,
                cnp.int64_t[::1] piece_delivered, cnp.int64_t[::1] piece_lost,
                cnp.float64_t[::1] piece_lat, cnp.int32_t[::1] fail_now,
                cnp.uint8_t[::1] dying):
    cdef long n_pieces = rate.shape[0]
    cdef long width = n_nodes + 1
    cdef long p, lo, hi, plen, src, i, k, t, u
    cdef long a, b, payer, outcome
    cdef double lat, s, e, actual, total, remaining
    cdef long delivered_rate = 0, lost_rate = 0, gen_rate = 0
    cdef double max_lat = -1.0
    cdef int violating = 0
    cdef int mismatch = 0, any_dying
    cdef long n_run, n_ran = 0
    cdef int reason

    spend_arr = np.zeros(n_nodes, dtype=np.float64)
    cdef cnp.float64_t[::1] spend = spend_arr

    for p in range(n_pieces):
        if not active[p]:
            fail_now[p] = FAIL_NO_GENERATION
            continue
        lo = path_off[p]
        hi = path_off[p + 1]
        plen = hi - lo
        src = path_flat[lo]
        if not online[src]:
            fail_now[p] = FAIL_NO_GENERATION
            continue
        gen_rate += rate[p]
        outcome = FAIL_DELIVERED
        lat = 0.0
        for i in range(plen - 1):
            a = path_flat[lo + i]
            b = path_flat[lo + i + 1]
            payer = a if a != ctrl else b
            if (not online[b]) or (not enabled_m[a * width + b]):
                # the attempt itself is transmitted (and paid) before
                # the sender can notice the hop is gone
                if payer != ctrl:
                    spend[payer] += eps_m[a * width + b] * rate[p]
                outcome = i
                break
            if payer != ctrl:
                spend[payer] += eps_m[a * width + b] * rate[p]
            lat += lat_m[a * width + b]
        if outcome == FAIL_DELIVERED and path_flat[hi - 1] != consumer[p]:
            # the chain never reaches the consumer: data is carried to the
            # dangling end and dropped there
            outcome = plen - 1
        fail_now[p] = outcome
        if outcome == FAIL_DELIVERED:
            delivered_rate += rate[p]
            piece_lat[p] = lat
            if lat > max_lat:
                max_lat = lat
            if lat > l_max:
                violating = 1
        else:
            lost_rate += rate[p]
            piece_lat[p] = <double> float("nan")

    for p in range(n_pieces):
        if fail_now[p] != exp_fail[p]:
            mismatch = 1
            break
    n_run = 1 if mismatch else n_max

    remaining = remaining_in
    reason = REASON_MISMATCH if mismatch else REASON_RAN_ALL
    for k in range(n_run):
        t = t0 + k
        total = 0.0
        any_dying = 0
        for u in range(n_nodes):
            s = spend[u]
            if s <= 0.0:
                continue
            e = energy[u]
            if e < s:
                actual = e
                energy[u] = 0.0
                dying[u] = 1
                any_dying = 1
            else:
                actual = s
                energy[u] = e - s
                if energy[u] <= reserve[u] + s:
                    dying[u] = 1
                    any_dying = 1
            total += actual
            fwd_node[t * n_nodes + u] = actual
        remaining -= total
        fwd_total[t] = total
        gen_out[t] = gen_rate
        del_out[t] = delivered_rate
        lost_out[t] = lost_rate
        maxlat_out[t] = max_lat
        viol_out[t] = violating
        remaining_out[t] = remaining
        n_ran = k + 1
        if any_dying:
            reason = REASON_DYING
            break

    for p in range(n_pieces):
        if not active[p]:
            continue
        if fail_now[p] == FAIL_DELIVERED:
            piece_delivered[p] += rate[p] * n_ran
        elif fail_now[p] != FAIL_NO_GENERATION:
            piece_lost[p] += rate[p] * n_ran
    return n_ran, reason, remaining
