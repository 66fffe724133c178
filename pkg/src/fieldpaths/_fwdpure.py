"""Pure-Python forwarding kernel (fallback for the compiled core).

Runs a stretch of quiescent intervals: per interval, every active piece's
materialized path is walked hop by hop, transmitter energy is debited and
delivery / loss / latency metrics are accumulated.  Outcomes cannot
change inside a stretch (paths, liveness and costs are frozen between
engine phases), so the walk happens once and the per-interval loop only
debits energy and watches the depletion predicate.

Contract shared with the compiled kernel in ``_fwdcore.pyx``; both must
produce bitwise-identical results.
"""

REASON_RAN_ALL = 0
REASON_DYING = 1
REASON_MISMATCH = 2

FAIL_DELIVERED = -1
FAIL_NO_GENERATION = -2


def run_stretch(n_max, t0, n_nodes, ctrl,
                path_flat, path_off, rate, active, consumer, exp_fail,
                lat_m, eps_m, enabled_m, online, energy, reserve,
                l_max, remaining_in,
                fwd_total, gen_out, del_out, lost_out, maxlat_out, viol_out,
                remaining_out, fwd_node,
                piece_delivered, piece_lost, piece_lat, fail_now, dying):
    """Run up to n_max intervals starting at t0; returns (n_ran, reason,
    remaining_after).  Matrices are flattened (n_nodes+1)^2 rows-major;
    the controller is index ``ctrl`` == n_nodes.
    """
    n_pieces = len(rate)
    width = n_nodes + 1

    # walk every piece once; outcomes are constant across the stretch
    spend = [0.0] * n_nodes
    delivered_rate = 0
    lost_rate = 0
    gen_rate = 0
    max_lat = -1.0
    violating = 0
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
            if not online[b] or not enabled_m[a * width + b]:
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
            piece_lat[p] = float("nan")

    mismatch = False
    for p in range(n_pieces):
        if fail_now[p] != exp_fail[p]:
            mismatch = True
            break
    n_run = 1 if mismatch else n_max

    remaining = remaining_in
    n_ran = 0
    reason = REASON_MISMATCH if mismatch else REASON_RAN_ALL
    for k in range(n_run):
        t = t0 + k
        total = 0.0
        any_dying = False
        for u in range(n_nodes):
            s = spend[u]
            if s <= 0.0:
                continue
            e = energy[u]
            if e < s:
                actual = e
                energy[u] = 0.0
                dying[u] = 1
                any_dying = True
            else:
                actual = s
                energy[u] = e - s
                if energy[u] <= reserve[u] + s:
                    dying[u] = 1
                    any_dying = True
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
