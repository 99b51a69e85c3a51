"""Compiled event loops for the two replication policies.

Servers are numbered 0..N1+N2-1; the first N1 belong to provider 1 and
the rest to provider 2.  In a configuration (k1, k2) the last k_i
servers of provider i are shared, the others dedicated.  Server classes
are 0 (dedicated-1), 1 (dedicated-2) and 2 (shared).
"""
import numpy as np
from numba import njit

INF = np.inf

STATUS_OK = 0
STATUS_QUEUE_OVERFLOW = 1


@njit(cache=True)
def _server_classes(n1, n2, k1, k2, out):
    for s in range(n1):
        out[s] = 0 if s < n1 - k1 else 2
    for j in range(n2):
        out[n1 + j] = 1 if j < n2 - k2 else 2


@njit(cache=True)
def _eligible(cls, prov):
    # prov is 0 or 1
    return cls == 2 or cls == prov


@njit(cache=True, nogil=True)
def simulate_cos_kernel(lam, nu, n1, n2, corner_k, corner_dur, split, uniform, horizon, qcap, seed):
    """Cancel-on-start: one FCFS line per provider, servers take the earliest eligible job.

    ``corner_k`` (m, 2) and ``corner_dur`` (m,) describe a cyclic schedule
    of configurations (a single row with infinite duration for a fixed
    configuration).  ``split[c, x1, x2, x3, p, cls]`` gives the class an
    arriving job of provider p starts on when servers are free; with
    ``uniform`` set, an idle eligible server is chosen uniformly instead.
    """
    np.random.seed(seed)
    n = n1 + n2
    prov_of = np.empty(horizon, np.int8)
    waited = np.zeros(horizon, np.uint8)
    resp = np.empty(horizon, np.float64)

    cls = np.empty(n, np.int64)
    busy = np.zeros(n, np.bool_)
    clock = np.full(n, INF)
    s_job = np.full(n, -1, np.int64)
    s_arr = np.zeros(n)
    s_prov = np.zeros(n, np.int64)

    # FIFO waiting lines as ring buffers
    q_id = np.empty((2, qcap), np.int64)
    q_arr = np.empty((2, qcap))
    q_head = np.zeros(2, np.int64)
    q_len = np.zeros(2, np.int64)

    m = corner_k.shape[0]
    corner = 0
    _server_classes(n1, n2, corner_k[0, 0], corner_k[0, 1], cls)
    next_switch = corner_dur[0] if m > 1 else INF

    t = 0.0
    next_arr = np.empty(2)
    next_arr[0] = np.random.exponential(1.0 / lam[0])
    next_arr[1] = np.random.exponential(1.0 / lam[1])
    job = 0
    done = 0
    violations = 0
    idle_c = np.zeros(3, np.int64)
    busy_c = np.zeros(3, np.int64)
    probs = np.zeros(3)

    while done < horizon:
        # next event
        ev = -1
        tmin = next_arr[0]
        kind = 0
        if next_arr[1] < tmin:
            tmin = next_arr[1]
            kind = 1
        if next_switch < tmin:
            tmin = next_switch
            kind = 2
        for s in range(n):
            if clock[s] < tmin:
                tmin = clock[s]
                kind = 3
                ev = s
        t = tmin

        if kind <= 1:
            p = kind
            next_arr[p] = t + np.random.exponential(1.0 / lam[p])
            jid = job
            job += 1
            for c in range(3):
                idle_c[c] = 0
                busy_c[c] = 0
            for s in range(n):
                if busy[s]:
                    busy_c[cls[s]] += 1
                else:
                    idle_c[cls[s]] += 1
            avail = idle_c[p] + idle_c[2]
            if jid < horizon:
                prov_of[jid] = p
            if avail == 0:
                if jid < horizon:
                    waited[jid] = 1
                if q_len[p] >= qcap:
                    return prov_of, waited, resp, violations, STATUS_QUEUE_OVERFLOW
                pos = (q_head[p] + q_len[p]) % qcap
                q_id[p, pos] = jid
                q_arr[p, pos] = t
                q_len[p] += 1
            else:
                # choose a class, then a uniform idle server inside it
                if uniform:
                    probs[0] = 0.0
                    probs[1] = 0.0
                    probs[p] = idle_c[p] / avail
                    probs[2] = idle_c[2] / avail
                else:
                    for c in range(3):
                        probs[c] = split[corner, busy_c[0], busy_c[1], busy_c[2], p, c]
                u = np.random.random()
                chosen = 2
                acc = 0.0
                for c in range(3):
                    if idle_c[c] > 0 and probs[c] > 0.0:
                        acc += probs[c]
                        if u < acc:
                            chosen = c
                            break
                        chosen = c
                r = np.random.randint(idle_c[chosen])
                target = -1
                for s in range(n):
                    if (not busy[s]) and cls[s] == chosen:
                        if r == 0:
                            target = s
                            break
                        r -= 1
                busy[target] = True
                s_job[target] = jid
                s_arr[target] = t
                s_prov[target] = p
                clock[target] = t + np.random.exponential(1.0 / nu[p])
        elif kind == 2:
            corner = (corner + 1) % m
            _server_classes(n1, n2, corner_k[corner, 0], corner_k[corner, 1], cls)
            next_switch = t + corner_dur[corner]
            # idle servers that became eligible for waiting jobs start at once
            for s in range(n):
                if not busy[s]:
                    best = -1
                    for p in range(2):
                        if q_len[p] > 0 and _eligible(cls[s], p):
                            if best < 0 or q_arr[p, q_head[p]] < q_arr[best, q_head[best]]:
                                best = p
                    if best >= 0:
                        h = q_head[best]
                        busy[s] = True
                        s_job[s] = q_id[best, h]
                        s_arr[s] = q_arr[best, h]
                        s_prov[s] = best
                        clock[s] = t + np.random.exponential(1.0 / nu[best])
                        q_head[best] = (h + 1) % qcap
                        q_len[best] -= 1
        else:
            s = ev
            jid = s_job[s]
            if jid < horizon:
                resp[jid] = t - s_arr[s]
                done += 1
            best = -1
            for p in range(2):
                if q_len[p] > 0 and _eligible(cls[s], p):
                    if best < 0 or q_arr[p, q_head[p]] < q_arr[best, q_head[best]]:
                        best = p
            if best >= 0:
                h = q_head[best]
                s_job[s] = q_id[best, h]
                s_arr[s] = q_arr[best, h]
                s_prov[s] = best
                clock[s] = t + np.random.exponential(1.0 / nu[best])
                q_head[best] = (h + 1) % qcap
                q_len[best] -= 1
            else:
                busy[s] = False
                clock[s] = INF
                s_job[s] = -1

        # work conservation: nobody waits while an eligible server idles
        for p in range(2):
            if q_len[p] > 0:
                for s in range(n):
                    if (not busy[s]) and _eligible(cls[s], p):
                        violations += 1
                        break
    return prov_of, waited, resp, violations, STATUS_OK


@njit(cache=True, nogil=True)
def simulate_coc_kernel(lam, nu, n1, n2, k1, k2, horizon, qcap, seed):
    """Cancel-on-complete: every eligible server keeps a replica in FCFS order.

    A server always works on the earliest job in the system it is
    eligible for, with a fresh exponential replica size; the job leaves
    when its first replica finishes and its other replicas are dropped.
    Returns the per-job arrays plus the count of jobs whose response
    exceeded (first start - arrival) + first replica size.
    """
    np.random.seed(seed)
    n = n1 + n2
    prov_of = np.empty(horizon, np.int8)
    waited = np.zeros(horizon, np.uint8)
    resp = np.empty(horizon, np.float64)

    cls = np.empty(n, np.int64)
    _server_classes(n1, n2, k1, k2, cls)
    clock = np.full(n, INF)
    s_job = np.full(n, -1, np.int64)  # job id served, -1 when idle

    # jobs in system, one FIFO per provider
    q_id = np.empty((2, qcap), np.int64)
    q_arr = np.empty((2, qcap))
    q_start = np.empty((2, qcap))
    q_size = np.empty((2, qcap))
    q_head = np.zeros(2, np.int64)
    q_len = np.zeros(2, np.int64)

    t = 0.0
    next_arr = np.empty(2)
    next_arr[0] = np.random.exponential(1.0 / lam[0])
    next_arr[1] = np.random.exponential(1.0 / lam[1])
    job = 0
    done = 0
    violations = 0

    while done < horizon:
        ev = -1
        tmin = next_arr[0]
        kind = 0
        if next_arr[1] < tmin:
            tmin = next_arr[1]
            kind = 1
        for s in range(n):
            if clock[s] < tmin:
                tmin = clock[s]
                kind = 3
                ev = s
        t = tmin

        if kind <= 1:
            p = kind
            next_arr[p] = t + np.random.exponential(1.0 / lam[p])
            jid = job
            job += 1
            if q_len[p] >= qcap:
                return prov_of, waited, resp, violations, STATUS_QUEUE_OVERFLOW
            pos = (q_head[p] + q_len[p]) % qcap
            q_id[p, pos] = jid
            q_arr[p, pos] = t
            q_start[p, pos] = INF
            q_size[p, pos] = INF
            q_len[p] += 1
            started = False
            for s in range(n):
                if s_job[s] < 0 and _eligible(cls[s], p):
                    size = np.random.exponential(1.0 / nu[p])
                    s_job[s] = jid
                    clock[s] = t + size
                    if not started:
                        q_start[p, pos] = t
                        q_size[p, pos] = size
                        started = True
            if jid < horizon:
                prov_of[jid] = p
                if not started:
                    waited[jid] = 1
        else:
            jid = s_job[ev]
            # only list heads are ever in service
            p = 0 if (q_len[0] > 0 and q_id[0, q_head[0]] == jid) else 1
            h = q_head[p]
            if jid < horizon:
                r = t - q_arr[p, h]
                resp[jid] = r
                done += 1
                if r > q_start[p, h] - q_arr[p, h] + q_size[p, h] + 1e-9 * (1.0 + t):
                    violations += 1
            q_head[p] = (h + 1) % qcap
            q_len[p] -= 1
            for s in range(n):
                if s_job[s] != jid:
                    continue
                best = -1
                for pp in range(2):
                    if q_len[pp] > 0 and _eligible(cls[s], pp):
                        if best < 0 or q_arr[pp, q_head[pp]] < q_arr[best, q_head[best]]:
                            best = pp
                if best < 0:
                    s_job[s] = -1
                    clock[s] = INF
                else:
                    hb = q_head[best]
                    size = np.random.exponential(1.0 / nu[best])
                    s_job[s] = q_id[best, hb]
                    clock[s] = t + size
                    if q_start[best, hb] == INF:
                        q_start[best, hb] = t
                        q_size[best, hb] = size
    return prov_of, waited, resp, violations, STATUS_OK
