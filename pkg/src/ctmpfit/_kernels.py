"""Numba kernels for the event loop and the trajectory replay.

Both kernels take the graph in CSR form and update per-node infected
neighbour counts incrementally, touching only the flipped node and its
neighbours.
"""
import numpy as np
from numba import njit

RUNNING = 0
ABSORBED = 1
TIME_UP = 2


@njit(cache=True)
def gillespie_chunk(x, m, rates, indptr, indices, mu, infect, t, t_max,
                    max_events, u, out_t, out_node, out_state):
    """Advance the chain by at most ``max_events`` jumps.

    ``infect[j]`` is the infection rate of a susceptible node with ``j``
    infected neighbours. ``u`` holds two uniforms per jump (holding time,
    event choice). Returns ``(events_done, t, status)``; ``x``, ``m`` and
    ``rates`` are updated in place.
    """
    n = x.shape[0]
    done = 0
    status = RUNNING
    while done < max_events:
        total = 0.0
        for k in range(n):
            total += rates[k]
        if total <= 0.0:
            status = ABSORBED
            break
        dt = -np.log1p(-u[2 * done]) / total
        t_new = t + dt
        if t_new <= t:
            t_new = np.nextafter(t, np.inf)
        if t_new > t_max:
            status = TIME_UP
            break
        target = u[2 * done + 1] * total
        acc = 0.0
        node = -1
        for k in range(n):
            if rates[k] > 0.0:
                node = k
                acc += rates[k]
                if acc > target:
                    break
        t = t_new
        if x[node] == 1:
            x[node] = 0
            delta_m = -1
        else:
            x[node] = 1
            delta_m = 1
        rates[node] = mu if x[node] == 1 else infect[m[node]]
        for p in range(indptr[node], indptr[node + 1]):
            v = indices[p]
            m[v] += delta_m
            if x[v] == 0:
                rates[v] = infect[m[v]]
        out_t[done] = t
        out_node[done] = node
        out_state[done] = x[node]
        done += 1
    return done, t, status


@njit(cache=True)
def replay_features(x0, nodes, indptr, indices, dmax, contact):
    """Feature row of the configuration held during each sojourn.

    Row ``k`` describes the state after ``k`` events; there are
    ``len(nodes) + 1`` rows. Events are assumed to flip their node; the
    trajectory reader checks that.
    """
    n = x0.shape[0]
    n_ev = nodes.shape[0]
    width = 3 if contact else dmax + 2
    rows = np.zeros((n_ev + 1, width), dtype=np.int32)
    x = x0.copy()
    m = np.zeros(n, dtype=np.int64)
    for i in range(n):
        if x[i] == 1:
            for p in range(indptr[i], indptr[i + 1]):
                m[indices[p]] += 1
    s = 0
    m_total = 0
    hist = np.zeros(dmax + 1, dtype=np.int64)
    for i in range(n):
        if x[i] == 0:
            s += 1
            m_total += m[i]
            hist[m[i]] += 1
    for k in range(n_ev + 1):
        rows[k, 0] = n - s
        if contact:
            rows[k, 1] = s
            rows[k, 2] = m_total
        else:
            for j in range(dmax + 1):
                rows[k, 1 + j] = hist[j]
        if k == n_ev:
            break
        v = nodes[k]
        if x[v] == 0:
            # infection: v leaves the susceptible set
            x[v] = 1
            s -= 1
            m_total -= m[v]
            hist[m[v]] -= 1
            for p in range(indptr[v], indptr[v + 1]):
                u = indices[p]
                if x[u] == 0:
                    hist[m[u]] -= 1
                    hist[m[u] + 1] += 1
                    m_total += 1
                m[u] += 1
        else:
            x[v] = 0
            s += 1
            m_total += m[v]
            hist[m[v]] += 1
            for p in range(indptr[v], indptr[v + 1]):
                u = indices[p]
                if x[u] == 0:
                    hist[m[u]] -= 1
                    hist[m[u] - 1] += 1
                    m_total -= 1
                m[u] -= 1
    return rows


@njit(cache=True)
def first_bad_flip(x0, nodes, states):
    """Index of the first event that does not flip its node, or -1."""
    x = x0.copy()
    for k in range(nodes.shape[0]):
        v = nodes[k]
        if states[k] == x[v]:
            return k
        x[v] = states[k]
    return -1
