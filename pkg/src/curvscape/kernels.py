"""Hot numeric kernels with a numba path and a pure-numpy path.

Each public function dispatches on :data:`curvscape._accel.USE_NUMBA`. Both
implementations stay importable (``*_numba`` / ``*_numpy``) so tests and the
benchmark can compare them directly.
"""

from __future__ import annotations

import numpy as np

from curvscape import _accel
from curvscape._accel import njit

# Masses below this are treated as exhausted by the transport solver.
MASS_EPS = 1e-13


class TransportError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Exact discrete optimal transport (successive shortest paths)
# ---------------------------------------------------------------------------


def _transport_loops(a, b, cost):
    m = a.shape[0]
    n = b.shape[0]
    nv = m + n + 2
    src = m + n
    snk = m + n + 1
    inf = np.inf

    flow = np.zeros((m, n))
    supply = a.copy()
    demand = b.copy()
    pot = np.zeros(nv)
    dist = np.empty(nv)
    prev = np.empty(nv, dtype=np.int64)
    done = np.empty(nv, dtype=np.bool_)

    max_rounds = 4 * (m + n) * (m + n) + 16
    for _ in range(max_rounds):
        left = 0.0
        for i in range(m):
            if supply[i] > MASS_EPS:
                left += supply[i]
        if left <= MASS_EPS:
            break

        for v in range(nv):
            dist[v] = inf
            prev[v] = -1
            done[v] = False
        dist[src] = 0.0

        while True:
            u = -1
            best = inf
            for v in range(nv):
                if not done[v] and dist[v] < best:
                    best = dist[v]
                    u = v
            if u == -1:
                break
            done[u] = True
            du = dist[u]
            if u == src:
                for i in range(m):
                    if supply[i] > MASS_EPS and not done[i]:
                        nd = du + pot[src] - pot[i]
                        if nd < dist[i]:
                            dist[i] = nd
                            prev[i] = src
            elif u < m:
                for j in range(n):
                    v = m + j
                    if not done[v]:
                        nd = du + cost[u, j] + pot[u] - pot[v]
                        if nd < dist[v]:
                            dist[v] = nd
                            prev[v] = u
            elif u < m + n:
                j = u - m
                for i in range(m):
                    if flow[i, j] > MASS_EPS and not done[i]:
                        nd = du - cost[i, j] + pot[u] - pot[i]
                        if nd < dist[i]:
                            dist[i] = nd
                            prev[i] = u
                if demand[j] > MASS_EPS and not done[snk]:
                    nd = du + pot[u] - pot[snk]
                    if nd < dist[snk]:
                        dist[snk] = nd
                        prev[snk] = u

        if dist[snk] == inf:
            break
        d_snk = dist[snk]
        for v in range(nv):
            pot[v] += min(dist[v], d_snk)

        end = prev[snk]
        delta = demand[end - m]
        v = end
        while True:
            u = prev[v]
            if u == src:
                delta = min(delta, supply[v])
                break
            if v < m:
                delta = min(delta, flow[v, u - m])
            v = u

        demand[end - m] -= delta
        v = end
        while True:
            u = prev[v]
            if u == src:
                supply[v] -= delta
                break
            if u < m:
                flow[u, v - m] += delta
            else:
                flow[v, u - m] -= delta
            v = u
    else:
        raise TransportError("transport solver did not converge")

    total = 0.0
    for i in range(m):
        for j in range(n):
            if flow[i, j] > 0.0:
                total += flow[i, j] * cost[i, j]
    return total


transport_cost_numba = njit(_transport_loops)


def transport_cost_numpy(a, b, cost):
    """Successive-shortest-path transport with numpy-vectorised relaxations."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    cost = np.asarray(cost, dtype=np.float64)
    m, n = cost.shape
    src, snk = m + n, m + n + 1
    nv = m + n + 2
    right = slice(m, m + n)

    flow = np.zeros((m, n))
    supply = a.copy()
    demand = b.copy()
    pot = np.zeros(nv)

    for _ in range(4 * (m + n) ** 2 + 16):
        if supply[supply > MASS_EPS].sum() <= MASS_EPS:
            break
        dist = np.full(nv, np.inf)
        prev = np.full(nv, -1, dtype=np.int64)
        done = np.zeros(nv, dtype=bool)
        dist[src] = 0.0
        while True:
            masked = np.where(done, np.inf, dist)
            u = int(np.argmin(masked))
            if not np.isfinite(masked[u]):
                break
            done[u] = True
            du = dist[u]
            if u == src:
                idx = np.flatnonzero((supply > MASS_EPS) & ~done[:m])
                cand = du + pot[src] - pot[idx]
                better = cand < dist[idx]
                dist[idx[better]] = cand[better]
                prev[idx[better]] = src
            elif u < m:
                cand = du + cost[u] + pot[u] - pot[right]
                better = (cand < dist[right]) & ~done[right]
                dist[right][better] = cand[better]
                prev[right][better] = u
            elif u < m + n:
                j = u - m
                cand = du - cost[:, j] + pot[u] - pot[:m]
                better = (flow[:, j] > MASS_EPS) & ~done[:m] & (cand < dist[:m])
                dist[:m][better] = cand[better]
                prev[:m][better] = u
                if demand[j] > MASS_EPS and not done[snk]:
                    nd = du + pot[u] - pot[snk]
                    if nd < dist[snk]:
                        dist[snk] = nd
                        prev[snk] = u
        if not np.isfinite(dist[snk]):
            break
        pot += np.minimum(dist, dist[snk])

        path = [snk]
        while path[-1] != src:
            path.append(int(prev[path[-1]]))
        path.reverse()  # src, i0, ..., end, snk
        end = path[-2]
        delta = min(demand[end - m], supply[path[1]])
        for u, v in zip(path[1:-2], path[2:-1]):
            if v < m:
                delta = min(delta, flow[v, u - m])
        demand[end - m] -= delta
        supply[path[1]] -= delta
        for u, v in zip(path[1:-2], path[2:-1]):
            if u < m:
                flow[u, v - m] += delta
            else:
                flow[v, u - m] -= delta
    else:
        raise TransportError("transport solver did not converge")

    return float(np.sum(np.where(flow > 0.0, flow * cost, 0.0)))


def transport_cost(a, b, cost) -> float:
    """Exact earth mover's cost between mass vectors ``a`` and ``b``.

    ``a`` and ``b`` must carry the same total mass; ``cost`` is the
    ``len(a) x len(b)`` ground-cost matrix with finite entries.
    """
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    cost = np.ascontiguousarray(cost, dtype=np.float64)
    if _accel.USE_NUMBA:
        return float(transport_cost_numba(a, b, cost))
    return transport_cost_numpy(a, b, cost)


# ---------------------------------------------------------------------------
# Union-find sweep over a sorted edge filtration
# ---------------------------------------------------------------------------


def _sweep_loops(n, us, vs, vals):
    parent = np.arange(n)
    birth = np.full(n, np.inf)
    present = np.zeros(n, dtype=np.bool_)
    n_edges = us.shape[0]
    fin_birth = np.empty(n)
    fin_death = np.empty(n)
    cycles = np.empty(n_edges)
    nf = 0
    nc = 0
    for k in range(n_edges):
        u = us[k]
        v = vs[k]
        w = vals[k]
        if not present[u]:
            present[u] = True
            birth[u] = w
        if not present[v]:
            present[v] = True
            birth[v] = w
        ru = u
        while parent[ru] != ru:
            parent[ru] = parent[parent[ru]]
            ru = parent[ru]
        rv = v
        while parent[rv] != rv:
            parent[rv] = parent[parent[rv]]
            rv = parent[rv]
        if ru == rv:
            cycles[nc] = w
            nc += 1
            continue
        # elder rule: the later-born root dies; ties kill the larger id
        if birth[ru] > birth[rv] or (birth[ru] == birth[rv] and ru > rv):
            young, old = ru, rv
        else:
            young, old = rv, ru
        fin_birth[nf] = birth[young]
        fin_death[nf] = w
        nf += 1
        parent[young] = old

    n_ess = 0
    ess = np.empty(n)
    for x in range(n):
        if present[x] and parent[x] == x:
            ess[n_ess] = birth[x]
            n_ess += 1
    return fin_birth[:nf], fin_death[:nf], ess[:n_ess], cycles[:nc]


sweep_numba = njit(_sweep_loops)
sweep_numpy = _sweep_loops


def sweep(n: int, us, vs, vals):
    """Run the elder-rule union-find sweep over edges already in filtration order.

    Returns ``(finite_births, finite_deaths, essential_births, cycle_births)``.
    """
    us = np.ascontiguousarray(us, dtype=np.int64)
    vs = np.ascontiguousarray(vs, dtype=np.int64)
    vals = np.ascontiguousarray(vals, dtype=np.float64)
    if _accel.USE_NUMBA:
        return sweep_numba(n, us, vs, vals)
    return sweep_numpy(n, us, vs, vals)


# ---------------------------------------------------------------------------
# Landscape sampling
# ---------------------------------------------------------------------------


def _landscape_loops(births, deaths, ts, depth):
    res = ts.shape[0]
    out = np.zeros((depth, res))
    for r in range(res):
        t = ts[r]
        for p in range(births.shape[0]):
            val = min(t - births[p], deaths[p] - t)
            if val <= 0.0 or val <= out[depth - 1, r]:
                continue
            k = depth - 1
            while k > 0 and out[k - 1, r] < val:
                out[k, r] = out[k - 1, r]
                k -= 1
            out[k, r] = val
    return out


landscape_numba = njit(_landscape_loops)


def landscape_numpy(births, deaths, ts, depth):
    births = np.asarray(births, dtype=np.float64)
    deaths = np.asarray(deaths, dtype=np.float64)
    out = np.zeros((depth, ts.shape[0]))
    if births.size == 0:
        return out
    tents = np.minimum(ts[None, :] - births[:, None], deaths[:, None] - ts[None, :])
    np.maximum(tents, 0.0, out=tents)
    tents = -np.sort(-tents, axis=0)
    k = min(depth, tents.shape[0])
    out[:k] = tents[:k]
    return out


def landscape(births, deaths, ts, depth: int) -> np.ndarray:
    """Sample the first ``depth`` landscape functions of finite intervals on ``ts``."""
    births = np.ascontiguousarray(births, dtype=np.float64)
    deaths = np.ascontiguousarray(deaths, dtype=np.float64)
    ts = np.ascontiguousarray(ts, dtype=np.float64)
    if _accel.USE_NUMBA:
        return landscape_numba(births, deaths, ts, depth)
    return landscape_numpy(births, deaths, ts, depth)


# ---------------------------------------------------------------------------
# Forman curvature
# ---------------------------------------------------------------------------


def _forman_loops(indptr, indices, us, vs):
    out = np.empty(us.shape[0])
    for k in range(us.shape[0]):
        u = us[k]
        v = vs[k]
        a, a_end = indptr[u], indptr[u + 1]
        b, b_end = indptr[v], indptr[v + 1]
        common = 0
        while a < a_end and b < b_end:
            x = indices[a]
            y = indices[b]
            if x == y:
                common += 1
                a += 1
                b += 1
            elif x < y:
                a += 1
            else:
                b += 1
        du = indptr[u + 1] - indptr[u]
        dv = indptr[v + 1] - indptr[v]
        out[k] = 4.0 - du - dv + 3.0 * common
    return out


forman_numba = njit(_forman_loops)


def forman_numpy(n, us, vs):
    adj = np.zeros((n, n), dtype=np.int64)
    adj[us, vs] = 1
    adj[vs, us] = 1
    deg = adj.sum(axis=1)
    common = np.einsum("ij,ij->i", adj[us], adj[vs])
    return (4 - deg[us] - deg[vs] + 3 * common).astype(np.float64)


def forman(n: int, us, vs) -> np.ndarray:
    """Forman curvature per edge for the simple graph with edge arrays ``us, vs``."""
    us = np.ascontiguousarray(us, dtype=np.int64)
    vs = np.ascontiguousarray(vs, dtype=np.int64)
    if not _accel.USE_NUMBA:
        return forman_numpy(n, us, vs)
    if us.size == 0:
        return np.empty(0)
    heads = np.concatenate([us, vs])
    tails = np.concatenate([vs, us])
    order = np.lexsort((tails, heads))
    indices = tails[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(heads, minlength=n), out=indptr[1:])
    return forman_numba(indptr, indices, us, vs)
