"""Sublevel edge filtrations, 0/1-dimensional persistence and bottleneck distance."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, maximum_bipartite_matching

from curvscape import kernels
from curvscape.curvature import EdgeFunction
from curvscape.errors import InputError
from curvscape.graph import Graph


@dataclass(frozen=True)
class Filtration:
    n: int
    steps: tuple[tuple[int, int], ...]
    values: np.ndarray
    vertex_entry: dict[int, float]


@dataclass(frozen=True)
class PersistenceDiagram:
    """Birth/death pairs for components (``dim0``) and cycles (``dim1``).

    Both are ``(k, 2)`` float arrays; essential classes have death ``inf``.
    """

    dim0: np.ndarray
    dim1: np.ndarray

    def __post_init__(self):
        for name in ("dim0", "dim1"):
            arr = np.asarray(getattr(self, name), dtype=np.float64).reshape(-1, 2)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __getitem__(self, dim: int) -> np.ndarray:
        if dim == 0:
            return self.dim0
        if dim == 1:
            return self.dim1
        raise IndexError(f"no homology dimension {dim}")

    def alive(self, t: float) -> tuple[int, int]:
        """Number of classes alive at threshold ``t`` in each dimension."""
        return tuple(
            int(np.sum((d[:, 0] <= t) & (t < d[:, 1]))) for d in (self.dim0, self.dim1)
        )

    def finite_values(self) -> np.ndarray:
        vals = np.concatenate([self.dim0.ravel(), self.dim1.ravel()])
        return vals[np.isfinite(vals)]

    def to_json(self) -> dict:
        def enc(arr):
            return [[float(b), "inf" if math.isinf(d) else float(d)] for b, d in arr]

        return {"dim0": enc(self.dim0), "dim1": enc(self.dim1)}

    @classmethod
    def from_json(cls, obj: dict) -> PersistenceDiagram:
        def dec(rows):
            return np.array([[float(b), float(d)] for b, d in rows], dtype=np.float64).reshape(-1, 2)

        try:
            return cls(dec(obj["dim0"]), dec(obj["dim1"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"bad diagram object: {exc}") from exc


def build_filtration(g: Graph, f: EdgeFunction) -> Filtration:
    """Order edges by value, breaking ties lexicographically on ``(u, v)``."""
    fmap = f.as_dict()
    missing = [e for e in g.edges if e not in fmap]
    extra = sorted(set(fmap) - g.edge_set)
    if missing or extra:
        raise InputError(
            f"edge function domain mismatch: missing {missing[:10]}, unexpected {extra[:10]}"
        )
    e = g.edge_array
    vals = np.array([fmap[x] for x in g.edges], dtype=np.float64)
    if len(e):
        order = np.lexsort((e[:, 1], e[:, 0], vals))
    else:
        order = np.empty(0, dtype=np.int64)
    entry: dict[int, float] = {}
    for k in order:
        for x in g.edges[k]:
            entry.setdefault(x, float(vals[k]))
    vals = vals[order]
    vals.setflags(write=False)
    return Filtration(g.n, tuple(g.edges[k] for k in order), vals, entry)


def persistence_diagram(filt: Filtration) -> PersistenceDiagram:
    steps = np.array(filt.steps, dtype=np.int64).reshape(-1, 2)
    fb, fd, ess, cyc = kernels.sweep(filt.n, steps[:, 0], steps[:, 1], filt.values)
    dim0 = np.concatenate(
        [np.column_stack([ess, np.full(len(ess), np.inf)]), np.column_stack([fb, fd])]
    )
    dim1 = np.column_stack([cyc, np.full(len(cyc), np.inf)])
    return PersistenceDiagram(dim0, dim1)


def diagram(g: Graph, f: EdgeFunction) -> PersistenceDiagram:
    return persistence_diagram(build_filtration(g, f))


def betti_oracle(g: Graph, f: EdgeFunction, t: float) -> tuple[int, int]:
    """Betti numbers of the sublevel graph ``{e : f(e) <= t}`` computed from scratch."""
    kept = [e for e, x in f.as_dict().items() if x <= t]
    verts = sorted({v for e in kept for v in e})
    if not verts:
        return 0, 0
    index = {v: i for i, v in enumerate(verts)}
    rows = [index[u] for u, _ in kept]
    cols = [index[v] for _, v in kept]
    adj = csr_matrix((np.ones(len(kept)), (rows, cols)), shape=(len(verts), len(verts)))
    b0, _ = connected_components(adj, directed=False)
    return int(b0), len(kept) - len(verts) + int(b0)


# ---------------------------------------------------------------------------
# Bottleneck distance
# ---------------------------------------------------------------------------


def _perfect_matching(p: np.ndarray, q: np.ndarray, r: float) -> bool:
    """Can finite diagrams ``p`` and ``q`` be matched with every cost <= r?"""
    np_, nq = len(p), len(q)
    size = np_ + nq
    linf = np.maximum(
        np.abs(p[:, None, 0] - q[None, :, 0]), np.abs(p[:, None, 1] - q[None, :, 1])
    )
    half_p = (p[:, 1] - p[:, 0]) / 2.0
    half_q = (q[:, 1] - q[:, 0]) / 2.0
    # rows: p points then diagonal slots for q; cols: q points then slots for p
    block = np.zeros((size, size), dtype=bool)
    block[:np_, :nq] = linf <= r
    block[np.arange(np_), nq + np.arange(np_)] = half_p <= r
    block[np_ + np.arange(nq), np.arange(nq)] = half_q <= r
    block[np_:, nq:] = True
    match = maximum_bipartite_matching(csr_matrix(block), perm_type="column")
    return bool(np.all(match >= 0))


def _finite_bottleneck(p: np.ndarray, q: np.ndarray) -> float:
    p = p[p[:, 1] > p[:, 0]]
    q = q[q[:, 1] > q[:, 0]]
    if len(p) == 0 and len(q) == 0:
        return 0.0
    cand = [(p[:, 1] - p[:, 0]) / 2.0, (q[:, 1] - q[:, 0]) / 2.0]
    if len(p) and len(q):
        cand.append(
            np.maximum(
                np.abs(p[:, None, 0] - q[None, :, 0]), np.abs(p[:, None, 1] - q[None, :, 1])
            ).ravel()
        )
    cand = np.unique(np.concatenate(cand))
    lo, hi = 0, len(cand) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if _perfect_matching(p, q, cand[mid]):
            hi = mid
        else:
            lo = mid + 1
    return float(cand[lo])


def bottleneck(a: PersistenceDiagram, b: PersistenceDiagram, dim: int) -> float:
    """Bottleneck distance in one homology dimension.

    Essential classes are matched only with essential classes (cost = birth
    difference). If the two diagrams have different numbers of essential
    classes the result is ``inf``; finite parts alone never produce ``inf``.
    """
    da, db = a[dim], b[dim]
    ess_a = np.sort(da[np.isinf(da[:, 1]), 0])
    ess_b = np.sort(db[np.isinf(db[:, 1]), 0])
    if len(ess_a) != len(ess_b):
        return math.inf
    ess = float(np.max(np.abs(ess_a - ess_b))) if len(ess_a) else 0.0
    fin = _finite_bottleneck(da[np.isfinite(da[:, 1])], db[np.isfinite(db[:, 1])])
    return max(ess, fin)


def bottleneck_all(a: PersistenceDiagram, b: PersistenceDiagram) -> float:
    return max(bottleneck(a, b, 0), bottleneck(a, b, 1))


def diagram_bound_upper(f: EdgeFunction, g: EdgeFunction) -> float:
    """Upper bound ``max(|max f - min g|, |max g - min f|)`` on the diagram distance."""
    fv, gv = f.values, g.values
    if len(fv) == 0 or len(gv) == 0:
        raise ValueError("bounds need non-empty edge functions")
    return float(max(abs(fv.max() - gv.min()), abs(gv.max() - fv.min())))


def diagram_bound_lower(f: EdgeFunction, g: EdgeFunction) -> float:
    """``max_x min_y |f(x) - g(y)|``: the best sup-distance over maps from f's edges to g's."""
    fv, gv = f.values, np.sort(g.values)
    if len(fv) == 0 or len(gv) == 0:
        raise ValueError("bounds need non-empty edge functions")
    pos = np.clip(np.searchsorted(gv, fv), 1, len(gv) - 1) if len(gv) > 1 else np.zeros(len(fv), int)
    near = np.minimum(np.abs(fv - gv[pos]), np.abs(fv - gv[np.maximum(pos - 1, 0)]))
    return float(near.max())
