"""Forman, Ollivier and resistance curvature on graph edges."""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from curvscape import kernels
from curvscape.errors import DegenerateMeasureError, DisconnectedError, InputError
from curvscape.graph import Graph, shortest_path_matrix

KINDS = ("frc", "orc", "rec")
_MEASURE_ALIASES = {
    "uniform": "uniform_1hop",
    "uniform_1hop": "uniform_1hop",
    "rw": "random_walk",
    "random_walk": "random_walk",
}


@dataclass(frozen=True)
class EdgeFunction:
    """Real values attached to an ordered list of edges ``(u, v)`` with ``u < v``."""

    edges: tuple[tuple[int, int], ...]
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if len(vals) != len(self.edges):
            raise ValueError("edges and values differ in length")
        if not np.all(np.isfinite(vals)):
            raise ValueError("edge function values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "edges", tuple((int(u), int(v)) for u, v in self.edges))
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_mapping(cls, mapping: Mapping[tuple[int, int], float]) -> EdgeFunction:
        items = sorted(((min(e), max(e)), float(x)) for e, x in mapping.items())
        return cls(tuple(e for e, _ in items), np.array([x for _, x in items]))

    def as_dict(self) -> dict[tuple[int, int], float]:
        return {e: float(x) for e, x in zip(self.edges, self.values)}

    def __len__(self) -> int:
        return len(self.edges)

    def __getitem__(self, edge: tuple[int, int]) -> float:
        return self.as_dict()[(min(edge), max(edge))]

    def rows(self) -> list[tuple[int, int, float]]:
        return sorted((u, v, float(x)) for (u, v), x in zip(self.edges, self.values))

    def to_csv(self) -> str:
        lines = ["u,v,value"]
        lines.extend(f"{u},{v},{x:.12g}" for u, v, x in self.rows())
        return "\n".join(lines) + "\n"

    def to_json(self) -> list[dict]:
        return [{"u": u, "v": v, "value": x} for u, v, x in self.rows()]


@dataclass(frozen=True)
class NodeMeasure:
    support: np.ndarray
    mass: np.ndarray

    def __post_init__(self):
        if np.any(self.mass <= 0):
            raise ValueError("measure masses must be positive")
        if abs(self.mass.sum() - 1.0) > 1e-12:
            raise ValueError(f"measure masses sum to {self.mass.sum()!r}, not 1")

    @classmethod
    def dirac(cls, v: int) -> NodeMeasure:
        return cls(np.array([v], dtype=np.int64), np.array([1.0]))

    def as_dict(self) -> dict[int, float]:
        return {int(v): float(x) for v, x in zip(self.support, self.mass)}


@dataclass(frozen=True)
class MeasureConfig:
    kind: str = "uniform_1hop"
    m: int = 2
    self_mass: float = 0.0

    def __post_init__(self):
        try:
            object.__setattr__(self, "kind", _MEASURE_ALIASES[self.kind])
        except KeyError:
            raise ValueError(f"unknown measure kind {self.kind!r}") from None
        if int(self.m) != self.m or self.m < 1:
            raise ValueError(f"random-walk horizon must be a positive integer, got {self.m}")
        if not 0.0 <= self.self_mass < 1.0:
            raise ValueError(f"self_mass must lie in [0, 1), got {self.self_mass}")

    def to_json(self) -> dict:
        return {"kind": self.kind, "m": int(self.m), "self_mass": float(self.self_mass)}


@dataclass(frozen=True)
class ResistanceData:
    R: np.ndarray
    p: np.ndarray


# ---------------------------------------------------------------------------
# Forman
# ---------------------------------------------------------------------------


def forman(g: Graph) -> EdgeFunction:
    e = g.edge_array
    return EdgeFunction(g.edges, kernels.forman(g.n, e[:, 0], e[:, 1]))


# ---------------------------------------------------------------------------
# Ollivier
# ---------------------------------------------------------------------------


def _walk_operator(g: Graph, alpha: float) -> np.ndarray:
    adj = g.adjacency.toarray()
    deg = adj.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        P = np.where(deg[:, None] > 0, adj / deg[:, None], 0.0)
    if alpha:
        P = alpha * np.eye(g.n) + (1.0 - alpha) * P
    return P


def _measure_from_row(row: np.ndarray) -> NodeMeasure:
    support = np.flatnonzero(row > 0)
    mass = row[support]
    return NodeMeasure(support.astype(np.int64), mass / mass.sum())


def node_measures(g: Graph, cfg: MeasureConfig, vertices: Iterable[int] | None = None) -> dict[int, NodeMeasure]:
    """Measures for many vertices at once (shares the walk-operator powers)."""
    vertices = range(g.n) if vertices is None else vertices
    vertices = [int(v) for v in vertices]
    for v in vertices:
        if g.degrees[v] == 0:
            raise DegenerateMeasureError(f"vertex {v} is isolated; its measure is undefined")
    out = {}
    if cfg.kind == "uniform_1hop":
        alpha = cfg.self_mass
        for v in vertices:
            nb = g.neighbours[v]
            row = np.zeros(g.n)
            row[list(nb)] = (1.0 - alpha) / len(nb)
            row[v] += alpha
            out[v] = _measure_from_row(row)
        return out

    P = _walk_operator(g, cfg.self_mass)
    step = np.eye(g.n)[vertices]
    acc = np.zeros_like(step)
    for _ in range(int(cfg.m)):
        step = step @ P
        acc += step
    for v, row in zip(vertices, acc):
        out[v] = _measure_from_row(row)
    return out


def node_measure(g: Graph, v: int, cfg: MeasureConfig = MeasureConfig()) -> NodeMeasure:
    return node_measures(g, cfg, [v])[v]


def wasserstein1(mu: NodeMeasure, nu: NodeMeasure, d: np.ndarray) -> float:
    """Exact W1 between two vertex measures under the ground metric ``d``."""
    cost = d[np.ix_(mu.support, nu.support)]
    if not np.all(np.isfinite(cost)):
        raise DisconnectedError("measures have supports in different components")
    if len(mu.support) == 1 or len(nu.support) == 1:
        return float(mu.mass @ cost @ nu.mass)
    return kernels.transport_cost(mu.mass, nu.mass, cost)


def jump(mu: NodeMeasure, v: int, d: np.ndarray) -> float:
    """W1 between the Dirac at ``v`` and ``mu``."""
    return wasserstein1(NodeMeasure.dirac(v), mu, d)


def ollivier_ricci(
    g: Graph,
    cfg: MeasureConfig = MeasureConfig(),
    pairs: Iterable[tuple[int, int]] | None = None,
    dist: np.ndarray | None = None,
) -> EdgeFunction:
    pairs = g.edges if pairs is None else tuple((min(p), max(p)) for p in pairs)
    d = shortest_path_matrix(g) if dist is None else dist
    for i, j in pairs:
        if i == j:
            raise InputError(f"curvature pair ({i}, {j}) repeats a vertex")
        if not math.isfinite(d[i, j]):
            raise DisconnectedError(f"vertices {i} and {j} lie in different components")
    needed = sorted({v for p in pairs for v in p})
    mus = node_measures(g, cfg, needed)
    vals = np.empty(len(pairs))
    for k, (i, j) in enumerate(pairs):
        vals[k] = 1.0 - wasserstein1(mus[i], mus[j], d) / d[i, j]
    return EdgeFunction(pairs, vals)


# ---------------------------------------------------------------------------
# Resistance
# ---------------------------------------------------------------------------


def resistance_data(g: Graph) -> ResistanceData:
    """Effective resistances (unit conductances) and node resistance curvatures."""
    R = np.full((g.n, g.n), np.inf)
    np.fill_diagonal(R, 0.0)
    lap = np.diag(g.degrees.astype(float)) - g.adjacency.toarray()
    _, labels = g.components()
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        if len(idx) == 1:
            continue
        # ground the last vertex of the component
        sub = lap[np.ix_(idx, idx)][:-1, :-1]
        inv = cho_solve(cho_factor(sub, lower=True), np.eye(len(idx) - 1))
        full = np.zeros((len(idx), len(idx)))
        full[:-1, :-1] = inv
        diag = np.diag(full)
        Rc = diag[:, None] + diag[None, :] - 2.0 * full
        np.fill_diagonal(Rc, 0.0)
        R[np.ix_(idx, idx)] = np.maximum(Rc, 0.0)
    adj = g.adjacency.toarray()
    p = 1.0 - 0.5 * np.where(adj > 0, R, 0.0).sum(axis=1)
    return ResistanceData(R, p)


def resistance_curvature(g: Graph, data: ResistanceData | None = None) -> EdgeFunction:
    data = resistance_data(g) if data is None else data
    e = g.edge_array
    if len(e) == 0:
        return EdgeFunction((), np.empty(0))
    i, j = e[:, 0], e[:, 1]
    return EdgeFunction(g.edges, 2.0 * (data.p[i] + data.p[j]) / data.R[i, j])


def curvature(g: Graph, kind: str, cfg: MeasureConfig = MeasureConfig()) -> EdgeFunction:
    if kind == "frc":
        return forman(g)
    if kind == "orc":
        return ollivier_ricci(g, cfg)
    if kind == "rec":
        return resistance_curvature(g)
    raise ValueError(f"unknown curvature kind {kind!r}; expected one of {KINDS}")
