"""Graph container, edge-list IO, random generators and perturbations."""

from __future__ import annotations

import json
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

from curvscape.errors import ExhaustionError, InputError

GRAPHONS = {
    "W1": lambda u, v: u * v,
    "W2": lambda u, v: np.exp(-np.maximum(u, v) ** 0.75),
    "W3": lambda u, v: np.exp(-0.5 * (np.minimum(u, v) + np.sqrt(u) + np.sqrt(v))),
    "W4": lambda u, v: np.abs(u - v),
}


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on vertices ``0..n-1``.

    ``edges`` is stored canonically: each pair as ``(u, v)`` with ``u < v``,
    deduplicated and sorted lexicographically.
    """

    n: int
    edges: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        if self.n < 0:
            raise ValueError(f"vertex count must be non-negative, got {self.n}")
        canon = set()
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise InputError(f"self-loop at vertex {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise InputError(f"edge ({u}, {v}) out of range for n={self.n}")
            canon.add((u, v) if u < v else (v, u))
        object.__setattr__(self, "edges", tuple(sorted(canon)))

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def edge_array(self) -> np.ndarray:
        return np.array(self.edges, dtype=np.int64).reshape(-1, 2)

    @cached_property
    def adjacency(self) -> csr_matrix:
        e = self.edge_array
        data = np.ones(2 * len(e))
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        return csr_matrix((data, (rows, cols)), shape=(self.n, self.n))

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.bincount(self.edge_array.ravel(), minlength=self.n)

    @cached_property
    def neighbours(self) -> tuple[tuple[int, ...], ...]:
        adj = self.adjacency
        return tuple(
            tuple(int(x) for x in adj.indices[adj.indptr[i] : adj.indptr[i + 1]])
            for i in range(self.n)
        )

    @cached_property
    def edge_set(self) -> frozenset[tuple[int, int]]:
        return frozenset(self.edges)

    def has_edge(self, u: int, v: int) -> bool:
        return (min(u, v), max(u, v)) in self.edge_set

    def components(self) -> tuple[int, np.ndarray]:
        """Number of connected components and a per-vertex label array."""
        if self.n == 0:
            return 0, np.empty(0, dtype=np.int64)
        k, labels = connected_components(self.adjacency, directed=False)
        return int(k), labels

    def is_connected(self) -> bool:
        return self.components()[0] <= 1

    def with_edges(self, edges: Iterable[tuple[int, int]]) -> Graph:
        return Graph(self.n, tuple(edges))

    def relabel(self, perm: Sequence[int]) -> Graph:
        """Return the graph with vertex ``i`` renamed to ``perm[i]``."""
        return Graph(self.n, tuple((perm[u], perm[v]) for u, v in self.edges))

    def to_json(self) -> dict:
        return {"n": self.n, "edges": [list(e) for e in self.edges]}


@dataclass(frozen=True)
class GraphSet:
    graphs: tuple[Graph, ...]
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "graphs", tuple(self.graphs))
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(self.labels))
            if len(self.labels) != len(self.graphs):
                raise ValueError("labels and graphs differ in length")

    def __len__(self) -> int:
        return len(self.graphs)

    def __iter__(self):
        return iter(self.graphs)

    def __getitem__(self, i):
        return self.graphs[i]


@dataclass(frozen=True)
class PerturbationSpec:
    mode: str
    fraction: float
    seed: int = 0
    preserve_connectivity: bool = False

    def __post_init__(self):
        if self.mode not in ("add", "delete"):
            raise ValueError(f"unknown perturbation mode {self.mode!r}")
        if not 0.0 <= self.fraction < 1.0:
            raise ValueError(f"fraction must lie in [0, 1), got {self.fraction}")


# ---------------------------------------------------------------------------
# IO
# ---------------------------------------------------------------------------


def load_edge_list(text: str) -> Graph:
    """Parse the whitespace-separated ``u v`` edge-list format.

    Lines starting with ``#`` (and trailing ``#`` comments) are ignored. A line
    ``n <count>`` fixes the vertex count, which allows isolated vertices.
    """
    declared = None
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "n":
            if len(parts) != 2 or not parts[1].isdigit():
                raise InputError(f"malformed header {raw.strip()!r}", lineno)
            declared = int(parts[1])
            continue
        if len(parts) != 2 or not (parts[0].isdigit() and parts[1].isdigit()):
            raise InputError(f"expected 'u v', got {raw.strip()!r}", lineno)
        u, v = int(parts[0]), int(parts[1])
        if u == v:
            raise InputError(f"self-loop at vertex {u}", lineno)
        pairs.append((u, v))
    top = 1 + max((max(p) for p in pairs), default=-1)
    if declared is None:
        n = top
    elif declared < top:
        raise InputError(f"header declares n={declared} but ids reach {top - 1}")
    else:
        n = declared
    return Graph(n, tuple(pairs))


def dump_edge_list(g: Graph) -> str:
    lines = [f"n {g.n}"]
    lines.extend(f"{u} {v}" for u, v in g.edges)
    return "\n".join(lines) + "\n"


def graph_from_json(obj: dict) -> Graph:
    try:
        return Graph(int(obj["n"]), tuple((int(u), int(v)) for u, v in obj["edges"]))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"bad graph object: {exc}") from exc


def load_graph(path: str | Path) -> Graph:
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".json":
        return graph_from_json(json.loads(text))
    return load_edge_list(text)


def load_graph_set(path: str | Path) -> GraphSet:
    """Load a directory of ``.edges`` files (sorted by name) or a JSON-lines file."""
    path = Path(path)
    if path.is_dir():
        files = sorted(path.glob("*.edges"))
        graphs = [load_edge_list(f.read_text()) for f in files]
        labels = [f.stem for f in files]
    else:
        graphs, labels = [], []
        for lineno, line in enumerate(path.read_text().splitlines(), start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InputError(f"invalid JSON: {exc.msg}", lineno) from exc
            graphs.append(graph_from_json(obj))
            labels.append(str(obj.get("label", lineno)))
    if not graphs:
        raise InputError(f"no graphs found in {path}")
    return GraphSet(tuple(graphs), tuple(labels))


def save_graph_set(gs: GraphSet, path: str | Path) -> None:
    path = Path(path)
    if path.suffix == ".jsonl":
        with path.open("w") as fh:
            for g in gs:
                fh.write(json.dumps(g.to_json()) + "\n")
        return
    path.mkdir(parents=True, exist_ok=True)
    labels = gs.labels or tuple(f"g{i:04d}" for i in range(len(gs)))
    for label, g in zip(labels, gs):
        (path / f"{label}.edges").write_text(dump_edge_list(g))


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------


def _bernoulli_pairs(n: int, probs, rng: np.random.Generator) -> Graph:
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(iu.size) < probs
    return Graph(n, tuple(zip(iu[keep].tolist(), ju[keep].tolist())))


def generate_er(n: int, p: float, seed: int) -> Graph:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"edge probability must lie in [0, 1], got {p}")
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    return _bernoulli_pairs(n, p, np.random.default_rng(seed))


def sample_graphon(which: str, n: int, seed: int, latent=None) -> Graph:
    """Sample an ``n``-vertex graph from one of the graphons ``W1..W4``.

    ``latent`` overrides the uniform vertex positions (used by tests).
    """
    if which not in GRAPHONS:
        raise ValueError(f"unknown graphon {which!r}; expected one of {sorted(GRAPHONS)}")
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    rng = np.random.default_rng(seed)
    u = rng.random(n) if latent is None else np.asarray(latent, dtype=float)
    if u.shape != (n,):
        raise ValueError("latent positions must have length n")
    iu, ju = np.triu_indices(n, k=1)
    probs = np.clip(GRAPHONS[which](u[iu], u[ju]), 0.0, 1.0)
    return _bernoulli_pairs(n, probs, rng)


def graphon_sizes(count: int, seed: int, lo: int = 9, hi: int = 37) -> list[int]:
    """Vertex counts drawn uniformly from ``lo..hi`` inclusive."""
    rng = np.random.default_rng(seed)
    return rng.integers(lo, hi + 1, size=count).tolist()


def generate_community(n: int, seed: int, p_in: float = 0.7, p_out: float = 0.05) -> Graph:
    """Two equal blocks with intra-block probability ``p_in`` and inter ``p_out``."""
    if n < 4 or n % 2:
        raise ValueError(f"community graphs need an even n >= 4, got {n}")
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    half = n // 2
    same = (iu < half) == (ju < half)
    probs = np.where(same, p_in, p_out)
    return _bernoulli_pairs(n, probs, rng)


def _rook(k: int) -> Graph:
    edges = []
    for a in range(k * k):
        for b in range(a + 1, k * k):
            if a // k == b // k or a % k == b % k:
                edges.append((a, b))
    return Graph(k * k, tuple(edges))


def _shrikhande() -> Graph:
    steps = {(1, 0), (3, 0), (0, 1), (0, 3), (1, 1), (3, 3)}
    edges = []
    for a in range(16):
        for b in range(a + 1, 16):
            d = ((b // 4 - a // 4) % 4, (b % 4 - a % 4) % 4)
            if d in steps:
                edges.append((a, b))
    return Graph(16, tuple(edges))


def _cycle(n: int) -> Graph:
    return Graph(n, tuple((i, (i + 1) % n) for i in range(n)))


def _complete(n: int) -> Graph:
    return Graph(n, tuple((i, j) for i in range(n) for j in range(i + 1, n)))


NAMED_GRAPHS = {
    "k2": lambda: _complete(2),
    "k3": lambda: _complete(3),
    "k4": lambda: _complete(4),
    "c4": lambda: _cycle(4),
    "c6": lambda: _cycle(6),
    "path3": lambda: Graph(3, ((0, 1), (1, 2))),
    "star4": lambda: Graph(5, tuple((0, i) for i in range(1, 5))),
    "rook4x4": lambda: _rook(4),
    "shrikhande": _shrikhande,
}


def named_graph(name: str) -> Graph:
    try:
        return NAMED_GRAPHS[name]()
    except KeyError:
        raise KeyError(f"unknown graph {name!r}; known: {', '.join(NAMED_GRAPHS)}") from None


# ---------------------------------------------------------------------------
# Perturbation and metric
# ---------------------------------------------------------------------------


def is_bridge(n: int, adj: list[set[int]], u: int, v: int) -> bool:
    """True if removing ``(u, v)`` disconnects ``u`` from ``v``."""
    seen = {u}
    stack = [u]
    while stack:
        x = stack.pop()
        for y in adj[x]:
            if x == u and y == v:
                continue
            if y == v:
                return False
            if y not in seen:
                seen.add(y)
                stack.append(y)
    return True


def perturb(g: Graph, spec: PerturbationSpec) -> Graph:
    """Add or delete ``round(fraction * |E|)`` uniformly chosen edges."""
    k = int(math.floor(spec.fraction * g.m + 0.5))
    if k == 0:
        return g
    rng = np.random.default_rng(spec.seed)

    if spec.mode == "add":
        iu, ju = np.triu_indices(g.n, k=1)
        cand = [(a, b) for a, b in zip(iu.tolist(), ju.tolist()) if (a, b) not in g.edge_set]
        if spec.preserve_connectivity:
            labels = g.components()[1]
            cand = [(a, b) for a, b in cand if labels[a] == labels[b]]
        if len(cand) < k:
            raise ExhaustionError(
                f"add: requested {k} new edges but only {len(cand)} candidates exist"
            )
        pick = rng.choice(len(cand), size=k, replace=False)
        return g.with_edges(g.edges + tuple(cand[i] for i in sorted(pick)))

    if not spec.preserve_connectivity:
        pick = set(rng.choice(g.m, size=k, replace=False).tolist())
        return g.with_edges(e for i, e in enumerate(g.edges) if i not in pick)

    adj = [set(nb) for nb in g.neighbours]
    pool = list(g.edges)
    removed = 0
    attempts = 0
    while removed < k:
        if not pool or attempts >= 100 * k:
            raise ExhaustionError(
                f"delete: removed {removed} of {k} edges before running out of non-bridges"
            )
        attempts += 1
        idx = int(rng.integers(len(pool)))
        u, v = pool[idx]
        pool[idx] = pool[-1]
        pool.pop()
        # a bridge stays a bridge under further deletions, so drop it for good
        if is_bridge(g.n, adj, u, v):
            continue
        adj[u].discard(v)
        adj[v].discard(u)
        removed += 1
    return g.with_edges((u, v) for u in range(g.n) for v in adj[u] if u < v)


def shortest_path_matrix(g: Graph) -> np.ndarray:
    """Hop distances; unreachable pairs are ``inf``."""
    if g.n == 0:
        return np.zeros((0, 0))
    return shortest_path(g.adjacency, method="D", directed=False, unweighted=True)
