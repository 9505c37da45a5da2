"""Distribution-level statistics and experiment harnesses."""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from functools import partial
from itertools import combinations

import numpy as np
from scipy.stats import wasserstein_distance

from curvscape._parallel import parallel_map
from curvscape.curvature import (
    MeasureConfig,
    curvature,
    forman,
    jump,
    node_measures,
    ollivier_ricci,
    resistance_curvature,
    resistance_data,
    wasserstein1,
)
from curvscape.errors import UndefinedCorrelationError
from curvscape.graph import (
    Graph,
    PerturbationSpec,
    generate_community,
    graphon_sizes,
    is_bridge,
    perturb,
    sample_graphon,
    shortest_path_matrix,
)
from curvscape.landscape import (
    PipelineConfig,
    average,
    diagrams_for,
    landscape_distance,
    landscapes_for,
)
from curvscape.persistence import bottleneck_all, diagram

# Slack for floating-point comparisons in the bound checkers.
BOUND_TOL = 1e-9


def derive_seed(*parts: int) -> int:
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1, np.uint64)[0])


# ---------------------------------------------------------------------------
# Permutation testing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PermutationTestResult:
    observed_distance: float
    permuted_distances: tuple[float, ...]
    fraction_higher: float
    n_permutations: int
    seed: int

    def to_json(self) -> dict:
        return {
            "observed_distance": self.observed_distance,
            "fraction_higher": self.fraction_higher,
            "n_permutations": self.n_permutations,
            "seed": self.seed,
            "permuted_distances": list(self.permuted_distances),
        }


def permutation_test(
    A: Sequence[Graph],
    B: Sequence[Graph],
    cfg: PipelineConfig = PipelineConfig(),
    n_perm: int = 200,
    seed: int = 0,
    workers: int = 1,
) -> PermutationTestResult:
    """Two-sample permutation test on average-landscape distances.

    Landscapes are computed once per graph; each permutation only re-averages.
    """
    A, B = list(A), list(B)
    if n_perm < 1:
        raise ValueError(f"need at least one permutation, got {n_perm}")
    if len(A) < 2 or len(B) < 2:
        raise ValueError("each sample needs at least two graphs")
    _, ls = landscapes_for(diagrams_for(A + B, cfg, workers), cfg)
    na = len(A)

    def dist(idx):
        return landscape_distance(
            average([ls[i] for i in idx[:na]]), average([ls[i] for i in idx[na:]]), cfg.p, cfg.mode
        )

    observed = dist(np.arange(len(ls)))
    rng = np.random.default_rng(seed)
    perms = [dist(rng.permutation(len(ls))) for _ in range(n_perm)]
    higher = sum(d > observed for d in perms)
    return PermutationTestResult(observed, tuple(perms), higher / n_perm, n_perm, seed)


# ---------------------------------------------------------------------------
# Perturbation sweeps
# ---------------------------------------------------------------------------


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape:
        raise ValueError("pearson needs equal-length inputs")
    if len(x) < 2:
        raise UndefinedCorrelationError("pearson needs at least two points")
    x = x - x.mean()
    y = y - y.mean()
    sx, sy = math.sqrt(x @ x), math.sqrt(y @ y)
    if sx == 0.0 or sy == 0.0:
        raise UndefinedCorrelationError("pearson is undefined for zero-variance data")
    return float(np.clip((x @ y) / (sx * sy), -1.0, 1.0))


@dataclass(frozen=True)
class PerturbationReport:
    mode: str
    fractions: tuple[float, ...]
    distances: tuple[float, ...]
    pearson: float
    max_relative_change: tuple[float, ...]
    config: PipelineConfig

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "pearson": self.pearson,
            "fractions": list(self.fractions),
            "distances": list(self.distances),
            "max_relative_change": list(self.max_relative_change),
            "config": self.config.to_json(),
        }

    def to_csv(self) -> str:
        lines = ["fraction,distance,max_relative_change"]
        for f, d, c in zip(self.fractions, self.distances, self.max_relative_change):
            lines.append(f"{f:.12g},{d:.12g},{c:.12g}")
        return "\n".join(lines) + "\n"


def _perturbed_curvature(job, cfg: PipelineConfig):
    g, spec = job
    h = perturb(g, spec)
    return h, curvature(h, cfg.kind, cfg.measure)


def _relative_change(g: Graph, kappa, kappa2) -> float:
    """max |kappa' - kappa| / std(kappa) over edges present in both graphs."""
    if len(kappa) < 2:
        return 0.0
    sigma = float(np.std(kappa.values))
    if sigma == 0.0:
        return 0.0
    new = kappa2.as_dict()
    diffs = [abs(new[e] - x) for e, x in zip(kappa.edges, kappa.values) if e in new]
    return max(diffs, default=0.0) / sigma


def perturbation_sweep(
    base: Sequence[Graph],
    mode: str,
    fractions: Sequence[float],
    cfg: PipelineConfig = PipelineConfig(),
    seed: int = 0,
    preserve_connectivity: bool = False,
    workers: int = 1,
) -> PerturbationReport:
    """Distance between perturbed and original sets as the perturbed fraction grows."""
    base = list(base)
    fractions = [float(f) for f in fractions]
    if any(b < a for a, b in zip(fractions, fractions[1:])):
        raise ValueError("fractions must be ascending")
    base_kappa = [curvature(g, cfg.kind, cfg.measure) for g in base]
    base_diagrams = [diagram(g, k) for g, k in zip(base, base_kappa)]

    distances, rel = [], []
    for fi, frac in enumerate(fractions):
        jobs = [
            (g, PerturbationSpec(mode, frac, derive_seed(seed, fi, gi), preserve_connectivity))
            for gi, g in enumerate(base)
        ]
        out = parallel_map(partial(_perturbed_curvature, cfg=cfg), jobs, workers)
        pert_diagrams = [diagram(h, k) for h, k in out]
        _, ls = landscapes_for(pert_diagrams + base_diagrams, cfg)
        n = len(base)
        distances.append(landscape_distance(average(ls[:n]), average(ls[n:]), cfg.p, cfg.mode))
        rel.append(
            max(_relative_change(g, k, k2) for g, k, (_, k2) in zip(base, base_kappa, out))
        )
    try:
        r = pearson(fractions, distances)
    except UndefinedCorrelationError as exc:
        raise UndefinedCorrelationError(f"{exc} (distances: {distances})") from exc
    return PerturbationReport(mode, tuple(fractions), tuple(distances), r, tuple(rel), cfg)


# ---------------------------------------------------------------------------
# Pairwise distinguishability
# ---------------------------------------------------------------------------


def raw_distance(a: np.ndarray, b: np.ndarray) -> float:
    """1-D Wasserstein distance between two multisets of curvature values."""
    if len(a) == 0 or len(b) == 0:
        return 0.0 if len(a) == len(b) else math.inf
    return float(wasserstein_distance(a, b))


def pairwise_distances(
    graphs: Sequence[Graph], method: str, cfg: PipelineConfig = PipelineConfig()
) -> list[tuple[int, int, float]]:
    graphs = list(graphs)
    kappas = [curvature(g, cfg.kind, cfg.measure) for g in graphs]
    if method == "raw_hist":
        feats = [k.values for k in kappas]
        metric = raw_distance
    elif method == "bottleneck":
        feats = [diagram(g, k) for g, k in zip(graphs, kappas)]
        metric = bottleneck_all
    else:
        raise ValueError(f"unknown method {method!r}; expected raw_hist or bottleneck")
    return [(i, j, metric(feats[i], feats[j])) for i, j in combinations(range(len(graphs)), 2)]


def pairwise_distinguish(
    graphs: Sequence[Graph],
    method: str,
    cfg: PipelineConfig = PipelineConfig(),
    tol: float = 1e-8,
) -> float:
    """Fraction of graph pairs whose distance exceeds ``tol``."""
    if len(graphs) < 2:
        raise ValueError("need at least two graphs")
    dists = pairwise_distances(graphs, method, cfg)
    return sum(d > tol for _, _, d in dists) / len(dists)


# ---------------------------------------------------------------------------
# Clustering
# ---------------------------------------------------------------------------


def _kmeans(X: np.ndarray, k: int, rng: np.random.Generator, iters: int = 100) -> np.ndarray:
    centers = [int(rng.integers(len(X)))]
    gap = np.linalg.norm(X - X[centers[0]], axis=1)
    for _ in range(1, k):
        nxt = int(np.argmax(gap))
        centers.append(nxt)
        gap = np.minimum(gap, np.linalg.norm(X - X[nxt], axis=1))
    C = X[centers].copy()
    labels = np.full(len(X), -1)
    for _ in range(iters):
        d = np.linalg.norm(X[:, None, :] - C[None, :, :], axis=2)
        new = np.argmin(d, axis=1)
        if np.array_equal(new, labels):
            break
        labels = new
        for c in range(k):
            members = X[labels == c]
            if len(members):
                C[c] = members.mean(axis=0)
    return labels


def spectral_cluster(dist: np.ndarray, k: int, seed: int = 0) -> np.ndarray:
    """Normalised spectral clustering of a precomputed distance matrix."""
    dist = np.asarray(dist, dtype=float)
    n = dist.shape[0]
    if dist.shape != (n, n):
        raise ValueError("distance matrix must be square")
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    off = dist[~np.eye(n, dtype=bool)]
    sigma = float(np.median(off)) if off.size else 1.0
    if not sigma > 0:
        sigma = 1.0
    W = np.exp(-(dist**2) / (2.0 * sigma**2))
    np.fill_diagonal(W, 0.0)
    deg = W.sum(axis=1)
    inv_sqrt = np.where(deg > 0, 1.0 / np.sqrt(np.where(deg > 0, deg, 1.0)), 0.0)
    M = inv_sqrt[:, None] * W * inv_sqrt[None, :]
    _, vecs = np.linalg.eigh(M)
    U = vecs[:, ::-1][:, :k]
    norms = np.linalg.norm(U, axis=1, keepdims=True)
    U = U / np.where(norms > 0, norms, 1.0)
    return _kmeans(U, k, np.random.default_rng(seed))


def adjusted_rand_index(a: Sequence, b: Sequence) -> float:
    if len(a) != len(b):
        raise ValueError("label lists differ in length")
    if len(a) < 2:
        raise ValueError("ARI needs at least two items")
    _, ai = np.unique(np.asarray(a), return_inverse=True)
    _, bi = np.unique(np.asarray(b), return_inverse=True)
    table = np.zeros((ai.max() + 1, bi.max() + 1), dtype=np.int64)
    np.add.at(table, (ai, bi), 1)

    def comb2(x):
        return (x * (x - 1) // 2).sum()

    index = comb2(table)
    rows, cols = comb2(table.sum(axis=1)), comb2(table.sum(axis=0))
    total = len(a) * (len(a) - 1) // 2
    expected = rows * cols / total
    best = (rows + cols) / 2
    if best == expected:
        return 1.0
    return float((index - expected) / (best - expected))


def landscape_distance_matrix(
    graphs: Sequence[Graph], cfg: PipelineConfig = PipelineConfig(), workers: int = 1
) -> np.ndarray:
    """Pairwise distances between per-graph landscapes on one shared grid."""
    _, ls = landscapes_for(diagrams_for(list(graphs), cfg, workers), cfg)
    n = len(ls)
    D = np.zeros((n, n))
    for i, j in combinations(range(n), 2):
        D[i, j] = D[j, i] = landscape_distance(ls[i], ls[j], cfg.p, cfg.mode)
    return D


def graphon_set(which: str, count: int, seed: int, lo: int = 9, hi: int = 37) -> list[Graph]:
    sizes = graphon_sizes(count, derive_seed(seed, 0), lo, hi)
    return [sample_graphon(which, n, derive_seed(seed, 1, i)) for i, n in enumerate(sizes)]


def community_set(count: int, n: int, seed: int) -> list[Graph]:
    return [generate_community(n, derive_seed(seed, i)) for i in range(count)]


# ---------------------------------------------------------------------------
# Stability-bound checkers
# ---------------------------------------------------------------------------


@dataclass
class BoundCheckReport:
    theorem: str
    violations: int = 0
    samples: int = 0
    worst_margin: float = math.inf
    auxiliaries: dict = field(default_factory=dict)

    def record(self, lower: float, value: float, upper: float) -> None:
        self.samples += 1
        margin = min(value - lower, upper - value)
        self.worst_margin = min(self.worst_margin, margin)
        if margin < -BOUND_TOL:
            self.violations += 1

    def to_json(self) -> dict:
        return {
            "theorem": self.theorem,
            "violations": self.violations,
            "samples": self.samples,
            "worst_margin": self.worst_margin,
            "auxiliaries": self.auxiliaries,
        }


def _modes(mode: str, trials: int) -> list[str]:
    if mode == "both":
        return ["add" if t % 2 == 0 else "delete" for t in range(trials)]
    if mode in ("add", "delete"):
        return [mode] * trials
    raise ValueError(f"unknown mode {mode!r}; expected add, delete or both")


def _theorem(prefix: str, mode: str) -> str:
    return {"add": f"{prefix}_add", "delete": f"{prefix}_del", "both": prefix}[mode]


def single_edge_perturbation(g: Graph, mode: str, rng: np.random.Generator) -> Graph | None:
    """Add a random within-component non-edge or delete a random non-bridge.

    Returns None when no such edge exists; the component count never changes.
    """
    if mode == "add":
        _, labels = g.components()
        iu, ju = np.triu_indices(g.n, k=1)
        cand = [
            (a, b)
            for a, b in zip(iu.tolist(), ju.tolist())
            if labels[a] == labels[b] and (a, b) not in g.edge_set
        ]
        if not cand:
            return None
        return g.with_edges(g.edges + (cand[int(rng.integers(len(cand)))],))
    order = rng.permutation(g.m)
    adj = [set(nb) for nb in g.neighbours]
    for k in order:
        u, v = g.edges[k]
        if not is_bridge(g.n, adj, u, v):
            return g.with_edges(e for i, e in enumerate(g.edges) if i != k)
    return None


def check_forman_bounds(g: Graph, trials: int = 50, seed: int = 0, mode: str = "both") -> BoundCheckReport:
    """Single-edge perturbations: additions move FRC within [-1, +2], deletions within [-2, +1]."""
    report = BoundCheckReport(_theorem("forman", mode))
    rng = np.random.default_rng(seed)
    before = forman(g).as_dict()
    skipped = 0
    for m in _modes(mode, trials):
        h = single_edge_perturbation(g, m, rng)
        if h is None:
            skipped += 1
            continue
        lo, hi = (-1.0, 2.0) if m == "add" else (-2.0, 1.0)
        after = forman(h).as_dict()
        for e, x in before.items():
            if e in after:
                report.record(x + lo, after[e], x + hi)
    report.auxiliaries["skipped_trials"] = skipped
    return report


def orc_bound_terms(g: Graph, h: Graph, cfg: MeasureConfig = MeasureConfig()):
    """Bracket ``(lower, ORC', upper)`` for every edge of ``g`` surviving in ``h``.

    Returns the per-edge triples, ``W'_max`` and the new jump probabilities.
    """
    d2 = shortest_path_matrix(h)
    active = [v for v in range(g.n) if g.degrees[v] > 0 and h.degrees[v] > 0]
    mu = node_measures(g, cfg, active)
    mu2 = node_measures(h, cfg, active)
    w_max = max((wasserstein1(mu[x], mu2[x], d2) for x in active), default=0.0)
    jumps = {v: jump(mu2[v], v, d2) for v in active}
    surviving = [e for e in g.edges if h.has_edge(*e)]
    orc2 = ollivier_ricci(h, cfg, surviving, dist=d2).as_dict()
    out = []
    for i, j in surviving:
        dij = d2[i, j]
        lower = 1.0 - (2.0 * w_max + wasserstein1(mu[i], mu[j], d2)) / dij
        upper = (jumps[i] + jumps[j]) / dij
        out.append(((i, j), lower, orc2[(i, j)], upper))
    return out, w_max, jumps


def check_orc_bounds(
    g: Graph,
    cfg: MeasureConfig = MeasureConfig(),
    trials: int = 50,
    seed: int = 0,
    mode: str = "both",
) -> BoundCheckReport:
    """Ollivier-Ricci curvature after a perturbation stays within the jump/W'_max bracket."""
    report = BoundCheckReport("orc")
    rng = np.random.default_rng(seed)
    w_maxes, jump_maxes = [], []
    for m in _modes(mode, trials):
        h = single_edge_perturbation(g, m, rng)
        if h is None or not h.is_connected():
            continue
        terms, w_max, jumps = orc_bound_terms(g, h, cfg)
        for _, lower, value, upper in terms:
            report.record(lower, value, upper)
        w_maxes.append(w_max)
        jump_maxes.append(max(jumps.values(), default=0.0))
    report.auxiliaries.update(w_max=w_maxes, jump_max=jump_maxes, mode=mode)
    return report


def normalized_adjacency_lambda2(g: Graph) -> float:
    """Second-largest eigenvalue of D^{1/2} A D^{1/2} with D the inverse-degree diagonal."""
    deg = g.degrees.astype(float)
    s = np.where(deg > 0, 1.0 / np.sqrt(np.where(deg > 0, deg, 1.0)), 0.0)
    N = s[:, None] * g.adjacency.toarray() * s[None, :]
    vals = np.linalg.eigvalsh(N)
    return float(vals[-2]) if len(vals) >= 2 else float(vals[-1])


def resistance_deltas(g: Graph) -> dict:
    data = resistance_data(g)
    deg = g.degrees.astype(float)
    off = ~np.eye(g.n, dtype=bool)
    floor = 0.5 * (1.0 / (deg[:, None] + 1.0) + 1.0 / (deg[None, :] + 1.0))
    delta_add = float(np.max((data.R - floor)[off]))
    lam2 = normalized_adjacency_lambda2(g)
    delta_del = 2.0 / (1.0 - lam2) - float(np.min(data.R[off]))
    return {"delta_add": delta_add, "delta_del": delta_del, "lambda2": lam2, "data": data}


def rec_bound_terms(g: Graph, h: Graph, mode: str, deltas: dict | None = None):
    """Per surviving edge: (edge, REC, REC', allowed |change|) for one perturbation."""
    deltas = resistance_deltas(g) if deltas is None else deltas
    data = deltas["data"]
    before = resistance_curvature(g, data).as_dict()
    after = resistance_curvature(h).as_dict()
    deg = g.degrees
    out = []
    for (i, j), x in before.items():
        if (i, j) not in after:
            continue
        R = data.R[i, j]
        dsum = deg[i] + deg[j]
        if mode == "add":
            da = deltas["delta_add"]
            allowed = da * dsum / (R - da) if R > da else math.inf
        else:
            dd = deltas["delta_del"]
            allowed = (2.0 / R * (2.0 * R + dd) * (data.p[i] + data.p[j]) - dd * dsum) / (R + dd)
        out.append(((i, j), x, after[(i, j)], allowed))
    return out


def check_resistance_bounds(g: Graph, trials: int = 50, seed: int = 0, mode: str = "both") -> BoundCheckReport:
    """Additions never lower REC, deletions never raise it, and both respect the Delta bounds.

    Two samples are recorded per surviving edge: the monotonicity direction
    and the quantitative bound on |REC' - REC|.
    """
    report = BoundCheckReport(_theorem("rec", mode))
    rng = np.random.default_rng(seed)
    deltas = resistance_deltas(g)
    counts = {"monotonicity_violations": 0, "bound_violations": 0}
    for m in _modes(mode, trials):
        h = single_edge_perturbation(g, m, rng)
        if h is None or not h.is_connected():
            continue
        for _, x, y, allowed in rec_bound_terms(g, h, m, deltas):
            before = report.violations
            if m == "add":
                report.record(x, y, math.inf)
            else:
                report.record(-math.inf, y, x)
            counts["monotonicity_violations"] += report.violations - before
            before = report.violations
            report.record(-allowed, y - x, allowed)
            counts["bound_violations"] += report.violations - before
    report.auxiliaries.update(counts)
    report.auxiliaries.update(
        delta_add=deltas["delta_add"], delta_del=deltas["delta_del"], lambda2=deltas["lambda2"]
    )
    return report
