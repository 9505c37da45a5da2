"""Persistence landscapes, their averages and distances between graph sets."""

from __future__ import annotations

import hashlib
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from functools import cached_property, partial

import numpy as np

from curvscape import kernels
from curvscape._parallel import parallel_map
from curvscape.curvature import KINDS, MeasureConfig, curvature
from curvscape.errors import ComputationError, InputError
from curvscape.graph import Graph, GraphSet
from curvscape.persistence import PersistenceDiagram, diagram

MODES = ("norm_of_diff", "alg2")
# None keeps every level; essential classes keep deep levels far from zero.
DEFAULT_DEPTH: int | None = None


def parse_p(p) -> float:
    if isinstance(p, str):
        key = p.strip().lower()
        if key in ("inf", "sup", "max", "infinity"):
            return math.inf
        p = float(key)
    p = float(p)
    if p not in (1.0, 2.0, math.inf):
        raise ValueError(f"norm order must be 1, 2 or inf, got {p}")
    return p


@dataclass(frozen=True)
class LandscapeGrid:
    """Sampling grid over ``[lo, hi + cap_padding]``.

    ``lo`` and ``hi`` bracket the finite diagram values; essential classes
    die at ``top = hi + cap_padding``.
    """

    lo: float
    hi: float
    resolution: int = 1000
    cap_padding: float | None = None

    def __post_init__(self):
        if self.resolution < 2:
            raise ValueError("grid resolution must be at least 2")
        if self.hi < self.lo:
            raise ValueError(f"grid has hi < lo ({self.hi} < {self.lo})")
        if self.cap_padding is None:
            object.__setattr__(self, "cap_padding", max(1.0, self.hi - self.lo))
        if self.cap_padding <= 0:
            raise ValueError("cap_padding must be positive")

    @property
    def top(self) -> float:
        return self.hi + self.cap_padding

    @property
    def ts(self) -> np.ndarray:
        return np.linspace(self.lo, self.top, self.resolution)

    def to_json(self) -> dict:
        return {
            "lo": self.lo,
            "hi": self.top,
            "res": self.resolution,
            "finite_hi": self.hi,
            "cap_padding": self.cap_padding,
        }

    @classmethod
    def covering(
        cls,
        diagrams: Sequence[PersistenceDiagram],
        resolution: int = 1000,
        cap_padding: float | None = None,
    ) -> LandscapeGrid:
        vals = [d.finite_values() for d in diagrams]
        vals = np.concatenate(vals) if vals else np.empty(0)
        if vals.size == 0:
            return cls(0.0, 0.0, resolution, cap_padding)
        return cls(float(vals.min()), float(vals.max()), resolution, cap_padding)


@dataclass(frozen=True)
class PersistenceLandscape:
    """Sampled landscape functions: ``functions[k][j]`` is level ``j+1`` in dimension ``k``."""

    grid: LandscapeGrid
    functions: tuple[np.ndarray, np.ndarray]

    def __post_init__(self):
        funcs = []
        for f in self.functions:
            f = np.asarray(f, dtype=np.float64).reshape(-1, self.grid.resolution)
            f.setflags(write=False)
            funcs.append(f)
        object.__setattr__(self, "functions", tuple(funcs))

    @cached_property
    def digest(self) -> bytes:
        h = hashlib.blake2b(digest_size=16)
        h.update(repr(self.grid).encode())
        for f in self.functions:
            h.update(np.asarray(f.shape, dtype=np.int64).tobytes())
            h.update(f.tobytes())
        return h.digest()

    def to_json(self) -> list[dict]:
        return [
            {"dim": k, "grid": self.grid.to_json(), "functions": f.tolist()}
            for k, f in enumerate(self.functions)
        ]


def to_landscape(
    d: PersistenceDiagram, grid: LandscapeGrid, depth: int | None = DEFAULT_DEPTH
) -> PersistenceLandscape:
    vals = d.finite_values()
    tol = 1e-12 * max(1.0, abs(grid.lo), abs(grid.hi))
    if vals.size and (vals.min() < grid.lo - tol or vals.max() > grid.hi + tol):
        raise InputError(
            f"grid [{grid.lo}, {grid.hi}] does not cover diagram values "
            f"[{vals.min()}, {vals.max()}]"
        )
    ts = grid.ts
    funcs = []
    for k in (0, 1):
        pairs = d[k]
        deaths = np.where(np.isinf(pairs[:, 1]), grid.top, pairs[:, 1])
        levels = len(pairs) if depth is None else min(depth, len(pairs))
        funcs.append(kernels.landscape(pairs[:, 0], deaths, ts, levels) if levels else np.zeros((0, len(ts))))
    return PersistenceLandscape(grid, tuple(funcs))


def _union_grid(ls: Sequence[PersistenceLandscape]) -> LandscapeGrid:
    grids = {L.grid for L in ls}
    if len(grids) == 1:
        return next(iter(grids))
    lo = min(g.lo for g in grids)
    hi = max(g.hi for g in grids)
    top = max(g.top for g in grids)
    return LandscapeGrid(lo, hi, max(g.resolution for g in grids), top - hi)


def resample(L: PersistenceLandscape, grid: LandscapeGrid) -> PersistenceLandscape:
    if L.grid == grid:
        return L
    old, new = L.grid.ts, grid.ts
    funcs = tuple(
        np.array([np.interp(new, old, row, left=0.0, right=0.0) for row in f]).reshape(-1, len(new))
        for f in L.functions
    )
    return PersistenceLandscape(grid, funcs)


def average(ls: Sequence[PersistenceLandscape]) -> PersistenceLandscape:
    """Pointwise mean of landscapes, padding missing levels with zeros.

    Summation runs in digest order, so the result is bit-identical for any
    ordering of ``ls``.
    """
    if not ls:
        raise ValueError("cannot average an empty list of landscapes")
    grid = _union_grid(ls)
    ls = sorted((resample(L, grid) for L in ls), key=lambda L: L.digest)
    funcs = []
    for k in (0, 1):
        acc = np.zeros((max(L.functions[k].shape[0] for L in ls), grid.resolution))
        for L in ls:
            f = L.functions[k]
            acc[: f.shape[0]] += f
        funcs.append(acc / len(ls))
    return PersistenceLandscape(grid, tuple(funcs))


def _norm(funcs: Sequence[np.ndarray], ts: np.ndarray, p: float) -> float:
    if p == math.inf:
        return float(max((np.abs(f).max() for f in funcs if f.size), default=0.0))
    total = sum(float(np.trapezoid(np.abs(f) ** p, ts, axis=-1).sum()) for f in funcs if f.size)
    return total ** (1.0 / p)


def landscape_norm(L: PersistenceLandscape, p=math.inf) -> float:
    return _norm(L.functions, L.grid.ts, parse_p(p))


def _padded_diff(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    levels = max(a.shape[0], b.shape[0])
    out = np.zeros((levels, a.shape[1]))
    out[: a.shape[0]] += a
    out[: b.shape[0]] -= b
    return out


def landscape_distance(
    A: PersistenceLandscape, B: PersistenceLandscape, p=math.inf, mode: str = "norm_of_diff"
) -> float:
    """Distance between two landscapes.

    ``norm_of_diff`` is the Lp norm of ``A - B``. ``alg2`` takes, per homology
    dimension, the absolute difference of the two sup-norms and returns the
    Euclidean norm of that vector (``p`` is ignored).
    """
    grid = _union_grid([A, B])
    A, B = resample(A, grid), resample(B, grid)
    if mode == "norm_of_diff":
        diff = [_padded_diff(a, b) for a, b in zip(A.functions, B.functions)]
        return _norm(diff, grid.ts, parse_p(p))
    if mode == "alg2":
        vec = [
            abs(_norm([a], grid.ts, math.inf) - _norm([b], grid.ts, math.inf))
            for a, b in zip(A.functions, B.functions)
        ]
        return float(np.linalg.norm(vec))
    raise ValueError(f"unknown distance mode {mode!r}; expected one of {MODES}")


# ---------------------------------------------------------------------------
# Set-level pipeline
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PipelineConfig:
    kind: str = "orc"
    measure: MeasureConfig = field(default_factory=MeasureConfig)
    resolution: int = 1000
    cap_padding: float | None = None
    p: float = math.inf
    mode: str = "norm_of_diff"
    depth: int | None = DEFAULT_DEPTH

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown curvature kind {self.kind!r}; expected one of {KINDS}")
        if self.mode not in MODES:
            raise ValueError(f"unknown distance mode {self.mode!r}; expected one of {MODES}")
        if self.resolution < 2:
            raise ValueError("resolution must be at least 2")
        if self.depth is not None and self.depth < 1:
            raise ValueError("depth must be at least 1")
        if self.cap_padding is not None and self.cap_padding <= 0:
            raise ValueError("cap_padding must be positive")
        object.__setattr__(self, "p", parse_p(self.p))

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "measure": self.measure.to_json(),
            "resolution": self.resolution,
            "cap_padding": self.cap_padding,
            "p": "inf" if self.p == math.inf else self.p,
            "mode": self.mode,
            "depth": self.depth,
        }


@dataclass(frozen=True)
class DistanceReport:
    distance: float
    config: PipelineConfig
    sizes: tuple[int, int]
    grid: LandscapeGrid

    def to_json(self) -> dict:
        return {
            "distance": self.distance,
            "sizes": list(self.sizes),
            "grid": self.grid.to_json(),
            "config": self.config.to_json(),
        }


def graph_diagram(g: Graph, cfg: PipelineConfig) -> PersistenceDiagram:
    return diagram(g, curvature(g, cfg.kind, cfg.measure))


def _indexed_diagram(item, cfg):
    idx, g = item
    try:
        return graph_diagram(g, cfg)
    except Exception as exc:
        raise ComputationError(f"graph {idx}: {exc}") from exc


def diagrams_for(graphs: Sequence[Graph], cfg: PipelineConfig, workers: int = 1) -> list[PersistenceDiagram]:
    """Diagrams per graph; a failure names the index of the offending graph."""
    return parallel_map(partial(_indexed_diagram, cfg=cfg), list(enumerate(graphs)), workers)


def landscapes_for(
    diagrams: Sequence[PersistenceDiagram], cfg: PipelineConfig
) -> tuple[LandscapeGrid, list[PersistenceLandscape]]:
    grid = LandscapeGrid.covering(diagrams, cfg.resolution, cfg.cap_padding)
    return grid, [to_landscape(d, grid, cfg.depth) for d in diagrams]


def set_distance(
    A: GraphSet | Sequence[Graph],
    B: GraphSet | Sequence[Graph],
    cfg: PipelineConfig = PipelineConfig(),
    workers: int = 1,
) -> DistanceReport:
    """Distance between the average landscapes of two graph sets on a shared grid."""
    A, B = list(A), list(B)
    if not A or not B:
        raise ValueError("both graph sets must be non-empty")
    diagrams = diagrams_for(A + B, cfg, workers)
    grid, ls = landscapes_for(diagrams, cfg)
    dist = landscape_distance(average(ls[: len(A)]), average(ls[len(A) :]), cfg.p, cfg.mode)
    return DistanceReport(dist, cfg, (len(A), len(B)), grid)
