"""Command-line interface: ``curvscape <command> [options]``.

Exit codes: 0 success, 1 usage error, 2 input/parse error, 3 computation error.
Errors are reported as one JSON line on stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from itertools import combinations
from pathlib import Path

import numpy as np

from curvscape import stats
from curvscape._parallel import resolve_workers
from curvscape.curvature import KINDS, MeasureConfig, curvature
from curvscape.errors import ComputationError, InputError
from curvscape.graph import (
    GRAPHONS,
    GraphSet,
    dump_edge_list,
    generate_community,
    generate_er,
    load_graph,
    load_graph_set,
    named_graph,
    sample_graphon,
    save_graph_set,
)
from curvscape.landscape import (
    MODES,
    PipelineConfig,
    average,
    diagrams_for,
    landscapes_for,
    set_distance,
)

EXPERIMENTS = ("perturb", "distinguish", "graphon", "bounds")
DEFAULT_FRACTIONS = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9"

# Run-configuration fields, in echo order, with their defaults.
RUN_DEFAULTS = {
    "kind": "orc",
    "measure": "uniform",
    "rw_steps": 2,
    "self_mass": 0.0,
    "resolution": 1000,
    "cap_padding": None,
    "p": "inf",
    "mode": "norm_of_diff",
    "depth": None,
    "seed": 0,
    "workers": None,
    "format": "json",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------


def _clean(obj):
    """Round floats to 12 significant digits and spell non-finite values."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return float(f"{x:.12g}")
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2) + "\n"


def _fmt(x: float) -> str:
    return "inf" if math.isinf(x) else f"{x:.12g}"


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


def _read_config(path: str) -> dict:
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"config {path}: invalid JSON: {exc.msg}", exc.lineno) from exc
    if not isinstance(obj, dict):
        raise InputError(f"config {path}: expected a JSON object")
    if isinstance(obj.get("measure"), dict):
        m = obj.pop("measure")
        obj["measure"] = m.get("kind", RUN_DEFAULTS["measure"])
        if "m" in m:
            obj["rw_steps"] = m["m"]
        if "self_mass" in m:
            obj["self_mass"] = m["self_mass"]
    unknown = sorted(set(obj) - set(RUN_DEFAULTS))
    if unknown:
        raise UsageError(f"config {path}: unknown keys {unknown}")
    return obj


def run_config(args) -> dict:
    """Defaults, then the --config file, then explicit flags."""
    cfg = dict(RUN_DEFAULTS)
    if args.config:
        cfg.update(_read_config(args.config))
    for key in RUN_DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    cfg["workers"] = resolve_workers(cfg["workers"])
    if cfg["format"] not in ("json", "csv"):
        raise UsageError(f"unknown format {cfg['format']!r}")
    return cfg


def pipeline(cfg: dict) -> PipelineConfig:
    try:
        measure = MeasureConfig(cfg["measure"], int(cfg["rw_steps"]), float(cfg["self_mass"]))
        return PipelineConfig(
            kind=cfg["kind"],
            measure=measure,
            resolution=int(cfg["resolution"]),
            cap_padding=None if cfg["cap_padding"] is None else float(cfg["cap_padding"]),
            p=cfg["p"],
            mode=cfg["mode"],
            depth=None if cfg["depth"] is None else int(cfg["depth"]),
        )
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from exc


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_curvature(args, cfg):
    pc = pipeline(cfg)
    g = load_graph(args.graph)
    kappa = curvature(g, pc.kind, pc.measure)
    if cfg["format"] == "csv":
        return kappa.to_csv()
    return dumps({"config": pc.to_json(), "edges": kappa.to_json()})


def cmd_diagram(args, cfg):
    pc = pipeline(cfg)
    g = load_graph(args.graph)
    d = diagrams_for([g], pc)[0]
    if cfg["format"] == "csv":
        lines = ["dim,birth,death"]
        for k in (0, 1):
            lines.extend(f"{k},{_fmt(b)},{_fmt(x)}" for b, x in d[k])
        return "\n".join(lines) + "\n"
    return dumps({"config": pc.to_json(), "diagram": d.to_json()})


def _graphs_from(path: str):
    p = Path(path)
    if p.is_dir() or p.suffix == ".jsonl":
        return list(load_graph_set(p))
    return [load_graph(p)]


def cmd_landscape(args, cfg):
    pc = pipeline(cfg)
    graphs = _graphs_from(args.graphs)
    _, ls = landscapes_for(diagrams_for(graphs, pc, cfg["workers"]), pc)
    L = average(ls)
    if cfg["format"] == "csv":
        ts = L.grid.ts
        lines = ["dim,level,t,value"]
        for k, f in enumerate(L.functions):
            for j, row in enumerate(f, start=1):
                lines.extend(f"{k},{j},{_fmt(t)},{_fmt(x)}" for t, x in zip(ts, row))
        return "\n".join(lines) + "\n"
    return dumps({"config": pc.to_json(), "graphs": len(graphs), "landscape": L.to_json()})


def cmd_compare(args, cfg):
    pc = pipeline(cfg)
    A, B = list(load_graph_set(args.set_a)), list(load_graph_set(args.set_b))
    report = set_distance(A, B, pc, cfg["workers"]).to_json()
    if args.permutations:
        test = stats.permutation_test(A, B, pc, args.permutations, cfg["seed"], cfg["workers"])
        report["permutation_test"] = test.to_json()
    if cfg["format"] == "csv":
        line = f"distance\n{_fmt(report['distance'])}\n"
        if args.permutations:
            line = f"distance,fraction_higher\n{_fmt(report['distance'])},{_fmt(test.fraction_higher)}\n"
        return line
    return dumps(report)


def _generate(args, seed):
    args = argparse.Namespace(**{**vars(args), "n": args.n or 20})
    if args.model == "er":
        return generate_er(args.n, args.edge_p, seed)
    if args.model == "community":
        return generate_community(args.n, seed)
    return sample_graphon(args.graphon, args.n, seed)


def cmd_generate(args, cfg):
    if args.model == "named":
        if not args.name:
            raise UsageError("generate named needs --name")
        try:
            g = named_graph(args.name)
        except KeyError as exc:
            raise UsageError(str(exc.args[0])) from exc
        return dumps(g.to_json()) if cfg["format"] == "json" else dump_edge_list(g)
    seed = cfg["seed"]
    if args.count is None:
        g = _generate(args, seed)
        return dumps(g.to_json()) if cfg["format"] == "json" else dump_edge_list(g)
    if args.model == "graphon" and args.n is None:
        sizes = stats.graphon_sizes(args.count, stats.derive_seed(seed, 0))
    else:
        sizes = [args.n] * args.count
    graphs = [
        _generate(argparse.Namespace(**{**vars(args), "n": n}), stats.derive_seed(seed, 1, i))
        for i, n in enumerate(sizes)
    ]
    gs = GraphSet(tuple(graphs), tuple(f"g{i:04d}" for i in range(len(graphs))))
    if not args.out:
        return "".join(json.dumps(g.to_json()) + "\n" for g in gs)
    save_graph_set(gs, args.out)
    sys.stdout.write(dumps({"written": args.out, "graphs": len(gs)}))
    return None


# --- experiments ----------------------------------------------------------


def _parse_list(text: str, conv=str):
    try:
        return [conv(x.strip()) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"bad list {text!r}: {exc}") from exc


def _exp_perturb(args, cfg, pc):
    if args.graphs:
        base = _graphs_from(args.graphs)
    else:
        base = stats.community_set(args.count, args.n or 20, cfg["seed"])
    fractions = _parse_list(args.fractions, float)
    mode = args.perturbation or "add"
    rep = stats.perturbation_sweep(
        base, mode, fractions, pc, cfg["seed"], args.preserve_connectivity, cfg["workers"]
    )
    body = rep.to_json()
    files = {f"perturb_{mode}.json": dumps(body), f"perturb_{mode}.csv": rep.to_csv()}
    return body, files, f"perturb {mode}: pearson {_fmt(rep.pearson)}"


def _named_or_set(text: str):
    if Path(text).exists():
        return _graphs_from(text)
    try:
        return [named_graph(x) for x in _parse_list(text)]
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from exc


def _exp_distinguish(args, cfg, pc):
    graphs = _named_or_set(args.graphs or "rook4x4,shrikhande")
    if len(graphs) < 2:
        raise UsageError("distinguish needs at least two graphs")
    dists = stats.pairwise_distances(graphs, args.method, pc)
    rate = sum(d > args.tol for *_, d in dists) / len(dists)
    body = {
        "method": args.method,
        "success_rate": rate,
        "tol": args.tol,
        "pairs": [{"i": i, "j": j, "distance": d} for i, j, d in dists],
        "config": pc.to_json(),
    }
    csv = "i,j,distance\n" + "".join(f"{i},{j},{_fmt(d)}\n" for i, j, d in dists)
    return body, {"distinguish.json": dumps(body), "distinguish.csv": csv}, (
        f"distinguish {args.method}: success rate {_fmt(rate)}"
    )


def _exp_graphon(args, cfg, pc):
    names = _parse_list(args.graphons)
    bad = [w for w in names if w not in GRAPHONS]
    if bad or len(names) < 2:
        raise UsageError(f"need at least two graphons from {sorted(GRAPHONS)}, got {names}")
    seed = cfg["seed"]
    sets = {w: stats.graphon_set(w, args.count, stats.derive_seed(seed, k)) for k, w in enumerate(names)}
    tests = []
    for a, b in combinations(names, 2):
        t = stats.permutation_test(sets[a], sets[b], pc, args.permutations, seed, cfg["workers"])
        tests.append({"a": a, "b": b, **t.to_json()})
    graphs = [g for w in names for g in sets[w]]
    truth = [k for k, w in enumerate(names) for _ in sets[w]]
    D = stats.landscape_distance_matrix(graphs, pc, cfg["workers"])
    labels = stats.spectral_cluster(D, len(names), seed)
    ari = stats.adjusted_rand_index(truth, labels)
    body = {
        "graphons": names,
        "count": args.count,
        "ari": ari,
        "labels": labels.tolist(),
        "permutation_tests": tests,
        "config": pc.to_json(),
    }
    csv = "a,b,observed_distance,fraction_higher\n" + "".join(
        f"{t['a']},{t['b']},{_fmt(t['observed_distance'])},{_fmt(t['fraction_higher'])}\n" for t in tests
    )
    return body, {"graphon.json": dumps(body), "graphon.csv": csv}, f"graphon: ARI {_fmt(ari)}"


def connected_er(n: int, p: float, seed: int, attempts: int = 1000):
    for a in range(attempts):
        g = generate_er(n, p, stats.derive_seed(seed, a))
        if g.is_connected():
            return g
    raise ComputationError(f"no connected ER({n}, {p}) sample in {attempts} attempts")


def _exp_bounds(args, cfg, pc):
    try:
        edge_p = 0.3 if args.p is None else float(args.p)
    except ValueError as exc:
        raise UsageError(f"--p must be an edge probability here: {exc}") from exc
    if not 0.0 <= edge_p <= 1.0:
        raise UsageError(f"edge probability must lie in [0, 1], got {edge_p}")
    seed = cfg["seed"]
    g = connected_er(args.n or 12, edge_p, seed)
    reports = [
        stats.check_forman_bounds(g, args.trials, seed),
        stats.check_orc_bounds(g, pc.measure, args.trials, seed),
        stats.check_resistance_bounds(g, args.trials, seed),
    ]
    body = {
        "graph": {"n": g.n, "m": g.m, "edge_p": edge_p, "seed": seed},
        "reports": [r.to_json() for r in reports],
    }
    csv = "theorem,violations,samples,worst_margin\n" + "".join(
        f"{r.theorem},{r.violations},{r.samples},{_fmt(r.worst_margin)}\n" for r in reports
    )
    summary = "bounds: " + ", ".join(f"{r.theorem} {r.violations}/{r.samples}" for r in reports)
    return body, {"bounds.json": dumps(body), "bounds.csv": csv}, summary


_EXPERIMENTS = {
    "perturb": _exp_perturb,
    "distinguish": _exp_distinguish,
    "graphon": _exp_graphon,
    "bounds": _exp_bounds,
}


def cmd_experiment(args, cfg):
    if args.name not in _EXPERIMENTS:
        raise UsageError(f"unknown experiment {args.name!r}; expected one of {EXPERIMENTS}")
    if args.name == "bounds":
        cfg = dict(cfg, p="inf")
    body, files, summary = _EXPERIMENTS[args.name](args, cfg, pipeline(cfg))
    if not args.out:
        if cfg["format"] == "csv":
            return next(v for k, v in files.items() if k.endswith(".csv"))
        return dumps(body)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (out / name).write_text(text)
    sys.stdout.write(summary + "\n")
    return None


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _common() -> argparse.ArgumentParser:
    p = _Parser(add_help=False)
    g = p.add_argument_group("run configuration")
    g.add_argument("--kind", choices=KINDS, help="curvature used as filtration (default orc)")
    g.add_argument("--measure", choices=("uniform", "rw"), help="ORC node measure (default uniform)")
    g.add_argument("--rw-steps", dest="rw_steps", type=int, help="random-walk horizon m (default 2)")
    g.add_argument("--self-mass", dest="self_mass", type=float, help="mass kept at the node (default 0)")
    g.add_argument("--resolution", type=int, help="landscape grid samples (default 1000)")
    g.add_argument("--cap-padding", dest="cap_padding", type=float, help="essential-class cap above max value")
    g.add_argument("--p", help="landscape norm: 1, 2 or inf (default inf)")
    g.add_argument("--mode", choices=MODES, help="landscape distance mode (default norm_of_diff)")
    g.add_argument("--depth", type=int, help="landscape levels kept per dimension (default all)")
    g.add_argument("--seed", type=int, help="random seed (default 0)")
    g.add_argument("--workers", type=int, help="worker processes (default $CURVSCAPE_WORKERS or 1)")
    g.add_argument("--format", choices=("json", "csv"), help="output format (default json)")
    g.add_argument("--config", help="JSON file with run configuration; flags override it")
    g.add_argument("--out", help="output file (directory for experiment and generate --count)")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="curvscape", description="Curvature filtrations for comparing graph distributions.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("curvature", parents=[common], help="edge curvature table")
    p.add_argument("graph")
    p.set_defaults(func=cmd_curvature)

    p = sub.add_parser("diagram", parents=[common], help="persistence diagram of the curvature filtration")
    p.add_argument("graph")
    p.set_defaults(func=cmd_diagram)

    p = sub.add_parser("landscape", parents=[common], help="(average) persistence landscape")
    p.add_argument("graphs", help="graph file, directory of .edges files or .jsonl set")
    p.set_defaults(func=cmd_landscape)

    p = sub.add_parser("compare", parents=[common], help="distance between two graph sets")
    p.add_argument("set_a")
    p.add_argument("set_b")
    p.add_argument("--permutations", type=int, default=0, help="permutation-test rounds (0 = none)")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("generate", parents=[common], help="random or named graphs")
    p.add_argument("model", choices=("er", "graphon", "community", "named"))
    p.add_argument("--n", type=int)
    p.add_argument("--edge-p", dest="edge_p", type=float, default=0.3, help="ER edge probability")
    p.add_argument("--graphon", choices=sorted(GRAPHONS), default="W1")
    p.add_argument("--name", help="named graph (generate named)")
    p.add_argument("--count", type=int, help="number of graphs; writes a set")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser(
        "experiment",
        parents=[common],
        help="experiment harnesses",
        description="For 'bounds', --p is the ER edge probability (default 0.3).",
    )
    p.add_argument("name", help=f"one of {', '.join(EXPERIMENTS)}")
    p.add_argument("--graphs", help="named graphs (comma list) or a graph set path")
    p.add_argument("--count", type=int, default=10, help="graphs per set")
    p.add_argument("--n", type=int, help="vertices per generated graph")
    p.add_argument("--fractions", default=DEFAULT_FRACTIONS)
    p.add_argument("--perturbation", choices=("add", "delete"), help="perturb: add or delete edges")
    p.add_argument("--preserve-connectivity", dest="preserve_connectivity", action="store_true")
    p.add_argument("--method", choices=("raw_hist", "bottleneck"), default="raw_hist")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--graphons", default="W1,W4")
    p.add_argument("--permutations", type=int, default=200)
    p.add_argument("--trials", type=int, default=50)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(_preparse(argv))
        cfg = run_config(args)
        text = args.func(args, cfg)
        if text is not None:
            _emit(text, None if args.func in (cmd_experiment, cmd_generate) else args.out)
        return 0
    except UsageError as exc:
        return _fail(1, "usage", str(exc))
    except (InputError, FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        return _fail(2, "input", str(exc))
    except ComputationError as exc:
        return _fail(3, "computation", str(exc))
    except ValueError as exc:
        return _fail(1, "usage", str(exc))
    except BrokenPipeError:
        # reader went away (``| head``); silence the flush at interpreter exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return 0


def _preparse(argv):
    argv = list(sys.argv[1:] if argv is None else argv)
    # ``experiment perturb --mode add`` names the perturbation, not the distance mode
    if len(argv) >= 2 and argv[0] == "experiment" and argv[1] == "perturb":
        out = []
        it = iter(argv)
        for tok in it:
            if tok == "--mode":
                val = next(it, None)
                if val in ("add", "delete"):
                    out += ["--perturbation", val]
                    continue
                out += [tok] + ([val] if val is not None else [])
            elif tok.startswith("--mode=") and tok.split("=", 1)[1] in ("add", "delete"):
                out += ["--perturbation", tok.split("=", 1)[1]]
            else:
                out.append(tok)
        return out
    return argv


def _fail(code: int, kind: str, message: str) -> int:
    message = " ".join(message.split())
    sys.stderr.write(json.dumps({"error": kind, "exit": code, "message": message}) + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
