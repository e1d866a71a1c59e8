"""Command-line pipeline: digraph -> twin trees -> grid -> expansion.

Each subcommand reads and writes artifacts in a workspace directory
(--out), so stages can be rerun independently:

    digraph.json     the ingested or synthesized graph
    tree_es.json     hierarchy from the even symmetrization
    tree_os.json     hierarchy from the odd symmetrization
    trees.json       per-level summary of both hierarchies
    grid.csv         one rectangle + mass per vertex
    omega.csv        surviving tensor indices (and dropped ones)
    coefficients.csv expansion coefficients of the chosen signal
    approx.csv       graded error sequences by shell
    metrics.csv      per-level modularity / F scores with a random
                     baseline
    smoothness.json  fitted decay exponents
    config.json      the parameters each stage ran with

Artifacts contain no timestamps and are written with fixed formatting,
so rerunning a stage with unchanged inputs reproduces them byte for
byte.  Exact rational coordinates are serialized as "p/q" strings.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__, metrics as metrics_mod
from .analysis import GridAnalysis, build_grid, shell_index
from .basis import TreeBasis
from .clustering import ClusterTree, twt
from .digraph import (WeightedDigraph, load_edge_list, load_labels,
                      synth_digraph)
from .filtration import build_filtration


# -- workspace helpers -------------------------------------------------------


def _ws(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_config(ws: Path) -> dict:
    path = ws / "config.json"
    if path.exists():
        return json.loads(path.read_text())
    return {}


def _update_config(ws: Path, stage: str, params: dict) -> dict:
    cfg = _load_config(ws)
    cfg[stage] = params
    with open(ws / "config.json", "w", encoding="utf-8") as fh:
        json.dump(cfg, fh, sort_keys=True, indent=1)
        fh.write("\n")
    return cfg


def _fmt(x) -> str:
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])


def _need(ws: Path, name: str) -> Path:
    path = ws / name
    if not path.exists():
        raise SystemExit(
            f"missing artifact {path}; run the producing stage first")
    return path


def _load_graph(ws: Path) -> WeightedDigraph:
    return WeightedDigraph.load_json(_need(ws, "digraph.json"))


def _load_trees(ws: Path) -> tuple[ClusterTree, ClusterTree]:
    return (ClusterTree.load_json(_need(ws, "tree_es.json")),
            ClusterTree.load_json(_need(ws, "tree_os.json")))


def _build_analysis(ws: Path) -> tuple[WeightedDigraph, GridAnalysis]:
    """Reconstruct the exact grid and analysis engine from artifacts."""
    cfg = _load_config(ws)
    G = _load_graph(ws)
    tree_es, tree_os = _load_trees(ws)
    scheme = cfg.get("grid", {}).get("scheme", "uniform")
    normalize = cfg.get("grid", {}).get("normalize", True)
    mode = cfg.get("analyze", {}).get("mode", "exact")
    base = cfg.get("analyze", {}).get("partition_base", 2)
    filt_es = build_filtration(tree_es, scheme, G)
    filt_os = build_filtration(tree_os, scheme, G)
    grid = build_grid(filt_es, filt_os, normalize=normalize)
    engine = GridAnalysis(grid, TreeBasis(filt_es), TreeBasis(filt_os),
                          mode=mode, partition_base=base)
    return G, engine


def vertex_signal(G: WeightedDigraph, kind: str) -> np.ndarray:
    """Grid function to analyze: per-vertex values in vertex-id order."""
    if kind == "outdeg":
        return G.out_degrees().astype(float)
    if kind == "label":
        if not G.labels:
            raise SystemExit("graph carries no labels; use another signal")
        classes = sorted({str(path[0]) for path in G.labels.values()})
        index = {c: i for i, c in enumerate(classes)}
        return np.array([float(index[str(G.labels[v][0])])
                         for v in range(G.n)])
    if kind.startswith("file:"):
        vals = [float(line) for line in
                Path(kind[5:]).read_text().split()]
        if len(vals) != G.n:
            raise SystemExit(
                f"signal file has {len(vals)} values for {G.n} vertices")
        return np.array(vals)
    raise SystemExit(f"unknown signal {kind!r}")


# -- stages ------------------------------------------------------------------


def cmd_ingest(args) -> int:
    ws = _ws(args)
    G = load_edge_list(args.edges, labels_source=args.labels)
    G.save_json(ws / "digraph.json")
    _update_config(ws, "ingest",
                   {"edges": str(args.edges),
                    "labels": (str(args.labels) if args.labels else None)})
    print(f"ingested {G.n} vertices, {G.edge_count()} edges")
    return 0


def cmd_synth(args) -> int:
    ws = _ws(args)
    params = {}
    for item in args.param or []:
        key, _, val = item.partition("=")
        params[key] = json.loads(val)
    G = synth_digraph(args.kind, seed=args.seed, **params)
    G.save_json(ws / "digraph.json")
    _update_config(ws, "synth",
                   {"kind": args.kind, "seed": args.seed, "params": params})
    print(f"synthesized {args.kind}: {G.n} vertices, "
          f"{G.edge_count()} edges")
    return 0


def cmd_cluster(args) -> int:
    ws = _ws(args)
    G = _load_graph(ws)
    K = tuple(int(x) for x in args.levels.split(","))
    labeled = None
    if args.labeled:
        if not G.labels:
            raise SystemExit("--labeled needs a graph with labels")
        classes = sorted({str(p[0]) for p in G.labels.values()})
        index = {c: i for i, c in enumerate(classes)}
        labeled = {v: index[str(p[0])] for v, p in G.labels.items()}
    tree_es, tree_os = twt(G, K, algo=args.algo, seed=args.seed,
                           labeled=labeled,
                           edge_length=args.edge_length,
                           n_init=args.n_init)
    tree_es.save_json(ws / "tree_es.json")
    tree_os.save_json(ws / "tree_os.json")
    _update_config(ws, "cluster",
                   {"algo": args.algo, "levels": list(K),
                    "seed": args.seed, "labeled": bool(args.labeled),
                    "edge_length": args.edge_length,
                    "n_init": args.n_init})
    print(f"built twin trees: depths {tree_es.depth()} / {tree_os.depth()}")
    return 0


def cmd_trees(args) -> int:
    ws = _ws(args)
    tree_es, tree_os = _load_trees(ws)
    summary = {}
    for side, tree in (("es", tree_es), ("os", tree_os)):
        levels = []
        for lv in range(tree.depth() + 1):
            sizes = sorted((len(n.members) for n in tree.level_nodes(lv)),
                           reverse=True)
            levels.append({"level": lv, "clusters": len(sizes),
                           "sizes": sizes})
        summary[side] = {"depth": tree.depth(), "levels": levels}
    with open(ws / "trees.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, sort_keys=True, indent=1)
        fh.write("\n")
    for side in ("es", "os"):
        info = summary[side]
        counts = "/".join(str(lv["clusters"]) for lv in info["levels"])
        print(f"{side}: depth {info['depth']}, clusters per level {counts}")
    return 0


def cmd_grid(args) -> int:
    ws = _ws(args)
    G = _load_graph(ws)
    tree_es, tree_os = _load_trees(ws)
    filt_es = build_filtration(tree_es, args.scheme, G)
    filt_os = build_filtration(tree_os, args.scheme, G)
    grid = build_grid(filt_es, filt_os, normalize=not args.no_normalize)
    rows = []
    for p in grid.points:
        x0, x1, y0, y1 = p.rect
        rows.append([p.vertex, G.names[p.vertex], x0, x1, y0, y1,
                     p.point[0], p.point[1], p.mass])
    _write_csv(ws / "grid.csv",
               ["vertex", "name", "x0", "x1", "y0", "y1",
                "px", "py", "mass"], rows)
    _update_config(ws, "grid",
                   {"scheme": args.scheme,
                    "normalize": not args.no_normalize})
    print(f"grid: {len(grid)} rectangles, raw mass {grid.raw_total}")
    return 0


def cmd_analyze(args) -> int:
    ws = _ws(args)
    _update_config(ws, "analyze",
                   {"mode": args.mode, "signal": args.signal,
                    "partition_base": args.partition_base})
    G, engine = _build_analysis(ws)
    active = set(engine.active)
    rows = []
    for k in engine.freqs.omega:
        status = "active" if k in active else "dropped"
        rows.append([k[0], k[1], shell_index(k, engine.base), status])
    _write_csv(ws / "omega.csv", ["k1", "k2", "shell", "status"], rows)
    f = vertex_signal(G, args.signal)
    coeffs = engine.analyze(f)
    _write_csv(ws / "coefficients.csv", ["k1", "k2", "coefficient"],
               [[k[0], k[1], float(c)] for k, c in coeffs.items()])
    defect = engine.orthogonality_defect()
    resid = engine.l2_norm(f - engine.synthesize(coeffs))
    summary = {
        "mode": engine.mode,
        "signal": args.signal,
        "grid_points": len(engine.grid),
        "omega_size": len(engine.freqs),
        "active": len(engine.active),
        "dropped": len(engine.dropped),
        "max_shell": engine.max_shell(),
        "orthogonality_defect": defect,
        "reconstruction_residual": resid,
    }
    with open(ws / "analysis.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, sort_keys=True, indent=1)
        fh.write("\n")
    print(f"mode {engine.mode}: {len(engine.active)} active of "
          f"{len(engine.freqs)} indices, defect {defect:.2e}")
    return 0


def cmd_approx(args) -> int:
    """Graded error sequences, one row per shell.

    When the analyzed signal encodes class labels, each low-pass
    reconstruction is rounded back to the nearest class index and the
    per-shell agreement fraction is recorded alongside the errors.
    """
    ws = _ws(args)
    cfg = _load_config(ws)
    signal = cfg.get("analyze", {}).get("signal", args.signal)
    G, engine = _build_analysis(ws)
    f = vertex_signal(G, signal)
    report = engine.smoothness_profile(f, order=args.order)
    rows = []
    for n in range(len(report.sequences["degree_error"])):
        deg = report.sequences["degree_error"][n]
        proj = report.sequences["projection_error"][n]
        ratio = proj / deg if deg > 0 else ""
        agree = (float(np.mean(np.round(engine.sigma(f, n)) == f))
                 if signal == "label" else "")
        rows.append([n, deg, proj, ratio,
                     report.sequences["block_norm"][n],
                     report.sequences["k_functional"][n], agree])
    _write_csv(ws / "approx.csv",
               ["shell", "degree_error", "projection_error", "ratio",
                "block_norm", "k_functional", "label_agreement"], rows)
    _update_config(ws, "approx", {"order": args.order, "signal": signal})
    top = rows[-1][0] if rows else -1
    print(f"graded errors up to shell {top} written")
    return 0


def _sample_training_labels(G: WeightedDigraph, pct: float,
                            seed: int) -> dict[int, int]:
    """Pick pct% of each label class as training vertices, seeded."""
    classes: dict[str, list[int]] = {}
    for v in range(G.n):
        classes.setdefault(str(G.labels[v][0]), []).append(v)
    index = {c: i for i, c in enumerate(sorted(classes))}
    rng = np.random.default_rng([seed, 13])
    train: dict[int, int] = {}
    for name in sorted(classes):
        members = sorted(classes[name])
        take = max(1, int(round(pct / 100.0 * len(members))))
        picked = rng.choice(members, size=min(take, len(members)),
                            replace=False)
        for v in picked:
            train[int(v)] = index[name]
    return train


def cmd_metrics(args) -> int:
    """Seeded-trial scoring protocol.

    Re-runs the tree construction ``--trials`` times with child seeds
    (sampling --train-pct percent of each label class as training data
    when positive), scores every level of the twin trees' common
    refinement, and writes mean/std rows per (level, metric).  A
    random-coloring modularity baseline is appended per level when
    --baseline-trials is positive.
    """
    ws = _ws(args)
    cfg = _load_config(ws)
    G = _load_graph(ws)
    cl = cfg.get("cluster")
    if cl is None:
        raise SystemExit("run the cluster stage first (its parameters "
                         "define the trial protocol)")
    if args.trials < 1:
        raise SystemExit("need at least one trial")
    if not 0 <= args.train_pct < 100:
        raise SystemExit("training percentage must lie in [0, 100)")
    if args.train_pct > 0 and not G.labels:
        raise SystemExit("--train-pct needs a labeled graph")
    K = tuple(cl["levels"])
    child = np.random.SeedSequence([args.seed, 4242]).spawn(args.trials)
    by_level: dict[int, dict[str, list[float]]] = {}
    counts: dict[int, list[float]] = {}
    for t in range(args.trials):
        tseed = int(child[t].generate_state(1)[0])
        labeled = None
        if args.train_pct > 0:
            labeled = _sample_training_labels(G, args.train_pct, tseed)
        elif cl.get("labeled") and G.labels:
            classes = sorted({str(p[0]) for p in G.labels.values()})
            index = {c: i for i, c in enumerate(classes)}
            labeled = {v: index[str(p[0])] for v, p in G.labels.items()}
        tree_es, tree_os = twt(G, K, algo=cl["algo"], seed=tseed,
                               labeled=labeled,
                               edge_length=cl["edge_length"],
                               n_init=cl["n_init"])
        for rec in metrics_mod.align_and_score(G, tree_es, tree_os,
                                               labels=G.labels or None):
            lv = rec["level"]
            slot = by_level.setdefault(lv, {})
            counts.setdefault(lv, []).append(float(rec["n_clusters"]))
            slot.setdefault("modularity", []).append(rec["modularity"])
            if "f_measure" in rec:
                slot.setdefault("f_measure", []).append(rec["f_measure"])
    rows = []
    for lv in sorted(by_level):
        k_mean = float(np.mean(counts[lv]))
        for metric in ("modularity", "f_measure"):
            vals = by_level[lv].get(metric)
            if not vals:
                continue
            arr = np.array(vals)
            rows.append([lv, k_mean, metric, float(arr.mean()),
                         float(arr.std()), len(vals)])
        if args.baseline_trials > 0:
            base_seed = int(np.random.SeedSequence(
                [args.seed, 77, lv]).generate_state(1)[0])
            mean, std, _ = metrics_mod.random_coloring_baseline(
                G, max(int(round(k_mean)), 2), args.baseline_trials,
                base_seed)
            rows.append([lv, k_mean, "modularity_random", mean, std,
                         args.baseline_trials])
    _write_csv(ws / "metrics.csv",
               ["level", "k", "metric", "mean", "std", "trials"], rows)
    _update_config(ws, "metrics",
                   {"seed": args.seed, "trials": args.trials,
                    "train_pct": args.train_pct,
                    "baseline_trials": args.baseline_trials})
    for row in rows:
        print(f"level {row[0]} ({row[1]:.1f} clusters): {row[2]} "
              f"= {row[3]:.4f} +- {row[4]:.4f} over {row[5]} trials")
    return 0


def cmd_report(args) -> int:
    ws = _ws(args)
    cfg = _load_config(ws)
    signal = cfg.get("analyze", {}).get("signal", "outdeg")
    order = cfg.get("approx", {}).get("order", 1.0)
    G, engine = _build_analysis(ws)
    f = vertex_signal(G, signal)
    report = engine.smoothness_profile(f, order=order)
    report.save_json(ws / "smoothness.json")
    shown = {k: (f"{v:.3f}" if v is not None else "n/a")
             for k, v in report.gamma.items()}
    print("fitted exponents: " +
          ", ".join(f"{k}={v}" for k, v in sorted(shown.items())))
    return 0


def cmd_pipeline(args) -> int:
    ws = _ws(args)
    if args.edges:
        cmd_ingest(argparse.Namespace(out=args.out, edges=args.edges,
                                      labels=args.labels))
    else:
        cmd_synth(argparse.Namespace(out=args.out, kind=args.kind,
                                     seed=args.seed, param=args.param))
    cmd_cluster(argparse.Namespace(
        out=args.out, levels=args.levels, algo=args.algo, seed=args.seed,
        labeled=args.labeled, edge_length=args.edge_length,
        n_init=args.n_init))
    cmd_trees(argparse.Namespace(out=args.out))
    cmd_grid(argparse.Namespace(out=args.out, scheme=args.scheme,
                                no_normalize=False))
    cmd_analyze(argparse.Namespace(out=args.out, mode=args.mode,
                                   signal=args.signal,
                                   partition_base=args.partition_base))
    cmd_approx(argparse.Namespace(out=args.out, order=args.order,
                                  signal=args.signal))
    cmd_metrics(argparse.Namespace(out=args.out, seed=args.seed,
                                   trials=args.trials,
                                   train_pct=args.train_pct,
                                   baseline_trials=args.baseline_trials))
    cmd_report(argparse.Namespace(out=args.out))
    print(f"pipeline complete in {ws}")
    return 0


# -- argument wiring -----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="twintree",
        description="twin hierarchies and harmonic analysis on digraphs")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_out(p):
        p.add_argument("--out", default="twintree_out",
                       help="workspace directory (default: %(default)s)")

    p = sub.add_parser("ingest", help="load an edge list")
    add_out(p)
    p.add_argument("--edges", required=True, help="edge list file")
    p.add_argument("--labels", default=None, help="optional label file")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("synth", help="synthesize a benchmark digraph")
    add_out(p)
    p.add_argument("--kind", default="toy25",
                   choices=["toy25", "planted", "sparse"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--param", action="append", metavar="KEY=JSON",
                   help="extra generator parameter, repeatable")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("cluster", help="build the twin hierarchies")
    add_out(p)
    p.add_argument("--levels", default="2,6",
                   help="cluster counts per level, coarse to fine")
    p.add_argument("--algo", default="nhc", choices=["nhc", "mll", "mbo"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--labeled", action="store_true",
                   help="seed/anchor clustering with the graph's labels")
    p.add_argument("--edge-length", default="reciprocal",
                   choices=["reciprocal", "raw"], dest="edge_length")
    p.add_argument("--n-init", type=int, default=1, dest="n_init")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("trees", help="summarize the twin hierarchies")
    add_out(p)
    p.set_defaults(func=cmd_trees)

    p = sub.add_parser("grid", help="build the product grid")
    add_out(p)
    p.add_argument("--scheme", default="uniform",
                   choices=["uniform", "volume"])
    p.add_argument("--no-normalize", action="store_true",
                   dest="no_normalize")
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("analyze", help="expand a signal on the grid")
    add_out(p)
    p.add_argument("--mode", default="exact",
                   choices=["exact", "idealized"])
    p.add_argument("--signal", default="outdeg",
                   help="outdeg | label | file:PATH")
    p.add_argument("--partition-base", type=int, default=2,
                   dest="partition_base")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("approx", help="graded error sequences")
    add_out(p)
    p.add_argument("--order", type=float, default=1.0,
                   help="differentiation order for the K-functional")
    p.add_argument("--signal", default="outdeg")
    p.set_defaults(func=cmd_approx)

    p = sub.add_parser("metrics", help="seeded-trial scoring protocol")
    add_out(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=30)
    p.add_argument("--train-pct", type=float, default=0.0,
                   dest="train_pct",
                   help="percent of each label class used as training "
                        "data per trial (0 = unsupervised)")
    p.add_argument("--baseline-trials", type=int, default=100,
                   dest="baseline_trials")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("report", help="fit smoothness exponents")
    add_out(p)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("pipeline", help="run every stage in order")
    add_out(p)
    p.add_argument("--edges", default=None)
    p.add_argument("--labels", default=None)
    p.add_argument("--kind", default="toy25",
                   choices=["toy25", "planted", "sparse"])
    p.add_argument("--param", action="append", metavar="KEY=JSON")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--levels", default="2,6")
    p.add_argument("--algo", default="nhc", choices=["nhc", "mll", "mbo"])
    p.add_argument("--labeled", action="store_true")
    p.add_argument("--edge-length", default="reciprocal",
                   choices=["reciprocal", "raw"], dest="edge_length")
    p.add_argument("--n-init", type=int, default=1, dest="n_init")
    p.add_argument("--scheme", default="uniform",
                   choices=["uniform", "volume"])
    p.add_argument("--mode", default="exact",
                   choices=["exact", "idealized"])
    p.add_argument("--signal", default="outdeg")
    p.add_argument("--partition-base", type=int, default=2,
                   dest="partition_base")
    p.add_argument("--order", type=float, default=1.0)
    p.add_argument("--trials", type=int, default=30)
    p.add_argument("--train-pct", type=float, default=0.0,
                   dest="train_pct")
    p.add_argument("--baseline-trials", type=int, default=100,
                   dest="baseline_trials")
    p.set_defaults(func=cmd_pipeline)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
