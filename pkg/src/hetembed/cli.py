"""Command-line surface: embed, eval, reconstruct, generate, volume, stats.

Exit codes: 0 success, 1 input/parse error, 2 numeric abort during training.
All randomness flows from the --seed flag; identical invocations produce
byte-identical primary outputs.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import fileio, metrics, reconstruct as recon, randgraph
from .graph import (
    EdgeListParseError,
    Graph,
    forman,
    load_edge_list,
    save_edge_list,
    triangle_counts,
)
from .manifold import parse_manifold
from .optim import NumericAbortError, TrainConfig, train


def _load_graph(path: str) -> Graph:
    with open(path, "rb") as fh:
        g = load_edge_list(fh.read())
    if g.n == 0:
        raise ValueError(f"graph {path!r} is empty")
    dropped = g.meta.get("duplicates_dropped", 0) + g.meta.get("self_loops_dropped", 0)
    if dropped:
        print(f"note: dropped {g.meta['duplicates_dropped']} duplicate edge(s) and "
              f"{g.meta['self_loops_dropped']} self-loop(s)", file=sys.stderr)
    return g


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--tau", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--ell-plus", dest="ell_plus", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--lambda-rot", dest="lambda_rot", type=float)
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-pairs", dest="batch_pairs")
    p.add_argument("--seed", type=int)
    p.add_argument("--radial-init", dest="radial_init", help="lo,hi")
    p.add_argument("--curvature-residuals", dest="curvature_residuals",
                   choices=["normalized", "raw"])


def _build_config(args: argparse.Namespace) -> TrainConfig:
    cfg = TrainConfig()
    if args.config:
        cfg = fileio.load_config(args.config, cfg)
    overrides = {}
    for key in ("tau", "epsilon", "gamma", "ell_plus", "delta", "lambda_rot",
                "learning_rate", "epochs", "batch_pairs", "seed", "radial_init",
                "curvature_residuals"):
        val = getattr(args, key, None)
        if val is not None:
            overrides[key] = str(val)
    return fileio.config_from_mapping(overrides, cfg)


def _cmd_embed(args) -> int:
    g = _load_graph(args.graph)
    spec = parse_manifold(args.manifold)
    cfg = _build_config(args)
    emb, history = train(g, spec, cfg)
    out = Path(args.out)
    fileio.write_embedding(emb, out)
    history_path = args.history or str(out.with_suffix(".history.csv"))
    fileio.write_history_csv(history, history_path)
    print(f"wrote {out} ({emb.n} nodes, manifold {emb.spec.to_string()}) "
          f"and {history_path}")
    return 0


def _cmd_eval(args) -> int:
    g = _load_graph(args.graph)
    emb = fileio.read_embedding(args.embedding)
    if emb.n != g.n:
        raise ValueError(f"embedding has {emb.n} nodes but graph has {g.n}")
    f_signal = forman(g, args.gamma, normalize_by_max_degree=args.normalized_forman)
    report = metrics.evaluate(emb, g, f_signal)
    text = report.to_json()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    print(text, end="")
    return 0


def _cmd_reconstruct(args) -> int:
    g = _load_graph(args.graph)
    emb = fileio.read_embedding(args.embedding)
    if emb.n != g.n:
        raise ValueError(f"embedding has {emb.n} nodes but graph has {g.n}")
    rho = args.rho if args.rho is not None else recon.tune_threshold(
        emb, g, val_fraction=args.val_fraction, seed=args.seed
    )
    base = recon.nn_graph(emb, rho)
    result = recon.ReconstructionResult(
        rho=rho, graph=base, mismatch=recon.edge_mismatch(base, g)
    )
    payload = result.to_json_dict()
    payload["mismatch_baseline"] = payload["mismatch"]

    if args.correct:
        corrected = recon.curvature_correction(
            emb, base, rho=rho, step=args.step if args.step is not None else 0.1 * rho,
            percentile=args.percentile, gamma=args.forman_gamma, g_true=g,
        )
        result = corrected
        payload = corrected.to_json_dict()
        payload["mismatch_baseline"] = recon.edge_mismatch(base, g)

    if args.triangles:
        est = recon.estimate_triangles(emb, result.graph, gamma=args.gamma)
        _, true_counts = triangle_counts(g)
        payload["triangles"] = {
            "ad_nn": metrics.avg_triangle_distortion(true_counts, est.nn_baseline),
            "ad_curvature": metrics.avg_triangle_distortion(true_counts, est.clamped),
            "gamma": args.gamma,
        }
    text = json.dumps(payload, indent=1) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    summary = {k: payload[k] for k in ("rho", "mismatch", "mismatch_baseline") if k in payload}
    if "triangles" in payload:
        summary["triangles"] = payload["triangles"]
    print(json.dumps(summary, indent=1))
    return 0


def _cmd_generate(args) -> int:
    cfg = randgraph.SampleConfig(
        n=args.n, tangent_radius=args.tangent_radius,
        radial_interval=(args.radial_lo, args.radial_hi), alpha=args.alpha,
        rho=args.rho, ell=args.ell, runs=args.runs, seed=args.seed,
    )
    if args.mode == "heterogeneous" and cfg.ell is None:
        raise ValueError("--ell is required for heterogeneous generation")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    graphs, stats = randgraph.run_generator(args.mode, cfg, clique_budget=args.clique_budget)
    for k, g in enumerate(graphs):
        with open(out_dir / f"run_{k:03d}.edges", "w", encoding="utf-8") as fh:
            save_edge_list(g, fh)
    fileio.write_stats_csv(stats, out_dir / "stats.csv")
    bary = randgraph.degree_barycenter([randgraph.degree_histogram(g) for g in graphs])
    fileio.write_barycenter_csv(bary, out_dir / "barycenter.csv")
    if not all(s.clique_exact for s in stats):
        print("note: clique budget exceeded on some runs; greedy lower bound reported",
              file=sys.stderr)
    print(f"wrote {cfg.runs} run(s) to {out_dir}")
    return 0


def _cmd_volume(args) -> int:
    g = _load_graph(args.graph)
    emb = fileio.read_embedding(args.embedding)
    if emb.n != g.n:
        raise ValueError(f"embedding has {emb.n} nodes but graph has {g.n}")
    graph_norm, vol_norm = metrics.volume_match(emb, g, rho=args.rho)
    fileio.write_volume_csv(graph_norm, vol_norm, args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_stats(args) -> int:
    g = _load_graph(args.graph)
    stats = randgraph.graph_stats(g, clique_budget=args.clique_budget)
    if args.out:
        fileio.write_stats_csv([stats], args.out)
    print(json.dumps({
        "n": g.n, "edges": g.num_edges,
        "degree_mean": stats.degree_mean, "degree_var": stats.degree_var,
        "clustering_mean": stats.clustering_mean, "clustering_var": stats.clustering_var,
        "max_clique_size": stats.max_clique_size, "clique_exact": stats.clique_exact,
    }, indent=1))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hetembed",
        description="Curvature-aware graph embeddings into heterogeneous manifolds",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("embed", help="train an embedding")
    p.add_argument("graph", help="edge-list file")
    p.add_argument("--manifold", "-m", required=True,
                   help='e.g. "h5,h5,rot(a=auto)" or "e2"')
    p.add_argument("--out", default="embedding.json")
    p.add_argument("--history", help="history CSV path (default: <out>.history.csv)")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_embed)

    p = sub.add_parser("eval", help="evaluate an embedding against its graph")
    p.add_argument("graph")
    p.add_argument("embedding")
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--normalized-forman", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("reconstruct", help="rebuild the graph from an embedding")
    p.add_argument("graph")
    p.add_argument("embedding")
    p.add_argument("--rho", type=float, help="threshold (default: tuned on a validation sample)")
    p.add_argument("--val-fraction", dest="val_fraction", type=float, default=0.10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--correct", action="store_true", help="run curvature correction")
    p.add_argument("--percentile", type=float, default=90.0)
    p.add_argument("--step", type=float, help="correction step (default 0.1*rho)")
    p.add_argument("--forman-gamma", dest="forman_gamma", type=float, default=1.0)
    p.add_argument("--triangles", action="store_true", help="estimate triangle counts")
    p.add_argument("--gamma", type=float, default=4.0, help="triangle weighting")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_reconstruct)

    p = sub.add_parser("generate", help="sample random graphs from H3 / H3 x R")
    p.add_argument("--mode", choices=["homogeneous", "heterogeneous"], required=True)
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--tangent-radius", dest="tangent_radius", type=float, default=2.75)
    p.add_argument("--radial-lo", dest="radial_lo", type=float, default=0.0)
    p.add_argument("--radial-hi", dest="radial_hi", type=float, default=2.0)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--ell", type=float)
    p.add_argument("--runs", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--clique-budget", dest="clique_budget", type=float, default=10.0)
    p.add_argument("--out-dir", dest="out_dir", default="generated")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("volume", help="graph ball sizes vs annular volumes (H3 x R)")
    p.add_argument("graph")
    p.add_argument("embedding")
    p.add_argument("--rho", type=float, default=4.0)
    p.add_argument("--out", default="volume.csv")
    p.set_defaults(func=_cmd_volume)

    p = sub.add_parser("stats", help="degree/clustering/clique statistics of a graph")
    p.add_argument("graph")
    p.add_argument("--clique-budget", dest="clique_budget", type=float, default=10.0)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_stats)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericAbortError as exc:
        print(f"numeric abort: {exc}", file=sys.stderr)
        print(json.dumps(exc.state, indent=1, default=str), file=sys.stderr)
        return 2
    except (ValueError, EdgeListParseError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
