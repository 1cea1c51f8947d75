"""Command-line interface: ``structemb embed|generate|eval``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Sequence

import numba
import numpy as np

from . import __version__
from .distance import DEFAULT_LAYER_CAP, DistanceTable, SimilarityConfig, structural_distances
from .evaluation import (
    classify,
    edge_sampled_pair,
    gen_barbell,
    gen_egonet_substitute,
    gen_er,
    gen_mirrored,
    gen_roles,
    distance_correlation,
    pair_distance_report,
    quartile_labels,
    scaling_run,
)
from .graph import Graph, load_edge_list, load_karate, write_edge_list
from .multilayer import write_layer_stats_csv
from .pipeline import DEFAULT_SEED, PRESETS, PipelineConfig, StageError, run
from .skipgram import EmbeddingMatrix

log = logging.getLogger("structemb")

# manifest key -> (pipeline setting, parser)
_MANIFEST_SETTINGS = {
    "k_max": ("k_max", lambda s: None if s == "none" else int(s)),
    "neighbor_limit": ("neighbor_limit", lambda s: s == "true"),
    "compression": ("compression", lambda s: s == "true"),
    "stay_probability": ("stay_probability", float),
    "walks_per_node": ("walks_per_node", int),
    "walk_length": ("walk_length", int),
    "dimensions": ("dimensions", int),
    "window": ("window", int),
    "epochs": ("epochs", int),
    "learning_rate": ("learning_rate", float),
    "objective": ("objective", str),
    "negative": ("negative", int),
    "dynamic_window": ("dynamic_window", lambda s: s == "true"),
    "threads": ("threads", int),
    "baseline_plain": ("baseline_plain", lambda s: s == "true"),
}


def _fmt(v: object) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_manifest(path: Path, values: dict[str, object]) -> None:
    with open(path, "w") as fh:
        for key, val in values.items():
            fh.write(f"{key}={_fmt(val)}\n")


def read_manifest(path: str | Path) -> dict[str, str]:
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, val = line.partition("=")
            if not sep:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            out[key.strip()] = val.strip()
    return out


def _load_graph(path: str | None) -> Graph:
    try:
        return load_karate() if path is None else load_edge_list(path)
    except Exception as exc:
        raise StageError("load", exc) from exc


def _set_threads(threads: int) -> None:
    numba.set_num_threads(max(1, min(threads, numba.config.NUMBA_NUM_THREADS)))


# -- embed --------------------------------------------------------------------


def _embed_settings(args: argparse.Namespace) -> dict[str, object]:
    k_max = args.layers if args.layers is not None else args.opt3
    return dict(
        k_max=k_max,
        compression=args.opt1,
        neighbor_limit=args.opt2,
        stay_probability=args.stay_prob,
        walks_per_node=args.walks,
        walk_length=args.walk_length,
        window=args.window,
        dimensions=args.dim,
        objective=args.objective,
        negative=args.negative,
        epochs=args.epochs,
        learning_rate=args.learning_rate,
        threads=args.threads,
        baseline_plain=args.baseline_plain or None,
    )


def cmd_embed(args: argparse.Namespace) -> int:
    if args.from_manifest:
        manifest = read_manifest(args.from_manifest)
        settings = {
            name: parse(manifest[key]) for key, (name, parse) in _MANIFEST_SETTINGS.items() if key in manifest
        }
        seed = int(manifest["seed"])
        preset = None
        graph_path = args.input or manifest.get("input")
        output = Path(args.output or manifest["output"])
    else:
        if not args.input:
            raise SystemExit("error: embed needs an edge-list path or --from-manifest")
        settings = _embed_settings(args)
        seed = args.seed
        preset = args.preset
        graph_path = args.input
        output = Path(args.output or Path(args.input).with_suffix(".emb"))
    cfg = PipelineConfig.build(seed=seed, preset=preset, **settings)
    _set_threads(cfg.train.threads)
    g = _load_graph(graph_path)
    result = run(g, cfg)
    result.embedding.save(output)
    if args.distances and result.table is not None:
        result.table.save(args.distances)
    if args.corpus:
        result.corpus.save(args.corpus)
    if args.layer_stats and result.multilayer is not None:
        write_layer_stats_csv(result.multilayer, args.layer_stats)

    values: dict[str, object] = {
        "version": __version__,
        "input": str(Path(graph_path).resolve()),
        "output": str(output.resolve()),
        "seed": seed,
        "k_max": cfg.similarity.k_max,
        "compression": cfg.similarity.compression,
        "neighbor_limit": cfg.similarity.neighbor_limit,
        "baseline_plain": cfg.baseline_plain,
    }
    for key in ("stay_probability", "walks_per_node", "walk_length"):
        values[key] = getattr(cfg.walk, key)
    for key in ("dimensions", "window", "epochs", "learning_rate", "objective", "negative", "dynamic_window", "threads"):
        values[key] = getattr(cfg.train, key)
    values["nodes"] = g.n
    values["edges"] = g.num_edges
    for stage, secs in result.timings.items():
        values[f"time_{stage}"] = round(secs, 6)
    manifest_path = Path(args.manifest) if args.manifest else output.with_name(output.name + ".manifest")
    write_manifest(manifest_path, values)
    print(f"wrote {output} ({g.n} x {cfg.train.dimensions}) and {manifest_path}")
    return 0


# -- generate -----------------------------------------------------------------


def _write_lines(path: Path, rows: Sequence[Sequence[object]]) -> None:
    with open(path, "w") as fh:
        for row in rows:
            fh.write(" ".join(str(x) for x in row) + "\n")


def cmd_generate(args: argparse.Namespace) -> int:
    out = Path(args.output)
    rng = np.random.default_rng(args.seed)
    sidecar = None
    if args.generator == "barbell":
        g, classes = gen_barbell(args.h, args.k)
        sidecar = (out.with_suffix(".classes"), [[g.labels[u] for u in c] for c in classes])
    elif args.generator == "mirror":
        bridge = args.bridge
        if bridge is not None and "," in bridge:
            bridge = tuple(bridge.split(",", 1))
        g, mirror = gen_mirrored(_load_graph(args.input), bridge)
        pairs = [(g.labels[u], g.labels[v]) for u, v in sorted(mirror.items()) if u < v]
        sidecar = (out.with_suffix(".pairs"), pairs)
    elif args.generator == "er":
        g = gen_er(args.n, args.avg_degree, rng)
    elif args.generator == "egonet":
        g = gen_egonet_substitute(rng, args.n, args.avg_degree, args.max_degree)
    elif args.generator == "roles":
        g, roles = gen_roles(rng, args.n)
        sidecar = (out.with_suffix(".labels"), list(zip(g.labels, roles.tolist())))
    else:
        g, pairs = edge_sampled_pair(_load_graph(args.input), args.s, rng)
        sidecar = (out.with_suffix(".pairs"), [(g.labels[u], g.labels[v]) for u, v in pairs])
    write_edge_list(g, out)
    msg = f"wrote {out} ({g.n} nodes, {g.num_edges} edges)"
    if sidecar:
        _write_lines(*sidecar)
        msg += f" and {sidecar[0]}"
    print(msg)
    return 0


# -- eval ---------------------------------------------------------------------


def _read_label_rows(path: str) -> list[list[str]]:
    with open(path) as fh:
        return [line.split() for line in fh if line.strip() and not line.startswith("#")]


def _emit(args: argparse.Namespace, header: Sequence[str], rows: Sequence[Sequence[object]], summary: str) -> None:
    lines = [",".join(header)] + [",".join(_fmt(x) for x in row) for row in rows]
    if args.output:
        Path(args.output).write_text("\n".join(lines) + "\n")
        print(summary)
    else:
        print("\n".join(lines))
        print(summary, file=sys.stderr)


def _index(emb: EmbeddingMatrix) -> dict[str, int]:
    return {lab: i for i, lab in enumerate(emb.labels or [])}


def _lookup(index: dict[str, int], label: str, path: str) -> int:
    try:
        return index[label]
    except KeyError:
        raise ValueError(f"{path}: node {label!r} is not in the embedding") from None


def eval_pairs(args: argparse.Namespace) -> int:
    emb = EmbeddingMatrix.load(args.embedding)
    index = _index(emb)
    pairs = [(_lookup(index, a, args.pairs), _lookup(index, b, args.pairs)) for a, b, *_ in _read_label_rows(args.pairs)]
    rep = pair_distance_report(emb.vectors, pairs)
    threshold = args.threshold * float(rep.all_pairs.max())
    below = rep.fraction_special_below(threshold)
    _emit(
        args,
        ["pairs", "pair_mean", "pair_std", "all_mean", "all_std", "ratio", "fraction_below_threshold"],
        [[len(pairs), rep.special_mean, rep.special_std, rep.all_mean, rep.all_std, rep.ratio, below]],
        f"ratio all/pairs = {rep.ratio:.3f}; {100 * below:.1f}% of pairs below "
        f"{args.threshold:g} x max distance",
    )
    return 0


def _aligned(emb: EmbeddingMatrix, g: Graph, path: str) -> np.ndarray:
    index = _index(emb)
    return emb.vectors[[_lookup(index, lab, path) for lab in g.labels]]


def eval_correlation(args: argparse.Namespace) -> int:
    emb = EmbeddingMatrix.load(args.embedding)
    g = _load_graph(args.graph)
    vectors = _aligned(emb, g, args.graph or "karate")
    if args.distances:
        table = DistanceTable.load(args.distances)
    else:
        table = structural_distances(g, SimilarityConfig())
    rows = []
    for k in (int(x) for x in args.layers.split(",")):
        if k >= table.num_layers:
            log.warning("layer %d not defined (graph has %d layers); skipped", k, table.num_layers)
            continue
        c = distance_correlation(table, vectors, k)
        rows.append([k, c.pearson, c.pearson_pvalue, c.spearman, c.spearman_pvalue, c.pairs])
    summary = "\n".join(f"layer {r[0]}: pearson {r[1]:.3f} (p={r[2]:.2g}), spearman {r[3]:.3f} (p={r[4]:.2g})" for r in rows)
    _emit(args, ["layer", "pearson", "pearson_p", "spearman", "spearman_p", "pairs"], rows, summary)
    return 0


def eval_classify(args: argparse.Namespace) -> int:
    emb = EmbeddingMatrix.load(args.embedding)
    index = _index(emb)
    source = args.labels or args.activity
    rows_in = _read_label_rows(source)
    ids = [_lookup(index, r[0], source) for r in rows_in]
    if args.labels:
        y = np.array([r[1] for r in rows_in])
    else:
        y = quartile_labels([float(r[1]) for r in rows_in])
    features = {"embedding": emb.vectors[ids]}
    if args.graph:
        g = _load_graph(args.graph)
        gidx = {lab: i for i, lab in enumerate(g.labels)}
        features["degree"] = g.degrees[[_lookup(gidx, r[0], args.graph) for r in rows_in]].astype(float)
    rows = []
    for name, x in features.items():
        res = classify(x, y, np.random.default_rng(args.seed), repeats=args.repeats)
        rows.append([name, res.mean, res.std, args.repeats])
    summary = "\n".join(f"{r[0]}: accuracy {r[1]:.3f} +/- {r[2]:.3f} over {r[3]} splits" for r in rows)
    _emit(args, ["features", "mean_accuracy", "std_accuracy", "repeats"], rows, summary)
    return 0


def eval_scaling(args: argparse.Namespace) -> int:
    sizes = [int(x) for x in args.sizes.split(",")]
    _set_threads(args.threads)

    def embed(g: Graph, seed: int) -> None:
        run(g, PipelineConfig.build(seed=seed, preset=args.preset, threads=args.threads))

    res = scaling_run(sizes, embed, np.random.default_rng(args.seed), args.avg_degree, args.repeats)
    rows = [[n, t] for n, t in zip(res.sizes, res.times)]
    _emit(args, ["n", "seconds"], rows, f"log-log slope {res.exponent:.3f}")
    return 0


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="structemb", description="Structural node embeddings.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log stage timings")
    # lets -v also follow the subcommand without overriding an earlier one
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("embed", help="learn an embedding from an edge list", parents=[common])
    e.add_argument("input", nargs="?", help="edge-list file")
    e.add_argument("-o", "--output", help="embedding file (default: <input>.emb)")
    e.add_argument("--manifest", help="manifest path (default: <output>.manifest)")
    e.add_argument("--from-manifest", help="re-run with the settings recorded in a manifest")
    e.add_argument("--preset", choices=sorted(PRESETS))
    e.add_argument("--layers", type=int, help="highest layer to build")
    e.add_argument(
        "--opt3", type=int, nargs="?", const=DEFAULT_LAYER_CAP, metavar="K",
        help=f"cap the number of layers (K defaults to {DEFAULT_LAYER_CAP})",
    )
    e.add_argument("--opt1", action=argparse.BooleanOptionalAction, default=None, help="compressed degree sequences")
    e.add_argument("--opt2", action=argparse.BooleanOptionalAction, default=None, help="limit candidate pairs by degree")
    e.add_argument("--stay-prob", type=float, help="probability of stepping within a layer")
    e.add_argument("--walks", type=int, help="walks per node")
    e.add_argument("--walk-length", type=int)
    e.add_argument("--window", type=int)
    e.add_argument("--dim", type=int, help="embedding dimensions")
    e.add_argument("--objective", choices=["hs", "ns"])
    e.add_argument("--negative", type=int, help="negative samples per pair")
    e.add_argument("--epochs", type=int)
    e.add_argument("--learning-rate", type=float)
    e.add_argument("--baseline-plain", action="store_true", help="uniform walks on the input graph instead")
    e.add_argument("--seed", type=int, default=DEFAULT_SEED)
    e.add_argument("--threads", type=int, help="worker threads (1 is deterministic)")
    e.add_argument("--distances", help="also write the distance table")
    e.add_argument("--corpus", help="also write the walk corpus")
    e.add_argument("--layer-stats", help="also write per-layer statistics as CSV")
    e.set_defaults(func=cmd_embed)

    gen = sub.add_parser("generate", help="write a benchmark graph")
    gsub = gen.add_subparsers(dest="generator", required=True)
    b = gsub.add_parser("barbell", help="two cliques joined by a path (+ .classes)", parents=[common])
    b.add_argument("--h", type=int, default=10, help="clique size")
    b.add_argument("--k", type=int, default=10, help="path length")
    m = gsub.add_parser("mirror", help="graph plus a mirrored copy (+ .pairs)", parents=[common])
    m.add_argument("--input", help="edge list (default: bundled karate club)")
    m.add_argument("--bridge", help="node joined to its mirror, or 'a,b'")
    er = gsub.add_parser("er", help="Erdos-Renyi graph", parents=[common])
    er.add_argument("--n", type=int, required=True)
    er.add_argument("--avg-degree", type=float, default=10.0)
    ego = gsub.add_parser("egonet", help="heterogeneous stand-in for a social ego network", parents=[common])
    ego.add_argument("--n", type=int, default=224)
    ego.add_argument("--avg-degree", type=float, default=28.5)
    ego.add_argument("--max-degree", type=int, default=99)
    roles = gsub.add_parser("roles", help="graph of clique/hub/leaf/path templates (+ .labels)", parents=[common])
    roles.add_argument("--n", type=int, default=200)
    es = gsub.add_parser("edgesample", help="union of two edge samples (+ .pairs)", parents=[common])
    es.add_argument("--input", help="edge list (default: bundled karate club)")
    es.add_argument("--s", type=float, required=True, help="edge keep probability")
    for sp in (b, m, er, ego, roles, es):
        sp.add_argument("-o", "--output", required=True)
        sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
    gen.set_defaults(func=cmd_generate)

    ev = sub.add_parser("eval", help="evaluate embeddings")
    esub = ev.add_subparsers(dest="evaluation", required=True)
    ep = esub.add_parser("pairs", help="distances of given node pairs against all pairs", parents=[common])
    ep.add_argument("--embedding", required=True)
    ep.add_argument("--pairs", required=True, help="file with one 'a b' label pair per line")
    ep.add_argument("--threshold", type=float, default=0.25, help="fraction of the largest distance")
    ep.set_defaults(func=eval_pairs)
    ec = esub.add_parser("correlation", help="structural distance vs embedding distance per layer", parents=[common])
    ec.add_argument("--embedding", required=True)
    ec.add_argument("--graph", help="edge list (default: bundled karate club)")
    ec.add_argument("--distances", help="precomputed distance table")
    ec.add_argument("--layers", default="0,2,4,6")
    ec.set_defaults(func=eval_correlation)
    cl = esub.add_parser("classify", help="logistic-regression accuracy on node labels", parents=[common])
    cl.add_argument("--embedding", required=True)
    grp = cl.add_mutually_exclusive_group(required=True)
    grp.add_argument("--labels", help="file with 'node class' lines")
    grp.add_argument("--activity", help="file with 'node score' lines, labelled by quartile")
    cl.add_argument("--graph", help="also score a degree-only baseline on this graph")
    cl.add_argument("--repeats", type=int, default=10)
    cl.add_argument("--seed", type=int, default=DEFAULT_SEED)
    cl.set_defaults(func=eval_classify)
    sc = esub.add_parser("scaling", help="pipeline wall time on random graphs of growing size", parents=[common])
    sc.add_argument("--sizes", default="1000,4000,16000")
    sc.add_argument("--avg-degree", type=float, default=10.0)
    sc.add_argument("--preset", choices=sorted(PRESETS), default="scale-fig7")
    sc.add_argument("--repeats", type=int, default=1)
    sc.add_argument("--threads", type=int, default=1)
    sc.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sc.set_defaults(func=eval_scaling)
    for sp in (ep, ec, cl, sc):
        sp.add_argument("-o", "--output", help="CSV path (default: stdout)")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
