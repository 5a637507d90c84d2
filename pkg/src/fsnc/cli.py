"""Command-line entry point: ``fsnc {ingest,split,run,sweep,gradcheck,report}``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from .config import ConfigError, RunConfig, load_config
from .episodes import InsufficientClassesError
from .graph import Graph, GraphFormatError, load_graph, read_meta, save_graph
from .gradcheck import run_suite
from .ingest import READERS, TABLE_HEADER, table_row
from .methods import build_method
from .protocol import REPORT_SCHEMA_VERSION, RunReport, check_views, run_protocol
from .splits import PARTITIONS, ClassSplit, build_views, edge_cut_audit, split_classes

log = logging.getLogger("fsnc")

REPORT_CSV_COLUMNS = ["method", "setting", "dataset", "N", "K", "Q", "seed", "repeat", "test_accuracy",
                      "best_dev_accuracy", "best_epoch", "stop_epoch"]
SWEEP_CSV_COLUMNS = ["method", "setting", "N", "K", "mean", "ci"]


class CommandError(Exception):
    pass


def _int_list(text: str) -> list[int]:
    try:
        values = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _split_seed(text: str):
    return text if text in ("fixed", "manifest") else int(text)


def _fmt_float(x: float) -> str:
    # repr round-trips exactly, so equal floats always print identically
    return repr(float(x))


# --------------------------------------------------------------------------- ingest / split


def cmd_ingest(args) -> int:
    graph, class_names, stats = READERS[args.format](args.input, args.name)
    split = split_classes(graph, args.split).as_dict() if args.split else None
    out = save_graph(graph, args.out, split)
    with (out / "classes.tsv").open("w") as f:
        for i, name in enumerate(class_names):
            f.write(f"{i}\t{name}\n")
    if stats.duplicate_edges:
        print(f"warning: collapsed {stats.duplicate_edges} duplicate edge entries "
              "(reverse directions count as duplicates)", file=sys.stderr)
    if stats.self_loops:
        print(f"warning: dropped {stats.self_loops} self-loops", file=sys.stderr)
    if stats.dangling_edges:
        print(f"warning: dropped {stats.dangling_edges} edges to unknown nodes", file=sys.stderr)
    print(TABLE_HEADER)
    print(table_row(graph, args.split))
    print(f"edge lines read: {stats.edge_lines}; written to {out}")
    return 0


def _stored_split(meta: dict, graph: Graph) -> ClassSplit | None:
    stored = meta.get("class_split")
    return None if stored is None else ClassSplit.from_dict(stored, graph.n_classes)


def resolve_split(graph: Graph, meta: dict, sizes, seed) -> ClassSplit:
    """Split from explicit sizes and seed, or the one stored with the dataset."""
    if seed == "manifest" or sizes is None:
        stored = _stored_split(meta, graph)
        if stored is not None and seed in ("manifest", "fixed"):
            return stored
        if seed == "manifest":
            raise CommandError("split seed is 'manifest' but the dataset stores no class_split")
        if stored is None:
            raise CommandError("no split sizes given and the dataset stores no class_split")
        sizes = stored.sizes()
    return split_classes(graph, sizes, seed)


def cmd_split(args) -> int:
    graph = load_graph(args.dataset)
    split = resolve_split(graph, read_meta(args.dataset), args.sizes, args.seed)
    views = build_views(graph, split, args.setting)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for p in PARTITIONS:
        view = views[p]
        manifest = {
            "partition": p,
            "setting": args.setting,
            "classes": list(split.classes(p)),
            "n_nodes": view.graph.n_nodes,
            "n_edges": view.graph.n_edges,
            "nodes": [int(i) for i in view.to_global],
        }
        (out / f"{p}.json").write_text(json.dumps(manifest) + "\n")
    audit = edge_cut_audit(graph, split)
    (out / "edge_cut.json").write_text(json.dumps(audit, indent=2) + "\n")
    print(f"split {split.as_dict()} -> {out}")
    print(f"edges: total={audit['total_edges']} intra={audit['intra']} "
          f"cross_partition={audit['cross_partition_edges']}")
    return 0


# --------------------------------------------------------------------------- run / sweep


def _prepare(cfg: RunConfig):
    graph = load_graph(cfg.dataset)
    split = resolve_split(graph, read_meta(cfg.dataset), cfg.split_sizes, cfg.split_seed)
    return graph, split


def _report_dict(report: RunReport, cfg: RunConfig, split: ClassSplit) -> dict:
    d = report.to_dict()
    d["config"] = cfg.resolved()
    d["config"]["split"]["classes"] = split.as_dict()
    return d


def write_report(report: RunReport, cfg: RunConfig, split: ClassSplit, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(_report_dict(report, cfg, split), indent=2) + "\n")
    with (out / "report.csv").open("w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(REPORT_CSV_COLUMNS)
        for r in report.repeats:
            w.writerow([report.method, report.setting, report.dataset, cfg.N, cfg.K, cfg.Q, cfg.seed,
                        r.repeat, _fmt_float(r.test_accuracy), _fmt_float(r.best_dev_accuracy),
                        r.best_epoch, r.stop_epoch])


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.out:
        cfg.out = Path(args.out)
    graph, split = _prepare(cfg)
    protocol = cfg.protocol()
    if args.dry_run:
        views = build_views(graph, split, protocol.setting)
        check_views(build_method(protocol.method, protocol.spec), views, protocol.spec)
        print(f"config ok: {graph.name} {protocol.setting} {protocol.method.method} "
              f"{cfg.N}-way {cfg.K}-shot; split {split.as_dict()}")
        return 0
    report = run_protocol(graph, split, protocol, jobs=args.jobs, checkpoint_dir=cfg.out / "checkpoints")
    write_report(report, cfg, split, cfg.out)
    print(f"{report.method} {report.setting} {report.dataset} {cfg.N}-way {cfg.K}-shot: "
          f"{100 * report.mean:.2f} ± {100 * report.ci95:.2f}  -> {cfg.out}")
    return 0


def cmd_sweep(args) -> int:
    base = load_config(args.config)
    graph, split = _prepare(base)
    out = Path(args.out) if args.out else base.out
    # fail before any training if some (N, K) pair cannot be sampled
    for n in args.n:
        for k in args.k:
            proto = base.with_shots(n, k).protocol()
            check_views(build_method(proto.method, proto.spec), build_views(graph, split, proto.setting), proto.spec)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for n in args.n:
        for k in args.k:
            cfg = base.with_shots(n, k)
            report = run_protocol(graph, split, cfg.protocol(), jobs=args.jobs)
            rows.append([report.method, report.setting, n, k, _fmt_float(report.mean), _fmt_float(report.ci95)])
            print(f"N={n} K={k}: {100 * report.mean:.2f} ± {100 * report.ci95:.2f}")
    with (out / "sweep.csv").open("w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(SWEEP_CSV_COLUMNS)
        w.writerows(rows)
    (out / "sweep_config.json").write_text(json.dumps(base.resolved(), indent=2) + "\n")
    print(f"wrote {out / 'sweep.csv'}")
    return 0


# --------------------------------------------------------------------------- gradcheck / report


def cmd_gradcheck(args) -> int:
    results = run_suite(instances=args.instances, h=args.h, tol=args.tol, seed=args.seed)
    for r in results:
        print(r.line())
    ok = all(r.passed for r in results)
    print("all gradient paths pass" if ok else "gradient check FAILED")
    return 0 if ok else 1


def cmd_report(args) -> int:
    print(f"{'dataset':<10} {'setting':<13} {'method':<9} {'N':>2} {'K':>2}  accuracy")
    for d in args.dirs:
        path = Path(d) / "report.json"
        if not path.is_file():
            raise CommandError(f"{path}: missing report")
        rep = json.loads(path.read_text())
        if rep.get("schema_version") != REPORT_SCHEMA_VERSION:
            raise CommandError(f"{path}: unsupported report schema {rep.get('schema_version')!r}")
        proto = rep["config"]["protocol"]
        print(f"{rep['dataset']:<10} {rep['setting']:<13} {rep['method']:<9} {proto['N']:>2} {proto['K']:>2}  "
              f"{100 * rep['mean']:.2f} ± {100 * rep['ci95']:.2f}")
    return 0


# --------------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fsnc", description="Few-shot node classification benchmark.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="convert raw citation data into a dataset directory")
    p.add_argument("--format", choices=sorted(READERS), required=True)
    p.add_argument("--input", required=True, help="directory holding the raw files")
    p.add_argument("--out", required=True)
    p.add_argument("--name", default=None)
    p.add_argument("--split", type=_int_list, default=None, help="class split sizes to store, e.g. 3,2,2")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("split", help="write per-partition manifests and an edge-cut audit")
    p.add_argument("--dataset", required=True)
    p.add_argument("--setting", choices=["transductive", "inductive"], default="inductive")
    p.add_argument("--sizes", type=_int_list, default=None)
    p.add_argument("--seed", type=_split_seed, default="fixed", help="integer, 'fixed' or 'manifest'")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("run", help="run the evaluation protocol from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None, help="override the config's output directory")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--dry-run", action="store_true", help="validate config, data and views without training")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run every (N, K) pair and write sweep.csv")
    p.add_argument("--config", required=True)
    p.add_argument("--n", type=_int_list, default=[2, 5])
    p.add_argument("--k", type=_int_list, default=[1, 3, 5])
    p.add_argument("--out", default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("gradcheck", help="finite-difference check of all gradient paths")
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--h", type=float, default=1e-5)
    p.add_argument("--instances", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("report", help="print mean ± CI for finished runs")
    p.add_argument("dirs", nargs="+")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "jobs", 1) < 1:
        print("fsnc: error: --jobs must be >= 1", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (CommandError, ConfigError, GraphFormatError, InsufficientClassesError, ValueError,
            FileNotFoundError) as e:
        print(f"fsnc {args.command}: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
