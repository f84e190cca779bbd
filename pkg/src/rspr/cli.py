"""Command-line entry points.

Exit codes: 0 success, 1 usage error, 2 verification failure, 3 internal
assertion.  Every output file starts with comment lines recording the full
invocation and seed, so identical flags give byte-identical files.
"""

from __future__ import annotations

import argparse
import shlex
import sys
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .analysis import (
    CLASS_COLUMNS,
    CURVATURE_COLUMNS,
    HISTOGRAM_COLUMNS,
    STATS_COLUMNS,
    AllCapped,
    class_stats,
    curvature_rows,
    emit_report,
    histogram_rows,
    stats_rows,
)
from .curvature import CurvatureContext, compute_records, select_classes
from .graph import (
    MAX_ENUMERATION_N,
    build_full_graph,
    build_graph,
    double_factorial,
    enumerate_all_keys,
    write_edge_list,
)
from .parallel import default_threads, parallel_map
from .spr import degree, iter_moves, _move_key
from .suite import bound_suite
from .tanglegram import classes_from_shapes, shape_representatives
from .tree import NewickError, ladder, parse_newick
from .walks import WalkKind, access_histogram, simulate_walk

__all__ = ["main", "RunConfig", "UsageError"]

PROG = "rspr"
MAX_GRAPH_N = 8
PAIR_N = (4, 7)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


@dataclass(frozen=True)
class RunConfig:
    """Validated flags shared by the subcommands."""

    command: str
    n: int | None
    seed: int
    kind: WalkKind
    replicates: int
    cap: int | None
    steps: int
    pairs: str
    per_distance: int
    out: Path
    fmt: str
    threads: int
    trees_file: Path | None
    tree: str | None
    argv: tuple[str, ...]

    def header(self) -> list[str]:
        return [f"invocation: {PROG} {shlex.join(self.argv)}", f"seed: {self.seed}"]


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog=PROG, description="rSPR graphs, random walks and Ricci-Ollivier curvature")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, n=True, out=True):
        if n:
            sp.add_argument("--n", type=int, help="number of leaves")
        sp.add_argument("--seed", type=int, default=0, help="master random seed (default 0)")
        if out:
            sp.add_argument("--out", default=".", help="output directory (default: current directory)")
            sp.add_argument("--format", dest="fmt", choices=("csv", "json"), default="csv", help="table format")
        sp.add_argument("--threads", type=int, default=None, help="worker processes for pair-level work")

    sp = sub.add_parser("enumerate", help="write every tree on n leaves (Newick, one per line)")
    common(sp)
    sp = sub.add_parser("graph", help="build an rSPR graph and write an edge list plus vertex file")
    common(sp)
    sp.add_argument("--trees", help="Newick file; build the induced subgraph on these trees")
    sp = sub.add_parser("degree", help="print the rSPR degree of a tree")
    common(sp, n=False, out=False)
    sp.add_argument("--tree", required=True, help="Newick string")
    sp = sub.add_parser("neighbors", help="print every rSPR neighbor of a tree with its move")
    common(sp, n=False, out=False)
    sp.add_argument("--tree", required=True, help="Newick string")
    sp = sub.add_parser("walk", help="simulate a walk and write visit counts")
    common(sp)
    sp.add_argument("--kind", choices=("uniform", "mh"), default="mh")
    sp.add_argument("--p", default="1", help="laziness: move with probability p (default 1)")
    sp.add_argument("--steps", type=int, default=200_000)
    sp.add_argument("--tree", help="start tree (default: the ladder)")
    sp = sub.add_parser("access", help="access-time histograms and per-class statistics")
    common(sp)
    sp.add_argument("--kind", choices=("uniform", "mh"), default="mh")
    sp.add_argument("--p", default="1")
    sp.add_argument("--replicates", type=int, default=10_000)
    sp.add_argument("--cap", type=int, default=None, help="step cap per run (default 100 * number of trees)")
    sp.add_argument("--pairs", choices=("all", "adjacent", "sample"), default="all")
    sp.add_argument("--per-distance", type=int, default=50, help="classes per distance for --pairs sample")
    sp = sub.add_parser("curvature", help="curvature records per pair class")
    common(sp)
    sp.add_argument("--pairs", choices=("all", "adjacent", "sample"), default="adjacent")
    sp.add_argument("--kind", choices=("uniform", "mh"), default="uniform", help="walk whose ric fills the ric columns")
    sp.add_argument("--per-distance", type=int, default=50)
    sp = sub.add_parser("classes", help="pair classes under leaf relabeling")
    common(sp)
    sp.add_argument("--pairs", choices=("all", "adjacent"), default="all")
    sp = sub.add_parser("verify", help="run the degree and curvature bound suite")
    common(sp)
    sp.add_argument("--pairs", choices=("all", "adjacent", "sample"), default=None)
    sp.add_argument("--per-distance", type=int, default=50)
    return p


def _config(ns: argparse.Namespace, argv: Sequence[str]) -> RunConfig:
    cmd = ns.command
    n = getattr(ns, "n", None)
    need_n = cmd in ("enumerate", "walk", "access", "curvature", "classes", "verify") or (
        cmd == "graph" and not getattr(ns, "trees", None)
    )
    if cmd == "graph" and ns.trees and n is not None:
        raise UsageError("give either --n or --trees, not both")
    if need_n:
        if n is None:
            raise UsageError(f"{cmd} needs --n")
        lo, hi = {
            "enumerate": (3, MAX_ENUMERATION_N),
            "graph": (3, MAX_GRAPH_N),
            "walk": (3, MAX_ENUMERATION_N),
        }.get(cmd, PAIR_N)
        if not lo <= n <= hi:
            raise UsageError(f"{cmd}: n={n} outside the supported range [{lo}, {hi}]")
    threads = ns.threads if ns.threads is not None else default_threads()
    if threads < 1:
        raise UsageError("--threads must be at least 1")
    try:
        p = Fraction(getattr(ns, "p", "1"))
        kind = WalkKind.parse(getattr(ns, "kind", "uniform"), p)
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(str(exc)) from None
    replicates = getattr(ns, "replicates", 1)
    steps = getattr(ns, "steps", 1)
    cap = getattr(ns, "cap", None)
    per = getattr(ns, "per_distance", 50)
    if replicates < 1 or steps < 1 or per < 1 or (cap is not None and cap < 1):
        raise UsageError("counts (--replicates, --steps, --cap, --per-distance) must be positive")
    trees_file = Path(ns.trees) if getattr(ns, "trees", None) else None
    if trees_file is not None and not trees_file.is_file():
        raise UsageError(f"no such file: {trees_file}")
    tree = getattr(ns, "tree", None)
    if tree is not None:
        try:
            tree = parse_newick(tree).key
        except NewickError as exc:
            raise UsageError(f"--tree: {exc}") from None
        if cmd == "walk" and parse_newick(tree).n != n:
            raise UsageError("--tree has a different number of leaves than --n")
    return RunConfig(
        command=cmd,
        n=n,
        seed=ns.seed,
        kind=kind,
        replicates=replicates,
        cap=cap,
        steps=steps,
        pairs=getattr(ns, "pairs", None) or "",
        per_distance=per,
        out=Path(getattr(ns, "out", ".")),
        fmt=getattr(ns, "fmt", "csv"),
        threads=threads,
        trees_file=trees_file,
        tree=tree,
        argv=tuple(argv),
    )


def _open(cfg: RunConfig, name: str):
    cfg.out.mkdir(parents=True, exist_ok=True)
    return open(cfg.out / name, "w", encoding="utf-8", newline="")


def _table_name(cfg: RunConfig, stem: str) -> str:
    return f"{stem}.{cfg.fmt}"


def read_tree_file(path: Path) -> list[str]:
    keys = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                keys.append(parse_newick(line).key)
            except NewickError as exc:
                raise UsageError(f"{path}:{lineno}: {exc}") from None
    return keys


def cmd_enumerate(cfg: RunConfig) -> int:
    keys = enumerate_all_keys(cfg.n)
    with _open(cfg, "trees.nwk") as fh:
        for line in cfg.header():
            fh.write(f"# {line}\n")
        fh.writelines(k + "\n" for k in keys)
    print(f"{len(keys)} trees (expected (2n-3)!! = {double_factorial(2 * cfg.n - 3)})")
    return 0


def cmd_graph(cfg: RunConfig) -> int:
    if cfg.trees_file is not None:
        keys = read_tree_file(cfg.trees_file)
        if len(set(keys)) != len(keys):
            raise UsageError("duplicate trees in the input file")
        ns = {parse_newick(k).n for k in keys}
        if len(ns) > 1:
            raise UsageError("input trees have different leaf counts")
        g = build_graph(keys)
    else:
        g = build_full_graph(cfg.n)
    with _open(cfg, "edges.txt") as ef, _open(cfg, "vertices.txt") as vf:
        write_edge_list(g, ef, vf, header=cfg.header())
    print(f"{len(g)} vertices, {g.edge_count} edges")
    return 0


def cmd_degree(cfg: RunConfig) -> int:
    print(degree(parse_newick(cfg.tree)))
    return 0


def cmd_neighbors(cfg: RunConfig) -> int:
    t = parse_newick(cfg.tree)
    for mv in iter_moves(t):
        print(f"{mv.source}\t{mv.dest}\t{_move_key(t, mv.source, mv.dest)}")
    return 0


def cmd_walk(cfg: RunConfig) -> int:
    start = cfg.tree or ladder(cfg.n).key
    visits = simulate_walk(start, cfg.kind, cfg.steps, cfg.seed)
    with _open(cfg, _table_name(cfg, "visits")) as fh:
        rows = [{"class_key": k, "visits": c, "degree": degree(parse_newick(k))} for k, c in visits.items()]
        emit_report(rows, ("class_key", "degree", "visits"), fh, cfg.fmt, cfg.header())
    print(f"{cfg.steps} steps, {len(visits)} distinct trees visited")
    return 0


def _classes(cfg: RunConfig):
    g = build_full_graph(cfg.n)
    ctx = CurvatureContext(g)
    return g, ctx, select_classes(g, cfg.pairs, ctx, per_distance=cfg.per_distance, seed=cfg.seed)


def _access_worker(args):
    key1, key2, ck, kind, replicates, seed, cap = args
    return access_histogram(key1, key2, kind, replicates, seed, cap, class_key=ck)


def cmd_access(cfg: RunConfig) -> int:
    g, ctx, classes = _classes(cfg)
    cap = cfg.cap or 100 * len(g)
    records = compute_records(classes, ctx, with_ric=False, threads=cfg.threads)
    jobs = [(pc.key1, pc.key2, pc.canonical_key, cfg.kind, cfg.replicates, cfg.seed, cap) for pc in classes]
    hists = parallel_map(_access_worker, jobs, cfg.threads)
    items = []
    for h, r in zip(hists, records):
        kap = r.kappa_mh if cfg.kind.tag == "metropolis_hastings" else r.kappa
        try:
            items.append(class_stats(h, r, kap))
        except AllCapped:
            print(f"warning: every run capped for {r.class_key}", file=sys.stderr)
    with _open(cfg, _table_name(cfg, "histograms")) as fh:
        emit_report(histogram_rows(zip(hists, records)), HISTOGRAM_COLUMNS, fh, cfg.fmt, cfg.header())
    with _open(cfg, _table_name(cfg, "stats")) as fh:
        emit_report(stats_rows(items), STATS_COLUMNS, fh, cfg.fmt, cfg.header())
    print(f"{len(classes)} classes, {cfg.replicates} replicates each, cap {cap}")
    return 0


def cmd_curvature(cfg: RunConfig) -> int:
    g, ctx, classes = _classes(cfg)
    records = compute_records(classes, ctx, with_ric=True, threads=cfg.threads)
    if cfg.kind.tag == "metropolis_hastings":
        records = [replace(r, ric=r.ric_mh) for r in records]
    with _open(cfg, _table_name(cfg, "curvature")) as fh:
        emit_report(curvature_rows(records), CURVATURE_COLUMNS, fh, cfg.fmt, cfg.header() + [f"ric walk: {cfg.kind.short}"])
    print(f"{len(records)} classes")
    return 0


def cmd_classes(cfg: RunConfig) -> int:
    g = build_full_graph(cfg.n)
    ctx = CurvatureContext(g)
    shapes = shape_representatives(g.vertices)
    partners = (lambda k: g.vertices) if cfg.pairs == "all" else (lambda k: [g.vertices[j] for j in g.adjacency[g.index_of[k]]])
    classes = list(classes_from_shapes(shapes, partners).values())
    dists = [ctx.distance(pc.key1, pc.key2) for pc in classes]
    rows = [
        {"canonical_key": pc.canonical_key, "rep_newick_1": pc.key1, "rep_newick_2": pc.key2, "distance": d, "class_size": pc.class_size}
        for pc, d in zip(classes, dists)
    ]
    with _open(cfg, _table_name(cfg, "classes")) as fh:
        emit_report(rows, CLASS_COLUMNS, fh, cfg.fmt, cfg.header())
    print(f"{len(classes)} classes covering {sum(pc.class_size for pc in classes)} ordered pairs")
    return 0


def cmd_verify(cfg: RunConfig) -> int:
    g = build_full_graph(cfg.n)
    report = bound_suite(g, pairs=cfg.pairs or None, per_distance=cfg.per_distance, seed=cfg.seed, threads=cfg.threads)
    lines = report.lines()
    with _open(cfg, "verify.txt") as fh:
        for line in cfg.header():
            fh.write(f"# {line}\n")
        fh.writelines(line + "\n" for line in lines)
    print("\n".join(lines))
    failed = [c.name for c in report.checks if not c.passed]
    print(f"diameter {report.diameter}; {len(report.records)} classes; " + (f"FAILED: {', '.join(failed)}" if failed else "all checks passed"))
    return 0 if report.ok else 2


COMMANDS = {
    "enumerate": cmd_enumerate,
    "graph": cmd_graph,
    "degree": cmd_degree,
    "neighbors": cmd_neighbors,
    "walk": cmd_walk,
    "access": cmd_access,
    "curvature": cmd_curvature,
    "classes": cmd_classes,
    "verify": cmd_verify,
}


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        ns = _build_parser().parse_args(argv)
        cfg = _config(ns, argv)
        return COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except AssertionError as exc:
        print(f"{PROG}: internal assertion failed: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"{PROG}: I/O error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
