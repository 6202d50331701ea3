"""``conduit`` command line.

Exit codes: 0 success, 1 domain or validation error, 2 I/O or parse error.
"""

from __future__ import annotations

import argparse
import csv
import difflib
import hashlib
import io
import json
import sys
from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path

from . import __version__
from .centrality import Kind, centrality, rank, sweep_centrality
from .community import (
    LouvainConfig,
    Mode,
    community_report,
    detect,
    sweep_modularity,
)
from .export import dumps_adjacency, to_graphml
from .graph import (
    DEFAULT_THRESHOLDS,
    apply_threshold,
    apply_threshold_undirected,
    build_directed,
    normalize_thresholds,
    to_undirected,
)
from .paths import DEFAULT_ROUTE_CAP, RouteLimitError, best_routes
from .registry import (
    IncomeType,
    IngestError,
    RateMatrixError,
    default_registry,
    generate_synthetic,
    load_registry,
    parse_rate_matrix,
    read_rate_cells,
    validate,
    write_rate_matrix,
)

EXIT_OK, EXIT_DOMAIN, EXIT_IO = 0, 1, 2
MANIFEST = "manifest.json"


class DomainError(Exception):
    pass


@dataclass
class RunConfig:
    registry: str | None
    matrices: dict[IncomeType, str]
    thresholds: list[Decimal]
    mode: Mode = Mode.UNWEIGHTED
    seed: int = 0
    out: str | None = None
    fmt: str = "csv"
    epsilon: bool = False

    def echo(self) -> dict:
        return {
            "registry": self.registry,
            "matrices": {k.value: v for k, v in sorted(self.matrices.items())},
            "thresholds": [fmt_threshold(t) for t in self.thresholds],
            "mode": self.mode.value,
            "seed": self.seed,
            "format": self.fmt,
        }


@dataclass
class Run:
    config: RunConfig
    command: str
    outputs: list[str] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def write(self, name: str, text: str) -> None:
        out = Path(self.config.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(text, encoding="utf-8", newline="")
        self.outputs.append(name)

    def finish(self) -> None:
        if self.config.out is None or not self.outputs:
            return
        path = Path(self.config.out) / MANIFEST
        manifest = {"tool": "conduit", "version": __version__, "commands": {}}
        if path.exists():
            try:
                manifest = json.loads(path.read_text(encoding="utf-8"))
            except ValueError:
                pass
        inputs = {}
        for p in [self.config.registry, *self.config.matrices.values()]:
            if p:
                inputs[p] = sha256(p)
        manifest["version"] = __version__
        manifest.setdefault("commands", {})[self.command] = {
            "config": {**self.config.echo(), **self.extra},
            "inputs": inputs,
            "outputs": sorted(set(self.outputs)),
        }
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def fmt_threshold(t) -> str:
    return format(Decimal(str(t)), "f")


def fnum(x) -> str:
    return "" if x is None else f"{x:.6f}"


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def to_json(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


# --------------------------------------------------------------------------
# input loading


def _registry(cfg: RunConfig):
    return load_registry(cfg.registry) if cfg.registry else default_registry()


def _selected(cfg: RunConfig, income: str | None) -> list[IncomeType]:
    if income:
        it = IncomeType.parse(income)
        if it not in cfg.matrices:
            raise DomainError(f"no matrix given for {it.value}; pass --matrix-{it.value}")
        return [it]
    if not cfg.matrices:
        raise DomainError("no rate matrix given; pass --matrix-dividends/--matrix-interest/--matrix-royalties")
    return sorted(cfg.matrices)


def _load(cfg: RunConfig, income: str | None):
    registry = _registry(cfg)
    mats = {it: parse_rate_matrix(cfg.matrices[it], registry, it) for it in _selected(cfg, income)}
    return registry, mats


def _code(registry, code: str) -> int:
    if code in registry:
        return registry.id(code)
    near = difflib.get_close_matches(code, registry.codes, n=1)
    hint = f"; did you mean {near[0]!r}?" if near else ""
    raise DomainError(f"unknown jurisdiction code {code!r}{hint}")


def _tag(threshold) -> str:
    return "" if threshold is None else f"_t{fmt_threshold(threshold)}"


# --------------------------------------------------------------------------
# commands


def cmd_validate(cfg: RunConfig, args) -> int:
    registry = _registry(cfg)
    if not cfg.matrices:
        print(f"registry ok: {registry.n} jurisdictions", file=sys.stderr)
        return EXIT_OK
    status = EXIT_OK
    for it in sorted(cfg.matrices):
        path = cfg.matrices[it]
        matrix, report = read_rate_cells(path, registry, it)
        if report.ok:
            report.extend(validate(matrix, registry))
        else:
            report.warnings.extend(validate(matrix, registry).warnings)
        text = report.render()
        verdict = "ok" if report.ok else f"{len(report.errors)} error(s)"
        print(f"{path} [{it.value}]: {verdict}", file=sys.stderr)
        if text:
            print(text, file=sys.stderr)
        if not report.ok:
            status = EXIT_DOMAIN
    return status


def _ranking_payload(table, scores, it, kind, threshold):
    return {
        "income_type": it.value,
        "kind": kind.value,
        "threshold": None if threshold is None else fmt_threshold(threshold),
        "n": scores.n,
        "ranking": [
            {"rank": r, "code": c, "raw": round(raw, 6), "normalized": round(norm, 6)}
            for r, (c, raw, norm) in enumerate(table, start=1)
        ],
    }


def cmd_centrality(cfg: RunConfig, args, kind=None) -> int:
    kind = Kind(kind or args.kind)
    registry, mats = _load(cfg, args.income)
    run = Run(cfg, kind.value)
    threshold = args.threshold
    for it, m in mats.items():
        g = build_directed(m)
        if threshold is not None:
            g = apply_threshold(g, threshold)
        scores = centrality(g, kind)
        table = rank(scores, registry, args.top)
        csv_text = to_csv(
            ["rank", "code", "raw", "normalized"],
            [(r, c, fnum(raw), fnum(norm)) for r, (c, raw, norm) in enumerate(table, start=1)],
        )
        json_text = to_json(_ranking_payload(table, scores, it, kind, threshold))
        stem = f"{kind.value}_{it.value}{_tag(threshold)}"
        if cfg.out:
            run.write(stem + ".csv", csv_text)
            run.write(stem + ".json", json_text)
        else:
            sys.stdout.write(json_text if cfg.fmt == "json" else csv_text)
    run.extra = {"threshold": None if threshold is None else fmt_threshold(threshold),
                 "top": args.top, "kind": kind.value}
    run.finish()
    return EXIT_OK


def cmd_communities(cfg: RunConfig, args) -> int:
    registry, mats = _load(cfg, args.income)
    run = Run(cfg, "communities")
    config = LouvainConfig(seed=cfg.seed)
    t = args.threshold
    for it, m in mats.items():
        part, und = detect(m, t, cfg.mode, config)
        stem = f"communities_{it.value}{_tag(t)}"
        if part is None:
            print(f"{it.value}: no edges at threshold {fmt_threshold(t)}; modularity undefined",
                  file=sys.stderr)
            payload = {"income_type": it.value, "threshold": fmt_threshold(t),
                       "modularity": None, "groups": []}
            csv_text = to_csv(["group", "rank", "code", "centrality"], [])
        else:
            scores = centrality(apply_threshold(build_directed(m), t), Kind.LOAD)
            report = community_report(part, scores, registry)
            payload = {
                "income_type": it.value,
                "threshold": fmt_threshold(t),
                "mode": cfg.mode.value,
                "seed": cfg.seed,
                "modularity": round(part.modularity, 6),
                "community_count": part.community_count,
                "isolate_count": len(part.isolates),
                "converged": part.converged,
                "groups": [
                    {"label": g.label, "members": [{"code": c, "centrality": round(s, 6)} for c, s in g.members]}
                    for g in report.groups
                ],
            }
            csv_text = to_csv(
                ["group", "rank", "code", "centrality"],
                [(g, r, c, fnum(s)) for g, r, c, s in report.rows()],
            )
            print(f"{it.value}: modularity {part.modularity:.6f}, {part.community_count} communities, "
                  f"{len(part.isolates)} without links", file=sys.stderr)
        if cfg.out:
            run.write(stem + ".csv", csv_text)
            run.write(stem + ".json", to_json(payload))
        else:
            sys.stdout.write(to_json(payload) if cfg.fmt == "json" else csv_text)
    run.extra = {"threshold": fmt_threshold(t)}
    run.finish()
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, args) -> int:
    registry, mats = _load(cfg, args.income)
    if args.emit_curve and len(mats) > 1:
        raise DomainError("--emit-curve needs a single --income")
    if not cfg.out and not args.emit_curve:
        raise DomainError("sweep writes files; pass --out or --emit-curve")
    run = Run(cfg, "sweep")
    kind = Kind(args.kind)
    config = LouvainConfig(seed=cfg.seed)
    for it, m in mats.items():
        rows = []
        for t, scores in sweep_centrality(m, cfg.thresholds, kind):
            for v in range(scores.n):
                rows.append((fmt_threshold(t), registry.code(v), fnum(scores.raw[v]), fnum(scores.normalized[v])))
        curve = sweep_modularity(m, cfg.thresholds, cfg.mode, config)
        curve_text = to_csv(
            ["threshold", "modularity", "communities", "isolates"],
            [(fmt_threshold(p.threshold), fnum(p.modularity), p.community_count, p.isolate_count)
             for p in curve.points],
        )
        if cfg.out:
            run.write(f"sweep_{kind.value}_{it.value}.csv",
                      to_csv(["threshold", "code", "raw", "normalized"], rows))
            run.write(f"curve_{it.value}.csv", curve_text)
        if args.emit_curve:
            Path(args.emit_curve).parent.mkdir(parents=True, exist_ok=True)
            Path(args.emit_curve).write_text(curve_text, encoding="utf-8")
        best = curve.argmax()
        if best is None:
            print(f"{it.value}: modularity undefined at every threshold")
        else:
            print(f"{it.value}: peak modularity {best.modularity:.6f} at threshold "
                  f"{fmt_threshold(best.threshold)} ({best.community_count} communities)")
    run.extra = {"kind": kind.value}
    run.finish()
    return EXIT_OK


def cmd_route(cfg: RunConfig, args) -> int:
    it = IncomeType.parse(args.income)
    registry, mats = _load(cfg, it.value)
    i, j = _code(registry, args.src), _code(registry, args.dst)
    if i == j:
        raise DomainError("degenerate query: --from and --to are the same jurisdiction")
    g = build_directed(mats[it])
    if args.threshold is not None:
        g = apply_threshold(g, args.threshold)
    routes = best_routes(g, i, j, cap=args.cap)
    payload = {
        "income_type": it.value,
        "from": registry.code(i),
        "to": registry.code(j),
        "threshold": None if args.threshold is None else fmt_threshold(args.threshold),
        "routes": [r.to_dict(registry, with_weight=cfg.epsilon) for r in routes],
    }
    sys.stdout.write(to_json(payload))
    if not routes:
        print(f"no route from {registry.code(i)} to {registry.code(j)}", file=sys.stderr)
    else:
        r = routes[0]
        via = " -> ".join(registry.code(v) for v in r.path)
        saving = "" if r.saving is None else f", saving {r.saving:f} vs direct"
        more = f" (+{len(routes) - 1} tied)" if len(routes) > 1 else ""
        print(f"{via}: {r.total_rate:f}% over {r.hop_count} hop(s){saving}{more}", file=sys.stderr)
    return EXIT_OK


def cmd_export(cfg: RunConfig, args) -> int:
    registry, mats = _load(cfg, args.income)
    if not cfg.out:
        raise DomainError("export writes files; pass --out")
    run = Run(cfg, "export")
    t = args.threshold
    for it, m in mats.items():
        d = build_directed(m)
        u = to_undirected(d)
        if t is not None:
            d, u = apply_threshold(d, t), apply_threshold_undirected(u, t)
        for label, g in (("directed", d), ("undirected", u)):
            stem = f"{it.value}_{label}{_tag(t)}"
            run.write(stem + ".graphml", to_graphml(g, registry))
            run.write(stem + ".json", dumps_adjacency(g, registry))
    run.extra = {"threshold": None if t is None else fmt_threshold(t)}
    run.finish()
    return EXIT_OK


def cmd_synth(cfg: RunConfig, args) -> int:
    if not cfg.out:
        raise DomainError("synth writes files; pass --out")
    from .registry import JurisdictionRegistry

    width = len(str(args.n - 1))
    codes = [f"J{k:0{width}d}" for k in range(args.n)]
    registry = JurisdictionRegistry.from_codes(codes)
    run = Run(cfg, "synth")
    run.write("registry.csv", registry.to_csv())
    incomes = [IncomeType.parse(args.income)] if args.income else list(IncomeType)
    for k, it in enumerate(incomes):
        m = generate_synthetic(args.n, cfg.seed + k, args.profile, blocks=args.blocks, income_type=it)
        name = f"matrix_{it.value}.csv"
        write_rate_matrix(Path(cfg.out) / name, m, registry)
        run.outputs.append(name)
    run.extra = {"n": args.n, "profile": args.profile, "blocks": args.blocks}
    run.finish()
    return EXIT_OK


# --------------------------------------------------------------------------
# argument parsing


def _add_common(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--registry", default=d(None), help="registry CSV (default: shipped 165-jurisdiction list)")
    for it in IncomeType:
        p.add_argument(f"--matrix-{it.value}", dest=f"matrix_{it.value}", default=d(None),
                       metavar="CSV", help=f"{it.value} rate matrix")
    p.add_argument("--thresholds", default=d(",".join(map(str, DEFAULT_THRESHOLDS))),
                   help="comma-separated sweep thresholds (percent)")
    p.add_argument("--mode", choices=[m.value for m in Mode], default=d(Mode.UNWEIGHTED.value),
                   help="modularity affinity: edge presence or rate as weight")
    p.add_argument("--seed", type=int, default=d(0))
    p.add_argument("--out", default=d(None), help="output directory")
    p.add_argument("--format", dest="fmt", choices=["csv", "json"], default=d("csv"),
                   help="stdout format when --out is not given")
    p.add_argument("--epsilon", action="store_true", default=d(False),
                   help="show arc weights with the per-hop sanction included")


def _threshold(text):
    try:
        t = Decimal(text)
    except Exception:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not t.is_finite() or t < 0:
        raise argparse.ArgumentTypeError("threshold must be a non-negative number")
    return t


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="conduit",
        description="Conduit jurisdictions and communities in withholding-tax networks.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _add_common(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help):
        p = sub.add_parser(name, help=help)
        _add_common(p, suppress=True)
        return p

    add("validate", help="check registry and rate matrices")
    for name, kind in (("centrality", None), ("betweenness", Kind.BETWEENNESS)):
        p = add(name, help=f"rank jurisdictions by {'load' if kind is None else 'betweenness'} centrality")
        p.add_argument("--income")
        p.add_argument("--threshold", type=_threshold)
        p.add_argument("--top", type=int)
        if kind is None:
            p.add_argument("--kind", choices=[k.value for k in Kind], default=Kind.LOAD.value)
        else:
            p.set_defaults(kind=kind.value)
    p = add("communities", help="Louvain communities at one threshold")
    p.add_argument("--income")
    p.add_argument("--threshold", type=_threshold, default=Decimal(5))
    p = add("sweep", help="centrality and modularity across the threshold ladder")
    p.add_argument("--income")
    p.add_argument("--kind", choices=[k.value for k in Kind], default=Kind.LOAD.value)
    p.add_argument("--emit-curve", metavar="CSV")
    p = add("route", help="cheapest treaty-shopping routes between two jurisdictions")
    p.add_argument("--from", dest="src", required=True, metavar="CODE")
    p.add_argument("--to", dest="dst", required=True, metavar="CODE")
    p.add_argument("--income", default=IncomeType.DIVIDENDS.value)
    p.add_argument("--threshold", type=_threshold)
    p.add_argument("--cap", type=int, default=DEFAULT_ROUTE_CAP, help="maximum tied routes to enumerate")
    p = add("export", help="write GraphML and JSON adjacency files")
    p.add_argument("--income")
    p.add_argument("--threshold", type=_threshold)
    p = add("synth", help="write a synthetic registry and rate matrices")
    p.add_argument("--n", type=int, default=12)
    p.add_argument("--profile", choices=["uniform", "planted_communities", "zero_heavy"],
                   default="planted_communities")
    p.add_argument("--blocks", type=int, default=3)
    p.add_argument("--income")
    return parser


COMMANDS = {
    "validate": cmd_validate,
    "centrality": cmd_centrality,
    "betweenness": cmd_centrality,
    "communities": cmd_communities,
    "sweep": cmd_sweep,
    "route": cmd_route,
    "export": cmd_export,
    "synth": cmd_synth,
}


def config_from_args(args) -> RunConfig:
    matrices = {}
    for it in IncomeType:
        path = getattr(args, f"matrix_{it.value}", None)
        if path:
            matrices[it] = path
    return RunConfig(
        registry=args.registry,
        matrices=matrices,
        thresholds=normalize_thresholds(args.thresholds),
        mode=Mode(args.mode),
        seed=args.seed,
        out=args.out,
        fmt=args.fmt,
        epsilon=args.epsilon,
    )


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        return COMMANDS[args.command](cfg, args)
    except RateMatrixError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(exc.report.render(), file=sys.stderr)
        return EXIT_DOMAIN
    except (IngestError, OSError, UnicodeDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (DomainError, RouteLimitError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
