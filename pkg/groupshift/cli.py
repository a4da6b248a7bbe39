"""
Command-line entry point for groupshift.
"""

import argparse
import json
import logging
import math
import sys
from pathlib import Path
from typing import Callable, List, Optional, Sequence

from groupshift import __version__
from groupshift.chart import check_cocycle, embed, freeness_check
from groupshift.config import Budget
from groupshift.entropy import DEFAULT_CAP, NEGATIVE_INFINITY, SubsetFamily, estimate, exact_z, strip_lower_bound
from groupshift.exceptions import GroupShiftError, NonConvergence, ResourceLimit, SpecError
from groupshift.group import GroupSpec
from groupshift.pattern import Inconsistent, resolve_coding, support
from groupshift.reduction import core, entropy_reducing_sft, overlay_sft
from groupshift.serialization import (
    Workspace,
    cells_from_json,
    cells_to_json,
    dumps,
    factor_map_to_json,
    pattern_to_json,
    sft_to_json,
)
from groupshift.sft import count_locally_admissible, locally_admissible, tiling_sft

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_SPEC_ERROR = 2
EXIT_RESOURCE_LIMIT = 3
EXIT_NONCONVERGENCE = 4


def configure_logging(verbosity: int) -> None:
    """WARNING by default, INFO with -v, DEBUG with -vv; always to stderr."""
    level = logging.WARNING if verbosity == 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(stream=sys.stderr, level=level, format="%(levelname)s %(name)s: %(message)s")


def format_number(value: float, bits: bool = False) -> str:
    if value == NEGATIVE_INFINITY:
        return "-inf"
    return f"{value / math.log(2) if bits else value:.9f}"


def emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
        logger.info(f"Wrote {out}")
    else:
        sys.stdout.write(text)


def run_validate(args: argparse.Namespace, ws: Workspace, budget: Budget) -> int:
    for path in args.paths:
        doc = ws.load(path)
        kind = doc.get("type", "sft")
        if kind == "group":
            ws.group(doc)
        elif kind == "sft":
            x = ws.sft(doc)
            logger.info(f"{path}: {len(x.forbidden)} forbidden patterns over {x.group.name}")
        elif kind == "chart":
            ws.chart(doc)
        elif kind == "tileset":
            ws.tileset(doc)
        elif kind == "tiling":
            ws.tiling(doc)
        elif kind == "coding":
            group, coding = ws.coding(doc)
            resolved = resolve_coding(group, coding)
            if isinstance(resolved, Inconsistent):
                logger.warning(f"{path}: inconsistent pattern coding: {resolved.describe()}")
        else:
            raise SpecError(f"{path}: unknown document type {kind!r}")
        print(f"ok {path}")
    return EXIT_OK


def run_sft_count(args: argparse.Namespace, ws: Workspace, budget: Budget) -> int:
    x = ws.sft(args.sft)
    window = ws.support(x.group, args.window)
    if args.patterns:
        found = locally_admissible(x, window, budget, args.jobs)
        print(len(found))
        for p in found:
            print(json.dumps(pattern_to_json(x.alphabet, p), ensure_ascii=False))
    else:
        print(count_locally_admissible(x, window, budget, args.jobs))
    return EXIT_OK


def run_sft_tiling(args: argparse.Namespace, ws: Workspace, budget: Budget) -> int:
    group = ws.group(args.group)
    group, tileset = ws.tileset(args.tiles, group)
    emit(dumps(sft_to_json(tiling_sft(group, tileset, budget=budget))), args.output)
    return EXIT_OK


def _windows(group: GroupSpec, path: Optional[str]) -> List:
    if path is None:
        return []
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise SpecError(f"cannot read windows from {path}: {e}") from e
    if not isinstance(doc, list):
        raise SpecError(f"{path} must hold a list of supports")
    return [cells_from_json(group, words).cells for words in doc]


def run_entropy_estimate(args: argparse.Namespace, ws: Workspace, budget: Budget) -> int:
    x = ws.sft(args.sft)
    path = args.family.split(":", 1)[1] if args.family.startswith("windows:") else None
    family = SubsetFamily.parse(args.family, _windows(x.group, path))
    trace = estimate(x, args.n_max, family, budget, jobs=args.jobs)
    text = trace.to_csv(args.bits)
    if args.csv:
        emit(text, args.csv)
        print(format_number(trace.final.value, args.bits))
    else:
        sys.stdout.write(text)
    return EXIT_OK


def run_entropy_exact_z(args: argparse.Namespace, ws: Workspace, budget: Budget) -> int:
    result = exact_z(ws.sft(args.sft), args.memory, budget)
    print(format_number(NEGATIVE_INFINITY if result.degenerate else result.entropy, args.bits))
    return EXIT_OK


def run_entropy_strip_bound(args: argparse.Namespace, ws: Workspace, budget: Budget) -> int:
    print(format_number(strip_lower_bound(ws.sft(args.sft), args.width, budget), args.bits))
    return EXIT_OK


def run_chart_embed(args: argparse.Namespace, ws: Workspace, budget: Budget) -> int:
    result = embed(ws.sft(args.sft), ws.chart(args.chart), budget=budget)
    emit(dumps(sft_to_json(result)), args.output)
    return EXIT_OK


def run_chart_check_cocycle(args: argparse.Namespace, ws: Workspace, budget: Budget) -> int:
    ch = ws.chart(args.chart)
    report = check_cocycle(ch, args.radius, args.samples, args.seed, budget=budget)
    print(report.describe())
    for failure in report.failures:
        print(f"{failure.reason}: {failure.pattern.describe(ch.sft.alphabet)}")
    return EXIT_OK if not report.failures else EXIT_SPEC_ERROR


def run_chart_freeness(args: argparse.Namespace, ws: Workspace, budget: Budget) -> int:
    report = freeness_check(ws.chart(args.chart), args.radius, args.length, budget=budget)
    print(report.describe())
    return EXIT_OK


def run_reduce_core(args: argparse.Namespace, ws: Workspace, budget: Budget) -> int:
    group = ws.group(args.group)
    result = core(ws.support(group, args.tile), ws.support(group, args.kernel), group)
    print(json.dumps(cells_to_json(result.cells), ensure_ascii=False))
    return EXIT_OK


def run_reduce_language(args: argparse.Namespace, ws: Workspace, budget: Budget) -> int:
    x = ws.sft(args.sft)
    result = entropy_reducing_sft(x, ws.support(x.group, args.window), ws.language(x, args.language), budget)
    emit(dumps(sft_to_json(result)), args.output)
    return EXIT_OK


def run_reduce_overlay(args: argparse.Namespace, ws: Workspace, budget: Budget) -> int:
    x = ws.sft(args.sft)
    group, tileset = ws.tileset(args.tiles, x.group)
    kernel = ws.support(group, args.K)
    doc = ws.load(args.tiling) if Path(args.tiling).is_file() else None
    if doc is not None and doc.get("type") == "tiling":
        # restrict all tilings to the language of the given periodic one
        tiling = ws.tiling(doc)
        if tiling.tileset != tileset:
            raise SpecError("the periodic tiling uses a different tile set than --tiles")
        window = ws.support(group, args.window) if args.window else support(group, tileset.union)
        constraints = entropy_reducing_sft(tiling_sft(group, tileset, budget=budget), window, tiling.language(window), budget)
    else:
        constraints = ws.sft(args.tiling)
    result, factor_map = overlay_sft(x, tileset, constraints, kernel, budget)
    emit(dumps(sft_to_json(result)), args.output)
    if args.factor_map:
        emit(dumps(factor_map_to_json(factor_map, factor_map.materialize())), args.factor_map)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="groupshift", description="Subshifts of finite type on finitely generated groups")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="INFO with -v, DEBUG with -vv")
    parser.add_argument("--jobs", type=int, default=1, help="Worker threads for exhaustive searches")
    parser.add_argument("--budget-nodes", type=int, default=None, help="Search node budget (overrides GROUPSHIFT_BUDGET_NODES)")
    commands = parser.add_subparsers(dest="command", metavar="<command>")

    validate = commands.add_parser("validate", help="Parse and check documents")
    validate.add_argument("paths", nargs="+")
    validate.set_defaults(handler=run_validate)

    sft = commands.add_parser("sft", help="Counting and tiling SFTs").add_subparsers(dest="action", metavar="<action>")
    count = sft.add_parser("count", help="Count locally admissible patterns on a window")
    count.add_argument("--sft", required=True)
    count.add_argument("--window", required=True)
    count.add_argument("--patterns", action="store_true", help="Also print the patterns, one JSON object per line")
    count.set_defaults(handler=run_sft_count)
    tiling = sft.add_parser("tiling", help="SFT of all tilings by a tile set")
    tiling.add_argument("--group", required=True)
    tiling.add_argument("--tiles", required=True)
    tiling.add_argument("-o", "--output")
    tiling.set_defaults(handler=run_sft_tiling)

    entropy = commands.add_parser("entropy", help="Entropy bounds").add_subparsers(dest="action", metavar="<action>")
    est = entropy.add_parser("estimate", help="Monotone dyadic upper bounds h_n")
    est.add_argument("--sft", required=True)
    est.add_argument("--n-max", type=int, required=True)
    est.add_argument("--family", default=f"capped:{DEFAULT_CAP}", help="capped:C (default capped:12), balls or windows:PATH")
    est.add_argument("--csv")
    est.add_argument("--bits", action="store_true")
    est.set_defaults(handler=run_entropy_estimate)
    exact = entropy.add_parser("exact-z", help="Exact entropy of a Z-SFT")
    exact.add_argument("--sft", required=True)
    exact.add_argument("--memory", type=int, required=True)
    exact.add_argument("--bits", action="store_true")
    exact.set_defaults(handler=run_entropy_exact_z)
    strip = entropy.add_parser("strip-bound", help="Strip transfer-matrix estimate for Z^2")
    strip.add_argument("--sft", required=True)
    strip.add_argument("--width", type=int, required=True)
    strip.add_argument("--bits", action="store_true")
    strip.set_defaults(handler=run_entropy_strip_bound)

    chart = commands.add_parser("chart", help="Charts and embeddings").add_subparsers(dest="action", metavar="<action>")
    emb = chart.add_parser("embed", help="Embed an H-SFT through a chart")
    emb.add_argument("--sft", required=True)
    emb.add_argument("--chart", required=True)
    emb.add_argument("-o", "--output")
    emb.set_defaults(handler=run_chart_embed)
    cocycle = chart.add_parser("check-cocycle", help="Spot-check the cocycle laws")
    cocycle.add_argument("--chart", required=True)
    cocycle.add_argument("--radius", type=int, default=2)
    cocycle.add_argument("--samples", type=int, default=100)
    cocycle.add_argument("--seed", type=int, default=0)
    cocycle.set_defaults(handler=run_chart_check_cocycle)
    free = chart.add_parser("freeness", help="Search for non-free orbit witnesses")
    free.add_argument("--chart", required=True)
    free.add_argument("--radius", type=int, default=2)
    free.add_argument("--length", type=int, default=4)
    free.set_defaults(handler=run_chart_freeness)

    reduce = commands.add_parser("reduce", help="Cores, language restriction and overlays").add_subparsers(
        dest="action", metavar="<action>"
    )
    kcore = reduce.add_parser("core", help="K-core of a tile")
    kcore.add_argument("--group", required=True)
    kcore.add_argument("--tile", required=True)
    kcore.add_argument("--kernel", required=True)
    kcore.set_defaults(handler=run_reduce_core)
    language = reduce.add_parser("language", help="Forbid every window pattern outside a sample language")
    language.add_argument("--sft", required=True)
    language.add_argument("--window", required=True)
    language.add_argument("--language", required=True)
    language.add_argument("-o", "--output")
    language.set_defaults(handler=run_reduce_language)
    overlay = reduce.add_parser("overlay", help="Overlay an SFT with a tiling")
    overlay.add_argument("--sft", required=True)
    overlay.add_argument("--tiles", required=True)
    overlay.add_argument("--tiling", required=True, help="Tiling constraint SFT, or a periodic tiling document")
    overlay.add_argument("--K", required=True)
    overlay.add_argument("--window", help="Window whose tiling language is kept (periodic tiling only)")
    overlay.add_argument("-o", "--output")
    overlay.add_argument("--factor-map")
    overlay.set_defaults(handler=run_reduce_overlay)
    return parser


Handler = Callable[[argparse.Namespace, Workspace, Budget], int]


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main CLI entry point; returns the exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose)
    handler: Optional[Handler] = getattr(args, "handler", None)
    if handler is None:
        parser.print_help()
        return 1

    try:
        budget = Budget.from_env().with_overrides(nodes=args.budget_nodes)
        if args.jobs < 1:
            raise SpecError("--jobs must be positive")
        return handler(args, Workspace(), budget)
    except ResourceLimit as e:
        print(f"resource limit: {e}", file=sys.stderr)
        return EXIT_RESOURCE_LIMIT
    except NonConvergence as e:
        print(f"no convergence: {e}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except (SpecError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_SPEC_ERROR
    except GroupShiftError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_SPEC_ERROR


if __name__ == "__main__":
    sys.exit(main())
