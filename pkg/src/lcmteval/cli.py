"""Command-line interface.

Each report table of the pipeline is reachable through its own subcommand so
individual stages can be inspected and tested; ``run`` drives the complete
chain.  Exit codes: 0 success, 1 campaign validation failure, 2 I/O or
format error, 3 violated statistical precondition.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from ._version import VERSION
from .corpus import SCORES_HEADER, Campaign, load_campaign, validate_campaign
from .errors import DataError, StatError, ToolkitError, ValidationFailure
from .metrics import CHARACTER, WHITESPACE, scheme_for_direction
from .pipeline import (
    PipelineState,
    format_validation_report,
    run_pipeline,
    score_tables_for_task,
)
from .ratings import (
    aggregate_segment_human,
    generate_traps,
    trap_schedule_count,
    znormalize,
)
from .reports import emit_sig_matrix, load_sig_matrix_csv, write_csv
from .seeding import derive_int

logger = logging.getLogger(__name__)


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None,
                        help="master seed (default: the config's seed)")
    parser.add_argument("--hybrids", type=int, default=1000, metavar="K",
                        help="hybrid systems per task for system-level correlation")
    parser.add_argument("--permutations", type=int, default=1000, metavar="R",
                        help="replicates for the segment-level permutation test")
    parser.add_argument("--bootstrap", type=int, default=1000, metavar="B",
                        help="paired bootstrap resamples for system comparison")
    parser.add_argument("--alpha", type=float, default=0.05,
                        help="significance threshold")
    parser.add_argument("--timing-cutoff", type=float, default=600.0,
                        help="seconds; annotations at or above are dropped from cut_ave")
    parser.add_argument("--include-traps", action="store_true",
                        help="keep trap ratings in the z-normalization groups")
    parser.add_argument("--length-unit", default=None,
                        choices=["characters", "whitespace-tokens", "provided-counts"],
                        help="override the config's length unit")
    parser.add_argument("--level", default="system", choices=["system", "segment"],
                        help="correlation level for best-variant selection")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads for resampling stages")


def _load(args) -> Campaign:
    campaign = load_campaign(args.config)
    if args.length_unit is not None and args.length_unit != campaign.config.length_unit:
        campaign = dataclasses.replace(
            campaign,
            config=dataclasses.replace(campaign.config, length_unit=args.length_unit),
        )
    return campaign


def _state(args) -> PipelineState:
    return PipelineState(
        _load(args),
        seed=args.seed,
        hybrids=args.hybrids,
        permutations=args.permutations,
        bootstrap=args.bootstrap,
        alpha=args.alpha,
        timing_cutoff=args.timing_cutoff,
        include_traps=args.include_traps,
        level=args.level,
        threads=args.threads,
    )


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_validate(args) -> int:
    campaign = _load(args)
    report = validate_campaign(campaign)
    print(format_validation_report(report))
    return 0 if report.ok else 1


def cmd_traps(args) -> int:
    campaign = _load(args)
    config = campaign.config
    seed = config.seed if args.seed is None else args.seed
    unit_scheme = {
        "characters": CHARACTER,
        "whitespace-tokens": WHITESPACE,
    }.get(config.length_unit)
    out = _out_dir(args)
    path = out / "traps.jsonl"
    n_written = 0
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for direction in config.directions:
            segments = campaign.segments_for_direction(direction)
            scheme = unit_scheme or scheme_for_direction(direction)
            for ratio in config.length_ratios:
                if not (0.0 < ratio < 1.0):
                    logger.warning(
                        "skipping ratio %s: traps need a ratio in (0, 1)", ratio
                    )
                    continue
                traps = generate_traps(
                    segments,
                    ratio,
                    args.count,
                    derive_int(seed, "traps-task", direction, repr(ratio)),
                    scheme=scheme,
                )
                for trap in traps:
                    fh.write(
                        json.dumps(
                            {
                                "seg_id": trap.seg_id,
                                "truncated_text": trap.truncated_text,
                                "original_reference": trap.original_reference,
                                "ratio": trap.ratio,
                            },
                            ensure_ascii=False,
                            sort_keys=True,
                        )
                        + "\n"
                    )
                    n_written += 1
    scheduled = trap_schedule_count(
        len(config.directions),
        len(config.length_ratios),
        config.annotators_per_task,
        args.count,
    )
    print(f"wrote {n_written} trap pairs to {path}")
    print(f"scheduled trap annotations: {scheduled}")
    return 0


def cmd_qc(args) -> int:
    state = _state(args)
    for path in state.emit_qc(_out_dir(args)):
        print(f"wrote {path}")
    return 0


def cmd_normalize(args) -> int:
    campaign = _load(args)
    normalized = znormalize(campaign.ratings, include_traps=args.include_traps)
    out = _out_dir(args)
    norm_path = out / "normalized_ratings.csv"
    write_csv(
        norm_path,
        ["annotator", "direction", "ratio", "seg_id", "system", "raw_score", "z"],
        [
            (
                r.annotator_id,
                r.task.direction,
                repr(r.task.ratio),
                r.seg_id,
                r.system_id,
                r.raw_score,
                repr(r.z),
            )
            for r in normalized
        ],
    )
    aggregated, warnings = aggregate_segment_human(
        normalized, annotators_per_task=campaign.config.annotators_per_task
    )
    for w in warnings:
        logger.warning("aggregation: %s", w)
    agg_path = out / "human_segment_scores.csv"
    write_csv(
        agg_path,
        ["direction", "ratio", "system", "seg_id", "z_mean"],
        [
            (task.direction, repr(task.ratio), system, seg_id, repr(value))
            for (task, system, seg_id), value in aggregated.items()
        ],
    )
    print(f"wrote {norm_path}")
    print(f"wrote {agg_path}")
    return 0


def cmd_score(args) -> int:
    campaign = _load(args)
    out = _out_dir(args)
    for task in campaign.tasks():
        tables = score_tables_for_task(campaign, task)
        seg_path = out / f"native_scores_{task.label}.tsv"
        with seg_path.open("w", encoding="utf-8", newline="\n") as fh:
            fh.write("\t".join(SCORES_HEADER) + "\n")
            for table in tables:
                if table.level != "segment":
                    continue
                for (system, seg_id), score in sorted(table.cells.items()):
                    fh.write(
                        "\t".join(
                            [table.metric_id, table.variant_id, system, seg_id,
                             repr(score)]
                        )
                        + "\n"
                    )
        sys_path = out / f"native_system_{task.label}.csv"
        write_csv(
            sys_path,
            ["metric", "variant", "system", "score"],
            [
                (table.metric_id, table.variant_id, system, repr(score))
                for table in tables
                if table.level == "system"
                for system, score in sorted(table.system_cells.items())
            ],
        )
        print(f"wrote {seg_path}")
        print(f"wrote {sys_path}")
    return 0


def cmd_ingest(args) -> int:
    campaign = _load(args)
    total = 0
    for task in campaign.tasks():
        tables = campaign.external_scores.get(task, ())
        for table in tables:
            print(
                f"{task.label}: {table.display_name()} "
                f"({len(table.cells)} cells)"
            )
            total += 1
    print(f"{total} external score tables ingested")
    return 0


def cmd_correlate(args) -> int:
    state = _state(args)
    out = _out_dir(args)
    written = state.emit_variant_selection(out)
    if args.level == "system":
        written += state.emit_correlations_system(out)
    else:
        written += state.emit_correlations_segment(out)
    for path in written:
        print(f"wrote {path}")
    return 0


def cmd_significance(args) -> int:
    state = _state(args)
    out = _out_dir(args)
    if args.level == "system":
        written = state.emit_sig_system(out)
    else:
        written = state.emit_sig_segment(out)
    for path in written:
        print(f"wrote {path}")
    return 0


def cmd_syscompare(args) -> int:
    state = _state(args)
    for path in state.emit_system_eval(_out_dir(args)):
        print(f"wrote {path}")
    return 0


def cmd_report(args) -> int:
    matrix = load_sig_matrix_csv(args.matrix)
    out = Path(args.out_file)
    emit_sig_matrix(matrix, args.format, out)
    print(f"wrote {out}")
    return 0


def cmd_run(args) -> int:
    artifacts = run_pipeline(
        args.config,
        args.out,
        seed=args.seed,
        hybrids=args.hybrids,
        permutations=args.permutations,
        bootstrap=args.bootstrap,
        alpha=args.alpha,
        timing_cutoff=args.timing_cutoff,
        include_traps=args.include_traps,
        level=args.level,
        threads=args.threads,
    )
    for name, digest in artifacts.manifest:
        print(f"{digest}  {name}")
    print(f"seed {artifacts.seed}, version {artifacts.version}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lcmteval",
        description="Meta-evaluation of metrics for length-controllable "
        "machine translation.",
    )
    parser.add_argument("--version", action="version", version=VERSION)
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="log warnings and progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, func, help_text: str, needs_config=True, needs_out=True,
            common=True):
        p = sub.add_parser(name, help=help_text)
        if needs_config:
            p.add_argument("config", help="path to campaign.conf")
        if needs_out:
            p.add_argument("--out", default=".", help="output directory")
        if common:
            _add_common_flags(p)
        p.set_defaults(func=func)
        return p

    add("validate", cmd_validate, "check rating completeness", needs_out=False)
    traps = add("traps", cmd_traps, "generate truncated-reference trap pairs")
    traps.add_argument("--count", type=int, default=60,
                       help="trap samples per (direction, ratio)")
    add("qc", cmd_qc, "timing and trap-bucket quality-control tables")
    add("normalize", cmd_normalize, "per-annotator z-scores and segment averages")
    add("score", cmd_score, "native lexical metric score tables")
    add("ingest", cmd_ingest, "validate and summarize external score files",
        needs_out=False)
    add("correlate", cmd_correlate, "metric-human correlation tables")
    add("significance", cmd_significance, "pairwise metric significance matrices")
    add("syscompare", cmd_syscompare, "per-system scores with bootstrap daggers")
    report = sub.add_parser(
        "report", help="re-render an emitted significance matrix"
    )
    report.add_argument("matrix", help="a sig_*.csv file emitted by this tool")
    report.add_argument("--format", default="textgrid",
                        choices=["csv", "textgrid", "svg"])
    report.add_argument("out_file", help="destination file")
    report.set_defaults(func=cmd_report)
    add("run", cmd_run, "full pipeline: QC, correlation, significance, reports")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if not args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except ValidationFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except StatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ToolkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
