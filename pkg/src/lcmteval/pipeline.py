"""Pipeline orchestration: ingestion -> QC -> normalization -> metrics ->
correlation -> significance -> report files.

:class:`PipelineState` lazily computes shared intermediates (normalized
ratings, native score tables, hybrid-extended system vectors) so each report
table is reachable standalone; :func:`run_pipeline` drives the whole chain
and writes a digest manifest.  Given identical inputs and master seed, two
runs produce byte-identical artifacts: every random draw derives from the
master seed, rows are sorted deterministically, and numeric report cells are
fixed at 4 decimals.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Mapping

from ._version import VERSION
from .corpus import (
    SEGMENT_LEVEL,
    SYSTEM_LEVEL,
    Campaign,
    ScoreTable,
    Task,
    ValidationReport,
    load_campaign,
    validate_campaign,
)
from .errors import IncompleteTable, MissingFile, ValidationFailure
from .metaeval import (
    SystemScoreVector,
    VariantSelection,
    hybrid_supersample,
    pearson,
    segment_correlation,
    select_best_variant,
    system_scores,
)
from .metrics import (
    LengthRecord,
    bleu_star,
    corpus_bleu,
    expected_length,
    length_deviation,
    rouge_l,
    rouge_n,
    scheme_for_direction,
    tokenize,
)
from .ratings import (
    agreement,
    aggregate_segment_human,
    timing_report,
    trap_report,
    znormalize,
)
from .reports import emit_sig_matrix, fmt4, sha256_file, write_csv
from .seeding import derive_int
from .significance import (
    dagger_marks,
    paired_bootstrap,
    segment_sig_matrix,
    system_sig_matrix,
)

logger = logging.getLogger(__name__)

ROUGE_METRICS = (
    "ROUGE1-P",
    "ROUGE1-R",
    "ROUGE1-F1",
    "ROUGE2-P",
    "ROUGE2-R",
    "ROUGE2-F1",
    "ROUGEL-P",
    "ROUGEL-R",
    "ROUGEL-F1",
)
BLEU_ID = "BLEU"
BLEU_STAR_ID = "BLEU*"
LENGTH_DEV_ID = "LengthDev"


@dataclass(frozen=True)
class PipelineArtifacts:
    manifest: tuple[tuple[str, str], ...]  # (file name, sha256) sorted by name
    config_digest: str
    seed: int
    version: str


def score_tables_for_task(campaign: Campaign, task: Task) -> list[ScoreTable]:
    """Native metric tables for one task: the nine ROUGE variants and length
    deviation per (system, segment), plus corpus BLEU and BLEU* per system.
    """
    scheme = scheme_for_direction(task.direction)
    segments = campaign.segments_for_direction(task.direction)
    systems = campaign.config.systems

    ref_tokens = {s.seg_id: tokenize(s.reference_text, scheme) for s in segments}
    hyp_tokens = {}
    for system in systems:
        for seg in segments:
            try:
                hyp = campaign.hypothesis(system, seg.seg_id, task.ratio)
            except KeyError:
                raise IncompleteTable(
                    f"no hypothesis for ({system}, {seg.seg_id}, ratio {task.ratio})"
                ) from None
            hyp_tokens[(system, seg.seg_id)] = tokenize(hyp.text, scheme)

    rouge_cells: dict[str, dict[tuple[str, str], float]] = {
        m: {} for m in ROUGE_METRICS
    }
    dev_cells: dict[tuple[str, str], float] = {}
    for system in systems:
        for seg in segments:
            cell = (system, seg.seg_id)
            hyp = hyp_tokens[cell]
            ref = ref_tokens[seg.seg_id]
            for n, prefix in ((1, "ROUGE1"), (2, "ROUGE2")):
                score = rouge_n(hyp, ref, n)
                rouge_cells[f"{prefix}-P"][cell] = score.precision
                rouge_cells[f"{prefix}-R"][cell] = score.recall
                rouge_cells[f"{prefix}-F1"][cell] = score.f1
            score = rouge_l(hyp, ref)
            rouge_cells["ROUGEL-P"][cell] = score.precision
            rouge_cells["ROUGEL-R"][cell] = score.recall
            rouge_cells["ROUGEL-F1"][cell] = score.f1

            expect = max(
                expected_length(task.ratio, campaign.reference_length(seg)), 1
            )
            out_len = campaign.hypothesis_length(
                campaign.hypothesis(system, seg.seg_id, task.ratio)
            )
            dev_cells[cell] = abs(out_len - expect) / expect

    tables = [
        ScoreTable.segment_table(metric, "-", task, cells)
        for metric, cells in rouge_cells.items()
    ]
    tables.append(ScoreTable.segment_table(LENGTH_DEV_ID, "-", task, dev_cells))

    bleu_cells = {}
    star_cells = {}
    seg_order = [s.seg_id for s in segments]
    for system in systems:
        score = corpus_bleu(
            [hyp_tokens[(system, g)] for g in seg_order],
            [ref_tokens[g] for g in seg_order],
        )
        bleu_cells[system] = score.bleu
        star_cells[system] = bleu_star(score)
    tables.append(ScoreTable.system_table(BLEU_ID, "-", task, bleu_cells))
    tables.append(ScoreTable.system_table(BLEU_STAR_ID, "-", task, star_cells))
    return tables


def make_bleu_scorers(campaign: Campaign, task: Task):
    """Corpus scorers for hybrid systems: re-run BLEU over the hypothesis
    texts each selector picks.  Shared memo so BLEU and BLEU* compute once
    per selector.
    """
    scheme = scheme_for_direction(task.direction)
    segments = campaign.segments_for_direction(task.direction)
    seg_order = [s.seg_id for s in segments]
    ref_tokens = [tokenize(s.reference_text, scheme) for s in segments]
    hyp_tokens = {
        (system, seg.seg_id): tokenize(
            campaign.hypothesis(system, seg.seg_id, task.ratio).text, scheme
        )
        for system in campaign.config.systems
        for seg in segments
    }
    memo: dict[tuple[str, ...], tuple[float, float]] = {}

    def scores_for(choices: Mapping[str, str]) -> tuple[float, float]:
        key = tuple(choices[g] for g in seg_order)
        if key not in memo:
            score = corpus_bleu(
                [hyp_tokens[(sys_id, g)] for sys_id, g in zip(key, seg_order)],
                ref_tokens,
            )
            memo[key] = (score.bleu, bleu_star(score))
        return memo[key]

    return {
        (BLEU_ID, "-"): lambda choices: scores_for(choices)[0],
        (BLEU_STAR_ID, "-"): lambda choices: scores_for(choices)[1],
    }


def length_deviation_by_system(campaign: Campaign, task: Task) -> dict[str, float]:
    """Mean relative length miss per system for one task."""
    out = {}
    for system in campaign.config.systems:
        records = []
        for seg in campaign.segments_for_direction(task.direction):
            expect = max(
                expected_length(task.ratio, campaign.reference_length(seg)), 1
            )
            hyp = campaign.hypothesis(system, seg.seg_id, task.ratio)
            records.append(
                LengthRecord(
                    output_len=campaign.hypothesis_length(hyp), expect_len=expect
                )
            )
        out[system] = length_deviation(records)
    return out


def _metric_variant(tables: Mapping[str, ScoreTable] | list[ScoreTable]):
    items = tables.values() if isinstance(tables, Mapping) else tables
    return {tb.display_name(): (tb.metric_id, tb.variant_id) for tb in items}


class PipelineState:
    """Shared intermediates for the report emitters, computed lazily."""

    def __init__(
        self,
        campaign: Campaign,
        *,
        seed: int | None = None,
        hybrids: int = 1000,
        permutations: int = 1000,
        bootstrap: int = 1000,
        alpha: float = 0.05,
        timing_cutoff: float = 600.0,
        include_traps: bool = False,
        level: str = SYSTEM_LEVEL,
        threads: int = 1,
    ):
        self.campaign = campaign
        self.seed = campaign.config.seed if seed is None else seed
        self.hybrids = hybrids
        self.permutations = permutations
        self.bootstrap = bootstrap
        self.alpha = alpha
        self.timing_cutoff = timing_cutoff
        self.include_traps = include_traps
        self.level = level
        self.threads = threads
        self.tasks = campaign.tasks()
        self.task_cols = [t.label for t in self.tasks]

    # --- intermediates ----------------------------------------------------

    @cached_property
    def human_by_task(self) -> dict[Task, dict[tuple[str, str], float]]:
        normalized = znormalize(
            self.campaign.ratings, include_traps=self.include_traps
        )
        aggregated, warnings = aggregate_segment_human(
            normalized, annotators_per_task=self.campaign.config.annotators_per_task
        )
        for w in warnings:
            logger.warning("aggregation: %s", w)
        out: dict[Task, dict[tuple[str, str], float]] = {t: {} for t in self.tasks}
        for (task, system, seg_id), value in aggregated.items():
            out[task][(system, seg_id)] = value
        return out

    @cached_property
    def natives(self) -> dict[Task, list[ScoreTable]]:
        return {t: score_tables_for_task(self.campaign, t) for t in self.tasks}

    @cached_property
    def external_variants(self) -> dict[str, dict[str, dict[Task, ScoreTable]]]:
        """metric -> variant -> task -> table, complete over all tasks."""
        grouped: dict[str, dict[str, dict[Task, ScoreTable]]] = {}
        for task, tables in self.campaign.external_scores.items():
            for table in tables:
                grouped.setdefault(table.metric_id, {}).setdefault(
                    table.variant_id, {}
                )[task] = table
        for metric, variants in grouped.items():
            for variant, per_task in variants.items():
                missing = [t.label for t in self.tasks if t not in per_task]
                if missing:
                    raise IncompleteTable(
                        f"metric {metric}/{variant} has no scores for tasks: "
                        f"{', '.join(missing)}"
                    )
        return grouped

    @cached_property
    def selections(self) -> list[VariantSelection]:
        return [
            select_best_variant(
                self.external_variants[metric],
                self.human_by_task,
                self.tasks,
                level=self.level,
                hybrids=self.hybrids if self.level == SYSTEM_LEVEL else 0,
                seed=self.seed,
            )
            for metric in sorted(self.external_variants)
        ]

    @cached_property
    def chosen_external(self) -> dict[Task, list[ScoreTable]]:
        out: dict[Task, list[ScoreTable]] = {t: [] for t in self.tasks}
        for selection in self.selections:
            per_task = self.external_variants[selection.metric_id][
                selection.variant_id
            ]
            for t in self.tasks:
                out[t].append(per_task[t])
        return out

    @cached_property
    def system_stage(
        self,
    ) -> tuple[dict[Task, dict[str, SystemScoreVector]], dict[Task, SystemScoreVector]]:
        """Hybrid-extended metric and human score vectors per task."""
        if self.hybrids == 0 and len(self.campaign.config.systems) < 3:
            logger.warning(
                "system-level Pearson over %d real systems without hybrids is "
                "degenerate",
                len(self.campaign.config.systems),
            )
        sys_vectors: dict[Task, dict[str, SystemScoreVector]] = {}
        human_vectors: dict[Task, SystemScoreVector] = {}
        for t in self.tasks:
            tables = [
                tb for tb in self.natives[t] if tb.metric_id != LENGTH_DEV_ID
            ] + self.chosen_external[t]
            _, vectors, human_vec = hybrid_supersample(
                tables,
                self.human_by_task[t],
                self.hybrids,
                self.seed,
                corpus_scorers=make_bleu_scorers(self.campaign, t),
                threads=self.threads,
            )
            sys_vectors[t] = {tb.display_name(): vectors[tb.key] for tb in tables}
            human_vectors[t] = human_vec
        return sys_vectors, human_vectors

    @cached_property
    def segment_tables(self) -> dict[Task, dict[str, ScoreTable]]:
        out: dict[Task, dict[str, ScoreTable]] = {}
        for t in self.tasks:
            tables = [
                tb
                for tb in self.natives[t]
                if tb.level == SEGMENT_LEVEL and tb.metric_id != LENGTH_DEV_ID
            ] + self.chosen_external[t]
            out[t] = {
                tb.display_name(): tb
                for tb in sorted(tables, key=lambda x: x.display_name())
            }
        return out

    # --- emitters -----------------------------------------------------------

    def emit_qc(self, out: Path) -> list[Path]:
        timing_path = out / "qc_timing.csv"
        write_csv(
            timing_path,
            ["direction", "ratio", "all_ave", "cut_ave"],
            [
                (t.direction, repr(t.ratio), fmt4(stats.all_ave), fmt4(stats.cut_ave))
                for t in self.tasks
                for stats in [
                    timing_report(
                        self.campaign.ratings_for_task(t), self.timing_cutoff
                    )
                ]
            ],
        )
        traps_path = out / "qc_traps.csv"
        write_csv(
            traps_path,
            ["direction", "ratio", "zero", "low", "high"],
            [
                (t.direction, repr(t.ratio), b.zero, b.low, b.high)
                for t in self.tasks
                for b in [
                    trap_report(
                        [r for r in self.campaign.ratings_for_task(t) if r.is_trap]
                    )
                ]
            ],
        )
        return [timing_path, traps_path]

    def emit_agreement(self, out: Path) -> list[Path]:
        rows = []
        for t in self.tasks:
            task_ratings = self.campaign.ratings_for_task(t)
            for with_traps in (True, False):
                result = agreement(task_ratings, include_traps=with_traps)
                rows.append(
                    (
                        t.direction,
                        repr(t.ratio),
                        "true" if with_traps else "false",
                        fmt4(result.one_vs_rest_r),
                        fmt4(result.krippendorff_alpha),
                        result.n_items,
                    )
                )
        path = out / "agreement.csv"
        write_csv(
            path,
            [
                "direction",
                "ratio",
                "with_traps",
                "one_vs_rest_r",
                "krippendorff_alpha",
                "n_items",
            ],
            rows,
        )
        return [path]

    def emit_variant_selection(self, out: Path) -> list[Path]:
        path = out / "variant_selection.csv"
        write_csv(
            path,
            ["metric", "level", "chosen_variant"] + self.task_cols + ["average"],
            [
                [s.metric_id, s.level, s.variant_id]
                + [fmt4(s.per_task[t]) for t in self.tasks]
                + [fmt4(s.average)]
                for s in self.selections
            ],
        )
        return [path]

    def emit_correlations_system(self, out: Path) -> list[Path]:
        sys_vectors, human_vectors = self.system_stage
        info = {}
        for t in self.tasks:
            tables = [
                tb for tb in self.natives[t] if tb.metric_id != LENGTH_DEV_ID
            ] + self.chosen_external[t]
            info.update(_metric_variant(tables))
        rows = []
        for name in sorted(sys_vectors[self.tasks[0]]):
            values = [
                pearson(
                    human_vectors[t].values, sys_vectors[t][name].values
                ).value
                for t in self.tasks
            ]
            rows.append(
                list(info[name])
                + [fmt4(v) for v in values]
                + [fmt4(sum(values) / len(values))]
            )
        path = out / "correlations_system.csv"
        write_csv(path, ["metric", "variant"] + self.task_cols + ["average"], rows)
        return [path]

    def emit_correlations_segment(self, out: Path) -> list[Path]:
        info = {}
        for t in self.tasks:
            info.update(_metric_variant(self.segment_tables[t]))
        rows = []
        for name in sorted(self.segment_tables[self.tasks[0]]):
            values = [
                segment_correlation(
                    self.segment_tables[t][name], self.human_by_task[t]
                ).value
                for t in self.tasks
            ]
            rows.append(
                list(info[name])
                + [fmt4(v) for v in values]
                + [fmt4(sum(values) / len(values))]
            )
        path = out / "correlations_segment.csv"
        write_csv(path, ["metric", "variant"] + self.task_cols + ["average"], rows)
        return [path]

    def emit_sig_system(self, out: Path) -> list[Path]:
        sys_vectors, human_vectors = self.system_stage
        paths = []
        for t in self.tasks:
            matrix = system_sig_matrix(
                {
                    name: sys_vectors[t][name].values
                    for name in sorted(sys_vectors[t])
                },
                human_vectors[t].values,
                t,
            )
            for fmt, suffix in (("csv", "csv"), ("textgrid", "txt"), ("svg", "svg")):
                path = out / f"sig_system_{t.label}.{suffix}"
                emit_sig_matrix(matrix, fmt, path)
                paths.append(path)
        return paths

    def emit_sig_segment(self, out: Path) -> list[Path]:
        paths = []
        for t in self.tasks:
            matrix = segment_sig_matrix(
                self.segment_tables[t],
                self.human_by_task[t],
                t,
                r=self.permutations,
                seed=derive_int(self.seed, "segment-sig-task", t.label),
                alpha=self.alpha,
                threads=self.threads,
            )
            for fmt, suffix in (("csv", "csv"), ("textgrid", "txt"), ("svg", "svg")):
                path = out / f"sig_segment_{t.label}.{suffix}"
                emit_sig_matrix(matrix, fmt, path)
                paths.append(path)
        return paths

    def emit_system_eval(self, out: Path) -> list[Path]:
        """Per-system scores under each segment-level metric, the best system
        dagger-marked when a paired bootstrap puts it above the runner-up.
        """
        info = {}
        for t in self.tasks:
            info.update(_metric_variant(self.segment_tables[t]))
        systems = list(self.campaign.config.systems)
        rows = []
        for name in sorted(self.segment_tables[self.tasks[0]]):
            cells_by_task: dict[Task, dict[str, str]] = {}
            for t in self.tasks:
                table = self.segment_tables[t][name]
                seg_ids = self.campaign.segment_ids_for_direction(t.direction)
                per_system = {
                    system: {seg: table.cells[(system, seg)] for seg in seg_ids}
                    for system in systems
                }
                means = system_scores(table).scores
                ranked = sorted(systems, key=lambda s: (-means[s], s))
                marks = {s: "" for s in systems}
                if len(ranked) >= 2:
                    best, second = ranked[0], ranked[1]
                    p = paired_bootstrap(
                        per_system[best],
                        per_system[second],
                        b_iter=self.bootstrap,
                        seed=derive_int(self.seed, "syscompare", name, t.label),
                    )
                    marks[best] = dagger_marks(p)
                cells_by_task[t] = {
                    s: f"{fmt4(means[s])}{marks[s]}" for s in systems
                }
            for system in systems:
                rows.append(
                    list(info[name])
                    + [system]
                    + [cells_by_task[t][system] for t in self.tasks]
                )
        path = out / "system_eval.csv"
        write_csv(path, ["metric", "variant", "system"] + self.task_cols, rows)
        return [path]

    def emit_length_deviation(self, out: Path) -> list[Path]:
        deviations = {
            t: length_deviation_by_system(self.campaign, t) for t in self.tasks
        }
        path = out / "length_deviation.csv"
        write_csv(
            path,
            ["system"] + self.task_cols,
            [
                [system] + [fmt4(deviations[t][system]) for t in self.tasks]
                for system in self.campaign.config.systems
            ],
        )
        return [path]


def run_pipeline(
    config_path,
    out_dir,
    *,
    seed: int | None = None,
    hybrids: int = 1000,
    permutations: int = 1000,
    bootstrap: int = 1000,
    alpha: float = 0.05,
    timing_cutoff: float = 600.0,
    include_traps: bool = False,
    level: str = SYSTEM_LEVEL,
    threads: int = 1,
) -> PipelineArtifacts:
    """Run the full evaluation pipeline and write every report table.

    ``seed`` defaults to the campaign config's seed; ``level`` picks the
    correlation used to choose the best variant of multi-variant metrics.
    Raises :class:`ValidationFailure` when the rating grid is incomplete.
    """
    campaign = load_campaign(config_path)
    if campaign.config.ratings_path is None:
        raise MissingFile("campaign config declares no ratings file")
    report = validate_campaign(campaign)
    for warning in report.warnings:
        logger.warning(warning)
    if not report.ok:
        raise ValidationFailure(
            f"campaign incomplete: {len(report.missing_cells)} missing and "
            f"{len(report.duplicate_cells)} duplicate cells "
            f"(expected {report.expected_rating_count}, found "
            f"{report.found_rating_count})"
        )

    state = PipelineState(
        campaign,
        seed=seed,
        hybrids=hybrids,
        permutations=permutations,
        bootstrap=bootstrap,
        alpha=alpha,
        timing_cutoff=timing_cutoff,
        include_traps=include_traps,
        level=level,
        threads=threads,
    )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    written += state.emit_qc(out)
    written += state.emit_agreement(out)
    written += state.emit_variant_selection(out)
    written += state.emit_correlations_system(out)
    written += state.emit_correlations_segment(out)
    written += state.emit_sig_system(out)
    written += state.emit_sig_segment(out)
    written += state.emit_system_eval(out)
    written += state.emit_length_deviation(out)

    config_digest = sha256_file(config_path)
    names = sorted(p.name for p in written)
    manifest = tuple((name, sha256_file(out / name)) for name in names)
    artifacts = PipelineArtifacts(
        manifest=manifest,
        config_digest=config_digest,
        seed=state.seed,
        version=VERSION,
    )
    (out / "manifest.json").write_text(
        json.dumps(
            {
                "files": [{"name": n, "sha256": d} for n, d in manifest],
                "config_digest": config_digest,
                "seed": state.seed,
                "version": VERSION,
            },
            indent=2,
            sort_keys=True,
        )
        + "\n",
        encoding="utf-8",
    )
    return artifacts


def format_validation_report(report: ValidationReport) -> str:
    lines = [
        f"expected ratings: {report.expected_rating_count}",
        f"found ratings:    {report.found_rating_count}",
        f"missing cells:    {len(report.missing_cells)}",
        f"duplicate cells:  {len(report.duplicate_cells)}",
    ]
    for cell in report.missing_cells[:20]:
        lines.append(f"  missing: {cell}")
    if len(report.missing_cells) > 20:
        lines.append(f"  ... and {len(report.missing_cells) - 20} more")
    for cell in report.duplicate_cells[:20]:
        lines.append(f"  duplicate: {cell}")
    for warning in report.warnings:
        lines.append(f"  warning: {warning}")
    return "\n".join(lines)
