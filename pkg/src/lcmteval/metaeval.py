"""Metric-human correlation machinery.

System-level comparison uses Pearson r over system score vectors; with only
a handful of real systems those vectors are padded by hybrid super sampling:
pseudo-systems assembled by picking, per segment, one real system's output
uniformly at random.  Segment-level comparison pools every (system, segment)
cell of a task into one vector pair and uses Kendall tau-b.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import stats as _scipy_stats

from .corpus import SEGMENT_LEVEL, SYSTEM_LEVEL, ScoreTable, Task
from .errors import (
    AllTied,
    CellMismatch,
    IncompleteTable,
    LengthMismatch,
    NoVariants,
    SampleTooSmall,
    SystemOnlyTable,
    TooFewSystems,
    ZeroVariance,
)
from .seeding import rng_for

PEARSON_R = "pearson_r"
KENDALL_TAU_B = "kendall_tau_b"


@dataclass(frozen=True)
class CorrelationResult:
    kind: str
    value: float
    n: int


@dataclass(frozen=True)
class SystemScoreVector:
    """Ordered system (or hybrid) ids with one score each, for one task."""

    task: Task
    scores: Mapping[str, float]

    @property
    def ids(self) -> list[str]:
        return list(self.scores)

    @property
    def values(self) -> list[float]:
        return list(self.scores.values())


@dataclass(frozen=True)
class HybridSelector:
    """Per-segment choice of a source system for one pseudo-system."""

    hybrid_id: str
    choices: Mapping[str, str]  # seg_id -> system_id
    seed_lineage: tuple[int, int]  # (master seed, hybrid index)


@dataclass(frozen=True)
class VariantSelection:
    metric_id: str
    variant_id: str
    level: str
    per_task: Mapping[Task, float]
    average: float


def system_scores(table: ScoreTable) -> SystemScoreVector:
    """Per-system mean of segment scores; system-only tables pass through."""
    if table.level == SYSTEM_LEVEL:
        return SystemScoreVector(
            task=table.task,
            scores={s: table.system_cells[s] for s in sorted(table.system_cells)},
        )
    systems = table.systems()
    seg_ids = table.segment_ids()
    scores = {}
    for system in systems:
        values = []
        for seg_id in seg_ids:
            try:
                values.append(table.cells[(system, seg_id)])
            except KeyError:
                raise IncompleteTable(
                    f"{table.display_name()}: missing cell ({system}, {seg_id})"
                ) from None
        scores[system] = float(np.mean(np.asarray(values, dtype=np.float64)))
    return SystemScoreVector(task=table.task, scores=scores)


def pearson(x: Sequence[float], y: Sequence[float]) -> CorrelationResult:
    """Product-moment correlation."""
    if len(x) != len(y):
        raise LengthMismatch(f"vector lengths differ: {len(x)} vs {len(y)}")
    n = len(x)
    if n < 2:
        raise SampleTooSmall("pearson needs at least 2 points")
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    dx = xa - xa.mean()
    dy = ya - ya.mean()
    sxx = float(np.dot(dx, dx))
    syy = float(np.dot(dy, dy))
    if sxx == 0.0 or syy == 0.0:
        raise ZeroVariance("pearson undefined for a constant vector")
    r = float(np.dot(dx, dy)) / math.sqrt(sxx * syy)
    return CorrelationResult(PEARSON_R, max(-1.0, min(1.0, r)), n)


def kendall_tau_b(x: Sequence[float], y: Sequence[float]) -> CorrelationResult:
    """Kendall rank correlation with the tie correction,
    (C - D) / sqrt((C + D + T_x)(C + D + T_y)).
    """
    if len(x) != len(y):
        raise LengthMismatch(f"vector lengths differ: {len(x)} vs {len(y)}")
    n = len(x)
    if n < 2:
        raise SampleTooSmall("kendall_tau_b needs at least 2 points")
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    if np.all(xa == xa[0]) or np.all(ya == ya[0]):
        raise AllTied("kendall_tau_b undefined when one side is all ties")
    tau = float(_scipy_stats.kendalltau(xa, ya, variant="b")[0])
    if not math.isfinite(tau):
        raise AllTied("kendall_tau_b denominator degenerate")
    return CorrelationResult(KENDALL_TAU_B, max(-1.0, min(1.0, tau)), n)


def _check_aligned_tables(tables: Sequence[ScoreTable]) -> tuple[list[str], list[str]]:
    seg_tables = [t for t in tables if t.level == SEGMENT_LEVEL]
    if seg_tables:
        systems = seg_tables[0].systems()
        seg_ids = seg_tables[0].segment_ids()
        want = {(s, g) for s in systems for g in seg_ids}
        for t in seg_tables:
            if set(t.cells) != want:
                raise CellMismatch(
                    f"table {t.display_name()} is not aligned with the others"
                )
    else:
        systems, seg_ids = [], []
    for t in tables:
        if t.level == SYSTEM_LEVEL:
            if systems and sorted(t.system_cells) != systems:
                raise CellMismatch(
                    f"system-only table {t.display_name()} covers different systems"
                )
            if not systems:
                systems = sorted(t.system_cells)
    return systems, seg_ids


def apply_selector(table: ScoreTable, choices: Mapping[str, str]) -> float:
    """Mean over segments of the selected system's segment score."""
    if table.level != SEGMENT_LEVEL:
        raise SystemOnlyTable("selectors need per-segment scores")
    values = [table.cells[(choices[g], g)] for g in sorted(choices)]
    return float(np.mean(np.asarray(values, dtype=np.float64)))


def hybrid_supersample(
    tables: Sequence[ScoreTable],
    human_segment_scores: Mapping[tuple[str, str], float],
    k: int,
    seed: int,
    corpus_scorers: Mapping[tuple[str, str], Callable[[Mapping[str, str]], float]]
    | None = None,
    threads: int = 1,
) -> tuple[
    list[HybridSelector],
    dict[tuple[str, str], SystemScoreVector],
    SystemScoreVector,
]:
    """Extend every metric's system score vector with ``k`` hybrid systems.

    Selector ``i`` draws, for each segment in lexicographic order, one real
    system uniformly at random from a generator seeded by (seed, task, i),
    so any evaluation order or thread count produces identical output.
    Segment-level tables and the human scores are averaged over the selected
    cells; system-only tables (corpus-level metrics) are re-scored through
    the matching entry of ``corpus_scorers``, which receives the selector's
    seg->system map.  Real systems always lead the output vectors.
    """
    if not tables:
        raise NoVariants("hybrid_supersample needs at least one score table")
    task = tables[0].task
    for t in tables:
        if t.task != task:
            raise CellMismatch("tables span different tasks")
    systems, seg_ids = _check_aligned_tables(tables)
    if not seg_ids:
        seg_ids = sorted({g for _, g in human_segment_scores})
    if len(systems) < 2:
        raise TooFewSystems(f"need at least 2 real systems, got {len(systems)}")
    want = {(s, g) for s in systems for g in seg_ids}
    if set(human_segment_scores) != want:
        raise CellMismatch("human segment scores not aligned with the score tables")

    n_sys = len(systems)
    n_seg = len(seg_ids)

    def draw(i: int) -> np.ndarray:
        return rng_for(seed, f"hybrid:{task.label}", i).integers(0, n_sys, size=n_seg)

    if threads > 1 and k > 0:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            index_rows = list(pool.map(draw, range(k)))
    else:
        index_rows = [draw(i) for i in range(k)]

    selectors = [
        HybridSelector(
            hybrid_id=f"hyb{i:04d}",
            choices={seg_ids[j]: systems[int(row[j])] for j in range(n_seg)},
            seed_lineage=(seed, i),
        )
        for i, row in enumerate(index_rows)
    ]
    ids = list(systems) + [sel.hybrid_id for sel in selectors]
    idx = (
        np.stack(index_rows) if index_rows else np.empty((0, n_seg), dtype=np.int64)
    )
    cols = np.arange(n_seg)

    def extend_matrix(cells: Mapping[tuple[str, str], float]) -> list[float]:
        m = np.asarray(
            [[cells[(s, g)] for g in seg_ids] for s in systems], dtype=np.float64
        )
        real = [float(m[i].mean()) for i in range(n_sys)]
        if k == 0:
            return real
        hybrid = m[idx, cols].mean(axis=1)
        return real + [float(v) for v in hybrid]

    vectors: dict[tuple[str, str], SystemScoreVector] = {}
    for table in tables:
        if table.level == SEGMENT_LEVEL:
            values = extend_matrix(table.cells)
        else:
            scorer = (corpus_scorers or {}).get(table.key)
            if scorer is None and k > 0:
                raise SystemOnlyTable(
                    f"no corpus scorer supplied for system-only table "
                    f"{table.display_name()}"
                )
            values = [table.system_cells[s] for s in systems]
            if k > 0:
                if threads > 1:
                    with ThreadPoolExecutor(max_workers=threads) as pool:
                        hybrid_vals = list(
                            pool.map(lambda sel: scorer(sel.choices), selectors)
                        )
                else:
                    hybrid_vals = [scorer(sel.choices) for sel in selectors]
                values = values + [float(v) for v in hybrid_vals]
        vectors[table.key] = SystemScoreVector(
            task=task, scores=dict(zip(ids, values))
        )

    human_vector = SystemScoreVector(
        task=task, scores=dict(zip(ids, extend_matrix(human_segment_scores)))
    )
    return selectors, vectors, human_vector


def segment_correlation(
    table: ScoreTable,
    human_segment_scores: Mapping[tuple[str, str], float],
) -> CorrelationResult:
    """Kendall tau-b over all (system, segment) cells pooled into one pair of
    vectors."""
    if table.level != SEGMENT_LEVEL:
        raise SystemOnlyTable(
            f"{table.display_name()} has no segment scores to correlate"
        )
    keys = sorted(table.cells)
    try:
        human = [human_segment_scores[key] for key in keys]
    except KeyError as exc:
        raise CellMismatch(f"human score missing for cell {exc}") from None
    metric = [table.cells[key] for key in keys]
    return kendall_tau_b(metric, human)


def select_best_variant(
    variant_tables: Mapping[str, Mapping[Task, ScoreTable]],
    human_segment_scores: Mapping[Task, Mapping[tuple[str, str], float]],
    tasks: Sequence[Task],
    level: str = SEGMENT_LEVEL,
    hybrids: int = 0,
    seed: int = 0,
) -> VariantSelection:
    """Pick the variant with the highest mean correlation across tasks.

    ``level`` chooses the correlation: pooled Kendall tau-b per task for
    segment level, or Pearson r over (hybrid-extended) system score vectors
    for system level.  Ties go to the lexicographically smallest variant id.
    """
    if not variant_tables:
        raise NoVariants("no variants to select from")
    metric_ids = {
        table.metric_id
        for per_task in variant_tables.values()
        for table in per_task.values()
    }
    if len(metric_ids) != 1:
        raise ValueError(f"variants span multiple metrics: {sorted(metric_ids)}")
    metric_id = metric_ids.pop()

    # Hybrid selectors are shared across variants of a task: derive them once
    # per task so every variant is measured against the same pseudo-systems.
    human_vectors: dict[Task, SystemScoreVector] = {}
    if level == SYSTEM_LEVEL:
        for task in tasks:
            any_variant = next(iter(sorted(variant_tables)))
            _, _, human_vec = hybrid_supersample(
                [variant_tables[any_variant][task]],
                human_segment_scores[task],
                hybrids,
                seed,
            )
            human_vectors[task] = human_vec

    results: dict[str, tuple[dict[Task, float], float]] = {}
    for variant_id in sorted(variant_tables):
        per_task: dict[Task, float] = {}
        for task in tasks:
            table = variant_tables[variant_id][task]
            if level == SEGMENT_LEVEL:
                corr = segment_correlation(table, human_segment_scores[task])
            else:
                _, vectors, _ = hybrid_supersample(
                    [table], human_segment_scores[task], hybrids, seed
                )
                corr = pearson(
                    human_vectors[task].values, vectors[table.key].values
                )
            per_task[task] = corr.value
        average = sum(per_task.values()) / len(per_task)
        results[variant_id] = (per_task, average)

    best_id = max(sorted(results), key=lambda v: results[v][1])
    per_task, average = results[best_id]
    return VariantSelection(
        metric_id=metric_id,
        variant_id=best_id,
        level=level,
        per_task=per_task,
        average=average,
    )
