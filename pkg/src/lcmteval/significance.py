"""Statistical comparison of metrics and systems.

System-level metric comparison builds confidence intervals for the
difference of two correlations that share the human scores as one variable
(the overlapping dependent-correlation construction of Zou, 2007).
Segment-level comparison runs a permutation test that swaps the two
metrics' scores per cell with probability one half.  System comparison
under a fixed metric uses paired bootstrap resampling over segments.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from statistics import NormalDist
from typing import Mapping, Sequence

import numpy as np

from .corpus import SEGMENT_LEVEL, ScoreTable, Task
from .errors import (
    AlignmentMismatch,
    AllTied,
    CellMismatch,
    DegenerateCorrelation,
    SampleTooSmall,
    SystemOnlyTable,
)
from .metaeval import pearson
from .seeding import derive_int, rng_for


@dataclass(frozen=True)
class CIResult:
    lower: float
    upper: float
    level: float


@dataclass(frozen=True)
class SigCell:
    row_metric: str
    col_metric: str
    ci: CIResult | None
    p_value: float | None
    significant: bool
    bonferroni_significant: bool | None


@dataclass(frozen=True)
class SigMatrix:
    task: Task
    level: str  # "system" or "segment"
    metrics: tuple[str, ...]
    cells: Mapping[tuple[str, str], SigCell]

    def cell(self, row: str, col: str) -> SigCell:
        return self.cells[(row, col)]


def zou_ci(
    r12: float, r13: float, r23: float, n: int, level: float = 0.95
) -> CIResult:
    """Confidence interval for r12 - r13 when both correlations share
    variable 1 (here: the human scores).

    Fisher-z marginal intervals are combined using the correlation between
    the two sample correlations,

        c = ((r23 - r12*r13/2) * (1 - r12^2 - r13^2 - r23^2) + r23^3)
            / ((1 - r12^2) * (1 - r13^2)).

    Two identical metrics (r23 = 1, r12 = r13) get the degenerate interval
    [0, 0].
    """
    if n < 4:
        raise SampleTooSmall(f"zou_ci needs n >= 4, got {n}")
    if not (0.0 < level < 1.0):
        raise ValueError(f"confidence level must be in (0, 1), got {level}")
    if abs(r12 - r13) <= 1e-12 and r23 >= 1.0 - 1e-12:
        # Identical metrics (up to float noise, e.g. exact affine copies):
        # the difference of correlations is exactly zero.
        return CIResult(0.0, 0.0, level)
    for name, r in (("r12", r12), ("r13", r13), ("r23", r23)):
        if abs(r) >= 1.0:
            raise DegenerateCorrelation(f"{name} = {r} is not inside (-1, 1)")

    zcrit = NormalDist().inv_cdf(0.5 + level / 2.0)
    half = zcrit / math.sqrt(n - 3)

    def fisher_interval(r: float) -> tuple[float, float]:
        z = math.atanh(r)
        return math.tanh(z - half), math.tanh(z + half)

    l1, u1 = fisher_interval(r12)
    l2, u2 = fisher_interval(r13)
    c = ((r23 - r12 * r13 / 2.0) * (1.0 - r12**2 - r13**2 - r23**2) + r23**3) / (
        (1.0 - r12**2) * (1.0 - r13**2)
    )
    d = r12 - r13
    lo = d - math.sqrt(
        max(0.0, (r12 - l1) ** 2 + (u2 - r13) ** 2 - 2 * c * (r12 - l1) * (u2 - r13))
    )
    hi = d + math.sqrt(
        max(0.0, (u1 - r12) ** 2 + (r13 - l2) ** 2 - 2 * c * (u1 - r12) * (r13 - l2))
    )
    return CIResult(lo, hi, level)


def system_sig_matrix(
    metric_vectors: Mapping[str, Sequence[float]],
    human_vector: Sequence[float],
    task: Task,
    level: float = 0.95,
) -> SigMatrix:
    """Pairwise win matrix over system-level metric vectors.

    A row metric significantly wins over a column metric when the interval
    for (r(human, row) - r(human, col)) lies strictly above zero.
    """
    names = list(metric_vectors)
    n = len(human_vector)
    human_r = {
        name: pearson(human_vector, metric_vectors[name]).value for name in names
    }
    cells: dict[tuple[str, str], SigCell] = {}
    for row in names:
        for col in names:
            if row == col:
                continue
            r23 = pearson(metric_vectors[row], metric_vectors[col]).value
            ci = zou_ci(human_r[row], human_r[col], r23, n, level)
            cells[(row, col)] = SigCell(
                row_metric=row,
                col_metric=col,
                ci=ci,
                p_value=None,
                significant=ci.lower > 0.0,
                bonferroni_significant=None,
            )
    return SigMatrix(task=task, level="system", metrics=tuple(names), cells=cells)


def _pooled_cells(
    table_a: ScoreTable, table_b: ScoreTable, human: Mapping[tuple[str, str], float]
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if table_a.level != SEGMENT_LEVEL or table_b.level != SEGMENT_LEVEL:
        raise SystemOnlyTable("permutation test needs segment-level tables")
    keys = sorted(table_a.cells)
    if sorted(table_b.cells) != keys:
        raise CellMismatch(
            f"{table_a.display_name()} and {table_b.display_name()} cover "
            "different cells"
        )
    try:
        h = np.asarray([human[k] for k in keys], dtype=np.float64)
    except KeyError as exc:
        raise CellMismatch(f"human score missing for cell {exc}") from None
    a = np.asarray([table_a.cells[k] for k in keys], dtype=np.float64)
    b = np.asarray([table_b.cells[k] for k in keys], dtype=np.float64)
    return a, b, h


class _BatchedTauB:
    """Kendall tau-b of many vectors against one fixed vector.

    Works on pair-difference signs over the upper triangle, so the counts
    (concordant minus discordant, ties) are exact integers and the result
    matches pairwise enumeration.
    """

    def __init__(self, y: np.ndarray):
        n = len(y)
        self.i, self.j = np.triu_indices(n, k=1)
        self.y_signs = np.sign(y[self.i] - y[self.j])
        self.n0 = n * (n - 1) // 2
        self.n2 = int(np.count_nonzero(self.y_signs == 0))
        if self.n0 == self.n2:
            raise AllTied("kendall tau undefined: reference vector is all ties")

    def taus(self, rows: np.ndarray) -> np.ndarray:
        """rows: (batch, n) -> tau-b of each row against the fixed vector."""
        d = np.sign(rows[:, self.i] - rows[:, self.j])
        con_minus_dis = d @ self.y_signs
        n1 = (d == 0).sum(axis=1)
        denom = np.sqrt((self.n0 - n1).astype(np.float64) * float(self.n0 - self.n2))
        if np.any(denom == 0.0):
            raise AllTied("kendall tau degenerate inside permutation test")
        return con_minus_dis / denom

    def tau(self, row: np.ndarray) -> float:
        return float(self.taus(row[None, :])[0])


def perm_both(
    table_a: ScoreTable,
    table_b: ScoreTable,
    human_segment_scores: Mapping[tuple[str, str], float],
    r: int = 1000,
    seed: int = 0,
    threads: int = 1,
) -> float:
    """One-sided permutation test for tau(A, human) > tau(B, human).

    Each replicate independently swaps A's and B's score in every cell with
    probability 1/2 and recomputes the correlation difference; the p-value
    is (1 + #{delta* >= delta}) / (r + 1), so it is never exactly zero.
    Replicate generators derive from (seed, replicate index): scheduling
    across threads cannot change the result.
    """
    a, b, h = _pooled_cells(table_a, table_b, human_segment_scores)
    tau = _BatchedTauB(h)
    delta = tau.tau(a) - tau.tau(b)
    n = len(a)
    # Chunk replicates so the (batch, n*(n-1)/2) sign matrices stay small.
    chunk = max(1, 4_000_000 // max(1, tau.n0))

    def count_block(block: range) -> int:
        count = 0
        for start in range(block.start, block.stop, chunk):
            indices = range(start, min(start + chunk, block.stop))
            masks = np.stack(
                [rng_for(seed, "perm-both", i).random(n) < 0.5 for i in indices]
            )
            a_star = np.where(masks, b, a)
            b_star = np.where(masks, a, b)
            deltas = tau.taus(a_star) - tau.taus(b_star)
            count += int(np.count_nonzero(deltas >= delta))
        return count

    if threads > 1:
        bounds = np.linspace(0, r, threads + 1, dtype=int)
        blocks = [range(int(lo), int(hi)) for lo, hi in zip(bounds, bounds[1:])]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            total = sum(pool.map(count_block, blocks))
    else:
        total = count_block(range(r))
    return (1 + total) / (r + 1)


def bonferroni(pvals: Sequence[float], alpha: float = 0.05) -> list[bool]:
    """Per-comparison significance flags at the corrected threshold alpha/m."""
    m = len(pvals)
    if m == 0:
        return []
    for p in pvals:
        if not (0.0 <= p <= 1.0):
            raise ValueError(f"p-value {p} outside [0, 1]")
    return [p < alpha / m for p in pvals]


def segment_sig_matrix(
    tables: Mapping[str, ScoreTable],
    human_segment_scores: Mapping[tuple[str, str], float],
    task: Task,
    r: int = 1000,
    seed: int = 0,
    alpha: float = 0.05,
    threads: int = 1,
) -> SigMatrix:
    """Pairwise one-sided permutation-test matrix over segment-level metrics.

    The Bonferroni flag divides alpha by the number of ordered pairs in the
    matrix.  Each pair's test derives its own seed from the two metric
    names, so the matrix is identical however the pairs are scheduled.
    """
    names = list(tables)
    pairs = [(row, col) for row in names for col in names if row != col]
    m = len(pairs)
    cells: dict[tuple[str, str], SigCell] = {}
    for row, col in pairs:
        pair_seed = derive_int(seed, "segment-sig", row, col)
        p = perm_both(
            tables[row], tables[col], human_segment_scores, r, pair_seed, threads
        )
        cells[(row, col)] = SigCell(
            row_metric=row,
            col_metric=col,
            ci=None,
            p_value=p,
            significant=p < alpha,
            bonferroni_significant=p < alpha / m,
        )
    return SigMatrix(task=task, level="segment", metrics=tuple(names), cells=cells)


def paired_bootstrap(
    seg_a: Mapping[str, float],
    seg_b: Mapping[str, float],
    b_iter: int = 1000,
    seed: int = 0,
) -> float:
    """One-sided paired bootstrap: p-value against 'system A beats system B'.

    Segments are resampled with replacement ``b_iter`` times (the same draw
    applies to both systems); p is the fraction of resamples in which A's
    mean falls below B's, with exact ties counting one half.  Strict
    dominance therefore yields exactly 0, and identical score vectors yield
    exactly 0.5.
    """
    if set(seg_a) != set(seg_b):
        raise AlignmentMismatch("systems scored on different segment sets")
    keys = sorted(seg_a)
    n = len(keys)
    if n < 2:
        raise SampleTooSmall("paired_bootstrap needs at least 2 segments")
    a = np.asarray([seg_a[k] for k in keys], dtype=np.float64)
    b = np.asarray([seg_b[k] for k in keys], dtype=np.float64)
    diff = a - b  # paired statistic: only per-segment differences matter
    rng = rng_for(seed, "paired-bootstrap")
    idx = rng.integers(0, n, size=(b_iter, n))
    means = diff[idx].mean(axis=1)
    losses = np.count_nonzero(means < 0.0)
    ties = np.count_nonzero(means == 0.0)
    return float((losses + 0.5 * ties) / b_iter)


def dagger_marks(p: float) -> str:
    """Table footnote marks: one dagger for p < 0.05, two for p < 0.01."""
    if p < 0.01:
        return "††"
    if p < 0.05:
        return "†"
    return ""
