"""Meta-evaluation toolkit for length-controllable machine translation.

The package computes lexical metrics natively, ingests external metric
scores, processes human direct-assessment ratings with quality control, and
measures metric-human correlation with significance testing.
"""

from ._version import VERSION as __version__
from .corpus import (
    Campaign,
    CampaignConfig,
    HypothesisRecord,
    RatingRecord,
    ScoreTable,
    SegmentRecord,
    Task,
    ValidationReport,
    load_campaign,
    load_external_scores,
    save_campaign,
    validate_campaign,
)
from .metaeval import (
    CorrelationResult,
    HybridSelector,
    SystemScoreVector,
    VariantSelection,
    apply_selector,
    hybrid_supersample,
    kendall_tau_b,
    pearson,
    segment_correlation,
    select_best_variant,
    system_scores,
)
from .metrics import (
    BleuScore,
    LengthRecord,
    RougeScore,
    TokenSeq,
    bleu_star,
    corpus_bleu,
    length_deviation,
    rouge_l,
    rouge_n,
    tokenize,
)
from .pipeline import PipelineArtifacts, run_pipeline, score_tables_for_task
from .ratings import (
    AgreementResult,
    NormalizedRating,
    TrapPair,
    agreement,
    aggregate_segment_human,
    generate_traps,
    krippendorff_alpha,
    one_vs_rest,
    timing_report,
    trap_report,
    znormalize,
)
from .significance import (
    CIResult,
    SigCell,
    SigMatrix,
    bonferroni,
    paired_bootstrap,
    perm_both,
    segment_sig_matrix,
    system_sig_matrix,
    zou_ci,
)

__all__ = [
    "__version__",
    "Campaign",
    "CampaignConfig",
    "HypothesisRecord",
    "RatingRecord",
    "ScoreTable",
    "SegmentRecord",
    "Task",
    "ValidationReport",
    "load_campaign",
    "load_external_scores",
    "save_campaign",
    "validate_campaign",
    "CorrelationResult",
    "HybridSelector",
    "SystemScoreVector",
    "VariantSelection",
    "apply_selector",
    "hybrid_supersample",
    "kendall_tau_b",
    "pearson",
    "segment_correlation",
    "select_best_variant",
    "system_scores",
    "BleuScore",
    "LengthRecord",
    "RougeScore",
    "TokenSeq",
    "bleu_star",
    "corpus_bleu",
    "length_deviation",
    "rouge_l",
    "rouge_n",
    "tokenize",
    "PipelineArtifacts",
    "run_pipeline",
    "score_tables_for_task",
    "AgreementResult",
    "NormalizedRating",
    "TrapPair",
    "agreement",
    "aggregate_segment_human",
    "generate_traps",
    "krippendorff_alpha",
    "one_vs_rest",
    "timing_report",
    "trap_report",
    "znormalize",
    "CIResult",
    "SigCell",
    "SigMatrix",
    "bonferroni",
    "paired_bootstrap",
    "perm_both",
    "segment_sig_matrix",
    "system_sig_matrix",
    "zou_ci",
]
