"""Lexical evaluation metrics: tokenization, corpus BLEU / BLEU*, ROUGE, and
length deviation.

All functions are pure and operate on immutable token sequences, so they are
safe to call concurrently.
"""

from __future__ import annotations

import math
import unicodedata
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import EmptyCorpus, EmptySet, LengthMismatch, ZeroLengthHypothesisCorpus

CHARACTER = "character"
WHITESPACE = "whitespace"


@dataclass(frozen=True)
class TokenSeq:
    """An ordered token sequence plus the scheme that produced it."""

    tokens: tuple[str, ...]
    scheme: str

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class BleuScore:
    precisions: tuple[float, ...]
    brevity_penalty: float
    bleu: float
    bleu_star: float
    hyp_length: int
    ref_length: int


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class LengthRecord:
    output_len: int
    expect_len: int

    def __post_init__(self):
        if self.expect_len <= 0:
            raise ValueError(f"expect_len must be positive, got {self.expect_len}")
        if self.output_len < 0:
            raise ValueError(f"output_len must be nonnegative, got {self.output_len}")


def tokenize(text: str, scheme: str) -> TokenSeq:
    """Tokenize ``text`` after NFC normalization.

    ``character`` yields one token per non-whitespace Unicode scalar (the
    convention for unsegmented scripts such as Chinese); ``whitespace``
    splits on runs of whitespace and keeps punctuation attached.
    """
    text = unicodedata.normalize("NFC", text)
    if scheme == CHARACTER:
        tokens = tuple(ch for ch in text if not ch.isspace())
    elif scheme == WHITESPACE:
        tokens = tuple(text.split())
    else:
        raise ValueError(f"unknown tokenization scheme: {scheme!r}")
    return TokenSeq(tokens, scheme)


def scheme_for_direction(direction: str) -> str:
    """Tokenization scheme for a direction's target side (zh -> character)."""
    target = direction.rsplit("-", 1)[-1].strip().lower()
    return CHARACTER if target.startswith("zh") else WHITESPACE


def _ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def corpus_bleu(
    hypotheses: Sequence[TokenSeq],
    references: Sequence[TokenSeq],
    max_n: int = 4,
) -> BleuScore:
    """Corpus-level BLEU with clipped n-gram precisions and brevity penalty.

    Zero precisions at orders >= 2 are exponentially smoothed: the k-th
    zero-count order is replaced by 1 / (2^k * max(total_n, 1)).  A corpus
    with no unigram matches at all scores exactly 0.  ``bleu_star`` is the
    score with the brevity penalty divided back out, so it never falls below
    ``bleu`` and equals it whenever the penalty is 1.
    """
    if len(hypotheses) != len(references):
        raise LengthMismatch(
            f"{len(hypotheses)} hypotheses vs {len(references)} references"
        )
    if not hypotheses:
        raise EmptyCorpus("corpus_bleu needs at least one hypothesis/reference pair")

    hyp_len = sum(len(h) for h in hypotheses)
    ref_len = sum(len(r) for r in references)
    if hyp_len == 0:
        raise ZeroLengthHypothesisCorpus("all hypotheses are empty")

    correct = [0] * max_n
    total = [0] * max_n
    for hyp, ref in zip(hypotheses, references):
        for n in range(1, max_n + 1):
            hyp_counts = _ngram_counts(hyp.tokens, n)
            if not hyp_counts:
                continue
            ref_counts = _ngram_counts(ref.tokens, n)
            total[n - 1] += sum(hyp_counts.values())
            correct[n - 1] += sum(
                min(c, ref_counts[g]) for g, c in hyp_counts.items()
            )

    if hyp_len >= ref_len:
        bp = 1.0
    else:
        bp = math.exp(1.0 - ref_len / hyp_len)

    precisions: list[float] = []
    smooth_k = 0
    for n in range(1, max_n + 1):
        if correct[n - 1] > 0:
            precisions.append(correct[n - 1] / total[n - 1])
        elif n == 1:
            precisions.append(0.0)
        else:
            smooth_k += 1
            precisions.append(1.0 / (2**smooth_k * max(total[n - 1], 1)))

    if precisions[0] == 0.0:
        bleu = 0.0
    else:
        bleu = bp * math.exp(sum(math.log(p) for p in precisions) / max_n)
    return BleuScore(
        precisions=tuple(precisions),
        brevity_penalty=bp,
        bleu=bleu,
        bleu_star=bleu / bp,
        hyp_length=hyp_len,
        ref_length=ref_len,
    )


def bleu_star(score: BleuScore) -> float:
    """BLEU with the brevity penalty divided back out."""
    if score.brevity_penalty <= 0:
        raise ValueError("brevity penalty must be positive")
    return score.bleu / score.brevity_penalty


def _prf(overlap: float, hyp_total: int, ref_total: int) -> RougeScore:
    # Zero denominators score 0 rather than erroring: heavily shortened
    # hypotheses can be shorter than the n-gram order.
    precision = overlap / hyp_total if hyp_total > 0 else 0.0
    recall = overlap / ref_total if ref_total > 0 else 0.0
    if precision + recall == 0.0:
        f1 = 0.0
    else:
        f1 = 2.0 * precision * recall / (precision + recall)
    return RougeScore(precision=precision, recall=recall, f1=f1)


def rouge_n(hyp: TokenSeq, ref: TokenSeq, n: int) -> RougeScore:
    """Clipped n-gram overlap precision/recall/F1 between two sequences."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    hyp_counts = _ngram_counts(hyp.tokens, n)
    ref_counts = _ngram_counts(ref.tokens, n)
    overlap = sum(min(c, ref_counts[g]) for g, c in hyp_counts.items())
    return _prf(overlap, sum(hyp_counts.values()), sum(ref_counts.values()))


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    # Two-row dynamic program; O(len(a) * len(b)) time, O(len(b)) space.
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0] * (len(b) + 1)
        for j, y in enumerate(b, start=1):
            if x == y:
                cur[j] = prev[j - 1] + 1
            else:
                cur[j] = max(prev[j], cur[j - 1])
        prev = cur
    return prev[-1]


def rouge_l(hyp: TokenSeq, ref: TokenSeq) -> RougeScore:
    """Longest-common-subsequence precision/recall/F1."""
    lcs = _lcs_length(hyp.tokens, ref.tokens)
    return _prf(lcs, len(hyp), len(ref))


def length_deviation(records: Iterable[LengthRecord]) -> float:
    """Mean of |output_len - expect_len| / expect_len over the records."""
    records = list(records)
    if not records:
        raise EmptySet("length_deviation needs at least one record")
    return sum(abs(r.output_len - r.expect_len) / r.expect_len for r in records) / len(
        records
    )


def round_half_up(x: float) -> int:
    """Round to nearest integer with exact halves going up."""
    return math.floor(x + 0.5)


def expected_length(ratio: float, reference_length: int) -> int:
    """Target length for a ratio, rounded half-up from the reference length."""
    return round_half_up(ratio * reference_length)
