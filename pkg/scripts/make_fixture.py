#!/usr/bin/env python3
"""Generate the synthetic fixture campaign under tests/fixtures/campaign/.

The fixture is frozen in git; rerunning this script must reproduce it
byte-for-byte (single fixed RNG seed, canonical writers from the package).
"""

from __future__ import annotations

import math
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from lcmteval.corpus import (
    Campaign,
    CampaignConfig,
    HypothesisRecord,
    RatingRecord,
    ScoreTable,
    SegmentRecord,
    Task,
    save_campaign,
)

FIXTURE_DIR = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "campaign"

CJK = list("的一是在不了有和人这中大为上个国我以要他时来用们生到作地于出就分对成会可主发年动同工也能下过子说产种面而方后多定行学法所民得")
EN_WORDS = (
    "the market rose sharply after the new report while analysts warned of "
    "slower growth in several key sectors and officials said further measures "
    "could follow within months despite public concern about rising costs"
).split()

N_SEGMENTS = 12
TRAPS_PER_TASK = 4
DIRECTIONS = ("en-zh", "zh-en")
RATIOS = (0.8, 0.5)
SYSTEMS = ("sysA", "sysB")
ANNOTATORS = {"en-zh": ("a1", "a2", "a3"), "zh-en": ("b1", "b2", "b3")}
BIAS = {"a1": 6.0, "a2": 0.0, "a3": -5.0, "b1": 4.0, "b2": -2.0, "b3": 1.0}


def make_segments(rng: np.random.Generator) -> dict[str, SegmentRecord]:
    segments = {}
    for d, direction in enumerate(DIRECTIONS):
        zh_target = direction.endswith("zh")
        for i in range(N_SEGMENTS):
            seg_id = f"{'ez' if direction == 'en-zh' else 'ze'}{i:02d}"
            if zh_target:
                length = int(rng.integers(12, 21))
                reference = "".join(rng.choice(CJK, size=length))
                source = " ".join(rng.choice(EN_WORDS, size=int(rng.integers(8, 15))))
            else:
                length = int(rng.integers(8, 15))
                reference = " ".join(rng.choice(EN_WORDS, size=length))
                source = "".join(rng.choice(CJK, size=int(rng.integers(12, 21))))
            segments[seg_id] = SegmentRecord(
                seg_id=seg_id,
                direction=direction,
                source_text=source,
                reference_text=reference,
                reference_length=None,
            )
    return segments


def ref_tokens(seg: SegmentRecord) -> list[str]:
    if seg.direction.endswith("zh"):
        return list(seg.reference_text)
    return seg.reference_text.split()


def join_tokens(seg: SegmentRecord, tokens: list[str]) -> str:
    return ("" if seg.direction.endswith("zh") else " ").join(tokens)


def make_hypotheses_and_quality(segments, rng):
    """Shorten each reference to roughly the target ratio, corrupting more
    tokens for sysB; the kept-intact fraction is the latent quality signal."""
    hypotheses = {}
    quality = {}
    for seg in segments.values():
        tokens = ref_tokens(seg)
        for ratio in RATIOS:
            for system in SYSTEMS:
                keep = max(
                    2, int(round(ratio * len(tokens))) + int(rng.integers(-1, 2))
                )
                keep = min(keep, len(tokens))
                corrupt_rate = 0.10 if system == "sysA" else 0.30
                out = []
                intact = 0
                for tok in tokens[:keep]:
                    if rng.random() < corrupt_rate:
                        out.append(
                            str(rng.choice(CJK))
                            if seg.direction.endswith("zh")
                            else str(rng.choice(EN_WORDS))
                        )
                    else:
                        out.append(tok)
                        intact += 1
                hypotheses[(system, seg.seg_id, ratio)] = HypothesisRecord(
                    system_id=system,
                    seg_id=seg.seg_id,
                    length_ratio=ratio,
                    text=join_tokens(seg, out),
                )
                quality[(system, seg.seg_id, ratio)] = intact / len(tokens) / ratio
    return hypotheses, quality


def make_ratings(segments, quality, rng):
    ratings = []
    for direction in DIRECTIONS:
        seg_ids = sorted(s for s, rec in segments.items() if rec.direction == direction)
        for ratio in RATIOS:
            task = Task(direction, ratio)
            for annotator in ANNOTATORS[direction]:
                for seg_id in seg_ids:
                    for system in SYSTEMS:
                        q = quality[(system, seg_id, ratio)]
                        raw = 100.0 * q + BIAS[annotator] + rng.normal(0.0, 7.0)
                        score = int(min(100, max(0, round(raw))))
                        duration = float(np.round(math.exp(rng.normal(3.8, 0.5)), 1))
                        if rng.random() < 0.02:
                            duration = float(np.round(rng.uniform(700, 1200), 1))
                        ratings.append(
                            RatingRecord(
                                annotator_id=annotator,
                                task=task,
                                seg_id=seg_id,
                                system_id=system,
                                raw_score=score,
                                duration_s=duration,
                                is_trap=False,
                            )
                        )
                # trap items: truncated references, scored near zero
                trap_ids = [str(s) for s in rng.choice(seg_ids, TRAPS_PER_TASK, replace=False)]
                for seg_id in trap_ids:
                    score = 0 if rng.random() < 0.8 else int(rng.integers(1, 26))
                    ratings.append(
                        RatingRecord(
                            annotator_id=annotator,
                            task=task,
                            seg_id=seg_id,
                            system_id="_trap",
                            raw_score=score,
                            duration_s=float(np.round(math.exp(rng.normal(3.2, 0.4)), 1)),
                            is_trap=True,
                        )
                    )
    return tuple(ratings)


def make_external_scores(segments, quality, rng):
    external = {}
    for direction in DIRECTIONS:
        seg_ids = sorted(s for s, rec in segments.items() if rec.direction == direction)
        for ratio in RATIOS:
            task = Task(direction, ratio)
            tables = []
            for variant, noise in (("v1", 0.30), ("v2", 0.04), ("v3", 0.18)):
                cells = {}
                for system in SYSTEMS:
                    for seg_id in seg_ids:
                        q = quality[(system, seg_id, ratio)]
                        cells[(system, seg_id)] = float(
                            np.round(q + rng.normal(0.0, noise), 6)
                        )
                tables.append(ScoreTable.segment_table("neuralA", variant, task, cells))
            cells = {}
            for system in SYSTEMS:
                for seg_id in seg_ids:
                    q = quality[(system, seg_id, ratio)]
                    cells[(system, seg_id)] = float(
                        np.round(0.3 + 0.5 * q + rng.normal(0.0, 0.12), 6)
                    )
            tables.append(ScoreTable.segment_table("neuralB", "-", task, cells))
            external[task] = tuple(tables)
    return external


def main() -> None:
    rng = np.random.default_rng(974321)
    segments = make_segments(rng)
    hypotheses, quality = make_hypotheses_and_quality(segments, rng)
    ratings = make_ratings(segments, quality, rng)
    external = make_external_scores(segments, quality, rng)
    config = CampaignConfig(
        directions=DIRECTIONS,
        length_ratios=RATIOS,
        systems=SYSTEMS,
        annotators_per_task=3,
        length_unit="characters",
        seed=20250810,
        segments_path="segments.jsonl",
        hypotheses_path="hypotheses.jsonl",
        ratings_path="ratings.csv",
        scores_dir="scores",
    )
    campaign = Campaign(
        config=config,
        segments=segments,
        hypotheses=hypotheses,
        ratings=ratings,
        external_scores=external,
    )
    FIXTURE_DIR.mkdir(parents=True, exist_ok=True)
    save_campaign(campaign, FIXTURE_DIR)
    n_traps = sum(1 for r in ratings if r.is_trap)
    print(f"fixture written to {FIXTURE_DIR}")
    print(f"{len(segments)} segments, {len(hypotheses)} hypotheses, "
          f"{len(ratings)} ratings ({n_traps} traps)")


if __name__ == "__main__":
    main()
