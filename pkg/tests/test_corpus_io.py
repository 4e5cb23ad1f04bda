import json
from pathlib import Path

import pytest

from lcmteval.corpus import (
    Campaign,
    CampaignConfig,
    SegmentRecord,
    Task,
    load_campaign,
    load_external_scores,
    parse_config,
    percent_label,
    save_campaign,
    validate_campaign,
)
from lcmteval.errors import (
    DuplicateCell,
    IncompleteTable,
    MissingFile,
    NonFiniteScore,
    ParseError,
    UnknownSegment,
    UnresolvedReference,
)

FIXTURE = Path(__file__).parent / "fixtures" / "campaign"


def minimal_config(**overrides) -> CampaignConfig:
    fields = dict(
        directions=("aa-bb",),
        length_ratios=(0.8,),
        systems=("s1", "s2"),
        annotators_per_task=1,
        length_unit="whitespace-tokens",
        seed=7,
    )
    fields.update(overrides)
    return CampaignConfig(**fields)


def write_minimal_campaign(tmp_path: Path, *, hyp_rows=None, rating_rows=None) -> Path:
    (tmp_path / "campaign.conf").write_text(
        "directions = aa-bb\n"
        "ratios = 0.8, 0.5\n"
        "systems = s1, s2\n"
        "annotators_per_task = 1\n"
        "length_unit = whitespace-tokens\n"
        "seed = 7\n"
        "segments = segments.jsonl\n"
        "hypotheses = hypotheses.jsonl\n"
        "ratings = ratings.csv\n",
        encoding="utf-8",
    )
    segments = [
        {"seg_id": "g1", "direction": "aa-bb", "source_text": "src one",
         "reference_text": "tok a b c"},
        {"seg_id": "g2", "direction": "aa-bb", "source_text": "src two",
         "reference_text": "tok d e f"},
    ]
    (tmp_path / "segments.jsonl").write_text(
        "\n".join(json.dumps(s) for s in segments) + "\n", encoding="utf-8"
    )
    if hyp_rows is None:
        hyp_rows = [
            {"system_id": sys_id, "seg_id": seg, "length_ratio": ratio, "text": "tok a b"}
            for sys_id in ("s1", "s2")
            for seg in ("g1", "g2")
            for ratio in (0.8, 0.5)
        ]
    (tmp_path / "hypotheses.jsonl").write_text(
        "\n".join(json.dumps(h) for h in hyp_rows) + "\n", encoding="utf-8"
    )
    if rating_rows is None:
        rating_rows = [
            f"u1,{seg},{sys_id},{ratio},{score},30.0,false"
            for score, (sys_id, seg, ratio) in enumerate(
                (s, g, r)
                for s in ("s1", "s2")
                for g in ("g1", "g2")
                for r in (0.8, 0.5)
            )
        ]
    (tmp_path / "ratings.csv").write_text(
        "annotator,seg_id,system,ratio,score,duration_s,is_trap\n"
        + "\n".join(rating_rows)
        + "\n",
        encoding="utf-8",
    )
    return tmp_path / "campaign.conf"


class TestConfig:
    def test_fixture_parses(self):
        config = parse_config(FIXTURE / "campaign.conf")
        assert config.directions == ("en-zh", "zh-en")
        assert config.length_ratios == (0.8, 0.5)
        assert config.annotators_per_task == 3

    def test_missing_file(self, tmp_path):
        with pytest.raises(MissingFile):
            parse_config(tmp_path / "nope.conf")

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "c.conf"
        path.write_text("directions = a-b\nbogus = 1\n", encoding="utf-8")
        with pytest.raises(ParseError, match="bogus"):
            parse_config(path)

    def test_invariants_enforced(self):
        with pytest.raises(ParseError):
            minimal_config(length_ratios=(1.2,))
        with pytest.raises(ParseError):
            minimal_config(length_ratios=())
        with pytest.raises(ParseError):
            minimal_config(systems=("s1", "s1"))
        with pytest.raises(ParseError):
            minimal_config(annotators_per_task=0)
        with pytest.raises(ParseError):
            minimal_config(length_unit="bytes")

    def test_task_labels(self):
        assert Task("en-zh", 0.8).label == "en-zh.80"
        assert Task("zh-en", 0.5).label == "zh-en.50"
        assert percent_label(1 / 3) == "33.33333333"


class TestLoadCampaign:
    def test_fixture_loads(self, campaign):
        assert len(campaign.config.systems) == 2
        assert len(campaign.config.length_ratios) == 2
        assert len(campaign.segments) == 24
        assert len(campaign.hypotheses) == 96

    def test_round_trip_identity(self, campaign, tmp_path):
        save_campaign(campaign, tmp_path)
        reloaded = load_campaign(tmp_path / "campaign.conf")
        assert reloaded == campaign

    def test_unknown_seg_in_hypothesis(self, tmp_path):
        config = write_minimal_campaign(
            tmp_path,
            hyp_rows=[
                {"system_id": "s1", "seg_id": "ghost", "length_ratio": 0.8,
                 "text": "x"}
            ],
        )
        with pytest.raises(UnresolvedReference, match="ghost"):
            load_campaign(config)

    def test_ratio_not_in_config(self, tmp_path):
        config = write_minimal_campaign(
            tmp_path,
            hyp_rows=[
                {"system_id": "s1", "seg_id": "g1", "length_ratio": 0.7, "text": "x"}
            ],
        )
        with pytest.raises(ParseError, match="0.7"):
            load_campaign(config)

    def test_missing_ratings_file(self, tmp_path):
        config = write_minimal_campaign(tmp_path)
        (tmp_path / "ratings.csv").unlink()
        with pytest.raises(MissingFile):
            load_campaign(config)

    def test_duplicate_seg_id_rejected(self, tmp_path):
        config = write_minimal_campaign(tmp_path)
        seg_file = tmp_path / "segments.jsonl"
        lines = seg_file.read_text().splitlines()
        seg_file.write_text("\n".join(lines + [lines[0]]) + "\n", encoding="utf-8")
        with pytest.raises(ParseError, match="duplicate seg_id"):
            load_campaign(config)

    def test_trap_rating_system_unchecked(self, tmp_path):
        rows = [
            "u1,g1,s1,0.8,50,30.0,false",
            "u1,g1,_trap,0.8,0,10.0,true",
        ]
        config = write_minimal_campaign(tmp_path, rating_rows=rows)
        campaign = load_campaign(config)
        traps = [r for r in campaign.ratings if r.is_trap]
        assert traps[0].system_id == "_trap"
        assert traps[0].task == Task("aa-bb", 0.8)

    def test_unknown_system_in_real_rating(self, tmp_path):
        config = write_minimal_campaign(
            tmp_path, rating_rows=["u1,g1,sX,0.8,50,30.0,false"]
        )
        with pytest.raises(UnresolvedReference, match="sX"):
            load_campaign(config)


class TestValidate:
    def test_fixture_complete(self, campaign):
        report = validate_campaign(campaign)
        assert report.ok
        assert report.expected_rating_count == 288  # 2*12*2*2*3
        assert report.found_rating_count == 288

    def test_zero_ratings_all_missing(self, campaign):
        empty = Campaign(
            config=campaign.config,
            segments=campaign.segments,
            hypotheses=campaign.hypotheses,
            ratings=(),
            external_scores={},
        )
        report = validate_campaign(empty)
        assert report.found_rating_count == 0
        # every (direction, ratio, seg, system) cell is missing
        assert len(report.missing_cells) == 2 * 2 * 12 * 2
        assert all(cell[4] == 0 for cell in report.missing_cells)

    def test_duplicate_rating_reported(self, campaign):
        first = campaign.ratings[0]
        dup = Campaign(
            config=campaign.config,
            segments=campaign.segments,
            hypotheses=campaign.hypotheses,
            ratings=campaign.ratings + (first,),
            external_scores={},
        )
        report = validate_campaign(dup)
        assert len(report.duplicate_cells) == 1
        annotator, direction, ratio, seg_id, system, count = report.duplicate_cells[0]
        assert (annotator, seg_id, system) == (
            first.annotator_id,
            first.seg_id,
            first.system_id,
        )
        assert count == 2

    def test_expected_formula_multiplicative(self):
        def expected_for(directions, n_segments, systems, ratios, annotators):
            segments = {}
            for d in directions:
                for i in range(n_segments):
                    seg_id = f"{d}-{i}"
                    segments[seg_id] = SegmentRecord(
                        seg_id=seg_id, direction=d, source_text="s",
                        reference_text="r",
                    )
            config = CampaignConfig(
                directions=tuple(directions),
                length_ratios=tuple(ratios),
                systems=tuple(systems),
                annotators_per_task=annotators,
                length_unit="whitespace-tokens",
                seed=1,
            )
            camp = Campaign(config, segments, {}, (), {})
            return validate_campaign(camp).expected_rating_count

        base = expected_for(["d1", "d2"], 5, ["s1", "s2"], [0.8, 0.5], 3)
        assert base == 2 * 5 * 2 * 2 * 3
        # permutation of factor lists leaves the product unchanged
        assert expected_for(["d2", "d1"], 5, ["s2", "s1"], [0.5, 0.8], 3) == base
        # multiplicative in each factor
        assert expected_for(["d1", "d2"], 5, ["s1", "s2", "s3"], [0.8, 0.5], 3) == base // 2 * 3


class TestExternalScores:
    def test_fixture_tables_dense(self, campaign):
        for task, tables in campaign.external_scores.items():
            seg_ids = campaign.segment_ids_for_direction(task.direction)
            for table in tables:
                assert set(table.cells) == {
                    (s, g) for s in campaign.config.systems for g in seg_ids
                }

    def _write(self, tmp_path, rows):
        path = tmp_path / "scores.tsv"
        path.write_text(
            "metric\tvariant\tsystem\tseg_id\tscore\n"
            + "\n".join("\t".join(r) for r in rows)
            + "\n",
            encoding="utf-8",
        )
        return path

    def test_single_complete_table(self, tmp_path):
        rows = [
            ("m", "v", sys_id, seg, "0.5")
            for sys_id in ("s1", "s2")
            for seg in ("g1", "g2", "g3")
        ]
        path = self._write(tmp_path, rows)
        tables = load_external_scores(
            path, Task("aa-bb", 0.8), systems=["s1", "s2"],
            segment_ids=["g1", "g2", "g3"],
        )
        assert len(tables) == 1
        assert len(tables[0].cells) == 6

    def test_nan_score_rejected(self, tmp_path):
        path = self._write(tmp_path, [("m", "v", "s1", "g1", "NaN")])
        with pytest.raises(NonFiniteScore):
            load_external_scores(
                path, Task("aa-bb", 0.8), systems=["s1"], segment_ids=["g1"]
            )

    def test_duplicate_cell_rejected(self, tmp_path):
        rows = [("m", "v", "s1", "g1", "0.5"), ("m", "v", "s1", "g1", "0.6")]
        path = self._write(tmp_path, rows)
        with pytest.raises(DuplicateCell):
            load_external_scores(
                path, Task("aa-bb", 0.8), systems=["s1"], segment_ids=["g1"]
            )

    def test_unknown_segment_rejected(self, tmp_path):
        path = self._write(tmp_path, [("m", "v", "s1", "ghost", "0.5")])
        with pytest.raises(UnknownSegment):
            load_external_scores(
                path, Task("aa-bb", 0.8), systems=["s1"], segment_ids=["g1"]
            )

    def test_incomplete_table_rejected(self, tmp_path):
        path = self._write(tmp_path, [("m", "v", "s1", "g1", "0.5")])
        with pytest.raises(IncompleteTable):
            load_external_scores(
                path, Task("aa-bb", 0.8), systems=["s1"], segment_ids=["g1", "g2"]
            )

    def test_thirty_nine_variant_sweep(self, tmp_path):
        rows = []
        for layer in range(13):
            for measurement in ("P", "R", "F"):
                variant = f"layer.{layer}.{measurement}"
                for sys_id in ("s1", "s2"):
                    for seg in ("g1", "g2"):
                        rows.append(("m", variant, sys_id, seg, "0.25"))
        path = self._write(tmp_path, rows)
        tables = load_external_scores(
            path, Task("aa-bb", 0.8), systems=["s1", "s2"], segment_ids=["g1", "g2"]
        )
        assert len(tables) == 39
        assert {t.variant_id for t in tables} == {
            f"layer.{i}.{m}" for i in range(13) for m in "PRF"
        }

    def test_embedded_tab_rejected(self, tmp_path):
        path = tmp_path / "scores.tsv"
        path.write_text(
            "metric\tvariant\tsystem\tseg_id\tscore\n"
            "m\tv\ts1\tg1\textra\t0.5\n",
            encoding="utf-8",
        )
        with pytest.raises(ParseError):
            load_external_scores(
                path, Task("aa-bb", 0.8), systems=["s1"], segment_ids=["g1"]
            )


class TestRatingRecordInvariants:
    def test_score_bounds_enforced_on_load(self, tmp_path):
        config = write_minimal_campaign(
            tmp_path, rating_rows=["u1,g1,s1,0.8,101,30.0,false"]
        )
        with pytest.raises(ParseError, match="101"):
            load_campaign(config)

    def test_rating_ratio_checked(self, tmp_path):
        config = write_minimal_campaign(
            tmp_path, rating_rows=["u1,g1,s1,0.9,50,30.0,false"]
        )
        with pytest.raises(ParseError, match="0.9"):
            load_campaign(config)
