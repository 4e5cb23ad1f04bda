import json
import shutil

import pytest

from lcmteval.cli import main
from lcmteval.corpus import Task
from lcmteval.errors import UnsupportedFormat
from lcmteval.reports import (
    SIG_HEADER,
    emit_sig_matrix,
    load_sig_matrix_csv,
    read_csv_table,
    sig_to_svg,
    sig_to_textgrid,
)
from lcmteval.significance import CIResult, SigCell, SigMatrix

TASK = Task("aa-bb", 0.8)


def make_matrix(metrics, wins=(), bonferroni=(), level="segment"):
    cells = {}
    for row in metrics:
        for col in metrics:
            if row == col:
                continue
            won = (row, col) in wins
            cells[(row, col)] = SigCell(
                row_metric=row,
                col_metric=col,
                ci=None if level == "segment" else CIResult(0.01 if won else -0.2, 0.3, 0.95),
                p_value=0.01 if level == "segment" and won else (0.5 if level == "segment" else None),
                significant=won,
                bonferroni_significant=((row, col) in bonferroni)
                if level == "segment"
                else None,
            )
    return SigMatrix(task=TASK, level=level, metrics=tuple(metrics), cells=cells)


class TestSigMatrixFormats:
    def test_csv_row_count_two_metrics(self, tmp_path):
        matrix = make_matrix(["m1", "m2"], wins={("m1", "m2")})
        path = tmp_path / "sig.csv"
        emit_sig_matrix(matrix, "csv", path)
        header, rows = read_csv_table(path)
        assert header == SIG_HEADER
        assert len(rows) == 2

    def test_csv_round_trip(self, tmp_path):
        matrix = make_matrix(
            ["m1", "m2", "m3"], wins={("m1", "m2")}, bonferroni={("m1", "m2")}
        )
        path = tmp_path / "sig.csv"
        emit_sig_matrix(matrix, "csv", path)
        loaded = load_sig_matrix_csv(path)
        assert loaded.task == matrix.task
        assert loaded.level == matrix.level
        assert loaded.metrics == matrix.metrics
        cell = loaded.cells[("m1", "m2")]
        assert cell.significant and cell.bonferroni_significant

    def test_empty_win_textgrid_all_dots(self):
        matrix = make_matrix(["m1", "m2", "m3"])
        grid = sig_to_textgrid(matrix)
        body = grid.splitlines()[len(matrix.metrics) + 1 :]
        cells = [c for line in body for c in line.split()[1:]]
        assert set(cells) == {"·"}

    def test_textgrid_marks(self):
        matrix = make_matrix(
            ["m1", "m2"], wins={("m1", "m2"), ("m2", "m1")},
            bonferroni={("m2", "m1")},
        )
        grid = sig_to_textgrid(matrix)
        lines = grid.splitlines()
        assert lines[-2].split() == ["1", "·", "W"]
        assert lines[-1].split() == ["2", "b", "·"]

    def test_svg_grid_shape(self):
        metrics = [f"metric{i:02d}" for i in range(18)]
        matrix = make_matrix(metrics, wins={(metrics[0], metrics[1])})
        svg = sig_to_svg(matrix)
        assert svg.count("<rect") == 18 * 18
        assert svg.count("<text") == 36
        assert "#1565c0" in svg  # segment-level wins are blue

    def test_svg_system_level_green(self):
        matrix = make_matrix(["m1", "m2"], wins={("m1", "m2")}, level="system")
        assert "#2e7d32" in sig_to_svg(matrix)

    def test_svg_bonferroni_outline(self):
        matrix = make_matrix(
            ["m1", "m2"], wins={("m1", "m2")}, bonferroni={("m1", "m2")}
        )
        assert "#ef6c00" in sig_to_svg(matrix)

    def test_unsupported_format(self, tmp_path):
        matrix = make_matrix(["m1", "m2"])
        with pytest.raises(UnsupportedFormat):
            emit_sig_matrix(matrix, "png", tmp_path / "x.png")


class TestCli:
    def test_validate_ok(self, fixture_config_path, capsys):
        assert main(["validate", str(fixture_config_path)]) == 0
        out = capsys.readouterr().out
        assert "expected ratings: 288" in out

    def test_validate_incomplete_exit_1(self, fixture_config_path, tmp_path, capsys):
        shutil.copytree(fixture_config_path.parent, tmp_path / "camp")
        ratings = tmp_path / "camp" / "ratings.csv"
        lines = ratings.read_text().splitlines()
        ratings.write_text("\n".join(lines[:-5]) + "\n", encoding="utf-8")
        assert main(["validate", str(tmp_path / "camp" / "campaign.conf")]) == 1

    def test_missing_ratings_file_exit_2(self, fixture_config_path, tmp_path, capsys):
        shutil.copytree(fixture_config_path.parent, tmp_path / "camp")
        (tmp_path / "camp" / "ratings.csv").unlink()
        code = main(["validate", str(tmp_path / "camp" / "campaign.conf")])
        assert code == 2
        assert "ratings file not found" in capsys.readouterr().err

    def test_traps_schedule(self, fixture_config_path, tmp_path, capsys):
        code = main(
            ["traps", str(fixture_config_path), "--out", str(tmp_path), "--count", "6"]
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "scheduled trap annotations: 72" in out  # 2 dirs * 2 ratios * 3 * 6
        lines = (tmp_path / "traps.jsonl").read_text().splitlines()
        assert len(lines) == 24  # 6 per (direction, ratio)
        first = json.loads(lines[0])
        assert set(first) == {"seg_id", "truncated_text", "original_reference", "ratio"}

    def test_score_emits_loadable_tables(self, fixture_config_path, tmp_path, campaign):
        from lcmteval.corpus import load_external_scores

        assert main(["score", str(fixture_config_path), "--out", str(tmp_path)]) == 0
        task = Task("en-zh", 0.8)
        tables = load_external_scores(
            tmp_path / "native_scores_en-zh.80.tsv",
            task,
            systems=campaign.config.systems,
            segment_ids=campaign.segment_ids_for_direction("en-zh"),
        )
        names = {t.metric_id for t in tables}
        assert "ROUGE1-F1" in names and "LengthDev" in names
        header, rows = read_csv_table(tmp_path / "native_system_en-zh.80.csv")
        assert {r[0] for r in rows} == {"BLEU", "BLEU*"}

    def test_score_matches_module_composition(self, fixture_config_path, tmp_path, campaign):
        from lcmteval.corpus import load_external_scores
        from lcmteval.pipeline import score_tables_for_task

        main(["score", str(fixture_config_path), "--out", str(tmp_path)])
        task = Task("zh-en", 0.5)
        emitted = {
            t.key: t
            for t in load_external_scores(
                tmp_path / "native_scores_zh-en.50.tsv",
                task,
                systems=campaign.config.systems,
                segment_ids=campaign.segment_ids_for_direction("zh-en"),
            )
        }
        for table in score_tables_for_task(campaign, task):
            if table.level != "segment":
                continue
            assert emitted[table.key].cells == table.cells

    def test_qc_and_normalize(self, fixture_config_path, tmp_path):
        assert main(["qc", str(fixture_config_path), "--out", str(tmp_path)]) == 0
        header, rows = read_csv_table(tmp_path / "qc_timing.csv")
        assert header == ["direction", "ratio", "all_ave", "cut_ave"]
        assert len(rows) == 4
        assert main(["normalize", str(fixture_config_path), "--out", str(tmp_path)]) == 0
        header, rows = read_csv_table(tmp_path / "normalized_ratings.csv")
        assert len(rows) == 288  # traps dropped by default

    def test_ingest_summary(self, fixture_config_path, capsys):
        assert main(["ingest", str(fixture_config_path)]) == 0
        out = capsys.readouterr().out
        assert "16 external score tables ingested" in out

    def test_report_rerenders_matrix(self, tmp_path):
        matrix = make_matrix(["m1", "m2"], wins={("m1", "m2")})
        csv_path = tmp_path / "sig.csv"
        emit_sig_matrix(matrix, "csv", csv_path)
        out_path = tmp_path / "sig.txt"
        assert main(["report", str(csv_path), "--format", "textgrid",
                     str(out_path)]) == 0
        assert "W" in out_path.read_text()
        svg_path = tmp_path / "sig.svg"
        assert main(["report", str(csv_path), "--format", "svg", str(svg_path)]) == 0
        assert svg_path.read_text().startswith("<svg")


    def test_statistical_precondition_exit_3(self, fixture_config_path, tmp_path, capsys):
        shutil.copytree(fixture_config_path.parent, tmp_path / "camp")
        ratings = tmp_path / "camp" / "ratings.csv"
        lines = ratings.read_text().splitlines()
        # flatten one annotator's scores to a constant: z-normalization for
        # that (annotator, task) group becomes undefined
        flattened = [lines[0]]
        for line in lines[1:]:
            fields = line.split(",")
            if fields[0] == "a1":
                fields[4] = "50"
            flattened.append(",".join(fields))
        ratings.write_text("\n".join(flattened) + "\n", encoding="utf-8")
        code = main(
            ["normalize", str(tmp_path / "camp" / "campaign.conf"), "--out",
             str(tmp_path / "out")]
        )
        assert code == 3
        assert "constant scores" in capsys.readouterr().err

    def test_length_unit_override_changes_length_dev(self, fixture_config_path, tmp_path, campaign):
        from lcmteval.corpus import load_external_scores

        out_chars = tmp_path / "chars"
        out_ws = tmp_path / "ws"
        main(["score", str(fixture_config_path), "--out", str(out_chars)])
        main(["score", str(fixture_config_path), "--out", str(out_ws),
              "--length-unit", "whitespace-tokens"])
        task = Task("en-zh", 0.8)

        def dev_cells(folder):
            tables = load_external_scores(
                folder / "native_scores_en-zh.80.tsv", task,
                systems=campaign.config.systems,
                segment_ids=campaign.segment_ids_for_direction("en-zh"),
            )
            return next(t for t in tables if t.metric_id == "LengthDev").cells

        # zh references are unsegmented: whitespace-token counts differ wildly
        assert dev_cells(out_chars) != dev_cells(out_ws)

    def test_include_traps_flag(self, fixture_config_path, tmp_path):
        main(["normalize", str(fixture_config_path), "--out", str(tmp_path),
              "--include-traps"])
        header, rows = read_csv_table(tmp_path / "normalized_ratings.csv")
        assert len(rows) == 336  # trap rows kept in the groups

    def test_correlate_segment_level(self, fixture_config_path, tmp_path):
        code = main(
            ["correlate", str(fixture_config_path), "--out", str(tmp_path),
             "--level", "segment"]
        )
        assert code == 0
        header, rows = read_csv_table(tmp_path / "correlations_segment.csv")
        assert header[:2] == ["metric", "variant"]
        assert len(rows) == 11  # 9 ROUGE + neuralA best variant + neuralB
        header, rows = read_csv_table(tmp_path / "variant_selection.csv")
        assert {row[1] for row in rows} == {"segment"}

    def test_significance_system_level(self, fixture_config_path, tmp_path):
        code = main(
            ["significance", str(fixture_config_path), "--out", str(tmp_path),
             "--hybrids", "50"]
        )
        assert code == 0
        matrix = load_sig_matrix_csv(tmp_path / "sig_system_en-zh.80.csv")
        assert matrix.level == "system"
        assert len(matrix.metrics) == 13  # 9 ROUGE + BLEU + BLEU* + 2 neural

    def test_syscompare(self, fixture_config_path, tmp_path):
        code = main(
            ["syscompare", str(fixture_config_path), "--out", str(tmp_path),
             "--level", "segment", "--bootstrap", "200"]
        )
        assert code == 0
        header, rows = read_csv_table(tmp_path / "system_eval.csv")
        assert len(rows) == 11 * 2  # metrics x systems


FAST_FLAGS = ["--hybrids", "60", "--permutations", "60", "--bootstrap", "100"]


class TestRunCommand:
    def test_seed_contract(self, fixture_config_path, tmp_path):
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        base = ["run", str(fixture_config_path), "--level", "segment"] + FAST_FLAGS
        assert main(base + ["--out", str(out_a), "--seed", "1"]) == 0
        assert main(base + ["--out", str(out_b), "--seed", "2"]) == 0

        deterministic = [
            "qc_timing.csv", "qc_traps.csv", "agreement.csv",
            "correlations_segment.csv", "length_deviation.csv",
            "variant_selection.csv",
        ]
        for name in deterministic:
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes(), name
        resampled = [(out_a / "sig_segment_en-zh.80.csv").read_bytes(),
                     (out_b / "sig_segment_en-zh.80.csv").read_bytes()]
        assert resampled[0] != resampled[1]
        # hybrid-extended Pearson depends on the sampled pseudo-systems
        assert (out_a / "correlations_system.csv").exists()

    def test_incomplete_campaign_exit_1(self, fixture_config_path, tmp_path):
        shutil.copytree(fixture_config_path.parent, tmp_path / "camp")
        ratings = tmp_path / "camp" / "ratings.csv"
        lines = ratings.read_text().splitlines()
        real = max(i for i, line in enumerate(lines) if line.endswith(",false"))
        del lines[real]
        ratings.write_text("\n".join(lines) + "\n", encoding="utf-8")
        code = main(
            ["run", str(tmp_path / "camp" / "campaign.conf"), "--out",
             str(tmp_path / "out")] + FAST_FLAGS
        )
        assert code == 1
