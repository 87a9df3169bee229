"""End-to-end command-line behavior: ingest, run, compare, exit codes."""

import csv
import json

import pytest

from conftest import RUNNING_EXAMPLE
from ngramstats.cli import RunConfig, UsageError, main

GOLDEN_TSV = "a\t3\na x\t3\na x b\t3\nb\t5\nx\t7\nx b\t4\n"


@pytest.fixture
def raw_dir(tmp_path):
    raw = tmp_path / "raw"
    raw.mkdir()
    for i, text in enumerate(RUNNING_EXAMPLE, start=1):
        (raw / f"d{i}.txt").write_text(text, encoding="utf-8")
    (raw / "years.tsv").write_text("d1.txt\t1990\nd2.txt\t1990\nd3.txt\t1991\n")
    return raw


@pytest.fixture
def corpus_dir(raw_dir, tmp_path):
    out = tmp_path / "encoded"
    assert main(["ingest", str(raw_dir), str(out)]) == 0
    return out


class TestIngest:
    def test_report(self, raw_dir, tmp_path, capsys):
        assert main(["ingest", str(raw_dir), str(tmp_path / "enc")]) == 0
        report = capsys.readouterr().out
        assert "documents" in report and "3" in report
        assert "term occurrences" in report and "15" in report
        assert "distinct terms" in report

    def test_dictionary_file(self, corpus_dir):
        lines = (corpus_dir / "dictionary.tsv").read_text().splitlines()
        assert lines == ["x\t0\t7", "b\t1\t5", "a\t2\t3"]

    def test_empty_directory_fails(self, tmp_path):
        empty = tmp_path / "none"
        empty.mkdir()
        assert main(["ingest", str(empty), str(tmp_path / "enc")]) == 2

    def test_unreadable_file_warns_but_continues(self, raw_dir, tmp_path, capsys):
        (raw_dir / "bad.txt").write_bytes(b"\xff\xfe\x00broken\xff")
        assert main(["ingest", str(raw_dir), str(tmp_path / "enc")]) == 0
        assert "skipping bad.txt" in capsys.readouterr().err


class TestRun:
    def run_tsv(self, corpus_dir, tmp_path, *args) -> str:
        out = tmp_path / "stats.tsv"
        code = main(
            ["run", "--corpus", str(corpus_dir), "--tau", "3", "--sigma", "3", "--out", str(out)]
            + list(args)
        )
        assert code == 0
        return out.read_text()

    def test_all_methods_byte_identical(self, corpus_dir, tmp_path):
        outputs = {
            method: self.run_tsv(corpus_dir, tmp_path, "--method", method)
            for method in ("naive", "apriori-scan", "apriori-index", "suffix-sigma", "oracle")
        }
        assert set(outputs.values()) == {GOLDEN_TSV}

    def test_stdout_when_no_out(self, corpus_dir, capsys):
        assert (
            main(["run", "--corpus", str(corpus_dir), "--method", "naive", "--tau", "3", "--sigma", "3"])
            == 0
        )
        assert capsys.readouterr().out == GOLDEN_TSV

    def test_metrics_json(self, corpus_dir, tmp_path):
        metrics = tmp_path / "metrics.json"
        self.run_tsv(corpus_dir, tmp_path, "--method", "apriori-scan", "--metrics-out", str(metrics))
        payload = json.loads(metrics.read_text())
        assert [job["job"] for job in payload["jobs"]][0] == "unigram-count"
        iterations = [job["iteration"] for job in payload["jobs"] if job["job"] == "apriori-scan"]
        assert iterations == [1, 2, 3, 4]
        assert all("map_output_records" in job for job in payload["jobs"])
        assert payload["totals"]["map_output_records_pre_combiner"] == sum(
            job["map_output_records_pre_combiner"] for job in payload["jobs"]
        )

    def test_sigma_inf(self, corpus_dir, tmp_path):
        text = self.run_tsv(corpus_dir, tmp_path, "--method", "suffix-sigma", "--sigma", "inf")
        assert "a x b x x\t1" not in text  # floor 3 still filters
        assert "x b\t4" in text

    def test_timeseries_output(self, corpus_dir, tmp_path):
        out = tmp_path / "series.tsv"
        code = main(
            [
                "run", "--corpus", str(corpus_dir), "--method", "suffix-sigma",
                "--tau", "3", "--sigma", "3", "--timeseries", "--out", str(out),
            ]
        )
        assert code == 0
        lines = dict(line.split("\t") for line in out.read_text().splitlines())
        assert lines["a x b"] == "1990:2,1991:1"

    def test_maximal_closed_outputs(self, corpus_dir, tmp_path):
        maximal = self.run_tsv(corpus_dir, tmp_path, "--method", "suffix-sigma", "--maximal")
        assert maximal == "a x b\t3\n"
        closed = self.run_tsv(corpus_dir, tmp_path, "--method", "suffix-sigma", "--closed")
        assert closed == "a x b\t3\nb\t5\nx\t7\nx b\t4\n"

    def test_keep_intermediate(self, corpus_dir, tmp_path):
        out = tmp_path / "stats.tsv"
        code = main(
            [
                "run", "--corpus", str(corpus_dir), "--method", "apriori-scan",
                "--tau", "3", "--sigma", "3", "--out", str(out), "--keep-intermediate",
            ]
        )
        assert code == 0
        files = sorted(p.name for p in (tmp_path / "intermediate").iterdir())
        assert files == ["iter-001.bin", "iter-002.bin", "iter-003.bin", "iter-004.bin"]

    def test_reducers_and_workers_flags(self, corpus_dir, tmp_path):
        for reducers in (1, 3, 9):
            for workers in (1, 4):
                text = self.run_tsv(
                    corpus_dir, tmp_path, "--method", "suffix-sigma",
                    "--reducers", str(reducers), "--workers", str(workers),
                )
                assert text == GOLDEN_TSV

    def test_combiner_off(self, corpus_dir, tmp_path):
        text = self.run_tsv(corpus_dir, tmp_path, "--method", "naive", "--combiner", "off")
        assert text == GOLDEN_TSV

    def test_workers_env_fallback(self, corpus_dir, tmp_path, monkeypatch):
        from ngramstats.cli import build_parser

        monkeypatch.setenv("NGRAM_WORKERS", "7")
        args = build_parser().parse_args(
            ["run", "--corpus", str(corpus_dir), "--method", "naive", "--tau", "3"]
        )
        assert args.workers == 7


class TestUsageErrors:
    def test_unknown_flag(self, corpus_dir):
        with pytest.raises(SystemExit) as err:
            main(["run", "--corpus", str(corpus_dir), "--method", "naive", "--tau", "3", "--league", "x"])
        assert err.value.code == 1

    def test_k_requires_apriori_index(self, corpus_dir):
        code = main(
            ["run", "--corpus", str(corpus_dir), "--method", "naive", "--tau", "3", "--k", "4"]
        )
        assert code == 1

    def test_timeseries_excludes_maximal(self, corpus_dir):
        code = main(
            [
                "run", "--corpus", str(corpus_dir), "--method", "suffix-sigma",
                "--tau", "3", "--timeseries", "--maximal",
            ]
        )
        assert code == 1

    def test_mode_flags_require_suffix_method(self, corpus_dir):
        code = main(
            ["run", "--corpus", str(corpus_dir), "--method", "naive", "--tau", "3", "--maximal"]
        )
        assert code == 1

    def test_bad_tau(self, corpus_dir):
        code = main(["run", "--corpus", str(corpus_dir), "--method", "naive", "--tau", "0"])
        assert code == 1

    def test_runtime_error_exit_code(self, tmp_path, capsys):
        # timeseries on an untimed corpus is a runtime failure, not usage
        raw = tmp_path / "untimed"
        raw.mkdir()
        (raw / "d1.txt").write_text("a b a")
        enc = tmp_path / "untimed-enc"
        assert main(["ingest", str(raw), str(enc)]) == 0
        code = main(
            [
                "run", "--corpus", str(enc), "--method", "suffix-sigma",
                "--tau", "1", "--timeseries",
            ]
        )
        assert code == 2
        assert "untimed document" in capsys.readouterr().err

    def test_missing_corpus_is_runtime_error(self, tmp_path):
        code = main(["run", "--corpus", str(tmp_path / "nope"), "--method", "naive", "--tau", "1"])
        assert code == 2


class TestRunConfigValidation:
    def test_valid(self):
        RunConfig("suffix-sigma", 3, 3).validate()

    def test_index_len_floor(self):
        with pytest.raises(UsageError):
            RunConfig("apriori-index", 3, 3, index_len=1).validate()

    def test_unknown_method(self):
        with pytest.raises(UsageError):
            RunConfig("grep", 1, None).validate()


class TestCompare:
    def test_grid_shape_and_columns(self, corpus_dir, tmp_path):
        out = tmp_path / "grid.csv"
        code = main(
            ["compare", "--corpus", str(corpus_dir), "--tau", "1,2,3", "--sigma", "1,2,3", "--out", str(out)]
        )
        assert code == 0
        rows = list(csv.DictReader(out.read_text().splitlines()))
        assert len(rows) == 36  # 4 methods x 9 cells
        suffix_rows = [r for r in rows if r["method"] == "suffix-sigma"]
        by_tau = {}
        for row in suffix_rows:
            by_tau.setdefault(row["tau"], set()).add(row["records"])
        # suffix record count depends only on tau, not sigma
        assert all(len(values) == 1 for values in by_tau.values())
        for row in rows:
            assert int(row["records"]) >= 0 and int(row["bytes"]) >= 0

    def test_suffix_never_exceeds_naive(self, corpus_dir, tmp_path):
        out = tmp_path / "grid.csv"
        main(["compare", "--corpus", str(corpus_dir), "--tau", "1,3", "--sigma", "2,inf", "--out", str(out)])
        rows = list(csv.DictReader(out.read_text().splitlines()))
        for tau in ("1", "3"):
            for sigma in ("2", "inf"):
                cell = {r["method"]: int(r["records"]) for r in rows if r["tau"] == tau and r["sigma"] == sigma}
                assert cell["suffix-sigma"] <= cell["naive"]
