import json

import numpy as np
import pytest

from corefkit.cli import EXIT_DATA, EXIT_OK, main, read_manifest
from corefkit.corpus import DatasetProfile, Document, Span, Corpus
from corefkit.formats.jsonl import read_jsonl, write_jsonl
from corefkit.formats.profiles import save_profile
from corefkit.metrics.tasks import ChoiceTask, PairTask, write_choice_tasks, write_pair_tasks

from generators import random_corpus


@pytest.fixture
def profile_path(tmp_path):
    path = tmp_path / "profile.json"
    save_profile(DatasetProfile(name="gen"), path)
    return str(path)


def doc_of(key, clusters, n=6, tag="gen"):
    return Document(
        doc_key=key,
        tokens=tuple(f"w{i}" for i in range(n)),
        sentence_boundaries=(0,),
        clusters=tuple(frozenset(c) for c in clusters),
        dataset_tag=tag,
    )


A, B, C = Span(0, 0), Span(1, 1), Span(2, 2)


class TestConvert:
    def test_round_trip_conll_jsonl_conll(self, tmp_path, profile_path):
        rng = np.random.default_rng(0)
        corpus = random_corpus(rng, n_docs=3, with_speakers=True)
        src = tmp_path / "in.jsonl"
        write_jsonl(corpus, src)
        mid = tmp_path / "mid.conll"
        out = tmp_path / "out.jsonl"
        assert main(["convert", "--from", "jsonl", "--to", "conll",
                     "--profile", profile_path, str(src), str(mid)]) == EXIT_OK
        assert main(["convert", "--from", "conll", "--to", "jsonl",
                     "--profile", profile_path, str(mid), str(out)]) == EXIT_OK
        assert read_jsonl(out, corpus.profile) == corpus

    def test_multi_part_document_split(self, tmp_path, profile_path):
        conll = tmp_path / "multi.conll"
        conll.write_text(
            "#begin document (story); part 000\nstory 0 0 a - * - - - - * -\n\n#end document\n"
            "#begin document (story); part 001\nstory 1 0 b - * - - - - * -\n\n#end document\n"
        )
        out = tmp_path / "out.jsonl"
        assert main(["convert", "--from", "conll", "--to", "jsonl",
                     "--profile", profile_path, str(conll), str(out)]) == EXIT_OK
        corpus = read_jsonl(out)
        assert [d.doc_key for d in corpus.documents] == ["story_0", "story_1"]

    def test_bad_profile_path_exits_data(self, tmp_path, capsys):
        out = main(["convert", "--from", "jsonl", "--to", "conll",
                    "--profile", str(tmp_path / "nope.json"),
                    str(tmp_path / "in.jsonl"), str(tmp_path / "out.conll")])
        assert out == EXIT_DATA
        err = capsys.readouterr().err
        assert json.loads(err.strip().splitlines()[-1])["error"] == "data"

    def test_manifest_round_trip(self, tmp_path, profile_path):
        src = tmp_path / "in.jsonl"
        write_jsonl(
            Corpus(DatasetProfile(name="gen"), (doc_of("d_0", []),), split="test"), src
        )
        out = tmp_path / "out.conll"
        main(["convert", "--from", "jsonl", "--to", "conll",
              "--profile", profile_path, str(src), str(out)])
        manifest = read_manifest(f"{out}.manifest.json")
        assert manifest.command == "convert"
        assert str(src) in manifest.inputs
        assert manifest.toolkit_version


class TestScore:
    def write_pair(self, tmp_path, profile_path, gold_clusters, pred_clusters):
        gold = tmp_path / "gold.jsonl"
        pred = tmp_path / "pred.jsonl"
        profile = DatasetProfile(name="gen")
        write_jsonl(Corpus(profile, (doc_of("d", gold_clusters),), split="test"), gold)
        write_jsonl(Corpus(profile, (doc_of("d", pred_clusters),), split="test"), pred)
        return str(gold), str(pred)

    def test_identity_all_ones(self, tmp_path, profile_path, capsys):
        gold, pred = self.write_pair(
            tmp_path, profile_path, [{A, B}, {C}], [{A, B}, {C}]
        )
        out_json = tmp_path / "report.json"
        assert main(["score", "--gold", gold, "--pred", pred,
                     "--profile", profile_path, "--out", str(out_json)]) == EXIT_OK
        report = json.loads(out_json.read_text())
        assert report["conll_f1"] == pytest.approx(1.0)
        assert report["muc"]["f1"] == 1.0

    def test_worked_example_value(self, tmp_path, profile_path, capsys):
        gold, pred = self.write_pair(
            tmp_path, profile_path, [{A, B, C}], [{A, B}, {C}]
        )
        out_json = tmp_path / "report.json"
        main(["score", "--gold", gold, "--pred", pred, "--profile", profile_path,
              "--out", str(out_json)])
        report = json.loads(out_json.read_text())
        assert report["conll_f1"] == pytest.approx(0.6380952380952382, abs=1e-9)

    def test_table_values_equal_json_values(self, tmp_path, profile_path, capsys):
        gold, pred = self.write_pair(
            tmp_path, profile_path, [{A, B, C}], [{A, B}, {C}]
        )
        out_json = tmp_path / "report.json"
        main(["score", "--gold", gold, "--pred", pred, "--profile", profile_path,
              "--out", str(out_json)])
        table = capsys.readouterr().out
        report = json.loads(out_json.read_text())
        for line in table.splitlines():
            cells = line.split()
            if cells and cells[0] in {"muc", "b3", "ceafe", "mention"}:
                assert float(cells[1]) == report[cells[0]]["precision"]
                assert float(cells[2]) == report[cells[0]]["recall"]
                assert float(cells[3]) == report[cells[0]]["f1"]
            if cells and cells[0] == "conll_f1":
                assert float(cells[1]) == report["conll_f1"]

    def test_singleton_policy_noted(self, tmp_path, capsys):
        profile = tmp_path / "nosing.json"
        save_profile(DatasetProfile(name="gen", annotates_singletons=False), profile)
        gold, pred = self.write_pair(tmp_path, str(profile), [{A, B}], [{A, B}, {C}])
        main(["score", "--gold", gold, "--pred", pred, "--profile", str(profile)])
        out = capsys.readouterr().out
        assert "predicted singletons removed" in out

    def test_split_singletons_flag(self, tmp_path, profile_path, capsys):
        gold, pred = self.write_pair(
            tmp_path, profile_path, [{A, B}, {C}], [{A, B}, {C}]
        )
        out_json = tmp_path / "report.json"
        main(["score", "--gold", gold, "--pred", pred, "--profile", profile_path,
              "--split-singletons", "--out", str(out_json)])
        report = json.loads(out_json.read_text())
        assert report["singleton_split"]["singleton_f1"] == 1.0

    def test_pair_task_scoring(self, tmp_path, profile_path, capsys):
        tasks = tmp_path / "tasks.jsonl"
        write_pair_tasks(
            [PairTask("d", pronoun=A, candidates=((B, True), (C, False)))], tasks
        )
        pred = tmp_path / "pred.jsonl"
        write_jsonl(
            Corpus(DatasetProfile(name="gen"), (doc_of("d", [{A, B}]),), split="test"),
            pred,
        )
        out_json = tmp_path / "pair.json"
        assert main(["score", "--task", "pair", "--gold", str(tasks),
                     "--pred", str(pred), "--profile", profile_path,
                     "--out", str(out_json)]) == EXIT_OK
        assert json.loads(out_json.read_text())["f1"] == 1.0

    def test_choice_task_scoring(self, tmp_path, profile_path):
        tasks = tmp_path / "tasks.jsonl"
        write_choice_tasks(
            [ChoiceTask("d", pronoun=A, choices=(B, C), gold_choice=0)], tasks
        )
        pred = tmp_path / "pred.jsonl"
        write_jsonl(
            Corpus(DatasetProfile(name="gen"), (doc_of("d", [{A, C}]),), split="test"),
            pred,
        )
        out_json = tmp_path / "choice.json"
        main(["score", "--task", "choice", "--gold", str(tasks), "--pred", str(pred),
              "--profile", profile_path, "--out", str(out_json)])
        assert json.loads(out_json.read_text())["accuracy"] == 0.0


class TestValidateAndStats:
    def test_validate_clean(self, tmp_path, profile_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(
            Corpus(DatasetProfile(name="gen"), (doc_of("d_0", [{A, B}]),), split="test"),
            path,
        )
        assert main(["validate", "--profile", profile_path, str(path)]) == EXIT_OK

    def test_validate_violations_exit_data(self, tmp_path, capsys):
        profile = tmp_path / "nosing.json"
        save_profile(DatasetProfile(name="gen", annotates_singletons=False), profile)
        path = tmp_path / "c.jsonl"
        write_jsonl(
            Corpus(
                DatasetProfile(name="gen", annotates_singletons=False),
                (doc_of("d_0", [{A}]),),
                split="test",
            ),
            path,
        )
        assert main(["validate", "--profile", str(profile), str(path)]) == EXIT_DATA
        assert "singleton under no-singleton profile" in capsys.readouterr().out

    def test_stats_json(self, tmp_path, profile_path, capsys):
        path = tmp_path / "c.jsonl"
        write_jsonl(
            Corpus(DatasetProfile(name="gen"), (doc_of("d_0", [{A, B}, {C}]),), split="test"),
            path,
        )
        assert main(["stats", "--profile", profile_path, "--json", str(path)]) == EXIT_OK
        stats = json.loads(capsys.readouterr().out)
        assert stats["docs"] == 1
        assert stats["mentions_per_doc"] == 3


class TestReport:
    def run_files(self, tmp_path, rows):
        runs = tmp_path / "runs"
        runs.mkdir()
        for i, (name, scores) in enumerate(rows):
            (runs / f"run{i}.json").write_text(
                json.dumps({"model": name, "scores": scores})
            )
        return runs

    def test_single_run_single_row(self, tmp_path, capsys):
        runs = self.run_files(tmp_path, [("solo", {"d1": 50.0, "d2": 70.0})])
        out_dir = tmp_path / "out"
        assert main(["report", "--runs", str(runs), "--out-dir", str(out_dir)]) == EXIT_OK
        report = json.loads((out_dir / "report.json").read_text())
        assert len(report["rows"]) == 1
        assert report["rows"][0]["macro_average"] == pytest.approx(60.0)
        for name in ("report.txt", "report.tsv", "report.png", "manifest.json"):
            assert (out_dir / name).exists()

    def test_missing_cell_excluded_with_footnote(self, tmp_path, capsys):
        runs = self.run_files(
            tmp_path,
            [("full", {"d1": 40.0, "d2": 60.0}), ("partial", {"d1": 80.0})],
        )
        out_dir = tmp_path / "out"
        main(["report", "--runs", str(runs), "--out-dir", str(out_dir)])
        text = (out_dir / "report.txt").read_text()
        assert "—" in text  # missing cell marker
        assert "macro over available datasets" in text
        report = json.loads((out_dir / "report.json").read_text())
        partial = next(r for r in report["rows"] if r["model"] == "partial")
        assert partial["macro_average"] == pytest.approx(80.0)
        assert not partial["macro_over_all_datasets"]
        assert partial["scores"]["d2"] is None

    def test_tsv_values_match_json(self, tmp_path):
        runs = self.run_files(tmp_path, [("solo", {"d1": 33.25, "d2": 66.5})])
        out_dir = tmp_path / "out"
        main(["report", "--runs", str(runs), "--out-dir", str(out_dir)])
        tsv_lines = (out_dir / "report.tsv").read_text().strip().splitlines()
        header = tsv_lines[0].split("\t")
        values = tsv_lines[1].split("\t")
        report = json.loads((out_dir / "report.json").read_text())
        row = report["rows"][0]
        for column, value in zip(header[1:], values[1:]):
            expected = row["macro_average"] if column == "macro" else row["scores"][column]
            assert float(value) == expected

    def test_empty_dir_is_data_error(self, tmp_path):
        runs = tmp_path / "runs"
        runs.mkdir()
        assert main(["report", "--runs", str(runs)]) == EXIT_DATA


class TestMixPlanCommand:
    def test_writes_epoch_records(self, tmp_path, profile_path):
        corpus_path = tmp_path / "train.jsonl"
        docs = tuple(doc_of(f"d_{i}", []) for i in range(5))
        write_jsonl(Corpus(DatasetProfile(name="gen"), docs, split="train"), corpus_path)
        config = tmp_path / "mix.json"
        config.write_text(
            json.dumps(
                {
                    "seed": 5,
                    "entries": [
                        {"path": str(corpus_path), "profile": profile_path, "cap": 3}
                    ],
                }
            )
        )
        out = tmp_path / "plan.jsonl"
        assert main(["mix-plan", "--config", str(config), "--epochs", "2",
                     "--out", str(out)]) == EXIT_OK
        lines = [json.loads(line) for line in out.read_text().splitlines()]
        assert [rec["epoch"] for rec in lines] == [0, 1]
        assert all(len(rec["items"]) == 3 for rec in lines)
