import collections

import pytest

from corefkit.corpus import Corpus, DatasetProfile, Document
from corefkit.mixer import (
    DEFAULT_PSEUDO_SINGLETONS_JOINT,
    DEFAULT_PSEUDO_SINGLETONS_SINGLE,
    EpochPlan,
    MixEntry,
    MixError,
    MixSpec,
    build_epoch,
    stream,
    tuning_grid,
)


def blank_corpus(name, n, split="train"):
    docs = tuple(
        Document(
            doc_key=f"{name}_{i}", tokens=("x",), sentence_boundaries=(0,),
            dataset_tag=name,
        )
        for i in range(n)
    )
    return Corpus(DatasetProfile(name=name), docs, split=split)


@pytest.fixture(scope="module")
def table_sized_spec():
    return MixSpec(
        entries=(
            MixEntry(blank_corpus("big_news", 2802), per_epoch_cap=1000),
            MixEntry(blank_corpus("big_exams", 36120), per_epoch_cap=1000),
            MixEntry(blank_corpus("small_lit", 80), per_epoch_cap=None),
        ),
        seed=42,
    )


class TestBuildEpoch:
    def test_capped_epoch_length(self, table_sized_spec):
        plan = build_epoch(table_sized_spec, 0)
        assert len(plan) == 2080
        assert plan.per_dataset_counts() == {
            "big_news": 1000,
            "big_exams": 1000,
            "small_lit": 80,
        }

    def test_no_duplicates_within_epoch(self, table_sized_spec):
        plan = build_epoch(table_sized_spec, 0)
        assert len(set(plan.items)) == len(plan.items)

    def test_cap_above_size_uses_every_doc(self):
        spec = MixSpec(entries=(MixEntry(blank_corpus("a", 7), per_epoch_cap=100),), seed=0)
        plan = build_epoch(spec, 0)
        assert sorted(key for _, key in plan.items) == [f"a_{i}" for i in range(7)]

    def test_deterministic_per_seed_and_epoch(self, table_sized_spec):
        assert build_epoch(table_sized_spec, 3) == build_epoch(table_sized_spec, 3)

    def test_fresh_sample_each_epoch(self, table_sized_spec):
        first = build_epoch(table_sized_spec, 0)
        second = build_epoch(table_sized_spec, 1)
        assert first.items != second.items
        assert set(first.items) != set(second.items)  # resampled, not reshuffled

    def test_interleaved_not_blocked(self, table_sized_spec):
        plan = build_epoch(table_sized_spec, 0)
        first_200_tags = {tag for tag, _ in plan.items[:200]}
        assert len(first_200_tags) >= 2


class TestMixSpecValidation:
    def test_empty_rejected(self):
        with pytest.raises(MixError):
            MixSpec(entries=(), seed=0)

    def test_dev_split_rejected(self):
        with pytest.raises(MixError):
            MixSpec(entries=(MixEntry(blank_corpus("a", 3, split="dev")),), seed=0)

    def test_nonpositive_cap_rejected(self):
        with pytest.raises(MixError):
            MixSpec(entries=(MixEntry(blank_corpus("a", 3), per_epoch_cap=0),), seed=0)


class TestStream:
    def test_budget_prefix_of_epoch(self, table_sized_spec):
        plan = build_epoch(table_sized_spec, 0)
        docs = [(p.name, d.doc_key) for d, p in stream(table_sized_spec, 10)]
        assert docs == [(tag, key) for tag, key in plan.items[:10]]

    def test_determinism(self, table_sized_spec):
        first = [d.doc_key for d, _ in stream(table_sized_spec, 50)]
        second = [d.doc_key for d, _ in stream(table_sized_spec, 50)]
        assert first == second

    def test_spans_epochs(self):
        spec = MixSpec(entries=(MixEntry(blank_corpus("a", 4)),), seed=1)
        docs = [d.doc_key for d, _ in stream(spec, 10)]
        assert len(docs) == 10
        counts = collections.Counter(docs[:8])
        assert all(v == 2 for v in counts.values())  # two full epochs

    def test_profile_travels_with_document(self):
        spec = MixSpec(entries=(MixEntry(blank_corpus("tagged", 2)),), seed=1)
        for doc, profile in stream(spec, 4):
            assert profile.name == "tagged"
            assert doc.dataset_tag == "tagged"

    def test_mixture_fractions_approach_cap_ratios(self):
        spec = MixSpec(
            entries=(
                MixEntry(blank_corpus("a", 100), per_epoch_cap=10),
                MixEntry(blank_corpus("b", 200), per_epoch_cap=10),
                MixEntry(blank_corpus("c", 5)),
            ),
            seed=9,
        )
        counts = collections.Counter(
            profile.name for _, profile in stream(spec, 10_000)
        )
        total = sum(counts.values())
        assert counts["a"] / total == pytest.approx(10 / 25, abs=0.02)
        assert counts["b"] / total == pytest.approx(10 / 25, abs=0.02)
        assert counts["c"] / total == pytest.approx(5 / 25, abs=0.02)

    def test_bad_budget(self, table_sized_spec):
        with pytest.raises(MixError):
            list(stream(table_sized_spec, 0))


class TestTuningGrid:
    def test_cartesian_product(self):
        configs = tuning_grid(
            {"pseudo_singleton_n": [30_000, 60_000, 90_000], "per_epoch_cap": [500, 1000]}
        )
        assert len(configs) == 6
        names = {c.name for c in configs}
        assert "ps30000+cap500" in names and "ps90000+cap1000" in names

    def test_empty_space_single_baseline(self):
        configs = tuning_grid({})
        assert len(configs) == 1
        assert configs[0].name == "baseline"

    def test_recorded_default_picks(self):
        assert DEFAULT_PSEUDO_SINGLETONS_SINGLE == 60_000
        assert DEFAULT_PSEUDO_SINGLETONS_JOINT == 30_000


class TestEpochPlanType:
    def test_counts_match_items(self):
        plan = EpochPlan(epoch_index=0, items=(("a", "a_1"), ("b", "b_1"), ("a", "a_2")))
        assert plan.per_dataset_counts() == {"a": 2, "b": 1}
