import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from corefkit.corpus import Corpus, DatasetProfile, Document, Span


@pytest.fixture
def well_formed_doc() -> Document:
    return Document(
        doc_key="fix_0",
        tokens=tuple(f"t{i}" for i in range(12)),
        sentence_boundaries=(0, 6),
        speakers=tuple("a" * 6 + "b" * 6),
        genre="news",
        clusters=(
            frozenset({Span(0, 1), Span(4, 4)}),
            frozenset({Span(2, 3)}),
        ),
        dataset_tag="fix",
    )


@pytest.fixture
def fix_profile() -> DatasetProfile:
    return DatasetProfile(name="fix", annotates_singletons=True, has_speakers=True)


def make_corpus(docs, profile=None, split="train", augmented=False) -> Corpus:
    profile = profile or DatasetProfile(name=docs[0].dataset_tag or "fix")
    return Corpus(
        profile=profile, documents=tuple(docs), split=split, augmented=augmented
    )
