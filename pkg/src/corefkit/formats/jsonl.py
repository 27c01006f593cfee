"""Unified jsonlines interchange format.

One JSON object per line with keys ``doc_key, sentences, speakers, genre,
clusters, dataset_tag``. ``sentences`` is a list of token lists;
``speakers`` is a parallel list of per-token speaker labels or null;
``clusters`` holds spans as 2-arrays of inclusive flat token indices.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional, Union

from corefkit.corpus import Corpus, DatasetProfile, Document, Span


class JsonlFormatError(ValueError):
    pass


def document_to_record(doc: Document) -> dict:
    sentences = doc.sentences()
    speakers = None
    if doc.speakers is not None:
        speakers = []
        i = 0
        for sent in sentences:
            speakers.append(list(doc.speakers[i : i + len(sent)]))
            i += len(sent)
    return {
        "doc_key": doc.doc_key,
        "sentences": sentences,
        "speakers": speakers,
        "genre": doc.genre,
        "clusters": [
            [[s.start, s.end] for s in sorted(cluster)] for cluster in doc.clusters
        ],
        "dataset_tag": doc.dataset_tag,
    }


def record_to_document(record: dict, default_tag: str = "") -> Document:
    doc_key = record.get("doc_key")
    if not isinstance(doc_key, str):
        raise JsonlFormatError("record missing string 'doc_key'")
    sentences = record.get("sentences")
    if not isinstance(sentences, list):
        raise JsonlFormatError(f"{doc_key}: missing 'sentences' list")
    tokens: list[str] = []
    boundaries: list[int] = []
    for sent in sentences:
        boundaries.append(len(tokens))
        tokens.extend(sent)

    speakers = record.get("speakers")
    flat_speakers: Optional[tuple[str, ...]] = None
    if speakers is not None:
        flat = [s for sent in speakers for s in sent]
        if len(flat) != len(tokens):
            raise JsonlFormatError(
                f"{doc_key}: {len(flat)} speaker labels for {len(tokens)} tokens"
            )
        flat_speakers = tuple(flat)

    clusters = []
    for cluster in record.get("clusters", []):
        spans = []
        for pair in cluster:
            start, end = int(pair[0]), int(pair[1])
            if not (0 <= start <= end < len(tokens)):
                raise JsonlFormatError(
                    f"{doc_key}: cluster span [{start},{end}] out of range "
                    f"for {len(tokens)} tokens"
                )
            spans.append(Span(start, end))
        clusters.append(frozenset(spans))

    return Document(
        doc_key=doc_key,
        tokens=tuple(tokens),
        sentence_boundaries=tuple(boundaries),
        speakers=flat_speakers,
        genre=record.get("genre"),
        clusters=tuple(clusters),
        dataset_tag=record.get("dataset_tag") or default_tag,
    )


def read_jsonl(
    path: Union[str, Path],
    profile: Optional[DatasetProfile] = None,
    split: str = "test",
) -> Corpus:
    documents = []
    default_tag = profile.name if profile else ""
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise JsonlFormatError(f"{path}:{lineno}: malformed JSON: {e}") from e
            try:
                documents.append(record_to_document(record, default_tag))
            except JsonlFormatError as e:
                raise JsonlFormatError(f"{path}:{lineno}: {e}") from e
    if profile is None:
        tags = {d.dataset_tag for d in documents}
        name = tags.pop() if len(tags) == 1 else "jsonl"
        profile = DatasetProfile(name=name)
    return Corpus(profile=profile, documents=tuple(documents), split=split)


def write_jsonl(corpus: Corpus, path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for doc in corpus.documents:
            f.write(json.dumps(document_to_record(doc), ensure_ascii=False) + "\n")
