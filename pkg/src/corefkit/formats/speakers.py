"""Speaker identity as text: reserved marker tokens injected at every
speaker change, with an origin map for lossless removal.

Inserted tokens use the reserved "[SPK..." surface family so downstream
stages can recognize them by form; the embedding layer treats them like
ordinary vocabulary.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from corefkit.corpus import Document, Span

SPEAKER_BEGIN = "[SPK_BEGIN]"
SPEAKER_END = "[SPK_END]"


class SpeakerInjectionError(ValueError):
    pass


def is_speaker_marker(token: str) -> bool:
    return token.startswith("[SPK")


def _marker_block(speaker: str) -> list[str]:
    return [SPEAKER_BEGIN] + [f"[SPK:{w}]" for w in speaker.split()] + [SPEAKER_END]


@dataclass(frozen=True)
class SpeakerAugmentedDocument:
    """A document with speaker marker tokens inserted.

    ``origin_map[i]`` is the original token index of new token i, or None
    for inserted marker tokens.
    """

    doc: Document
    origin_map: tuple[Optional[int], ...]

    def to_original_span(self, span: Span) -> Span:
        start = self.origin_map[span.start]
        end = self.origin_map[span.end]
        if start is None or end is None:
            raise SpeakerInjectionError(
                f"span [{span.start},{span.end}] starts or ends on a marker token"
            )
        return Span(start, end)


def inject_speaker_tokens(doc: Document) -> SpeakerAugmentedDocument:
    """Insert a marker block before every token whose speaker differs from
    the previous token's speaker; remap all cluster spans.

    Raises SpeakerInjectionError if a gold mention straddles a speaker
    change (its remapped span would contain marker tokens).
    """
    if doc.speakers is None:
        raise SpeakerInjectionError(f"{doc.doc_key}: document has no speakers")

    new_tokens: list[str] = []
    new_speakers: list[str] = []
    origin_map: list[Optional[int]] = []
    position: dict[int, int] = {}  # original index -> new index
    boundary_set = set(doc.sentence_boundaries)
    new_boundaries: list[int] = []

    previous: Optional[str] = None
    for i, (token, speaker) in enumerate(zip(doc.tokens, doc.speakers)):
        block_start = len(new_tokens)
        if speaker != previous:
            for marker in _marker_block(speaker):
                new_tokens.append(marker)
                new_speakers.append(speaker)
                origin_map.append(None)
            previous = speaker
        if i in boundary_set:
            new_boundaries.append(block_start)
        position[i] = len(new_tokens)
        new_tokens.append(token)
        new_speakers.append(speaker)
        origin_map.append(i)

    clusters = []
    for cluster in doc.clusters:
        spans = []
        for span in cluster:
            new_span = Span(position[span.start], position[span.end])
            if new_span.length != span.length:
                raise SpeakerInjectionError(
                    f"{doc.doc_key}: mention [{span.start},{span.end}] crosses "
                    "a speaker change"
                )
            spans.append(new_span)
        clusters.append(frozenset(spans))

    augmented = Document(
        doc_key=doc.doc_key,
        tokens=tuple(new_tokens),
        sentence_boundaries=tuple(new_boundaries),
        speakers=tuple(new_speakers),
        genre=doc.genre,
        clusters=tuple(clusters),
        dataset_tag=doc.dataset_tag,
    )
    return SpeakerAugmentedDocument(doc=augmented, origin_map=tuple(origin_map))


def strip_speaker_tokens(augmented: SpeakerAugmentedDocument) -> Document:
    """Exact inverse of inject_speaker_tokens."""
    doc = augmented.doc
    origin_map = augmented.origin_map
    keep = [i for i, orig in enumerate(origin_map) if orig is not None]
    tokens = tuple(doc.tokens[i] for i in keep)
    speakers = tuple(doc.speakers[i] for i in keep) if doc.speakers else None

    boundaries = []
    n = len(origin_map)
    for b in doc.sentence_boundaries:
        while b < n and origin_map[b] is None:
            b += 1
        if b < n:
            boundaries.append(origin_map[b])

    clusters = tuple(
        frozenset(augmented.to_original_span(span) for span in cluster)
        for cluster in doc.clusters
    )
    return Document(
        doc_key=doc.doc_key,
        tokens=tokens,
        sentence_boundaries=tuple(boundaries),
        speakers=speakers,
        genre=doc.genre,
        clusters=clusters,
        dataset_tag=doc.dataset_tag,
    )
