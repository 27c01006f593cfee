"""Core data model: documents, mentions, clusters, and dataset annotation policies.

All types are immutable value objects after construction. Constructors are
permissive (they normalize container types but do not reject bad data);
`validate_document` / `validate_corpus` report invariant violations as data.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence


class EmptyCorpusError(ValueError):
    """Raised by operations that require at least one document."""


@dataclass(frozen=True, order=True)
class Span:
    """Inclusive token span [start, end] in flat 0-based token indices."""

    start: int
    end: int

    @property
    def length(self) -> int:
        return self.end - self.start + 1

    def tokens(self, tokens: Sequence[str]) -> tuple[str, ...]:
        return tuple(tokens[self.start : self.end + 1])


def as_cluster(spans: Iterable[Span]) -> frozenset[Span]:
    return frozenset(spans)


@dataclass(frozen=True)
class Document:
    """A tokenized document with optional speakers/genre and gold clusters.

    ``sentence_boundaries`` holds the start token index of every sentence
    (so the first entry is 0 for a non-empty document). ``clusters`` is an
    ordered tuple of frozensets of Span; order is preserved through
    serialization round trips.
    """

    doc_key: str
    tokens: tuple[str, ...]
    sentence_boundaries: tuple[int, ...] = ()
    speakers: Optional[tuple[str, ...]] = None
    genre: Optional[str] = None
    clusters: tuple[frozenset[Span], ...] = ()
    dataset_tag: str = ""

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(
            self, "sentence_boundaries", tuple(self.sentence_boundaries)
        )
        if self.speakers is not None:
            object.__setattr__(self, "speakers", tuple(self.speakers))
        object.__setattr__(
            self, "clusters", tuple(frozenset(c) for c in self.clusters)
        )

    def mentions(self) -> set[Span]:
        """Union of all spans across gold clusters."""
        out: set[Span] = set()
        for cluster in self.clusters:
            out.update(cluster)
        return out

    def with_clusters(self, clusters: Iterable[Iterable[Span]]) -> "Document":
        return Document(
            doc_key=self.doc_key,
            tokens=self.tokens,
            sentence_boundaries=self.sentence_boundaries,
            speakers=self.speakers,
            genre=self.genre,
            clusters=tuple(frozenset(c) for c in clusters),
            dataset_tag=self.dataset_tag,
        )

    def sentences(self) -> list[list[str]]:
        """Tokens grouped by sentence according to sentence_boundaries."""
        if not self.tokens:
            return []
        bounds = list(self.sentence_boundaries) or [0]
        bounds = bounds + [len(self.tokens)]
        return [
            list(self.tokens[bounds[i] : bounds[i + 1]])
            for i in range(len(bounds) - 1)
        ]


@dataclass(frozen=True)
class DatasetProfile:
    """Per-dataset annotation policy.

    ``partially_annotated`` marks pair/choice-style datasets that are
    evaluated by pairwise or multiple-choice tasks, not cluster metrics.
    """

    name: str
    annotates_singletons: bool = True
    has_speakers: bool = False
    has_genre: bool = False
    partially_annotated: bool = False
    markable_restriction_note: str = ""


@dataclass(frozen=True)
class Corpus:
    profile: DatasetProfile
    documents: tuple[Document, ...] = ()
    split: str = "train"  # one of {train, dev, test}
    augmented: bool = False

    def __post_init__(self):
        object.__setattr__(self, "documents", tuple(self.documents))

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self):
        return iter(self.documents)


@dataclass(frozen=True)
class Violation:
    """One failed invariant, naming the invariant and the offending span."""

    invariant: str
    doc_key: str
    detail: str
    span: Optional[Span] = None

    def __str__(self) -> str:
        loc = f" at span [{self.span.start},{self.span.end}]" if self.span else ""
        return f"{self.doc_key}: {self.invariant}{loc}: {self.detail}"


def validate_document(
    doc: Document, profile: Optional[DatasetProfile] = None
) -> list[Violation]:
    """Check every Document (and profile) invariant; return all violations.

    Returns an empty list exactly when the document is well formed. An
    ``augmented`` corpus is allowed to carry singletons under a no-singleton
    profile; callers handle that by passing profile=None (see
    `validate_corpus`).
    """
    violations: list[Violation] = []
    n = len(doc.tokens)

    seen: dict[Span, int] = {}
    for ci, cluster in enumerate(doc.clusters):
        if not cluster:
            violations.append(
                Violation("empty cluster", doc.doc_key, f"cluster {ci} has no spans")
            )
        for span in cluster:
            if span.start > span.end:
                violations.append(
                    Violation(
                        "span ordering",
                        doc.doc_key,
                        f"start {span.start} > end {span.end}",
                        span,
                    )
                )
            elif span.start < 0 or span.end >= n:
                violations.append(
                    Violation(
                        "span out of range",
                        doc.doc_key,
                        f"span outside [0,{n})",
                        span,
                    )
                )
            if span in seen and seen[span] != ci:
                violations.append(
                    Violation(
                        "duplicate span across clusters",
                        doc.doc_key,
                        f"span in clusters {seen[span]} and {ci}",
                        span,
                    )
                )
            seen.setdefault(span, ci)

    if doc.speakers is not None and len(doc.speakers) != n:
        violations.append(
            Violation(
                "speaker length",
                doc.doc_key,
                f"{len(doc.speakers)} speaker entries for {n} tokens",
            )
        )

    bounds = doc.sentence_boundaries
    if n and bounds:
        if bounds[0] != 0 or list(bounds) != sorted(set(bounds)) or bounds[-1] >= n:
            violations.append(
                Violation(
                    "sentence boundaries",
                    doc.doc_key,
                    "boundaries must be sorted unique start indices beginning at 0",
                )
            )

    if profile is not None:
        if profile.name and doc.dataset_tag and doc.dataset_tag != profile.name:
            violations.append(
                Violation(
                    "dataset tag",
                    doc.doc_key,
                    f"tag {doc.dataset_tag!r} != profile {profile.name!r}",
                )
            )
        if not profile.annotates_singletons:
            for cluster in doc.clusters:
                if len(cluster) == 1:
                    (span,) = cluster
                    violations.append(
                        Violation(
                            "singleton under no-singleton profile",
                            doc.doc_key,
                            "size-1 cluster in dataset that does not annotate singletons",
                            span,
                        )
                    )
    return violations


def validate_corpus(corpus: Corpus) -> list[Violation]:
    """Validate all documents against the corpus profile.

    Augmented corpora intentionally violate the no-singleton profile
    invariant, so the singleton check is waived for them.
    """
    profile = corpus.profile
    if corpus.augmented and not profile.annotates_singletons:
        profile = DatasetProfile(
            name=profile.name,
            annotates_singletons=True,
            has_speakers=profile.has_speakers,
            has_genre=profile.has_genre,
            partially_annotated=profile.partially_annotated,
            markable_restriction_note=profile.markable_restriction_note,
        )
    out: list[Violation] = []
    for doc in corpus.documents:
        out.extend(validate_document(doc, profile))
    return out


@dataclass(frozen=True)
class StatsRecord:
    """Corpus statistics: per-document means plus mention/cluster aggregates."""

    docs: int
    words_per_doc: float
    mentions_per_doc: float
    mention_length: float
    cluster_size: float
    singleton_pct: float
    no_mentions: bool = False  # degenerate: corpus has no clusters at all

    def as_dict(self) -> dict:
        return {
            "docs": self.docs,
            "words_per_doc": self.words_per_doc,
            "mentions_per_doc": self.mentions_per_doc,
            "mention_length": self.mention_length,
            "cluster_size": self.cluster_size,
            "singleton_pct": self.singleton_pct,
            "no_mentions": self.no_mentions,
        }


def corpus_stats(corpus: Corpus) -> StatsRecord:
    """Document/mention/cluster statistics in benchmark-table shape.

    singleton_pct = mentions living in size-1 clusters / total mentions,
    as a percentage. A corpus with no clusters reports 0 with the
    ``no_mentions`` flag set.
    """
    if not corpus.documents:
        raise EmptyCorpusError(f"corpus {corpus.profile.name!r} has no documents")

    n_docs = len(corpus.documents)
    total_tokens = sum(len(d.tokens) for d in corpus.documents)
    total_mentions = 0
    total_mention_len = 0
    total_clusters = 0
    singleton_mentions = 0
    for doc in corpus.documents:
        for cluster in doc.clusters:
            total_clusters += 1
            total_mentions += len(cluster)
            total_mention_len += sum(s.length for s in cluster)
            if len(cluster) == 1:
                singleton_mentions += 1

    if total_mentions == 0:
        return StatsRecord(
            docs=n_docs,
            words_per_doc=total_tokens / n_docs,
            mentions_per_doc=0.0,
            mention_length=0.0,
            cluster_size=0.0,
            singleton_pct=0.0,
            no_mentions=True,
        )
    return StatsRecord(
        docs=n_docs,
        words_per_doc=total_tokens / n_docs,
        mentions_per_doc=total_mentions / n_docs,
        mention_length=total_mention_len / total_mentions,
        cluster_size=total_mentions / total_clusters,
        singleton_pct=100.0 * singleton_mentions / total_mentions,
    )
