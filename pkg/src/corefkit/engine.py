"""Inference pipeline: candidate enumeration, mention proposal with top-K
pruning, and incremental entity clustering.

Scoring is supplied by the caller: a mention scorer maps (document, spans)
to representations and scores, and a cluster scorer exposes pairwise
feature embeddings and the feedforward score over assembled pair features.
The `learning` package provides trainable implementations; tests use
hand-written stubs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Protocol, Sequence, Union

import numpy as np

from corefkit.corpus import Document, Span
from corefkit.formats.speakers import is_speaker_marker


class EngineConfigError(ValueError):
    pass


class ContractViolationError(ValueError):
    pass


@dataclass(frozen=True)
class ClusteringConfig:
    max_mention_len: int = 20
    top_k_ratio: float = 0.4
    gold_mention_mode: bool = False
    teacher_forcing: bool = False

    def __post_init__(self):
        if not 0 < self.top_k_ratio <= 1:
            raise EngineConfigError(f"top_k_ratio {self.top_k_ratio} not in (0, 1]")
        if self.max_mention_len < 1:
            raise EngineConfigError("max_mention_len must be positive")


@dataclass(frozen=True)
class CandidateSpan:
    span: Span
    representation: np.ndarray
    mention_score: float


class EntityState:
    """A tracked entity: running representation, mention count, members.

    The representation is a weighted running average where the weight is
    the number of mentions seen so far (equivalently: the arithmetic mean
    of all member representations).
    """

    __slots__ = ("representation", "mention_count", "member_spans")

    def __init__(self, first: CandidateSpan):
        self.representation = np.array(first.representation, dtype=float)
        self.mention_count = 1
        self.member_spans: list[Span] = [first.span]

    def add(self, cand: CandidateSpan) -> None:
        weight = self.mention_count
        self.representation = (
            weight * self.representation + cand.representation
        ) / (weight + 1)
        self.mention_count += 1
        self.member_spans.append(cand.span)

    @property
    def last_span(self) -> Span:
        return self.member_spans[-1]


class MentionScorer(Protocol):
    def __call__(
        self, doc: Document, spans: Sequence[Span]
    ) -> tuple[np.ndarray, np.ndarray]:
        """Return (representations of shape [n, dim], scores of shape [n])."""


class ClusterScorer(Protocol):
    def feature_embeddings(
        self,
        mention_count: Union[int, np.ndarray],
        token_distance: Union[int, np.ndarray],
        genre: Optional[str],
    ) -> np.ndarray:
        """Feature vector (g_dim,) for scalar inputs, matrix (m, g_dim)
        for array inputs."""

    def f_c(self, features: np.ndarray) -> Union[float, np.ndarray]:
        """Score a feature vector (dim,) or a batch (m, dim)."""


# ---------------------------------------------------------------------------
# Feature bucketing
# ---------------------------------------------------------------------------

MENTION_COUNT_BUCKETS = 7  # {1, 2, 3, 4, 5-7, 8-15, 16+}
DISTANCE_BUCKETS = 10  # {0-15, 16-31, 32-63, ..., 2048-4095, >=4096}


def mention_count_bucket(count: int) -> int:
    if count <= 4:
        return count - 1
    if count <= 7:
        return 4
    if count <= 15:
        return 5
    return 6


def distance_bucket(distance: int) -> int:
    if distance < 16:
        return 0
    return min(int(math.log2(distance // 16)) + 1, DISTANCE_BUCKETS - 1)


def mention_count_buckets(counts: np.ndarray) -> np.ndarray:
    counts = np.asarray(counts)
    return np.where(
        counts <= 4,
        counts - 1,
        np.where(counts <= 7, 4, np.where(counts <= 15, 5, 6)),
    )


def distance_buckets(distances: np.ndarray) -> np.ndarray:
    distances = np.asarray(distances)
    scaled = np.maximum(distances // 16, 1)
    buckets = np.floor(np.log2(scaled)).astype(int) + 1
    return np.where(distances < 16, 0, np.minimum(buckets, DISTANCE_BUCKETS - 1))


def token_distance(span: Span, entity: EntityState) -> int:
    """Tokens between the candidate and the entity's last mention (>= 0)."""
    return max(0, span.start - entity.last_span.end - 1)


# ---------------------------------------------------------------------------
# Pipeline stages
# ---------------------------------------------------------------------------


def enumerate_candidates(doc: Document, cfg: ClusteringConfig) -> list[Span]:
    """All spans of length <= max_mention_len that contain no speaker
    marker token, ordered by (start asc, end asc)."""
    n = len(doc.tokens)
    # next marker position at or after i (n if none)
    next_marker = [n] * (n + 1)
    for i in range(n - 1, -1, -1):
        next_marker[i] = i if is_speaker_marker(doc.tokens[i]) else next_marker[i + 1]

    spans = []
    for start in range(n):
        limit = min(start + cfg.max_mention_len - 1, n - 1, next_marker[start] - 1)
        for end in range(start, limit + 1):
            spans.append(Span(start, end))
    return spans


def proposal_size(n_tokens: int, cfg: ClusteringConfig) -> int:
    """K = max(1, floor(top_k_ratio * |tokens|))."""
    return max(1, math.floor(cfg.top_k_ratio * n_tokens))


def top_k_indices(
    spans: Sequence[Span], scores: np.ndarray, k: int
) -> list[int]:
    """Indices of the k highest scores, ties broken toward lower start then
    lower end, returned in document order."""
    order = sorted(
        range(len(spans)), key=lambda i: (-scores[i], spans[i].start, spans[i].end)
    )
    return sorted(order[:k], key=lambda i: (spans[i].start, spans[i].end))


def propose_mentions(
    doc: Document, scorer: MentionScorer, cfg: ClusteringConfig
) -> list[CandidateSpan]:
    """Keep the K = max(1, floor(top_k_ratio * |tokens|)) highest-scoring
    candidates and return them in document order."""
    candidates = enumerate_candidates(doc, cfg)
    if not candidates:
        return []
    reps, scores = scorer(doc, candidates)
    keep = top_k_indices(candidates, scores, proposal_size(len(doc.tokens), cfg))
    return [
        CandidateSpan(candidates[i], np.asarray(reps[i], dtype=float), float(scores[i]))
        for i in keep
    ]


def prune_for_inference(cands: Sequence[CandidateSpan]) -> list[CandidateSpan]:
    """Keep exactly the candidates with mention score >= 0, order preserved."""
    return [c for c in cands if c.mention_score >= 0]


def cluster_score(
    x: CandidateSpan,
    entity: EntityState,
    scorer: ClusterScorer,
    genre: Optional[str] = None,
) -> float:
    """Pairwise score: f_c([x; e; x * e; feature embeddings]) where the
    features embed the entity's bucketed mention count and the bucketed
    token distance from its last mention."""
    if x.representation.shape != entity.representation.shape:
        raise EngineConfigError(
            f"span/entity dimension mismatch: {x.representation.shape} "
            f"vs {entity.representation.shape}"
        )
    g = scorer.feature_embeddings(
        entity.mention_count, token_distance(x.span, entity), genre
    )
    features = np.concatenate(
        [
            x.representation,
            entity.representation,
            x.representation * entity.representation,
            g,
        ]
    )
    return float(scorer.f_c(features))


ATTACH = "attach"
NEW = "new"


@dataclass(frozen=True)
class ClusterStep:
    """One clustering decision: scores over current entities and the action
    taken (and, under teacher forcing, the gold action that drove it)."""

    step: int
    span: Span
    scores: tuple[float, ...]
    action: str  # ATTACH or NEW
    entity: int  # target entity index (the new entity's index for NEW)
    entity_sizes: tuple[int, ...]  # mention counts before the update
    gold_action: Optional[str] = None
    gold_entity: Optional[int] = None


def _batch_scores(
    cand: CandidateSpan,
    entities: list[EntityState],
    rep_matrix: np.ndarray,
    counts: np.ndarray,
    last_ends: np.ndarray,
    scorer: ClusterScorer,
    genre: Optional[str],
) -> np.ndarray:
    m = len(entities)
    distances = np.maximum(0, cand.span.start - last_ends[:m] - 1)
    g = scorer.feature_embeddings(counts[:m], distances, genre)
    x = np.broadcast_to(cand.representation, (m, cand.representation.shape[0]))
    features = np.concatenate([x, rep_matrix[:m], x * rep_matrix[:m], g], axis=1)
    return np.asarray(scorer.f_c(features), dtype=float).reshape(m)


def cluster_document(
    spans: Sequence[CandidateSpan],
    scorer: ClusterScorer,
    cfg: ClusteringConfig,
    gold: Optional[Sequence[frozenset[Span]]] = None,
    genre: Optional[str] = None,
) -> tuple[tuple[frozenset[Span], ...], list[ClusterStep]]:
    """Process spans left to right, attaching each to the best-scoring
    entity when that score is strictly positive and starting a new entity
    otherwise. Under teacher forcing the decision comes from the gold
    clusters while scores are still computed for the trace."""
    if cfg.teacher_forcing and gold is None:
        raise ContractViolationError("teacher forcing requires gold clusters")

    gold_cluster_of: dict[Span, int] = {}
    if gold is not None:
        for ci, cluster in enumerate(gold):
            for span in cluster:
                gold_cluster_of[span] = ci

    dim = spans[0].representation.shape[0] if spans else 0
    rep_matrix = np.zeros((len(spans), dim))
    counts = np.zeros(len(spans), dtype=int)
    last_ends = np.zeros(len(spans), dtype=int)

    entities: list[EntityState] = []
    entity_of_gold: dict[int, int] = {}
    trace: list[ClusterStep] = []

    for t, cand in enumerate(spans):
        if cand.representation.shape != (dim,):
            raise EngineConfigError("span representations must share one dimension")
        if entities:
            score_arr = _batch_scores(
                cand, entities, rep_matrix, counts, last_ends, scorer, genre
            )
        else:
            score_arr = np.zeros(0)
        scores = tuple(float(s) for s in score_arr)
        sizes = tuple(e.mention_count for e in entities)

        gold_action = gold_entity = None
        if cfg.teacher_forcing:
            if cand.span not in gold_cluster_of:
                raise ContractViolationError(
                    f"teacher-forced span [{cand.span.start},{cand.span.end}] "
                    "is not a gold mention"
                )
            ci = gold_cluster_of[cand.span]
            if ci in entity_of_gold:
                gold_action, gold_entity = ATTACH, entity_of_gold[ci]
            else:
                gold_action, gold_entity = NEW, len(entities)
            action, target = gold_action, gold_entity
        else:
            if scores and max(scores) > 0:
                action, target = ATTACH, int(np.argmax(score_arr))
            else:
                action, target = NEW, len(entities)

        if action == ATTACH:
            entity = entities[target]
            entity.add(cand)
        else:
            entity = EntityState(cand)
            entities.append(entity)
            if cfg.teacher_forcing:
                entity_of_gold[gold_cluster_of[cand.span]] = target
        rep_matrix[target] = entity.representation
        counts[target] = entity.mention_count
        last_ends[target] = entity.last_span.end

        trace.append(
            ClusterStep(
                step=t,
                span=cand.span,
                scores=scores,
                action=action,
                entity=target,
                entity_sizes=sizes,
                gold_action=gold_action,
                gold_entity=gold_entity,
            )
        )

    clusters = tuple(frozenset(e.member_spans) for e in entities)
    return clusters, trace


def predict(
    doc: Document,
    mention_scorer: MentionScorer,
    pair_scorer: ClusterScorer,
    cfg: ClusteringConfig,
) -> Document:
    """Full pipeline: enumerate, propose, prune (or gold mentions when
    gold_mention_mode), then cluster. Returns the document with predicted
    clusters in place of gold ones."""
    if cfg.gold_mention_mode:
        spans = sorted(doc.mentions())
        if spans:
            reps, scores = mention_scorer(doc, spans)
            cands = [
                CandidateSpan(s, np.asarray(reps[i], dtype=float), float(scores[i]))
                for i, s in enumerate(spans)
            ]
        else:
            cands = []
    else:
        cands = prune_for_inference(propose_mentions(doc, mention_scorer, cfg))
    inference_cfg = ClusteringConfig(
        max_mention_len=cfg.max_mention_len,
        top_k_ratio=cfg.top_k_ratio,
        gold_mention_mode=cfg.gold_mention_mode,
        teacher_forcing=False,
    )
    clusters, _ = cluster_document(cands, pair_scorer, inference_cfg, genre=doc.genre)
    return doc.with_clusters(clusters)


def trace_to_records(doc_key: str, trace: Iterable[ClusterStep]) -> list[dict]:
    """Action trace as jsonlines-ready records for debugging."""
    return [
        {
            "doc_key": doc_key,
            "step": s.step,
            "span": [s.span.start, s.span.end],
            "scores": list(s.scores),
            "decision": {
                "action": s.action,
                "entity": s.entity,
                "gold_action": s.gold_action,
                "gold_entity": s.gold_entity,
            },
        }
        for s in trace
    ]


def write_trace(path, doc_key: str, trace: Iterable[ClusterStep]) -> None:
    with open(path, "a", encoding="utf-8") as f:
        for record in trace_to_records(doc_key, trace):
            f.write(json.dumps(record) + "\n")
