"""The trainable scoring model: token embeddings, span representations,
the mention scorer, and the pairwise clustering scorer, with exact
hand-written gradients and adapter objects satisfying the engine's scorer
protocols.

A span is represented as [start-token embedding; end-token embedding;
mean of interior token embeddings] (zero vector when the span has no
interior tokens).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np

from corefkit import engine
from corefkit.corpus import Document, Span
from corefkit.engine import ClusteringConfig, distance_buckets, mention_count_buckets
from corefkit.formats.speakers import inject_speaker_tokens
from corefkit.learning.network import FfnnCache, ffnn_backward, ffnn_forward, ffnn_infer
from corefkit.learning.params import ParameterStore, Vocabulary


@dataclass(frozen=True)
class ModelConfig:
    embedding_dim: int = 32
    hidden_dim: int = 64
    feature_dim: int = 8
    use_genre: bool = False
    genre_labels: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "genre_labels", tuple(self.genre_labels))

    @property
    def span_dim(self) -> int:
        return 3 * self.embedding_dim

    @property
    def pair_dim(self) -> int:
        return 3 * self.span_dim + 3 * self.feature_dim

    def as_dict(self) -> dict:
        return {
            "embedding_dim": self.embedding_dim,
            "hidden_dim": self.hidden_dim,
            "feature_dim": self.feature_dim,
            "use_genre": self.use_genre,
            "genre_labels": list(self.genre_labels),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ModelConfig":
        return cls(
            embedding_dim=int(data["embedding_dim"]),
            hidden_dim=int(data["hidden_dim"]),
            feature_dim=int(data["feature_dim"]),
            use_genre=bool(data["use_genre"]),
            genre_labels=tuple(data["genre_labels"]),
        )


class SpanRepCache(NamedTuple):
    token_ids: np.ndarray
    starts: np.ndarray
    ends: np.ndarray
    interior_counts: np.ndarray


class PairCache(NamedTuple):
    ffnn: FfnnCache
    x_rep: np.ndarray
    e_rep: np.ndarray
    count_bucket: int
    dist_bucket: int
    genre_index: int


class ScoringModel:
    def __init__(self, store: ParameterStore, config: ModelConfig, vocab: Vocabulary):
        self.store = store
        self.config = config
        self.vocab = vocab

    # -- span representations ------------------------------------------------

    def span_representations(
        self, doc: Document, spans: Sequence[Span]
    ) -> tuple[np.ndarray, SpanRepCache]:
        d = self.config.embedding_dim
        ids = self.vocab.indices(doc.tokens)
        rows = self.store["embeddings"][ids]
        csum = np.vstack([np.zeros(d), np.cumsum(rows, axis=0)])

        starts = np.fromiter((s.start for s in spans), dtype=int, count=len(spans))
        ends = np.fromiter((s.end for s in spans), dtype=int, count=len(spans))
        counts = ends - starts - 1
        sums = csum[ends] - csum[np.minimum(starts + 1, len(doc.tokens))]
        means = np.where(counts[:, None] > 0, sums / np.maximum(counts, 1)[:, None], 0.0)
        reps = np.concatenate([rows[starts], rows[ends], means], axis=1)
        return reps, SpanRepCache(ids, starts, ends, counts)

    def span_representations_backward(
        self, cache: SpanRepCache, dreps: np.ndarray
    ) -> None:
        d = self.config.embedding_dim
        grad = self.store.grads["embeddings"]
        active = np.flatnonzero(np.abs(dreps).sum(axis=1))
        for i in active:
            row = dreps[i]
            np.add.at(grad, cache.token_ids[cache.starts[i]], row[:d])
            np.add.at(grad, cache.token_ids[cache.ends[i]], row[d : 2 * d])
            if cache.interior_counts[i] > 0:
                interior = cache.token_ids[cache.starts[i] + 1 : cache.ends[i]]
                np.add.at(grad, interior, row[2 * d :] / cache.interior_counts[i])

    # -- mention scoring -----------------------------------------------------

    def mention_scores(self, reps: np.ndarray) -> tuple[np.ndarray, FfnnCache]:
        return ffnn_forward(self.store, "mention", reps)

    def mention_scores_backward(
        self, cache: FfnnCache, dscores: np.ndarray
    ) -> np.ndarray:
        return ffnn_backward(self.store, "mention", cache, dscores)

    # -- pairwise clustering score -------------------------------------------

    def _genre_index(self, genre: Optional[str]) -> int:
        if not self.config.use_genre or genre is None:
            return 0
        try:
            return self.config.genre_labels.index(genre) + 1
        except ValueError:
            return 0

    def feature_embeddings(
        self,
        mention_count: Union[int, np.ndarray],
        token_distance: Union[int, np.ndarray],
        genre: Optional[str],
    ) -> np.ndarray:
        cb = mention_count_buckets(np.asarray(mention_count))
        db = distance_buckets(np.asarray(token_distance))
        cvec = self.store["feat.count"][cb]
        dvec = self.store["feat.distance"][db]
        gvec = self.store["feat.genre"][self._genre_index(genre)]
        if cvec.ndim == 1:
            return np.concatenate([cvec, dvec, gvec])
        return np.concatenate(
            [cvec, dvec, np.broadcast_to(gvec, (cvec.shape[0], gvec.shape[0]))], axis=1
        )

    def pair_score_forward(
        self,
        x_rep: np.ndarray,
        e_rep: np.ndarray,
        mention_count: int,
        token_distance: int,
        genre: Optional[str],
    ) -> tuple[float, PairCache]:
        cb = engine.mention_count_bucket(mention_count)
        db = engine.distance_bucket(token_distance)
        gi = self._genre_index(genre)
        features = np.concatenate(
            [
                x_rep,
                e_rep,
                x_rep * e_rep,
                self.store["feat.count"][cb],
                self.store["feat.distance"][db],
                self.store["feat.genre"][gi],
            ]
        )
        score, cache = ffnn_forward(self.store, "pair", features)
        return float(score), PairCache(cache, x_rep, e_rep, cb, db, gi)

    def pair_score_backward(
        self, cache: PairCache, dscore: float
    ) -> tuple[np.ndarray, np.ndarray]:
        """Returns (d x_rep, d e_rep); feature-table gradients are
        accumulated in place."""
        s = self.config.span_dim
        f = self.config.feature_dim
        dfeat = ffnn_backward(self.store, "pair", cache.ffnn, dscore)
        dx = dfeat[:s] + dfeat[2 * s : 3 * s] * cache.e_rep
        de = dfeat[s : 2 * s] + dfeat[2 * s : 3 * s] * cache.x_rep
        self.store.grads["feat.count"][cache.count_bucket] += dfeat[3 * s : 3 * s + f]
        self.store.grads["feat.distance"][cache.dist_bucket] += dfeat[
            3 * s + f : 3 * s + 2 * f
        ]
        self.store.grads["feat.genre"][cache.genre_index] += dfeat[3 * s + 2 * f :]
        return dx, de

    # -- engine adapters (inference, no gradient bookkeeping) -----------------

    def mention_scorer(self) -> engine.MentionScorer:
        model = self

        def scorer(doc: Document, spans: Sequence[Span]):
            reps, _ = model.span_representations(doc, spans)
            return reps, np.atleast_1d(ffnn_infer(model.store, "mention", reps))

        return scorer

    def pair_scorer(self) -> engine.ClusterScorer:
        return _PairScorerAdapter(self)

    # -- prediction ------------------------------------------------------------

    def predict(
        self,
        doc: Document,
        cfg: ClusteringConfig = ClusteringConfig(),
        use_speaker_tokens: bool = False,
    ) -> Document:
        """Run the full pipeline; speaker marker tokens are injected before
        scoring and predicted spans mapped back to original indices."""
        if use_speaker_tokens and doc.speakers is not None:
            augmented = inject_speaker_tokens(doc)
            pred = engine.predict(
                augmented.doc, self.mention_scorer(), self.pair_scorer(), cfg
            )
            clusters = tuple(
                frozenset(augmented.to_original_span(s) for s in cluster)
                for cluster in pred.clusters
            )
            return doc.with_clusters(clusters)
        return engine.predict(doc, self.mention_scorer(), self.pair_scorer(), cfg)


class _PairScorerAdapter:
    """engine.ClusterScorer backed by the model parameters."""

    def __init__(self, model: ScoringModel):
        self.model = model

    def feature_embeddings(self, mention_count, token_distance, genre):
        return self.model.feature_embeddings(mention_count, token_distance, genre)

    def f_c(self, features):
        return ffnn_infer(self.model.store, "pair", features)
