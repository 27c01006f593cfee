"""Pseudo-singleton data augmentation.

A standalone mention detector (the proposal half of the resolver) is
trained on a no-singleton corpus; its top-scoring spans outside the gold
mentions are grafted into the training documents as size-1 clusters,
bridging the gap to corpora that annotate singletons.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from corefkit import engine
from corefkit.corpus import Corpus, Document, Span
from corefkit.engine import ClusteringConfig
from corefkit.learning.losses import mention_loss_from_scores
from corefkit.learning.model import ModelConfig, ScoringModel
from corefkit.learning.optim import TwoGroupAdam
from corefkit.learning.params import build_vocabulary, init_parameters
from corefkit.learning.training import TrainConfig


class AugmentError(ValueError):
    pass


@dataclass(frozen=True)
class MentionScoreTable:
    """Per document: candidate spans outside the gold mentions with their
    detector scores, sorted by descending score."""

    entries: dict[str, tuple[tuple[Span, float], ...]]

    def total_available(self) -> int:
        return sum(len(rows) for rows in self.entries.values())


@dataclass(frozen=True)
class AugmentPlan:
    requested_n: int
    chosen: tuple[tuple[str, Span, float], ...]  # (doc_key, span, score)

    def __len__(self) -> int:
        return len(self.chosen)

    def by_document(self) -> dict[str, list[Span]]:
        out: dict[str, list[Span]] = {}
        for doc_key, span, _ in self.chosen:
            out.setdefault(doc_key, []).append(span)
        return out


def train_mention_detector(
    corpus: Corpus,
    cfg: TrainConfig,
    model_cfg: ModelConfig = ModelConfig(),
    cluster_cfg: ClusteringConfig = ClusteringConfig(),
    steps: Optional[int] = None,
) -> ScoringModel:
    """Train only the mention-proposal stage (embeddings + span scorer).

    ``steps`` overrides cfg.steps; 0 returns the detector at initialization.
    """
    if not corpus.documents:
        raise AugmentError("cannot train a detector on an empty corpus")
    steps = cfg.steps if steps is None else steps
    vocab = build_vocabulary([corpus])
    store = init_parameters(len(vocab), model_cfg, cfg.seed)
    model = ScoringModel(store, model_cfg, vocab)
    optimizer = TwoGroupAdam(
        store,
        lr_encoder=cfg.lr_encoder,
        lr_rest=cfg.lr_rest,
        weight_decay=cfg.weight_decay,
        total_steps=max(1, steps),
    )
    rng = np.random.default_rng(cfg.seed)
    order = rng.permutation(len(corpus.documents))
    position = 0
    for step in range(steps):
        if position == len(order):
            order = rng.permutation(len(corpus.documents))
            position = 0
        doc = corpus.documents[int(order[position])]
        position += 1

        spans = engine.enumerate_candidates(doc, cluster_cfg)
        if not spans:
            continue
        store.zero_grads()
        reps, rep_cache = model.span_representations(doc, spans)
        scores, score_cache = model.mention_scores(reps)
        top = engine.top_k_indices(
            spans, scores, engine.proposal_size(len(doc.tokens), cluster_cfg)
        )
        gold = doc.mentions()
        labels = np.array([spans[i] in gold for i in top], dtype=bool)
        _, d_top = mention_loss_from_scores(scores[top], labels)
        dscores = np.zeros_like(scores)
        dscores[top] = d_top
        dreps = model.mention_scores_backward(score_cache, dscores)
        model.span_representations_backward(rep_cache, dreps)
        optimizer.step(step)
    return model


def detected_mentions(
    model: ScoringModel, doc: Document, cluster_cfg: ClusteringConfig = ClusteringConfig()
) -> set[Span]:
    """Spans the detector proposes and keeps (top-K then score >= 0)."""
    proposed = engine.propose_mentions(doc, model.mention_scorer(), cluster_cfg)
    return {c.span for c in engine.prune_for_inference(proposed)}


def harvest_scores(
    corpus: Corpus,
    detector: ScoringModel,
    cluster_cfg: ClusteringConfig = ClusteringConfig(),
) -> MentionScoreTable:
    """Score every enumerated candidate, drop exact gold spans, sort."""
    entries: dict[str, tuple[tuple[Span, float], ...]] = {}
    scorer = detector.mention_scorer()
    for doc in corpus.documents:
        spans = engine.enumerate_candidates(doc, cluster_cfg)
        gold = doc.mentions()
        if not spans:
            entries[doc.doc_key] = ()
            continue
        _, scores = scorer(doc, spans)
        rows = [
            (span, float(score))
            for span, score in zip(spans, scores)
            if span not in gold
        ]
        rows.sort(key=lambda r: (-r[1], r[0].start, r[0].end))
        entries[doc.doc_key] = tuple(rows)
    return MentionScoreTable(entries=entries)


def build_plan(table: MentionScoreTable, total_n: int, seed: int = 0) -> AugmentPlan:
    """Select the global top total_n spans by score across the corpus,
    ties broken by doc_key then span order. The seed is recorded for the
    run manifest only; strict top-N selection is deterministic."""
    del seed  # selection is strict top-N
    pool = [
        (score, doc_key, span)
        for doc_key, rows in table.entries.items()
        for span, score in rows
    ]
    if total_n > len(pool):
        warnings.warn(
            f"requested {total_n} pseudo-singletons but only {len(pool)} "
            "non-gold candidates are available; selecting all",
            stacklevel=2,
        )
    pool.sort(key=lambda r: (-r[0], r[1], r[2].start, r[2].end))
    chosen = tuple(
        (doc_key, span, score) for score, doc_key, span in pool[: max(0, total_n)]
    )
    return AugmentPlan(requested_n=total_n, chosen=chosen)


def apply_plan(corpus: Corpus, plan: AugmentPlan) -> Corpus:
    """Append every chosen span as a new size-1 cluster in its document.

    The result carries ``augmented=True``; augmenting an already-augmented
    corpus is rejected so a plan cannot be applied twice.
    """
    if corpus.augmented:
        raise AugmentError("corpus is already augmented; refusing to re-apply a plan")
    by_doc = plan.by_document()
    unknown = set(by_doc) - {d.doc_key for d in corpus.documents}
    if unknown:
        raise AugmentError(f"plan references unknown documents: {sorted(unknown)[:3]}")

    documents = []
    for doc in corpus.documents:
        extra = by_doc.get(doc.doc_key, [])
        if not extra:
            documents.append(doc)
            continue
        gold = doc.mentions()
        for span in extra:
            if span in gold:
                raise AugmentError(
                    f"{doc.doc_key}: planned span [{span.start},{span.end}] "
                    "equals a gold mention"
                )
        clusters = doc.clusters + tuple(frozenset([span]) for span in extra)
        documents.append(doc.with_clusters(clusters))
    return Corpus(
        profile=corpus.profile,
        documents=tuple(documents),
        split=corpus.split,
        augmented=True,
    )


def restrict_to_non_singletons(corpus: Corpus) -> Corpus:
    """Drop size-1 clusters; on an augmented no-singleton corpus this
    recovers the original corpus exactly."""
    documents = tuple(
        doc.with_clusters(c for c in doc.clusters if len(c) >= 2)
        for doc in corpus.documents
    )
    return Corpus(
        profile=corpus.profile,
        documents=documents,
        split=corpus.split,
        augmented=False,
    )


def write_plan(plan: AugmentPlan, path: Union[str, Path]) -> None:
    """Audit file: jsonlines of (doc_key, start, end, score)."""
    with open(path, "w", encoding="utf-8") as f:
        for doc_key, span, score in plan.chosen:
            f.write(
                json.dumps(
                    {
                        "doc_key": doc_key,
                        "start": span.start,
                        "end": span.end,
                        "score": score,
                    }
                )
                + "\n"
            )


def read_plan(path: Union[str, Path]) -> AugmentPlan:
    chosen = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            rec = json.loads(line)
            chosen.append(
                (rec["doc_key"], Span(rec["start"], rec["end"]), rec["score"])
            )
    return AugmentPlan(requested_n=len(chosen), chosen=tuple(chosen))
