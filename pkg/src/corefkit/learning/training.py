"""Teacher-forced training loop: per-document loss, two-group optimizer,
periodic dev evaluation with early stopping, and best-checkpoint tracking.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from corefkit import engine
from corefkit.corpus import Corpus, DatasetProfile, Document
from corefkit.engine import CandidateSpan, ClusteringConfig
from corefkit.formats.speakers import inject_speaker_tokens
from corefkit.learning.losses import cluster_loss, mention_loss_from_scores
from corefkit.learning.model import ScoringModel
from corefkit.learning.optim import TwoGroupAdam
from corefkit.learning.params import ParameterStore
from corefkit.metrics.core import score_documents


@dataclass(frozen=True)
class TrainConfig:
    steps: int = 100_000
    eval_every: int = 5_000
    patience: int = 5
    lr_encoder: float = 1e-5
    lr_rest: float = 3e-4
    weight_decay: float = 0.01
    seed: int = 0
    use_speaker_tokens: bool = False

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be positive")
        if self.lr_encoder <= 0 or self.lr_rest <= 0:
            raise ValueError("learning rates must be positive")

    def as_dict(self) -> dict:
        return {
            "steps": self.steps,
            "eval_every": self.eval_every,
            "patience": self.patience,
            "lr_encoder": self.lr_encoder,
            "lr_rest": self.lr_rest,
            "weight_decay": self.weight_decay,
            "seed": self.seed,
            "use_speaker_tokens": self.use_speaker_tokens,
        }


@dataclass(frozen=True)
class HistoryRow:
    step: int
    loss: float
    dev_score: Optional[float] = None


@dataclass
class TrainResult:
    store: ParameterStore
    history: list[HistoryRow] = field(default_factory=list)
    best_step: int = 0
    best_score: Optional[float] = None
    stopped_early: bool = False
    steps_run: int = 0


def document_loss(
    model: ScoringModel,
    doc: Document,
    cluster_cfg: ClusteringConfig = ClusteringConfig(),
    use_speaker_tokens: bool = False,
) -> float:
    """Mention loss over the top-K spans plus teacher-forced clustering loss
    over the gold mentions that survived pruning; gradients accumulate into
    the model store."""
    if use_speaker_tokens and doc.speakers is not None:
        doc = inject_speaker_tokens(doc).doc

    spans = engine.enumerate_candidates(doc, cluster_cfg)
    if not spans:
        return 0.0
    reps, rep_cache = model.span_representations(doc, spans)
    scores, score_cache = model.mention_scores(reps)

    k = engine.proposal_size(len(doc.tokens), cluster_cfg)
    top = engine.top_k_indices(spans, scores, k)
    gold_mentions = doc.mentions()
    labels = np.array([spans[i] in gold_mentions for i in top], dtype=bool)
    m_loss, d_top = mention_loss_from_scores(scores[top], labels)
    dscores = np.zeros_like(scores)
    dscores[top] = d_top

    # teacher forcing passes only the gold mentions among the top-K
    cluster_rows = [i for i in top if spans[i] in gold_mentions]
    c_loss = 0.0
    dreps_cluster = None
    if cluster_rows:
        cands = [
            CandidateSpan(spans[i], reps[i], float(scores[i])) for i in cluster_rows
        ]
        tf_cfg = ClusteringConfig(
            max_mention_len=cluster_cfg.max_mention_len,
            top_k_ratio=cluster_cfg.top_k_ratio,
            teacher_forcing=True,
        )
        _, trace = engine.cluster_document(
            cands, model.pair_scorer(), tf_cfg, gold=doc.clusters, genre=doc.genre
        )
        c_loss, dreps_cluster = cluster_loss(
            model, trace, reps[cluster_rows], genre=doc.genre
        )

    dreps = model.mention_scores_backward(score_cache, dscores)
    if dreps_cluster is not None:
        dreps[cluster_rows] += dreps_cluster
    model.span_representations_backward(rep_cache, dreps)
    return m_loss + c_loss


def evaluate_model(
    model: ScoringModel,
    dev_corpora: Sequence[Corpus],
    cluster_cfg: ClusteringConfig = ClusteringConfig(),
    use_speaker_tokens: bool = False,
) -> float:
    """Macro CoNLL F1 over the dev corpora, applying each corpus's
    singleton policy."""
    if not dev_corpora:
        raise ValueError("no dev corpora to evaluate")
    scores = {}
    for corpus in dev_corpora:
        if corpus.augmented:
            raise ValueError(
                f"augmented corpus {corpus.profile.name!r} cannot be used for evaluation"
            )
        preds = [
            model.predict(doc, cluster_cfg, use_speaker_tokens)
            for doc in corpus.documents
        ]
        report = score_documents(
            corpus.documents,
            preds,
            annotates_singletons=corpus.profile.annotates_singletons,
        )
        scores[corpus.profile.name] = float(report.conll_f1)
    return sum(scores.values()) / len(scores)


def train(
    stream: Iterable[tuple[Document, DatasetProfile]],
    model: ScoringModel,
    dev_corpora: Sequence[Corpus],
    cfg: TrainConfig,
    cluster_cfg: ClusteringConfig = ClusteringConfig(),
) -> TrainResult:
    """Run up to cfg.steps documents from the stream (batch = 1 document),
    evaluating every cfg.eval_every steps and stopping early after
    cfg.patience consecutive evaluations without improvement. The returned
    store is the best-scoring checkpoint (final parameters if no
    evaluation ever ran)."""
    optimizer = TwoGroupAdam(
        model.store,
        lr_encoder=cfg.lr_encoder,
        lr_rest=cfg.lr_rest,
        weight_decay=cfg.weight_decay,
        total_steps=cfg.steps,
    )
    result = TrainResult(store=model.store)
    best_store = None
    bad_evals = 0
    step = 0

    for doc, _profile in stream:
        if step >= cfg.steps:
            break
        model.store.zero_grads()
        loss = document_loss(model, doc, cluster_cfg, cfg.use_speaker_tokens)
        optimizer.step(step)
        step += 1

        dev_score = None
        if dev_corpora and cfg.eval_every > 0 and step % cfg.eval_every == 0:
            dev_score = evaluate_model(
                model, dev_corpora, cluster_cfg, cfg.use_speaker_tokens
            )
            if result.best_score is None or dev_score > result.best_score:
                result.best_score = dev_score
                result.best_step = step
                best_store = model.store.copy()
                bad_evals = 0
            else:
                bad_evals += 1
        result.history.append(HistoryRow(step=step, loss=loss, dev_score=dev_score))
        if bad_evals >= cfg.patience:
            result.stopped_early = True
            break

    if step == 0:
        raise ValueError("training stream yielded no documents")
    result.steps_run = step
    result.store = best_store if best_store is not None else model.store
    return result


def write_history_csv(history: Sequence[HistoryRow], path: Union[str, Path]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["step", "loss", "dev_score"])
        for row in history:
            writer.writerow(
                [row.step, row.loss, "" if row.dev_score is None else row.dev_score]
            )
