"""Training losses with exact gradients.

Mention detection uses a binary logistic loss over the pruned top-K spans
(gold mentions positive, everything else negative). Clustering uses a
softmax cross-entropy at each teacher-forced step over the action set
{attach to entity 1..M, start new}, where the new-entity action carries a
fixed 0 logit so that training is consistent with the "score > 0 attaches"
inference rule.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from corefkit.corpus import Span
from corefkit.engine import ATTACH, CandidateSpan, ClusterStep, ContractViolationError
from corefkit.learning.model import ScoringModel


def mention_loss_from_scores(
    scores: np.ndarray, labels: np.ndarray
) -> tuple[float, np.ndarray]:
    """Mean binary logistic loss; labels are booleans (gold mention or not).

    Returns (loss, d loss / d scores).
    """
    scores = np.asarray(scores, dtype=float)
    if scores.size == 0:
        return 0.0, np.zeros(0)
    y = np.where(np.asarray(labels, dtype=bool), 1.0, -1.0)
    margins = y * scores
    loss = float(np.mean(np.logaddexp(0.0, -margins)))
    # d/ds softplus(-y*s) = -y * sigmoid(-y*s)
    dscores = -y / (1.0 + np.exp(margins)) / scores.size
    return loss, dscores


def mention_loss(
    cands: Sequence[CandidateSpan], gold_mentions: set[Span]
) -> tuple[float, np.ndarray]:
    """Loss over an already-pruned top-K candidate list; spans outside the
    list contribute nothing."""
    scores = np.array([c.mention_score for c in cands], dtype=float)
    labels = np.array([c.span in gold_mentions for c in cands], dtype=bool)
    return mention_loss_from_scores(scores, labels)


def cluster_loss_from_logits(
    step_logits: Sequence[np.ndarray], gold_actions: Sequence[int]
) -> tuple[float, list[np.ndarray]]:
    """Mean cross-entropy over steps. ``step_logits[t]`` already includes
    the fixed 0 logit for the new-entity action in its last slot."""
    if len(step_logits) == 0:
        return 0.0, []
    total = 0.0
    dlogits = []
    n = len(step_logits)
    for logits, gold in zip(step_logits, gold_actions):
        logits = np.asarray(logits, dtype=float)
        shifted = logits - logits.max()
        log_z = np.log(np.exp(shifted).sum()) + logits.max()
        total += log_z - logits[gold]
        probs = np.exp(logits - log_z)
        grad = probs.copy()
        grad[gold] -= 1.0
        dlogits.append(grad / n)
    return total / n, dlogits


def cluster_loss(
    model: ScoringModel,
    trace: Sequence[ClusterStep],
    reps: np.ndarray,
    genre: Optional[str] = None,
) -> tuple[float, np.ndarray]:
    """Teacher-forced clustering loss from an engine action trace.

    ``reps[t]`` is the representation of the span at trace step t. Entity
    representations are reconstructed as means over member rows so the
    gradient flows into every member span. Returns (loss, d loss / d reps);
    feature-table and scorer gradients accumulate into the model store.
    """
    for step in trace:
        if step.gold_action is None:
            raise ContractViolationError(
                f"trace step {step.step} has no gold action (teacher forcing "
                "was not enabled)"
            )

    members: list[list[int]] = []  # entity -> member step indices
    step_data = []  # (caches, gold index, member snapshot)
    step_logits = []
    gold_indices = []

    for t, step in enumerate(trace):
        m = len(members)
        caches = []
        logits = np.zeros(m + 1)
        snapshot = [list(entity) for entity in members]
        for j, entity in enumerate(members):
            e_rep = reps[entity].mean(axis=0)
            distance = max(0, step.span.start - trace[entity[-1]].span.end - 1)
            score, cache = model.pair_score_forward(
                reps[t], e_rep, len(entity), distance, genre
            )
            logits[j] = score
            caches.append(cache)
        gold = step.gold_entity if step.gold_action == ATTACH else m
        step_logits.append(logits)
        gold_indices.append(gold)
        step_data.append((caches, snapshot))

        if step.gold_action == ATTACH:
            members[step.gold_entity].append(t)
        else:
            members.append([t])

    loss, dlogits = cluster_loss_from_logits(step_logits, gold_indices)

    dreps = np.zeros_like(reps)
    for t, ((caches, snapshot), dlog) in enumerate(zip(step_data, dlogits)):
        for j, cache in enumerate(caches):
            if dlog[j] == 0.0:
                continue
            dx, de = model.pair_score_backward(cache, dlog[j])
            dreps[t] += dx
            entity = snapshot[j]
            dreps[entity] += de / len(entity)
    return loss, dreps
