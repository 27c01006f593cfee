"""Cluster-level coreference metrics.

Each metric is exposed two ways: a ``*_parts`` function returning the raw
(p_num, p_den, r_num, r_den) counts so multi-document evaluation can sum
parts before dividing (the reference-scorer convention), and a convenience
wrapper returning precision/recall/F1 for a single gold/pred pair.

Degenerate denominators are reported as 0 with an explicit flag, never NaN.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from corefkit.corpus import Document, Span

Clusters = Sequence[frozenset[Span]]


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float
    degenerate: bool = False

    def as_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "degenerate": self.degenerate,
        }


def _f1(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


def _prf(p_num: float, p_den: float, r_num: float, r_den: float) -> PRF:
    degenerate = bool(p_den == 0 or r_den == 0)
    p = float(p_num / p_den) if p_den > 0 else 0.0
    r = float(r_num / r_den) if r_den > 0 else 0.0
    return PRF(p, r, _f1(p, r), degenerate)


def _mention_to_cluster(clusters: Clusters) -> dict[Span, int]:
    out: dict[Span, int] = {}
    for i, cluster in enumerate(clusters):
        for span in cluster:
            out[span] = i
    return out


def _all_mentions(clusters: Clusters) -> set[Span]:
    out: set[Span] = set()
    for cluster in clusters:
        out.update(cluster)
    return out


# ---------------------------------------------------------------------------
# MUC (link-based, Vilain et al.)
# ---------------------------------------------------------------------------


def muc_parts(gold: Clusters, pred: Clusters) -> tuple[float, float, float, float]:
    """Raw MUC counts. Size-1 clusters contribute zero links on both sides."""

    def recall_counts(keys: Clusters, responses: Clusters) -> tuple[int, int]:
        response_of = _mention_to_cluster(responses)
        num = den = 0
        for cluster in keys:
            den += len(cluster) - 1
            touched = set()
            unmatched = 0
            for span in cluster:
                if span in response_of:
                    touched.add(response_of[span])
                else:
                    unmatched += 1
            num += len(cluster) - (len(touched) + unmatched)
        return num, den

    r_num, r_den = recall_counts(gold, pred)
    p_num, p_den = recall_counts(pred, gold)
    return p_num, p_den, r_num, r_den


def muc(gold: Clusters, pred: Clusters) -> PRF:
    return _prf(*muc_parts(gold, pred))


# ---------------------------------------------------------------------------
# B³ (per-mention overlap averaging)
# ---------------------------------------------------------------------------


def b_cubed_parts(gold: Clusters, pred: Clusters) -> tuple[float, float, float, float]:
    def recall_counts(keys: Clusters, responses: Clusters) -> tuple[float, int]:
        response_of = _mention_to_cluster(responses)
        num = 0.0
        den = 0
        for cluster in keys:
            for span in cluster:
                den += 1
                j = response_of.get(span)
                if j is not None:
                    num += len(cluster & responses[j]) / len(cluster)
        return num, den

    r_num, r_den = recall_counts(gold, pred)
    p_num, p_den = recall_counts(pred, gold)
    return p_num, p_den, r_num, r_den


def b_cubed(gold: Clusters, pred: Clusters) -> PRF:
    p_num, p_den, r_num, r_den = b_cubed_parts(gold, pred)
    if p_den == 0 and r_den == 0:
        # no mentions on either side: perfect agreement by convention
        return PRF(1.0, 1.0, 1.0, degenerate=True)
    return _prf(p_num, p_den, r_num, r_den)


# ---------------------------------------------------------------------------
# CEAF-e (optimal one-to-one cluster alignment under phi4)
# ---------------------------------------------------------------------------


def phi4(key: frozenset[Span], response: frozenset[Span]) -> float:
    return 2 * len(key & response) / (len(key) + len(response))


def ceaf_e_parts(gold: Clusters, pred: Clusters) -> tuple[float, float, float, float]:
    """Optimal-assignment similarity via the Kuhn-Munkres solver."""
    if not gold or not pred:
        return 0.0, len(pred), 0.0, len(gold)
    scores = np.zeros((len(gold), len(pred)))
    for i, g in enumerate(gold):
        for j, p in enumerate(pred):
            scores[i, j] = phi4(g, p)
    rows, cols = linear_sum_assignment(-scores)
    total = float(scores[rows, cols].sum())
    return total, len(pred), total, len(gold)


def ceaf_e(gold: Clusters, pred: Clusters) -> PRF:
    return _prf(*ceaf_e_parts(gold, pred))


# ---------------------------------------------------------------------------
# Composites
# ---------------------------------------------------------------------------


def conll_f1(gold: Clusters, pred: Clusters) -> float:
    """Arithmetic mean of MUC, B³, and CEAF-e F1."""
    return (muc(gold, pred).f1 + b_cubed(gold, pred).f1 + ceaf_e(gold, pred).f1) / 3


def mention_f1_parts(gold: Clusters, pred: Clusters) -> tuple[float, float, float, float]:
    g = _all_mentions(gold)
    p = _all_mentions(pred)
    tp = len(g & p)
    return tp, len(p), tp, len(g)


def mention_f1(gold: Clusters, pred: Clusters) -> PRF:
    p_num, p_den, r_num, r_den = mention_f1_parts(gold, pred)
    if p_den == 0 and r_den == 0:
        return PRF(1.0, 1.0, 1.0, degenerate=True)
    return _prf(p_num, p_den, r_num, r_den)


def strip_singletons(clusters: Clusters) -> tuple[frozenset[Span], ...]:
    """Remove size-1 clusters (evaluation policy for no-singleton datasets)."""
    return tuple(c for c in clusters if len(c) >= 2)


@dataclass(frozen=True)
class SingletonSplit:
    singleton_f1: float
    non_singleton_conll_f1: float
    singleton_undefined: bool = False  # no gold singletons to score against

    def as_dict(self) -> dict:
        return {
            "singleton_f1": self.singleton_f1,
            "non_singleton_conll_f1": self.non_singleton_conll_f1,
            "singleton_undefined": self.singleton_undefined,
        }


def singleton_split_score(gold: Clusters, pred: Clusters) -> SingletonSplit:
    """Separate scores for singleton and non-singleton clusters.

    Singletons are scored with a vanilla set-F1 over exact span matches;
    the remaining clusters are scored with CoNLL F1.
    """
    gold_single = {next(iter(c)) for c in gold if len(c) == 1}
    pred_single = {next(iter(c)) for c in pred if len(c) == 1}
    if not gold_single:
        singleton_f1 = 0.0
        undefined = True
    else:
        tp = len(gold_single & pred_single)
        p = tp / len(pred_single) if pred_single else 0.0
        r = tp / len(gold_single)
        singleton_f1 = _f1(p, r)
        undefined = False
    return SingletonSplit(
        singleton_f1=singleton_f1,
        non_singleton_conll_f1=conll_f1(strip_singletons(gold), strip_singletons(pred)),
        singleton_undefined=undefined,
    )


@dataclass(frozen=True)
class MetricReport:
    muc: PRF
    b3: PRF
    ceafe: PRF
    conll_f1: float
    mention: PRF
    singleton_split: Optional[SingletonSplit] = None
    singleton_policy_applied: bool = False

    def as_dict(self) -> dict:
        out = {
            "muc": self.muc.as_dict(),
            "b3": self.b3.as_dict(),
            "ceafe": self.ceafe.as_dict(),
            "conll_f1": self.conll_f1,
            "mention": self.mention.as_dict(),
            "singleton_policy_applied": self.singleton_policy_applied,
        }
        if self.singleton_split is not None:
            out["singleton_split"] = self.singleton_split.as_dict()
        return out


class DocumentMismatchError(ValueError):
    """Gold and predicted corpora do not cover the same documents."""


def score_documents(
    gold_docs: Iterable[Document],
    pred_docs: Iterable[Document],
    annotates_singletons: bool = True,
    split_singletons: bool = False,
) -> MetricReport:
    """Corpus-level report: metric parts are summed across documents
    before dividing, matching the CoNLL scorer convention.

    When ``annotates_singletons`` is false, predicted singleton clusters
    are removed before scoring.
    """
    gold_by_key = {d.doc_key: d for d in gold_docs}
    pred_by_key = {d.doc_key: d for d in pred_docs}
    if set(gold_by_key) != set(pred_by_key):
        missing = set(gold_by_key) ^ set(pred_by_key)
        raise DocumentMismatchError(
            f"gold/pred document keys differ (e.g. {sorted(missing)[:3]})"
        )

    parts = {
        "muc": np.zeros(4),
        "b3": np.zeros(4),
        "ceafe": np.zeros(4),
        "mention": np.zeros(4),
    }
    split_parts = {"tp": 0, "np": 0, "ng": 0}
    split_conll = {"muc": np.zeros(4), "b3": np.zeros(4), "ceafe": np.zeros(4)}
    any_gold_singletons = False
    policy_applied = False

    for key in gold_by_key:
        gold = gold_by_key[key].clusters
        pred = pred_by_key[key].clusters
        if not annotates_singletons:
            stripped = strip_singletons(pred)
            policy_applied = policy_applied or (len(stripped) != len(pred))
            pred = stripped
        parts["muc"] += muc_parts(gold, pred)
        parts["b3"] += b_cubed_parts(gold, pred)
        parts["ceafe"] += ceaf_e_parts(gold, pred)
        parts["mention"] += mention_f1_parts(gold, pred)
        if split_singletons:
            gold_single = {next(iter(c)) for c in gold if len(c) == 1}
            pred_single = {next(iter(c)) for c in pred if len(c) == 1}
            any_gold_singletons = any_gold_singletons or bool(gold_single)
            split_parts["tp"] += len(gold_single & pred_single)
            split_parts["np"] += len(pred_single)
            split_parts["ng"] += len(gold_single)
            g2, p2 = strip_singletons(gold), strip_singletons(pred)
            split_conll["muc"] += muc_parts(g2, p2)
            split_conll["b3"] += b_cubed_parts(g2, p2)
            split_conll["ceafe"] += ceaf_e_parts(g2, p2)

    muc_prf = _prf(*parts["muc"])
    b3_prf = _prf(*parts["b3"])
    ceafe_prf = _prf(*parts["ceafe"])
    mention_prf = _prf(*parts["mention"])

    split = None
    if split_singletons:
        sp = split_parts["tp"] / split_parts["np"] if split_parts["np"] else 0.0
        sr = split_parts["tp"] / split_parts["ng"] if split_parts["ng"] else 0.0
        non_single = (
            _prf(*split_conll["muc"]).f1
            + _prf(*split_conll["b3"]).f1
            + _prf(*split_conll["ceafe"]).f1
        ) / 3
        split = SingletonSplit(
            singleton_f1=_f1(sp, sr),
            non_singleton_conll_f1=non_single,
            singleton_undefined=not any_gold_singletons,
        )

    return MetricReport(
        muc=muc_prf,
        b3=b3_prf,
        ceafe=ceafe_prf,
        conll_f1=(muc_prf.f1 + b3_prf.f1 + ceafe_prf.f1) / 3,
        mention=mention_prf,
        singleton_split=split,
        singleton_policy_applied=policy_applied,
    )


def macro_average(headline_scores: Mapping[str, float]) -> float:
    """Unweighted mean of each dataset's headline metric."""
    if not headline_scores:
        raise ValueError("no dataset scores to average")
    return sum(headline_scores.values()) / len(headline_scores)
