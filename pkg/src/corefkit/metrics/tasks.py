"""Pair (pronoun-name) and multiple-choice evaluation tasks.

Task files are jsonlines with keys ``doc_key, pronoun, candidates|choices,
labels|gold_choice``; spans are 2-arrays of inclusive flat token indices.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence, Union

from corefkit.corpus import Corpus, Span
from corefkit.metrics.core import PRF, Clusters, _f1


@dataclass(frozen=True)
class PairTask:
    doc_key: str
    pronoun: Span
    candidates: tuple[tuple[Span, bool], ...]  # (name span, gold label)

    def __post_init__(self):
        if not self.candidates:
            raise ValueError(f"pair task for {self.doc_key} has no candidates")


@dataclass(frozen=True)
class ChoiceTask:
    doc_key: str
    pronoun: Span
    choices: tuple[Span, ...]
    gold_choice: int

    def __post_init__(self):
        if not 0 <= self.gold_choice < len(self.choices):
            raise ValueError(
                f"gold_choice {self.gold_choice} out of range for {self.doc_key}"
            )


PredClusters = Union[Corpus, Mapping[str, Clusters]]


def _clusters_by_key(pred: PredClusters) -> Mapping[str, Clusters]:
    if isinstance(pred, Corpus):
        return {d.doc_key: d.clusters for d in pred.documents}
    return pred


def pair_f1(tasks: Sequence[PairTask], pred: PredClusters) -> PRF:
    """Micro-averaged F1 over labeled (pronoun, name) pairs.

    A pair is predicted positive iff both spans appear in the same predicted
    cluster (exact span match). A pronoun absent from every predicted
    cluster yields all-negative predictions for its pairs.
    """
    by_key = _clusters_by_key(pred)
    tp = fp = fn = 0
    for task in tasks:
        clusters = by_key.get(task.doc_key, ())
        pronoun_cluster = None
        for cluster in clusters:
            if task.pronoun in cluster:
                pronoun_cluster = cluster
                break
        for name, gold_label in task.candidates:
            predicted = pronoun_cluster is not None and name in pronoun_cluster
            if predicted and gold_label:
                tp += 1
            elif predicted and not gold_label:
                fp += 1
            elif not predicted and gold_label:
                fn += 1
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    return PRF(p, r, _f1(p, r), degenerate=(tp + fp == 0 or tp + fn == 0))


def choice_accuracy(tasks: Sequence[ChoiceTask], pred: PredClusters) -> float:
    """Fraction of tasks where exactly the gold choice co-clusters with
    the pronoun. None or multiple co-clustered choices count incorrect."""
    if not tasks:
        raise ValueError("no choice tasks to score")
    by_key = _clusters_by_key(pred)
    correct = 0
    for task in tasks:
        clusters = by_key.get(task.doc_key, ())
        pronoun_cluster = None
        for cluster in clusters:
            if task.pronoun in cluster:
                pronoun_cluster = cluster
                break
        if pronoun_cluster is None:
            continue
        linked = [i for i, c in enumerate(task.choices) if c in pronoun_cluster]
        if len(linked) == 1 and linked[0] == task.gold_choice:
            correct += 1
    return correct / len(tasks)


# ---------------------------------------------------------------------------
# Task file IO
# ---------------------------------------------------------------------------


def _span(pair: Sequence[int]) -> Span:
    return Span(int(pair[0]), int(pair[1]))


def read_pair_tasks(path: Union[str, Path]) -> list[PairTask]:
    tasks = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise ValueError(f"{path}:{lineno}: malformed JSON: {e}") from e
            candidates = tuple(
                (_span(c), bool(lab))
                for c, lab in zip(rec["candidates"], rec["labels"])
            )
            tasks.append(
                PairTask(rec["doc_key"], _span(rec["pronoun"]), candidates)
            )
    return tasks


def write_pair_tasks(tasks: Iterable[PairTask], path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for t in tasks:
            rec = {
                "doc_key": t.doc_key,
                "pronoun": [t.pronoun.start, t.pronoun.end],
                "candidates": [[c.start, c.end] for c, _ in t.candidates],
                "labels": [lab for _, lab in t.candidates],
            }
            f.write(json.dumps(rec) + "\n")


def read_choice_tasks(path: Union[str, Path]) -> list[ChoiceTask]:
    tasks = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise ValueError(f"{path}:{lineno}: malformed JSON: {e}") from e
            tasks.append(
                ChoiceTask(
                    rec["doc_key"],
                    _span(rec["pronoun"]),
                    tuple(_span(c) for c in rec["choices"]),
                    int(rec["gold_choice"]),
                )
            )
    return tasks


def write_choice_tasks(tasks: Iterable[ChoiceTask], path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for t in tasks:
            rec = {
                "doc_key": t.doc_key,
                "pronoun": [t.pronoun.start, t.pronoun.end],
                "choices": [[c.start, c.end] for c in t.choices],
                "gold_choice": t.gold_choice,
            }
            f.write(json.dumps(rec) + "\n")
