"""Coreference scoring: MUC, B³, CEAF-e, CoNLL F1, singleton splits,
mention detection, pair-level F1, choice accuracy, and macro aggregation."""

from corefkit.metrics.core import (
    PRF,
    MetricReport,
    SingletonSplit,
    b_cubed,
    b_cubed_parts,
    ceaf_e,
    ceaf_e_parts,
    conll_f1,
    macro_average,
    mention_f1,
    mention_f1_parts,
    muc,
    muc_parts,
    phi4,
    score_documents,
    singleton_split_score,
    strip_singletons,
)
from corefkit.metrics.tasks import (
    ChoiceTask,
    PairTask,
    choice_accuracy,
    pair_f1,
    read_choice_tasks,
    read_pair_tasks,
    write_choice_tasks,
    write_pair_tasks,
)

__all__ = [
    "PRF",
    "MetricReport",
    "SingletonSplit",
    "b_cubed",
    "b_cubed_parts",
    "ceaf_e",
    "ceaf_e_parts",
    "conll_f1",
    "macro_average",
    "mention_f1",
    "mention_f1_parts",
    "muc",
    "muc_parts",
    "phi4",
    "score_documents",
    "singleton_split_score",
    "strip_singletons",
    "ChoiceTask",
    "PairTask",
    "choice_accuracy",
    "pair_f1",
    "read_choice_tasks",
    "read_pair_tasks",
    "write_choice_tasks",
    "write_pair_tasks",
]
