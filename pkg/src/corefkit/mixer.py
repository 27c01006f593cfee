"""Joint-training stream construction: per-epoch downsampling caps,
dataset interleaving by global shuffle, and tuning grids.

Large corpora are resampled fresh each epoch (uniform, without
replacement, capped); the stream interleaves all sampled documents in one
seeded shuffle so a step budget sees the datasets in cap proportion.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Mapping, Optional, Sequence

import numpy as np

from corefkit.corpus import Corpus, DatasetProfile, Document


class MixError(ValueError):
    pass


@dataclass(frozen=True)
class MixEntry:
    corpus: Corpus
    per_epoch_cap: Optional[int] = None  # None = ALL

    def effective_count(self) -> int:
        n = len(self.corpus.documents)
        if self.per_epoch_cap is None:
            return n
        return min(self.per_epoch_cap, n)


@dataclass(frozen=True)
class MixSpec:
    entries: tuple[MixEntry, ...]
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        if not self.entries:
            raise MixError("mix spec has no corpora")
        for entry in self.entries:
            if entry.corpus.split != "train":
                raise MixError(
                    f"corpus {entry.corpus.profile.name!r} has split "
                    f"{entry.corpus.split!r}; only training splits may be mixed"
                )
            if entry.per_epoch_cap is not None and entry.per_epoch_cap <= 0:
                raise MixError("per-epoch caps must be positive")

    def epoch_length(self) -> int:
        return sum(entry.effective_count() for entry in self.entries)


@dataclass(frozen=True)
class EpochPlan:
    epoch_index: int
    items: tuple[tuple[str, str], ...]  # (dataset_tag, doc_key)

    def __len__(self) -> int:
        return len(self.items)

    def per_dataset_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for tag, _ in self.items:
            counts[tag] = counts.get(tag, 0) + 1
        return counts


def build_epoch(spec: MixSpec, epoch_index: int) -> EpochPlan:
    """Sample min(cap, |corpus|) documents uniformly without replacement
    from each corpus (fresh draw per epoch) and interleave by one global
    shuffle. Fully determined by (spec.seed, epoch_index)."""
    rng = np.random.default_rng(np.random.SeedSequence((spec.seed, epoch_index)))
    items: list[tuple[str, str]] = []
    for entry in spec.entries:
        docs = entry.corpus.documents
        count = entry.effective_count()
        if count == len(docs):
            picked = range(len(docs))
        else:
            picked = rng.choice(len(docs), size=count, replace=False)
        tag = entry.corpus.profile.name
        items.extend((tag, docs[int(i)].doc_key) for i in picked)
    order = rng.permutation(len(items))
    return EpochPlan(
        epoch_index=epoch_index, items=tuple(items[int(i)] for i in order)
    )


def stream(
    spec: MixSpec, budget: int
) -> Iterator[tuple[Document, DatasetProfile]]:
    """Yield (document, profile) pairs from successive epoch plans until
    the step budget is exhausted."""
    if budget < 1:
        raise MixError("stream budget must be positive")
    lookup: dict[tuple[str, str], tuple[Document, DatasetProfile]] = {}
    for entry in spec.entries:
        for doc in entry.corpus.documents:
            lookup[(entry.corpus.profile.name, doc.doc_key)] = (
                doc,
                entry.corpus.profile,
            )
    yielded = 0
    for epoch_index in itertools.count():
        plan = build_epoch(spec, epoch_index)
        for item in plan.items:
            yield lookup[item]
            yielded += 1
            if yielded >= budget:
                return


@dataclass(frozen=True)
class RunConfig:
    name: str
    pseudo_singleton_n: Optional[int] = None
    per_epoch_cap: Optional[int] = None


# validated picks: pseudo-singleton counts that worked best per training mode
DEFAULT_PSEUDO_SINGLETONS_SINGLE = 60_000
DEFAULT_PSEUDO_SINGLETONS_JOINT = 30_000


def tuning_grid(space: Mapping[str, Sequence]) -> list[RunConfig]:
    """Materialize the Cartesian product of a tuning space with keys
    ``pseudo_singleton_n`` and/or ``per_epoch_cap`` as named run configs.
    An empty space yields the single baseline config."""
    ns = list(space.get("pseudo_singleton_n", [None]))
    caps = list(space.get("per_epoch_cap", [None]))
    configs = []
    for n, cap in itertools.product(ns, caps):
        parts = []
        if n is not None:
            parts.append(f"ps{n}")
        if cap is not None:
            parts.append(f"cap{cap}")
        configs.append(
            RunConfig(
                name="+".join(parts) if parts else "baseline",
                pseudo_singleton_n=n,
                per_epoch_cap=cap,
            )
        )
    return configs
