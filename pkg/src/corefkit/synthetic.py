"""Bundled synthetic name-coreference corpus generator.

Documents are filler words with capitalized name tokens interspersed;
identical name tokens within a document corefer (single-token mentions).
Names come from two pools: anchor names always recur within a document
while guest names usually appear once, so corpora generated with
``annotate_singletons=False`` systematically drop guest-name mentions from
the gold clusters the way no-singleton annotation schemes do.

Names are never placed on adjacent tokens, which keeps the mention
detection task separable for the span representation used by the model.
"""

from __future__ import annotations

import numpy as np

from corefkit.corpus import Corpus, DatasetProfile, Document, Span


def synthetic_profile(annotate_singletons: bool = True, name: str = "synthetic") -> DatasetProfile:
    return DatasetProfile(
        name=name,
        annotates_singletons=annotate_singletons,
        has_speakers=False,
        has_genre=False,
        partially_annotated=False,
        markable_restriction_note="single-token capitalized name mentions",
    )


def make_name_corpus(
    n_docs: int,
    seed: int,
    *,
    annotate_singletons: bool = True,
    split: str = "train",
    profile_name: str = "synthetic",
    n_anchor_names: int = 25,
    n_guest_names: int = 15,
    n_fillers: int = 100,
    guest_repeat_prob: float = 0.15,
) -> Corpus:
    """Generate a deterministic corpus of name-coreference documents.

    Each document draws 2-4 anchor names (2-4 occurrences each) and 0-3
    guest names (one occurrence, or two with ``guest_repeat_prob``). With
    ``annotate_singletons=False`` the size-1 clusters are dropped from the
    gold annotation, leaving their spans unannotated.
    """
    rng = np.random.default_rng(np.random.SeedSequence((seed, ord(split[0]))))
    anchors = [f"Ann{idx:02d}" for idx in range(n_anchor_names)]
    guests = [f"Gus{idx:02d}" for idx in range(n_guest_names)]
    fillers = [f"w{idx:03d}" for idx in range(n_fillers)]

    documents = []
    for doc_index in range(n_docs):
        n_sentences = int(rng.integers(3, 6))
        sentence_lengths = rng.integers(10, 15, size=n_sentences)
        n_tokens = int(sentence_lengths.sum())

        occurrences: list[tuple[str, int]] = []  # (name, count) pending placement
        for name in rng.choice(anchors, size=int(rng.integers(2, 5)), replace=False):
            occurrences.append((str(name), int(rng.integers(2, 5))))
        for name in rng.choice(guests, size=int(rng.integers(0, 4)), replace=False):
            repeat = rng.random() < guest_repeat_prob
            occurrences.append((str(name), 2 if repeat else 1))

        # names at odd positions only: no two names are ever adjacent
        slots = np.arange(1, n_tokens, 2)
        total_occurrences = sum(count for _, count in occurrences)
        total_occurrences = min(total_occurrences, len(slots))
        chosen = rng.choice(slots, size=total_occurrences, replace=False)
        chosen = [int(p) for p in chosen]

        tokens = [str(rng.choice(fillers)) for _ in range(n_tokens)]
        positions_of: dict[str, list[int]] = {}
        cursor = 0
        for name, count in occurrences:
            for _ in range(count):
                if cursor >= len(chosen):
                    break
                pos = chosen[cursor]
                cursor += 1
                tokens[pos] = name
                positions_of.setdefault(name, []).append(pos)

        clusters = []
        for name, positions in positions_of.items():
            cluster = frozenset(Span(p, p) for p in positions)
            if len(cluster) == 1 and not annotate_singletons:
                continue
            clusters.append(cluster)

        boundaries = [0]
        for length in sentence_lengths[:-1]:
            boundaries.append(boundaries[-1] + int(length))

        documents.append(
            Document(
                doc_key=f"{profile_name}_{split}_{doc_index}",
                tokens=tuple(tokens),
                sentence_boundaries=tuple(boundaries),
                speakers=None,
                genre=None,
                clusters=tuple(clusters),
                dataset_tag=profile_name,
            )
        )

    return Corpus(
        profile=synthetic_profile(annotate_singletons, profile_name),
        documents=tuple(documents),
        split=split,
    )
