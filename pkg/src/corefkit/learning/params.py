"""Learnable parameter storage: named weight blocks with paired gradient
buffers, the token vocabulary, seeded initialization, and checkpoint IO."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Optional, Union

import numpy as np

from corefkit.corpus import Corpus

CHECKPOINT_VERSION = 1

UNKNOWN_TOKEN = "[UNK]"


@dataclass(frozen=True)
class Vocabulary:
    """Token string -> embedding row. Index 0 is the unknown token."""

    tokens: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(
            self, "_index", {tok: i for i, tok in enumerate(self.tokens)}
        )

    def __len__(self) -> int:
        return len(self.tokens)

    def index(self, token: str) -> int:
        return self._index.get(token, 0)

    def indices(self, tokens: Iterable[str]) -> np.ndarray:
        idx = self._index
        return np.fromiter((idx.get(t, 0) for t in tokens), dtype=int)


def build_vocabulary(corpora: Iterable[Corpus]) -> Vocabulary:
    seen: dict[str, None] = {}
    for corpus in corpora:
        for doc in corpus.documents:
            for token in doc.tokens:
                seen.setdefault(token, None)
    return Vocabulary((UNKNOWN_TOKEN, *seen.keys()))


class ParameterStore:
    """All learned weights with paired gradient buffers.

    Blocks in ``encoder_keys`` form the encoder parameter group (weight
    decayed, encoder learning rate); the rest use the second learning-rate
    group. Frozen blocks are never updated by the optimizer.
    """

    def __init__(
        self,
        blocks: Mapping[str, np.ndarray],
        encoder_keys: Iterable[str] = ("embeddings",),
    ):
        self.blocks: dict[str, np.ndarray] = {
            name: np.asarray(value, dtype=float) for name, value in blocks.items()
        }
        self.grads: dict[str, np.ndarray] = {
            name: np.zeros_like(value) for name, value in self.blocks.items()
        }
        self.encoder_keys = frozenset(encoder_keys) & set(self.blocks)
        self.frozen: set[str] = set()

    def __getitem__(self, name: str) -> np.ndarray:
        return self.blocks[name]

    def grad(self, name: str) -> np.ndarray:
        return self.grads[name]

    def zero_grads(self) -> None:
        for g in self.grads.values():
            g[...] = 0.0

    def freeze(self, name: str) -> None:
        self.frozen.add(name)

    def check_finite(self) -> None:
        for name, value in self.blocks.items():
            if not np.all(np.isfinite(value)):
                raise FloatingPointError(f"non-finite values in block {name!r}")

    def copy(self) -> "ParameterStore":
        clone = ParameterStore(
            {name: value.copy() for name, value in self.blocks.items()},
            encoder_keys=self.encoder_keys,
        )
        clone.frozen = set(self.frozen)
        return clone


def _uniform(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def _ffnn_blocks(prefix: str, in_dim: int, hidden: int) -> list[tuple[str, tuple, int]]:
    return [
        (f"{prefix}.W1", (in_dim, hidden), in_dim),
        (f"{prefix}.b1", (hidden,), in_dim),
        (f"{prefix}.W2", (hidden, hidden), hidden),
        (f"{prefix}.b2", (hidden,), hidden),
        (f"{prefix}.w3", (hidden,), hidden),
        (f"{prefix}.b3", (), hidden),
    ]


def init_parameters(vocab_size: int, config, seed: int) -> ParameterStore:
    """Seeded uniform(+-1/sqrt(fan_in)) initialization.

    Every block draws from its own seeded stream so toggling one block
    (e.g. the genre table) cannot shift another block's initial values.
    """
    from corefkit.engine import DISTANCE_BUCKETS, MENTION_COUNT_BUCKETS

    d = config.embedding_dim
    h = config.hidden_dim
    f = config.feature_dim
    span_dim = 3 * d
    pair_dim = 3 * span_dim + 3 * f

    specs: list[tuple[str, tuple, int]] = [("embeddings", (vocab_size, d), d)]
    specs += _ffnn_blocks("mention", span_dim, h)
    specs += _ffnn_blocks("pair", pair_dim, h)
    specs += [
        ("feat.count", (MENTION_COUNT_BUCKETS, f), f),
        ("feat.distance", (DISTANCE_BUCKETS, f), f),
        ("feat.genre", (max(1, len(config.genre_labels)) + 1, f), f),
    ]

    blocks: dict[str, np.ndarray] = {}
    for block_index, (name, shape, fan_in) in enumerate(specs):
        rng = np.random.default_rng(np.random.SeedSequence((seed, block_index)))
        blocks[name] = _uniform(rng, shape, fan_in)

    store = ParameterStore(blocks)
    if not config.use_genre:
        store.blocks["feat.genre"][...] = 0.0
        store.freeze("feat.genre")
    return store


def config_hash(config_dict: Mapping) -> str:
    payload = json.dumps(config_dict, sort_keys=True, default=str)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def save_checkpoint(
    path: Union[str, Path],
    store: ParameterStore,
    vocab: Vocabulary,
    model_config_dict: Mapping,
    optimizer_state: Optional[dict] = None,
    extra: Optional[Mapping] = None,
) -> None:
    """Versioned binary checkpoint: parameter blocks, optimizer moments,
    vocabulary, and a config hash for reproducibility checks."""
    meta = {
        "version": CHECKPOINT_VERSION,
        "vocab": list(vocab.tokens),
        "model_config": dict(model_config_dict),
        "config_hash": config_hash(model_config_dict),
        "encoder_keys": sorted(store.encoder_keys),
        "frozen": sorted(store.frozen),
        "extra": dict(extra or {}),
    }
    arrays = {f"param::{k}": v for k, v in store.blocks.items()}
    if optimizer_state:
        arrays.update({f"m::{k}": v for k, v in optimizer_state["m"].items()})
        arrays.update({f"v::{k}": v for k, v in optimizer_state["v"].items()})
        meta["optimizer_step"] = optimizer_state["step"]
    arrays["__meta__"] = np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8)
    np.savez(path, **arrays)


def load_checkpoint(
    path: Union[str, Path],
) -> tuple[ParameterStore, Vocabulary, dict, Optional[dict]]:
    with np.load(path) as data:
        meta = json.loads(bytes(data["__meta__"]).decode())
        if meta["version"] != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {meta['version']}")
        blocks = {
            k.removeprefix("param::"): data[k]
            for k in data.files
            if k.startswith("param::")
        }
        store = ParameterStore(blocks, encoder_keys=meta["encoder_keys"])
        store.frozen = set(meta["frozen"])
        optimizer_state = None
        if "optimizer_step" in meta:
            optimizer_state = {
                "step": meta["optimizer_step"],
                "m": {
                    k.removeprefix("m::"): data[k]
                    for k in data.files
                    if k.startswith("m::")
                },
                "v": {
                    k.removeprefix("v::"): data[k]
                    for k in data.files
                    if k.startswith("v::")
                },
            }
    return store, Vocabulary(tuple(meta["vocab"])), meta, optimizer_state
