import math

import numpy as np
import pytest

from corefkit.corpus import Span
from corefkit.engine import ATTACH, NEW, CandidateSpan, ClusteringConfig, ClusterStep
from corefkit.learning import (
    ParameterStore,
    ScoringModel,
    TrainConfig,
    TwoGroupAdam,
    build_vocabulary,
    cluster_loss_from_logits,
    init_parameters,
    load_checkpoint,
    mention_loss,
    mention_loss_from_scores,
    save_checkpoint,
    train,
)
from corefkit.learning.model import ModelConfig
from corefkit.learning.training import HistoryRow, document_loss, evaluate_model
from corefkit.mixer import MixEntry, MixSpec, stream
from corefkit.synthetic import make_name_corpus

from gradcheck import finite_difference_check

SMALL = ModelConfig(embedding_dim=6, hidden_dim=10, feature_dim=3)


def small_model(seed=0, n_docs=3, config=SMALL, use_genre=False):
    corpus = make_name_corpus(n_docs, seed=seed)
    if use_genre:
        config = ModelConfig(
            embedding_dim=config.embedding_dim,
            hidden_dim=config.hidden_dim,
            feature_dim=config.feature_dim,
            use_genre=True,
            genre_labels=("news", "web"),
        )
    vocab = build_vocabulary([corpus])
    store = init_parameters(len(vocab), config, seed)
    return ScoringModel(store, config, vocab), corpus


class TestMentionLoss:
    def test_single_span_score_zero_is_ln2(self):
        loss, dscores = mention_loss_from_scores(np.array([0.0]), np.array([True]))
        assert loss == pytest.approx(math.log(2))
        assert dscores[0] == pytest.approx(-0.5)

    def test_saturated_scores_loss_near_zero(self):
        scores = np.array([50.0, 60.0, -55.0])
        labels = np.array([True, True, False])
        loss, _ = mention_loss_from_scores(scores, labels)
        assert loss < 1e-12

    def test_candidate_wrapper(self):
        cands = [
            CandidateSpan(Span(0, 0), np.zeros(2), 0.0),
            CandidateSpan(Span(1, 1), np.zeros(2), 0.0),
        ]
        loss, dscores = mention_loss(cands, {Span(0, 0)})
        assert loss == pytest.approx(math.log(2))
        assert dscores == pytest.approx([-0.25, 0.25])

    def test_empty_is_zero(self):
        loss, dscores = mention_loss_from_scores(np.zeros(0), np.zeros(0, dtype=bool))
        assert loss == 0.0 and dscores.size == 0

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(8)
        scores = rng.normal(size=7)
        labels = rng.random(7) < 0.5
        _, dscores = mention_loss_from_scores(scores, labels)
        h = 1e-6
        for i in range(7):
            bumped = scores.copy()
            bumped[i] += h
            plus, _ = mention_loss_from_scores(bumped, labels)
            bumped[i] -= 2 * h
            minus, _ = mention_loss_from_scores(bumped, labels)
            assert dscores[i] == pytest.approx((plus - minus) / (2 * h), rel=1e-5)


class TestClusterLoss:
    def test_no_entities_single_action(self):
        loss, dlogits = cluster_loss_from_logits([np.array([0.0])], [0])
        assert loss == 0.0
        assert dlogits[0] == pytest.approx([0.0])

    def test_one_entity_score_zero_gold_attach(self):
        loss, _ = cluster_loss_from_logits([np.array([0.0, 0.0])], [0])
        assert loss == pytest.approx(math.log(2))

    def test_trace_without_gold_actions_rejected(self):
        from corefkit.learning.losses import cluster_loss

        model, _ = small_model()
        trace = [
            ClusterStep(
                step=0, span=Span(0, 0), scores=(), action=NEW, entity=0,
                entity_sizes=(),
            )
        ]
        with pytest.raises(Exception):
            cluster_loss(model, trace, np.zeros((1, SMALL.span_dim)))

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(3)
        logits = [rng.normal(size=4), rng.normal(size=2)]
        golds = [2, 1]
        _, dlogits = cluster_loss_from_logits(logits, golds)
        h = 1e-6
        for t, logit in enumerate(logits):
            for i in range(len(logit)):
                bumped = [l.copy() for l in logits]
                bumped[t][i] += h
                plus, _ = cluster_loss_from_logits(bumped, golds)
                bumped[t][i] -= 2 * h
                minus, _ = cluster_loss_from_logits(bumped, golds)
                assert dlogits[t][i] == pytest.approx(
                    (plus - minus) / (2 * h), rel=1e-5, abs=1e-9
                )


class TestFullModelGradients:
    def test_document_loss_gradients(self):
        model, corpus = small_model(seed=4)
        doc = corpus.documents[0]
        rng = np.random.default_rng(17)
        failures = finite_difference_check(
            lambda: document_loss(model, doc), model.store, rng
        )
        assert failures == []

    def test_genre_table_gradients(self):
        model, corpus = small_model(seed=5, use_genre=True)
        import dataclasses

        doc = dataclasses.replace(corpus.documents[0], genre="news")
        rng = np.random.default_rng(23)
        failures = finite_difference_check(
            lambda: document_loss(model, doc), model.store, rng
        )
        assert failures == []


class TestOptimizer:
    def test_zero_grad_zero_decay_no_change(self):
        store = ParameterStore({"embeddings": np.ones((3, 2)), "w": np.ones(4)})
        optimizer = TwoGroupAdam(store, lr_encoder=0.1, lr_rest=0.1, weight_decay=0.0,
                                 total_steps=10)
        before = {k: v.copy() for k, v in store.blocks.items()}
        optimizer.step(0)
        for name in store.blocks:
            np.testing.assert_array_equal(store.blocks[name], before[name])

    def test_final_step_lr_zero_no_op(self):
        store = ParameterStore({"w": np.ones(4)})
        optimizer = TwoGroupAdam(store, lr_rest=0.5, total_steps=10)
        store.grads["w"][...] = 1.0
        before = store.blocks["w"].copy()
        optimizer.step(9)  # final step of 10
        assert optimizer.lr_fraction(9) == 0.0
        np.testing.assert_array_equal(store.blocks["w"], before)

    def test_weight_decay_only_on_encoder_group(self):
        store = ParameterStore(
            {"embeddings": np.full((2, 2), 2.0), "w": np.full(3, 2.0)}
        )
        optimizer = TwoGroupAdam(
            store, lr_encoder=0.1, lr_rest=0.1, weight_decay=0.5, total_steps=10
        )
        optimizer.step(0)  # zero gradients: only decay moves anything
        assert np.all(store.blocks["embeddings"] < 2.0)
        np.testing.assert_array_equal(store.blocks["w"], np.full(3, 2.0))

    def test_frozen_blocks_not_updated(self):
        store = ParameterStore({"w": np.ones(3), "frozen": np.ones(3)})
        store.freeze("frozen")
        optimizer = TwoGroupAdam(store, total_steps=10)
        store.grads["w"][...] = 1.0
        store.grads["frozen"][...] = 1.0
        optimizer.step(0)
        assert not np.array_equal(store.blocks["w"], np.ones(3))
        np.testing.assert_array_equal(store.blocks["frozen"], np.ones(3))

    def test_quadratic_bowl_converges(self):
        target = np.array([1.5, -2.0, 0.25])
        store = ParameterStore({"w": np.zeros(3)})
        steps = 1000
        optimizer = TwoGroupAdam(store, lr_rest=0.05, total_steps=steps)
        for step in range(steps):
            store.zero_grads()
            store.grads["w"][...] = 2 * (store.blocks["w"] - target)
            optimizer.step(step)
        np.testing.assert_allclose(store.blocks["w"], target, atol=1e-3)


def train_once(seed=0, steps=40, corpus=None, dev=None):
    corpus = corpus or make_name_corpus(8, seed=31)
    vocab = build_vocabulary([corpus])
    store = init_parameters(len(vocab), SMALL, seed)
    model = ScoringModel(store, SMALL, vocab)
    cfg = TrainConfig(
        steps=steps, eval_every=0 if dev is None else 20, patience=5,
        lr_encoder=5e-3, lr_rest=2e-3, seed=seed,
    )
    spec = MixSpec(entries=(MixEntry(corpus),), seed=seed)
    result = train(stream(spec, steps), model, dev or [], cfg)
    return result


class TestTrainLoop:
    def test_same_seed_bitwise_identical_loss_curves(self):
        first = train_once(seed=11)
        second = train_once(seed=11)
        assert [r.loss for r in first.history] == [r.loss for r in second.history]

    def test_different_seed_differs(self):
        first = train_once(seed=11)
        second = train_once(seed=12)
        assert [r.loss for r in first.history] != [r.loss for r in second.history]

    def test_empty_stream_rejected(self):
        corpus = make_name_corpus(2, seed=31)
        vocab = build_vocabulary([corpus])
        model = ScoringModel(init_parameters(len(vocab), SMALL, 0), SMALL, vocab)
        with pytest.raises(ValueError):
            train(iter([]), model, [], TrainConfig(steps=5, seed=0))

    def test_patience_stops_training(self, monkeypatch):
        import corefkit.learning.training as train_module

        fixed = iter([0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.9])
        monkeypatch.setattr(
            train_module, "evaluate_model", lambda *args, **kwargs: next(fixed)
        )
        corpus = make_name_corpus(8, seed=31)
        dev = make_name_corpus(2, seed=32, split="dev")
        vocab = build_vocabulary([corpus])
        model = ScoringModel(init_parameters(len(vocab), SMALL, 0), SMALL, vocab)
        cfg = TrainConfig(steps=500, eval_every=1, patience=5, lr_encoder=1e-3,
                          lr_rest=1e-3, seed=0)
        spec = MixSpec(entries=(MixEntry(corpus),), seed=0)
        result = train(stream(spec, 500), model, [dev], cfg)
        # eval 1 improves (first), evals 2..6 do not: stop after the 6th
        assert result.stopped_early
        assert result.steps_run == 6
        assert result.best_step == 1

    def test_augmented_dev_rejected(self):
        corpus = make_name_corpus(2, seed=31)
        import dataclasses

        bad_dev = dataclasses.replace(
            make_name_corpus(2, seed=32, split="dev"), augmented=True
        )
        vocab = build_vocabulary([corpus])
        model = ScoringModel(init_parameters(len(vocab), SMALL, 0), SMALL, vocab)
        with pytest.raises(ValueError):
            evaluate_model(model, [bad_dev])

    def test_best_checkpoint_returned(self, monkeypatch):
        import corefkit.learning.training as train_module

        scores = iter([0.9, 0.2, 0.1, 0.1, 0.1, 0.1, 0.1])
        monkeypatch.setattr(
            train_module, "evaluate_model", lambda *args, **kwargs: next(scores)
        )
        corpus = make_name_corpus(8, seed=31)
        dev = make_name_corpus(2, seed=32, split="dev")
        vocab = build_vocabulary([corpus])
        store = init_parameters(len(vocab), SMALL, 0)
        model = ScoringModel(store, SMALL, vocab)
        cfg = TrainConfig(steps=500, eval_every=1, patience=5, lr_encoder=1e-3,
                          lr_rest=1e-3, seed=0)
        spec = MixSpec(entries=(MixEntry(corpus),), seed=0)
        result = train(stream(spec, 500), model, [dev], cfg)
        assert result.best_score == 0.9
        # best store is a snapshot from step 1, not the final parameters
        assert result.store is not model.store


class TestGenreToggle:
    def test_zeroed_frozen_genre_table_is_bitwise_identical_to_disabled(self):
        corpus = make_name_corpus(6, seed=41)
        import dataclasses

        docs = tuple(
            dataclasses.replace(d, genre="news") for d in corpus.documents
        )
        corpus = dataclasses.replace(corpus, documents=docs)
        vocab = build_vocabulary([corpus])

        config_off = ModelConfig(embedding_dim=6, hidden_dim=10, feature_dim=3)
        config_on = ModelConfig(
            embedding_dim=6, hidden_dim=10, feature_dim=3,
            use_genre=True, genre_labels=("news",),
        )

        def run(config, zero_freeze):
            store = init_parameters(len(vocab), config, seed=2)
            if zero_freeze:
                store.blocks["feat.genre"][...] = 0.0
                store.freeze("feat.genre")
            model = ScoringModel(store, config, vocab)
            optimizer = TwoGroupAdam(store, lr_encoder=1e-2, lr_rest=1e-2,
                                     total_steps=20)
            losses = []
            for step, doc in enumerate(corpus.documents * 3):
                store.zero_grads()
                losses.append(document_loss(model, doc))
                optimizer.step(step)
            preds = [model.predict(d) for d in corpus.documents]
            return losses, preds

        losses_off, preds_off = run(config_off, zero_freeze=False)
        losses_on, preds_on = run(config_on, zero_freeze=True)
        assert losses_off == losses_on
        assert preds_off == preds_on


class TestCheckpoint:
    def test_round_trip(self, tmp_path):
        model, corpus = small_model(seed=9)
        optimizer = TwoGroupAdam(model.store, total_steps=5)
        model.store.zero_grads()
        document_loss(model, corpus.documents[0])
        optimizer.step(0)

        path = tmp_path / "ckpt.npz"
        save_checkpoint(
            path, model.store, model.vocab, model.config.as_dict(),
            optimizer_state=optimizer.state(), extra={"note": "test"},
        )
        store, vocab, meta, opt_state = load_checkpoint(path)
        assert vocab == model.vocab
        assert meta["extra"]["note"] == "test"
        assert meta["model_config"] == model.config.as_dict()
        for name, value in model.store.blocks.items():
            np.testing.assert_array_equal(store.blocks[name], value)
        assert opt_state["step"] == 1
        np.testing.assert_array_equal(
            opt_state["m"]["embeddings"], optimizer.m["embeddings"]
        )

    def test_finite_check(self):
        store = ParameterStore({"w": np.array([1.0, np.inf])})
        with pytest.raises(FloatingPointError):
            store.check_finite()


class TestHistoryCsv:
    def test_write(self, tmp_path):
        from corefkit.learning import write_history_csv

        rows = [HistoryRow(1, 0.5, None), HistoryRow(2, 0.4, 0.9)]
        path = tmp_path / "history.csv"
        write_history_csv(rows, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "step,loss,dev_score"
        assert lines[1] == "1,0.5,"
        assert lines[2] == "2,0.4,0.9"
