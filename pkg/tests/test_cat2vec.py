import json
import math

import numpy as np
import pytest

from gistcdm.cat2vec import (
    Cat2VecModel,
    TrainingConfig,
    TrainingExample,
    Vocabulary,
    joint_loss_and_grads,
    nce_loss,
    sample_negatives,
    train,
    _nce_loss_and_grads,
    _PARAM_KEYS,
)
from gistcdm.errors import (
    EmptyDocumentError,
    NegativeSampleCollisionError,
    OovDocumentWarning,
)

TINY = TrainingConfig(dim=4, hidden=3, k_negatives=2, epochs=2, seed=1,
                      min_token_freq=1)


def make_separable_corpus(n_per_cat=50, seed=0):
    """Four categories with disjoint vocabularies; category c's documents
    are all positive for even c, negative for odd c."""
    rng = np.random.default_rng(seed)
    words = {
        "alpha": ["apple", "apricot", "almond", "anise"],
        "beta": ["bread", "butter", "barley", "bean"],
        "gamma": ["grape", "guava", "garlic", "ginger"],
        "delta": ["date", "durian", "dill", "damson"],
    }
    sentiments = {"alpha": "pos", "beta": "neg", "gamma": "pos", "delta": "neg"}
    corpus = []
    for cat, vocab in words.items():
        for _ in range(n_per_cat):
            tokens = [vocab[int(i)] for i in rng.integers(0, len(vocab), size=6)]
            corpus.append(TrainingExample(" ".join(tokens), cat, sentiments[cat]))
    return corpus


class TestEncoder:
    def test_zero_model_encodes_to_zero(self):
        model = Cat2VecModel.zeros(["hello", "world"], ["a", "b"], TINY)
        assert not model.encode("hello world").any()

    def test_singleton_token_returns_its_row(self):
        model = Cat2VecModel.zeros(["tok"], ["a", "b"], TINY)
        model.params["W"][0] = np.arange(4.0)
        np.testing.assert_array_equal(model.encode("tok"), np.arange(4.0))

    def test_equal_attention_scores_average_rows(self):
        model = Cat2VecModel.zeros(["x", "y"], ["a", "b"], TINY)
        model.params["W"][0] = np.array([1.0, 0.0, 0.0, 0.0])
        model.params["W"][1] = np.array([0.0, 1.0, 0.0, 0.0])
        # attention query is zero, so softmax(0, 0) weights both equally
        np.testing.assert_allclose(model.encode("x y"), [0.5, 0.5, 0.0, 0.0])

    def test_empty_document_raises(self):
        model = Cat2VecModel.zeros(["tok"], ["a", "b"], TINY)
        with pytest.raises(EmptyDocumentError):
            model.encode("!!! ...")

    def test_all_oov_warns_and_returns_zero(self):
        model = Cat2VecModel.zeros(["tok"], ["a", "b"], TINY)
        with pytest.warns(OovDocumentWarning):
            v = model.encode("unknown words only")
        assert not v.any()


class TestPositiveScore:
    def test_orthogonal_is_half(self):
        model = Cat2VecModel.zeros(["tok"], ["a", "b"], TINY)
        model.params["Vc"][0] = np.array([1.0, 0.0, 0.0, 0.0])
        assert model.positive_score(np.array([0.0, 1.0, 0.0, 0.0]), 0) == 0.5

    def test_logit_three(self):
        model = Cat2VecModel.zeros(["tok"], ["a", "b"], TINY)
        model.params["Vc"][0] = np.array([3.0, 0.0, 0.0, 0.0])
        score = model.positive_score(np.array([1.0, 0.0, 0.0, 0.0]), 0)
        assert score == pytest.approx(0.9526, abs=1e-4)

    def test_unit_importance_reduces_to_plain_dot(self):
        rng = np.random.default_rng(0)
        model = Cat2VecModel.zeros(["tok"], ["a", "b"], TINY)
        model.params["Vc"][1] = rng.normal(size=4)
        v_d = rng.normal(size=4)
        expected = 1.0 / (1.0 + math.exp(-float(model.params["Vc"][1] @ v_d)))
        assert model.positive_score(v_d, 1) == pytest.approx(expected)

    def test_invariant_under_simultaneous_dimension_permutation(self):
        rng = np.random.default_rng(3)
        model = Cat2VecModel.zeros(["tok"], ["a", "b"], TINY)
        model.params["Vc"][0] = rng.normal(size=4)
        model.params["Vi"][0] = rng.normal(size=4)
        v_d = rng.normal(size=4)
        before = model.positive_score(v_d, 0)
        perm = rng.permutation(4)
        model.params["Vc"][0] = model.params["Vc"][0][perm]
        model.params["Vi"][0] = model.params["Vi"][0][perm]
        assert model.positive_score(v_d[perm], 0) == pytest.approx(before)


class TestNceLoss:
    def _model_with_dots(self, dots):
        # category products are e1-scaled so dots against v_d=[d,0,0,0] are direct
        model = Cat2VecModel.zeros(["tok"], ["c0", "c1", "c2"], TINY)
        for i, d in enumerate(dots):
            model.params["Vc"][i] = np.array([d, 0.0, 0.0, 0.0])
        return model

    def test_all_zero_dots(self):
        model = self._model_with_dots([0.0, 0.0, 0.0])
        loss = nce_loss(model, np.zeros(4), 0, [1, 2])
        assert loss == pytest.approx(3 * math.log(2))

    def test_softplus_sum_example(self):
        model = self._model_with_dots([2.0, -1.0, -1.0])
        loss = nce_loss(model, np.array([1.0, 0.0, 0.0, 0.0]), 0, [1, 2])
        assert loss == pytest.approx(0.1269 + 2 * 0.3133, abs=2e-4)

    def test_perfect_separation_loss_vanishes(self):
        # the probability clamp floors each term at -log(1 - 1e-12)
        model = self._model_with_dots([40.0, -40.0, -40.0])
        loss = nce_loss(model, np.array([1.0, 0.0, 0.0, 0.0]), 0, [1, 2])
        assert loss < 1e-10

    def test_collision_raises(self):
        model = self._model_with_dots([0.0, 0.0, 0.0])
        with pytest.raises(NegativeSampleCollisionError):
            nce_loss(model, np.zeros(4), 0, [0, 1])


def relative_error(a, b):
    denom = max(abs(a), abs(b), 1e-8)
    return abs(a - b) / denom


def finite_difference_check(params, idx, cat, negatives, sentiment, keys,
                            step=1e-5, tol=1e-4):
    _, grads = joint_loss_and_grads(params, idx, cat, negatives, sentiment)
    worst = 0.0
    for key in keys:
        flat = params[key].reshape(-1)
        gflat = grads[key].reshape(-1)
        for pos in range(flat.size):
            orig = flat[pos]
            flat[pos] = orig + step
            up, _ = joint_loss_and_grads(params, idx, cat, negatives, sentiment)
            flat[pos] = orig - step
            down, _ = joint_loss_and_grads(params, idx, cat, negatives, sentiment)
            flat[pos] = orig
            numeric = (up - down) / (2 * step)
            worst = max(worst, relative_error(numeric, gflat[pos]))
    assert worst <= tol, f"gradient mismatch {worst:.2e}"
    return worst


class TestGradients:
    def _random_params(self, seed, n_vocab=12, n_cat=4, d=6, h=3):
        rng = np.random.default_rng(seed)
        return {
            "W": rng.normal(scale=0.5, size=(n_vocab, d)),
            "q": rng.normal(scale=0.5, size=d),
            "Vc": rng.normal(scale=0.5, size=(n_cat, d)),
            "Vi": rng.normal(scale=0.5, size=(n_cat, d)),
            "A": rng.normal(scale=0.5, size=(h, d)),
            "a": rng.normal(scale=0.1, size=h),
            "B": rng.normal(scale=0.5, size=(2, h)),
            "b": rng.normal(scale=0.1, size=2),
        }

    @pytest.mark.parametrize("seed", [0, 1])
    def test_joint_loss_gradients_match_finite_differences(self, seed):
        params = self._random_params(seed)
        finite_difference_check(params, idx=[0, 3, 3, 7], cat=1,
                                negatives=[0, 2], sentiment=1, keys=_PARAM_KEYS)

    def test_nce_only_gradients(self):
        params = self._random_params(7)
        rng = np.random.default_rng(1)
        v_d = rng.normal(size=6)
        loss, (grads, _) = _nce_loss_and_grads(params, v_d, 2, [0, 1])
        step = 1e-5
        for key in ("Vc", "Vi"):
            flat = params[key].reshape(-1)
            gflat = grads[key].reshape(-1)
            for pos in range(flat.size):
                orig = flat[pos]
                flat[pos] = orig + step
                up, _ = _nce_loss_and_grads(params, v_d, 2, [0, 1], want_grads=False)
                flat[pos] = orig - step
                down, _ = _nce_loss_and_grads(params, v_d, 2, [0, 1], want_grads=False)
                flat[pos] = orig
                assert relative_error((up - down) / (2 * step), gflat[pos]) <= 1e-4


class TestNegativeSampling:
    def test_excludes_true_category_and_is_uniform(self):
        rng = np.random.default_rng(0)
        draws = [sample_negatives(rng, 2, 5, 3) for _ in range(2000)]
        flat = [d for row in draws for d in row]
        assert 2 not in flat
        counts = np.bincount(flat, minlength=5)
        others = counts[[0, 1, 3, 4]]
        assert others.min() > 0.8 * others.mean()


class TestTraining:
    def test_separable_corpus_reaches_high_accuracy(self):
        corpus = make_separable_corpus()
        rng = np.random.default_rng(99)
        order = rng.permutation(len(corpus))
        train_set = [corpus[i] for i in order[:160]]
        held_out = [corpus[i] for i in order[160:]]
        config = TrainingConfig(dim=16, hidden=8, k_negatives=3, epochs=30,
                                learning_rate=0.5, batch_size=8, seed=0,
                                min_token_freq=1)
        model, losses = train(train_set, config)
        hits = sum(model.predict_category(ex.text)[0] == ex.category
                   for ex in held_out)
        assert hits / len(held_out) >= 0.95
        # loss trace is non-increasing up to 5% tolerance between epochs
        for prev, cur in zip(losses, losses[1:]):
            assert cur <= prev * 1.05

    def test_sentiment_head_learns_category_purity(self):
        corpus = make_separable_corpus()
        config = TrainingConfig(dim=16, hidden=8, k_negatives=3, epochs=30,
                                learning_rate=0.5, batch_size=8, seed=0,
                                min_token_freq=1)
        model, _ = train(corpus, config)
        p_pos_alpha, _ = model.category_sentiment("alpha")
        p_pos_beta, p_neg_beta = model.category_sentiment("beta")
        assert p_pos_alpha >= 0.9
        assert p_neg_beta >= 0.9

    def test_single_category_corpus_always_predicts_it(self):
        corpus = [TrainingExample("solo doc words here", "only", "pos")] * 4
        model, _ = train(corpus, TrainingConfig(dim=8, hidden=4, epochs=3,
                                                seed=0, min_token_freq=1))
        assert model.predict_category("solo words")[0] == "only"

    def test_bit_reproducible_given_seed(self):
        corpus = make_separable_corpus(n_per_cat=10)
        config = TrainingConfig(dim=8, hidden=4, epochs=3, seed=5, min_token_freq=1)
        m1, l1 = train(corpus, config)
        m2, l2 = train(corpus, config)
        assert l1 == l2
        for key in _PARAM_KEYS:
            np.testing.assert_array_equal(m1.params[key], m2.params[key])

    def test_sentiment_probabilities_normalize(self):
        corpus = make_separable_corpus(n_per_cat=10)
        model, _ = train(corpus, TrainingConfig(dim=8, hidden=4, epochs=2,
                                                seed=3, min_token_freq=1))
        for cat in model.categories:
            p_pos, p_neg = model.category_sentiment(cat)
            assert p_pos + p_neg == pytest.approx(1.0, abs=1e-12)
            assert 0 < p_pos < 1

    def test_zero_model_sentiment_is_even(self):
        model = Cat2VecModel.zeros(["tok"], ["a", "b"], TINY)
        assert model.category_sentiment("a") == (0.5, 0.5)


class TestPersistence:
    def test_round_trip_is_bit_exact(self, tmp_path):
        corpus = make_separable_corpus(n_per_cat=8)
        model, _ = train(corpus, TrainingConfig(dim=8, hidden=4, epochs=2,
                                                seed=11, min_token_freq=1))
        path = tmp_path / "model.json"
        model.save(path)
        loaded = Cat2VecModel.load(path)
        assert loaded.categories == model.categories
        assert loaded.vocab.tokens == model.vocab.tokens
        for key in _PARAM_KEYS:
            np.testing.assert_array_equal(loaded.params[key], model.params[key])

    def test_unsupported_schema_rejected(self, tmp_path):
        model = Cat2VecModel.zeros(["tok"], ["a", "b"], TINY)
        path = tmp_path / "model.json"
        blob = model.to_dict()
        blob["schema_version"] = 999
        path.write_text(json.dumps(blob))
        with pytest.raises(ValueError):
            Cat2VecModel.load(path)


class TestVocabulary:
    def test_min_frequency_filter(self):
        examples = [TrainingExample("rare common common", "a", "pos"),
                    TrainingExample("common again again", "b", "neg")]
        vocab = Vocabulary.from_corpus(examples, min_freq=2)
        assert "common" in vocab and "again" in vocab and "rare" not in vocab

    def test_indices_dense_and_bijective(self):
        vocab = Vocabulary(["b", "a", "c"])
        assert sorted(vocab.index.values()) == [0, 1, 2]
        assert [vocab.tokens[vocab.index[t]] for t in vocab.tokens] == vocab.tokens
