"""Category embeddings with importance vectors and a category-level
sentiment head, trained by negative sampling.

The model learns, per category, an embedding ``v_c`` and an importance
vector ``v_i`` whose elementwise product scores documents: a document
encoding ``v_d`` matches its true category through ``sigmoid((v_c * v_i)
. v_d)`` and is pushed away from sampled negative categories. A two-layer
head trained on document sentiment is reused at prediction time on the
category products themselves, which yields sentiment estimates per
category rather than per text.

The document encoder is interchangeable; the reference encoder here is a
word-embedding table pooled by scalar attention against a learned query
vector. Everything is plain numpy with hand-derived gradients, which keeps
training single-threaded, bit-reproducible for a fixed seed, and cheap to
verify against finite differences.
"""

from __future__ import annotations

import json
import re
import warnings
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np

from .errors import (
    DivergedTrainingError,
    EmptyDocumentError,
    NegativeSampleCollisionError,
    OovDocumentWarning,
)

MODEL_SCHEMA_VERSION = 1

SENTIMENT_LABELS = ("pos", "neg")

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class TrainingConfig:
    """Hyperparameters; the defaults are desk-scale settings."""

    dim: int = 64
    hidden: int = 32
    k_negatives: int = 5
    epochs: int = 20
    learning_rate: float = 0.05
    batch_size: int = 32
    seed: int = 0
    min_token_freq: int = 2

    def __post_init__(self):
        if self.k_negatives < 1:
            raise ValueError("k_negatives must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")


@dataclass(frozen=True)
class TrainingExample:
    text: str
    category: str
    sentiment: str  # "pos" | "neg"

    def __post_init__(self):
        if self.sentiment not in SENTIMENT_LABELS:
            raise ValueError(f"sentiment must be one of {SENTIMENT_LABELS}")


def coerce_corpus(corpus) -> list[TrainingExample]:
    out = []
    for rec in corpus:
        if isinstance(rec, TrainingExample):
            out.append(rec)
        elif isinstance(rec, dict):
            out.append(TrainingExample(rec["text"], rec["category"], rec["sentiment"]))
        else:
            text, category, sentiment = rec
            out.append(TrainingExample(text, category, sentiment))
    return out


class Vocabulary:
    """Dense token index built from corpus frequencies."""

    def __init__(self, tokens: list[str]):
        self.index = {tok: i for i, tok in enumerate(tokens)}
        self.tokens = list(tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    @classmethod
    def from_corpus(cls, examples: list[TrainingExample], min_freq: int) -> "Vocabulary":
        counts: dict[str, int] = {}
        for ex in examples:
            for tok in tokenize(ex.text):
                counts[tok] = counts.get(tok, 0) + 1
        kept = sorted(tok for tok, c in counts.items() if c >= min_freq)
        return cls(kept)


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-np.asarray(x, dtype=float)))


def _softmax(z):
    z = np.asarray(z, dtype=float)
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


_PARAM_KEYS = ("W", "q", "Vc", "Vi", "A", "a", "B", "b")


class Cat2VecModel:
    """Trained category/sentiment model.

    Parameters
    ----------
    vocab : Vocabulary
    categories : sequence of category names (index order is the tie-break
        order for predictions)
    params : dict with keys W (|V| x D word embeddings), q (D attention
        query), Vc (M x D category embeddings), Vi (M x D importance
        vectors), A, a, B, b (sentiment head D -> H -> 2)
    config : TrainingConfig
    """

    def __init__(self, vocab: Vocabulary, categories, params: dict, config: TrainingConfig):
        self.vocab = vocab
        self.categories = tuple(categories)
        self.params = {k: np.asarray(params[k], dtype=float) for k in _PARAM_KEYS}
        self.config = config
        if len(self.categories) < 2:
            raise ValueError("need at least 2 categories")
        for key in ("Vc", "Vi"):
            if not np.all(np.isfinite(self.params[key])):
                raise ValueError(f"{key} contains non-finite values")

    # --- construction -----------------------------------------------------

    @classmethod
    def initialized(cls, vocab: Vocabulary, categories, config: TrainingConfig,
                    rng: np.random.Generator) -> "Cat2VecModel":
        d, h = config.dim, config.hidden
        lim = 0.5 / d
        head_lim = 1.0 / np.sqrt(d)
        params = {
            "W": rng.uniform(-lim, lim, size=(len(vocab), d)),
            "q": rng.uniform(-lim, lim, size=d),
            "Vc": rng.uniform(-lim, lim, size=(len(categories), d)),
            # importance starts neutral: it modulates multiplicatively
            "Vi": np.ones((len(categories), d)),
            "A": rng.uniform(-head_lim, head_lim, size=(h, d)),
            "a": np.zeros(h),
            "B": rng.uniform(-head_lim, head_lim, size=(2, h)),
            "b": np.zeros(2),
        }
        return cls(vocab, categories, params, config)

    @classmethod
    def zeros(cls, tokens, categories, config: TrainingConfig) -> "Cat2VecModel":
        """All-zero parameters except neutral importance; handy for the
        degenerate-behaviour tests."""
        vocab = Vocabulary(list(tokens))
        d, h = config.dim, config.hidden
        params = {
            "W": np.zeros((len(vocab), d)),
            "q": np.zeros(d),
            "Vc": np.zeros((len(categories), d)),
            "Vi": np.ones((len(categories), d)),
            "A": np.zeros((h, d)),
            "a": np.zeros(h),
            "B": np.zeros((2, h)),
            "b": np.zeros(2),
        }
        return cls(vocab, categories, params, config)

    # --- encoding ----------------------------------------------------------

    def token_indices(self, text: str) -> list[int]:
        raw = tokenize(text)
        if not raw:
            raise EmptyDocumentError(f"no tokens in {text!r}")
        return [self.vocab.index[t] for t in raw if t in self.vocab]

    def encode(self, text: str) -> np.ndarray:
        """Attention-pooled document vector; deterministic given the
        parameters. A document whose every token is out of vocabulary
        encodes to the zero vector with a warning."""
        idx = self.token_indices(text)
        if not idx:
            warnings.warn(
                f"all tokens out of vocabulary in {text!r}; encoding as zero vector",
                OovDocumentWarning,
                stacklevel=2,
            )
            return np.zeros(self.config.dim)
        return _encode_forward(self.params, idx)[0]

    # --- scoring -----------------------------------------------------------

    def positive_score(self, v_d: np.ndarray, category: int) -> float:
        """sigmoid((v_c * v_i) . v_d) for one category index."""
        p = self.params
        u = float((p["Vc"][category] * p["Vi"][category]) @ np.asarray(v_d, dtype=float))
        return float(_sigmoid(u))

    def category_scores(self, v_d: np.ndarray) -> np.ndarray:
        p = self.params
        u = (p["Vc"] * p["Vi"]) @ np.asarray(v_d, dtype=float)
        return _sigmoid(u)

    def predict_category(self, text: str) -> tuple[str, dict[str, float]]:
        """Argmax of per-category match scores; ties break toward the
        lowest category index. The full score vector is returned for
        audit."""
        scores = self.category_scores(self.encode(text))
        best = int(np.argmax(scores))  # argmax returns the first maximum
        return self.categories[best], {
            name: float(scores[i]) for i, name in enumerate(self.categories)
        }

    def category_sentiment(self, category: str | int) -> tuple[float, float]:
        """Sentiment head applied to the category product (v_c * v_i)."""
        if isinstance(category, str):
            category = self.categories.index(category)
        p = self.params
        v = p["Vc"][category] * p["Vi"][category]
        probs = _head_forward(p, v)[0]
        return float(probs[0]), float(probs[1])

    # --- persistence ---------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "schema_version": MODEL_SCHEMA_VERSION,
            "config": asdict(self.config),
            "vocabulary": self.vocab.tokens,
            "categories": list(self.categories),
            "params": {k: self.params[k].tolist() for k in _PARAM_KEYS},
        }

    def save(self, path: str | Path):
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path: str | Path) -> "Cat2VecModel":
        blob = json.loads(Path(path).read_text())
        if blob.get("schema_version") != MODEL_SCHEMA_VERSION:
            raise ValueError(f"unsupported model schema {blob.get('schema_version')!r}")
        return cls(
            Vocabulary(blob["vocabulary"]),
            blob["categories"],
            blob["params"],
            TrainingConfig(**blob["config"]),
        )


# --- forward/backward pieces ---------------------------------------------

def _encode_forward(params: dict, idx: list[int]):
    E = params["W"][idx]                       # (T, D)
    s = E @ params["q"]                        # (T,)
    alpha = _softmax(s)
    v_d = alpha @ E
    return v_d, (E, alpha)


def _encode_backward(params: dict, idx: list[int], cache, g: np.ndarray, grads: dict):
    E, alpha = cache
    d_alpha = E @ g
    dE = np.outer(alpha, g)
    ds = alpha * (d_alpha - float(alpha @ d_alpha))
    grads["q"] += E.T @ ds
    dE += np.outer(ds, params["q"])
    np.add.at(grads["W"], idx, dE)


def _head_forward(params: dict, v: np.ndarray):
    pre = params["A"] @ v + params["a"]
    h = np.tanh(pre)
    z = params["B"] @ h + params["b"]
    probs = _softmax(z)
    return probs, (v, h)


def _head_backward(params: dict, cache, dz: np.ndarray, grads: dict) -> np.ndarray:
    v, h = cache
    grads["B"] += np.outer(dz, h)
    grads["b"] += dz
    dh = params["B"].T @ dz
    dpre = dh * (1.0 - h * h)
    grads["A"] += np.outer(dpre, v)
    grads["a"] += dpre
    return params["A"].T @ dpre  # gradient w.r.t. v


def nce_loss(model: Cat2VecModel, v_d: np.ndarray, true_cat: int, negatives) -> float:
    """Negative-sampling loss of one document encoding against its true
    category and K sampled negative categories (each negative scored with
    its own importance vector)."""
    negatives = list(negatives)
    if true_cat in negatives:
        raise NegativeSampleCollisionError(
            f"true category {true_cat} appears among negatives {negatives}"
        )
    loss, _ = _nce_loss_and_grads(model.params, np.asarray(v_d, dtype=float),
                                  true_cat, negatives, want_grads=False)
    return loss


def _nce_loss_and_grads(params: dict, v_d: np.ndarray, true_cat: int,
                        negatives: list[int], want_grads: bool = True):
    Vc, Vi = params["Vc"], params["Vi"]
    prod_pos = Vc[true_cat] * Vi[true_cat]
    u_pos = float(prod_pos @ v_d)
    sig_pos = float(np.clip(_sigmoid(u_pos), 1e-12, 1 - 1e-12))
    loss = -np.log(sig_pos)

    neg_prods = Vc[negatives] * Vi[negatives]        # (K, D)
    u_neg = neg_prods @ v_d                          # (K,)
    sig_neg = np.clip(_sigmoid(-u_neg), 1e-12, 1 - 1e-12)
    loss -= float(np.log(sig_neg).sum())

    if not want_grads:
        return float(loss), None

    grads = {"Vc": np.zeros_like(Vc), "Vi": np.zeros_like(Vi)}
    delta_pos = float(_sigmoid(u_pos)) - 1.0          # d loss / d u_pos
    grads["Vc"][true_cat] += delta_pos * Vi[true_cat] * v_d
    grads["Vi"][true_cat] += delta_pos * Vc[true_cat] * v_d
    g_vd = delta_pos * prod_pos

    delta_neg = _sigmoid(u_neg)                        # d loss / d u_j
    for j, cat in enumerate(negatives):
        grads["Vc"][cat] += delta_neg[j] * Vi[cat] * v_d
        grads["Vi"][cat] += delta_neg[j] * Vc[cat] * v_d
        g_vd = g_vd + delta_neg[j] * neg_prods[j]
    return float(loss), (grads, g_vd)


def joint_loss_and_grads(params: dict, idx: list[int], true_cat: int,
                         negatives: list[int], sentiment: int | None):
    """Loss and gradients of one training example: negative-sampling loss
    plus (when ``sentiment`` is given) the cross-entropy of the sentiment
    head on the document encoding. Returns (loss, grads keyed like params).
    """
    grads = {k: np.zeros_like(params[k]) for k in _PARAM_KEYS}
    v_d, enc_cache = _encode_forward(params, idx)

    loss, (nce_grads, g_vd) = _nce_loss_and_grads(params, v_d, true_cat, negatives)
    grads["Vc"] += nce_grads["Vc"]
    grads["Vi"] += nce_grads["Vi"]

    if sentiment is not None:
        probs, head_cache = _head_forward(params, v_d)
        p_true = float(np.clip(probs[sentiment], 1e-12, 1 - 1e-12))
        loss += -np.log(p_true)
        dz = probs.copy()
        dz[sentiment] -= 1.0
        g_vd = g_vd + _head_backward(params, head_cache, dz, grads)

    _encode_backward(params, idx, enc_cache, g_vd, grads)
    return float(loss), grads


def sample_negatives(rng: np.random.Generator, true_cat: int, n_categories: int,
                     k: int) -> list[int]:
    """K categories drawn uniformly from the complement of the true one."""
    if n_categories < 2:
        raise ValueError("need at least 2 categories to sample negatives")
    draws = rng.integers(0, n_categories - 1, size=k)
    draws = draws + (draws >= true_cat)
    return [int(d) for d in draws]


def train(corpus, config: TrainingConfig | None = None) -> tuple[Cat2VecModel, list[float]]:
    """Train a model by SGD over shuffled minibatches of the joint loss.

    Deterministic given ``config.seed``. Returns the model and the
    per-epoch mean training loss. Raises :class:`DivergedTrainingError`
    if the loss turns NaN.
    """
    if config is None:
        config = TrainingConfig()
    examples = coerce_corpus(corpus)
    if not examples:
        raise ValueError("empty corpus")

    categories = sorted({ex.category for ex in examples})
    if len(categories) < 2:
        # degenerate but allowed: pad with a never-used placeholder so the
        # model is well-formed; prediction always returns the real one
        categories = categories + ["__none__"]
    cat_index = {c: i for i, c in enumerate(categories)}

    vocab = Vocabulary.from_corpus(examples, config.min_token_freq)
    rng = np.random.default_rng(config.seed)
    model = Cat2VecModel.initialized(vocab, categories, config, rng)
    params = model.params

    prepared = []
    for ex in examples:
        idx = [vocab.index[t] for t in tokenize(ex.text) if t in vocab]
        if not idx:
            continue  # nothing for the encoder to learn from
        prepared.append((idx, cat_index[ex.category], SENTIMENT_LABELS.index(ex.sentiment)))
    if not prepared:
        raise ValueError("no document retained any in-vocabulary token")

    n = len(prepared)
    total_steps = max(1, config.epochs * ((n + config.batch_size - 1) // config.batch_size))
    step = 0
    epoch_losses: list[float] = []
    for _epoch in range(config.epochs):
        order = rng.permutation(n)
        running = 0.0
        for start in range(0, n, config.batch_size):
            batch = order[start:start + config.batch_size]
            lr = config.learning_rate * max(0.01, 1.0 - step / total_steps)
            step += 1
            batch_grads = {k: np.zeros_like(params[k]) for k in _PARAM_KEYS}
            for row in batch:
                idx, cat, senti = prepared[row]
                negatives = sample_negatives(rng, cat, len(categories), config.k_negatives)
                loss, grads = joint_loss_and_grads(params, idx, cat, negatives, senti)
                running += loss
                for k in _PARAM_KEYS:
                    batch_grads[k] += grads[k]
            scale = lr / len(batch)
            for k in _PARAM_KEYS:
                params[k] -= scale * batch_grads[k]
        mean_loss = running / n
        if not np.isfinite(mean_loss):
            raise DivergedTrainingError(f"loss became non-finite in epoch {_epoch}")
        epoch_losses.append(mean_loss)
    return model, epoch_losses
