"""Error-encoded categorical and interval utilities.

Both utility levels draw from logistic distributions centered on the true
value, with spreads proportional to it: the categorical spread shrinks as
need for cognition approaches one, the interval spread shrinks as numeracy
approaches one and grows with the number of quantities involved in the
expected-value computation. Sampling is inverse-CDF over an explicit
generator handle so that seeds fully determine decisions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import Choice, IndividualDifferences
from .parsing import expected_value, quantity_count

# Uniform draws are clamped away from {0, 1} before the logistic quantile.
UNIFORM_EPS = 1e-12

# Computed spreads below this collapse to an exact point mass, which makes
# the deterministic limit (parameters pushed against 1) produce exact
# utilities and exact preference ties.
SCALE_SNAP_EPS = 1e-9


@dataclass(frozen=True)
class LogisticSpec:
    """Location/scale pair for one logistic utility distribution; a zero
    scale is the degenerate point mass at ``mu``."""

    mu: float
    s: float

    def __post_init__(self):
        if self.s < 0:
            raise ValueError(f"logistic scale must be >= 0, got {self.s}")


@dataclass(frozen=True)
class UtilitySample:
    """Sampled categorical and interval utilities for one choice."""

    choice_id: str
    cu: float
    iu: float


def sentiment_score(p_pos: float, p_neg: float) -> float:
    """Signed sentiment of a category: positive minus negative mass."""
    return p_pos - p_neg


def _snap(s: float) -> float:
    return 0.0 if s < SCALE_SNAP_EPS else s


def cu_spec(sentiment: float, nfc: float) -> LogisticSpec:
    """Categorical utility distribution for a choice.

    Located at the category sentiment with spread ``|nfc - 1| * |mu|``.
    The magnitude of the mean is used because a scale must be nonnegative
    while sentiments may be negative; the spread stays proportional to
    the size of the true utility either way.
    """
    mu = float(sentiment)
    return LogisticSpec(mu=mu, s=_snap(abs(nfc - 1.0) * abs(mu)))


def iu_spec(ev: float, num: float, q: int) -> LogisticSpec:
    """Interval utility distribution: located at the expected value with
    spread ``q * |num - 1| * |ev|``, where ``q`` counts the quantities
    entering the expected-value computation."""
    if q < 1:
        raise ValueError(f"quantity count must be >= 1, got {q}")
    mu = float(ev)
    return LogisticSpec(mu=mu, s=_snap(q * abs(num - 1.0) * abs(mu)))


def sample_logistic(spec: LogisticSpec, rng: np.random.Generator) -> float:
    """One inverse-CDF logistic draw; always consumes exactly one uniform
    from the stream so that draw positions stay fixed across parameter
    settings (common random numbers)."""
    u = rng.random()
    return logistic_quantile(spec, u)


def logistic_quantile(spec: LogisticSpec, u: float) -> float:
    """Quantile transform with the uniform clamped into
    [1e-12, 1 - 1e-12]; a zero scale returns the location exactly."""
    if spec.s == 0.0:
        return spec.mu
    u = min(max(u, UNIFORM_EPS), 1.0 - UNIFORM_EPS)
    return spec.mu + spec.s * np.log(u / (1.0 - u))


def utilities(
    choice: Choice,
    categorizer,
    ivd: IndividualDifferences,
    rng: np.random.Generator,
) -> UtilitySample:
    """Sample the categorical and interval utilities of one choice.

    The categorical utility comes first, then the interval draw; the
    interval utility is the interval draw times the *same* sampled
    categorical utility, keeping one coherent mental state per decision.
    """
    category, _scores = categorizer.predict_category(choice.text)
    p_pos, p_neg = categorizer.category_sentiment(category)
    sentiment = sentiment_score(p_pos, p_neg)

    cu = sample_logistic(cu_spec(sentiment, ivd.nfc), rng)
    ev = expected_value(choice.outcomes)
    q = quantity_count(choice.outcomes)
    interval_draw = sample_logistic(iu_spec(ev, ivd.num, q), rng)
    return UtilitySample(choice_id=choice.id, cu=cu, iu=interval_draw * cu)
