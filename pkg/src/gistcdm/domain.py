"""Core value types for risky decision problems and riskiness ranking.

Probabilities are stored as exact :class:`fractions.Fraction` so that
one-third plus two-thirds is exactly one; quantities are plain floats
with units left to the surrounding problem (people, dollars, jobs, ...).
All types are immutable after construction and safe to share across
threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import NamedTuple

PROB_SUM_EPS = Fraction(1, 10**9)

# Margin used when clamping individual-difference parameters read from
# files or CLI flags into their open intervals.
IO_CLAMP_MARGIN = 1e-6

# Margin used by the deterministic-limit constructor; small enough that
# the derived logistic scales collapse to exact point masses.
DETERMINISTIC_MARGIN = 1e-12


class Frame(str, Enum):
    GAIN = "gain"
    LOSS = "loss"
    BOTH = "both"


@dataclass(frozen=True)
class Outcome:
    """One (probability, quantity) pair extracted from choice text."""

    probability: Fraction
    quantity: float

    def __post_init__(self):
        p = self.probability
        if not isinstance(p, Fraction):
            object.__setattr__(self, "probability", Fraction(p))
            p = self.probability
        if not 0 <= p <= 1:
            raise ValueError(f"probability {p} outside [0, 1]")
        object.__setattr__(self, "quantity", float(self.quantity))


@dataclass(frozen=True)
class Choice:
    """A natural-language option with its extracted outcomes.

    ``complete`` marks choices whose outcomes enumerate a full
    distribution; their probabilities must sum to one (exactly, since
    probabilities are rationals). Truncated options stay incomplete and
    carry no sum constraint.
    """

    id: str
    text: str
    outcomes: tuple[Outcome, ...]
    complete: bool = False

    def __post_init__(self):
        object.__setattr__(self, "outcomes", tuple(self.outcomes))
        if not self.outcomes:
            raise ValueError(f"choice {self.id!r} has no outcomes")
        if self.complete:
            total = sum((o.probability for o in self.outcomes), Fraction(0))
            if abs(total - 1) > PROB_SUM_EPS:
                raise ValueError(
                    f"choice {self.id!r} marked complete but probabilities sum to {total}"
                )


@dataclass(frozen=True)
class RDMP:
    """A risky decision-making problem: a framed set of two or more choices."""

    id: str
    frame: Frame
    choices: tuple[Choice, ...]

    def __post_init__(self):
        object.__setattr__(self, "frame", Frame(self.frame))
        object.__setattr__(self, "choices", tuple(self.choices))
        if len(self.choices) < 2:
            raise ValueError(f"problem {self.id!r} needs at least 2 choices")
        ids = [c.id for c in self.choices]
        if len(set(ids)) != len(ids):
            raise ValueError(f"problem {self.id!r} has duplicate choice ids")

    def choice_ids(self) -> list[str]:
        return [c.id for c in self.choices]

    def index_of(self, choice_id: str) -> int:
        for i, c in enumerate(self.choices):
            if c.id == choice_id:
                return i
        raise KeyError(f"choice {choice_id!r} not in problem {self.id!r}")


def _check_open_interval(name: str, value: float, lo: float, hi: float) -> float:
    value = float(value)
    if not lo < value < hi:
        raise ValueError(f"{name}={value} outside open interval ({lo}, {hi})")
    return value


@dataclass(frozen=True)
class IndividualDifferences:
    """The (need-for-cognition, numeracy, risk-sensitivity) triple.

    ``nfc`` and ``num`` live in the open unit interval and control the
    categorical and interval noise scales; ``rs`` lives in (-3, 3) and
    sets the risk-taking probability on the fallback path.
    """

    nfc: float
    num: float
    rs: float

    def __post_init__(self):
        object.__setattr__(self, "nfc", _check_open_interval("nfc", self.nfc, 0.0, 1.0))
        object.__setattr__(self, "num", _check_open_interval("num", self.num, 0.0, 1.0))
        object.__setattr__(self, "rs", _check_open_interval("rs", self.rs, -3.0, 3.0))

    @classmethod
    def clamped(cls, nfc: float, num: float, rs: float) -> "IndividualDifferences":
        """Build from raw values, clamping into the open intervals with the
        I/O margin. Used at every file and CLI boundary."""
        m = IO_CLAMP_MARGIN
        return cls(
            nfc=min(max(float(nfc), m), 1.0 - m),
            num=min(max(float(num), m), 1.0 - m),
            rs=min(max(float(rs), -3.0 + m), 3.0 - m),
        )

    @classmethod
    def deterministic_limit(cls, rs: float = 0.0) -> "IndividualDifferences":
        """Parameters so close to 1 that utility noise collapses to zero."""
        edge = 1.0 - DETERMINISTIC_MARGIN
        return cls(nfc=edge, num=edge, rs=rs)


@dataclass(frozen=True)
class ExperimentRecord:
    """One group-level experiment: both frames plus observed risky-choice
    proportions and participant counts.

    ``record_id`` is the stable identifier used to derive per-experiment
    Monte Carlo seed streams; it defaults to the reference string.
    """

    reference: str
    category: str
    rdmp_gain: RDMP
    rdmp_loss: RDMP
    n_gain: int
    p_risky_gain: float
    n_loss: int
    p_risky_loss: float
    published: dict = field(default_factory=dict)
    record_id: str = ""

    @property
    def key(self) -> str:
        return self.record_id or self.reference

    def __post_init__(self):
        if self.n_gain <= 0 or self.n_loss <= 0:
            raise ValueError(f"{self.reference!r}: participant counts must be positive")
        for name in ("p_risky_gain", "p_risky_loss"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{self.reference!r}: {name}={p} outside [0, 1]")
        if len(self.rdmp_gain.choices) != len(self.rdmp_loss.choices):
            raise ValueError(
                f"{self.reference!r}: gain and loss frames offer different numbers of choices"
            )


@dataclass(frozen=True)
class QuestionnaireResponse:
    """One individual's preferred choice on one problem."""

    individual_id: str
    rdmp_id: str
    chosen: str


def riskiness(choice: Choice) -> int:
    """Number of strictly probabilistic outcomes (0 < p < 1) in a choice.

    A single certain outcome scores 0; outcomes with probability exactly
    0 or 1 never count.
    """
    return sum(1 for o in choice.outcomes if 0 < o.probability < 1)


class RiskExtremes(NamedTuple):
    safest: str
    riskiest: str
    ambiguous: bool


def safest_and_riskiest(rdmp: RDMP) -> RiskExtremes:
    """Identify the safest (fewest probabilistic outcomes) and riskiest
    (most) choices of a problem.

    Ties break toward the lowest choice index. When every choice ties,
    both slots point at the first choice and ``ambiguous`` is set so the
    decision engine can refuse to distinguish them.
    """
    scores = [riskiness(c) for c in rdmp.choices]
    safest_idx = min(range(len(scores)), key=lambda i: (scores[i], i))
    riskiest_idx = max(range(len(scores)), key=lambda i: (scores[i], -i))
    ambiguous = min(scores) == max(scores)
    return RiskExtremes(
        safest=rdmp.choices[safest_idx].id,
        riskiest=rdmp.choices[riskiest_idx].id,
        ambiguous=ambiguous,
    )
