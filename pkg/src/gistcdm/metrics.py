"""Log-odds-ratio evaluation of framing consistency, with the associated
standard error, Wald test, and likelihood-based model comparison scores.

The log-odds ratio here is evaluated on safe-choice proportions,
``ln[p_safe_gain (1 - p_safe_loss) / (p_safe_loss (1 - p_safe_gain))]``,
which is positive for the classic pattern (safe preferred under gain
framing, risky under loss framing) and reproduces the published
experiment tables sign-for-sign. Evaluated on risky proportions the same
formula flips sign; the convention is recorded here once and applied
everywhere.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

from scipy import stats

from .errors import DegenerateProportionError

# Critical value of the chi-square distribution with one degree of
# freedom at the conventional 0.05 level; a Wald statistic at or above
# this marks a failed prediction.
CHI2_CRITICAL_1DF_05 = 3.841


@dataclass(frozen=True)
class FrameCounts:
    """Safe/risky head counts per frame. Fractional values are allowed
    because they are usually reconstructed as n times a published
    proportion."""

    n_safe_gain: float
    n_risky_gain: float
    n_safe_loss: float
    n_risky_loss: float

    def __post_init__(self):
        for name in ("n_safe_gain", "n_risky_gain", "n_safe_loss", "n_risky_loss"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")

    @classmethod
    def from_proportions(cls, n_gain: float, p_risky_gain: float,
                         n_loss: float, p_risky_loss: float) -> "FrameCounts":
        return cls(
            n_safe_gain=n_gain * (1.0 - p_risky_gain),
            n_risky_gain=n_gain * p_risky_gain,
            n_safe_loss=n_loss * (1.0 - p_risky_loss),
            n_risky_loss=n_loss * p_risky_loss,
        )

    def continuity_corrected(self) -> "FrameCounts":
        """Haldane-Anscombe correction: add 0.5 to every cell. Applied
        before log-odds computations whenever any cell is empty."""
        return FrameCounts(
            self.n_safe_gain + 0.5,
            self.n_risky_gain + 0.5,
            self.n_safe_loss + 0.5,
            self.n_risky_loss + 0.5,
        )

    @property
    def any_empty(self) -> bool:
        return min(self.n_safe_gain, self.n_risky_gain,
                   self.n_safe_loss, self.n_risky_loss) == 0

    @property
    def p_safe_gain(self) -> float:
        return self.n_safe_gain / (self.n_safe_gain + self.n_risky_gain)

    @property
    def p_safe_loss(self) -> float:
        return self.n_safe_loss / (self.n_safe_loss + self.n_risky_loss)


def lor(p_safe_gain: float, p_safe_loss: float) -> float:
    """Log-odds ratio of choosing safely across the two frames."""
    for name, p in (("p_safe_gain", p_safe_gain), ("p_safe_loss", p_safe_loss)):
        if not 0.0 < p < 1.0:
            raise DegenerateProportionError(
                f"{name}={p}: log-odds need proportions strictly inside (0, 1)"
            )
    return math.log(
        (p_safe_gain * (1.0 - p_safe_loss)) / (p_safe_loss * (1.0 - p_safe_gain))
    )


def se(counts: FrameCounts) -> float:
    """Asymptotic standard error of the log-odds ratio: the square root
    of the summed reciprocal cell counts."""
    cells = (counts.n_safe_gain, counts.n_safe_loss,
             counts.n_risky_gain, counts.n_risky_loss)
    if min(cells) <= 0:
        raise DegenerateProportionError(
            "standard error undefined with an empty cell; apply the continuity correction"
        )
    return math.sqrt(sum(1.0 / c for c in cells))


def lor_se_from_counts(counts: FrameCounts) -> tuple[float, float]:
    """Log-odds ratio and standard error from cell counts, with the
    continuity correction applied automatically when any cell is empty."""
    if counts.any_empty:
        counts = counts.continuity_corrected()
    return lor(counts.p_safe_gain, counts.p_safe_loss), se(counts)


def wald(lor_actual: float, lor_predicted: float, se_value: float) -> float:
    """Squared standardized discrepancy between observed and predicted
    log-odds ratios; chi-square with one degree of freedom."""
    if se_value <= 0:
        raise ValueError("se must be > 0")
    z = (lor_actual - lor_predicted) / se_value
    return z * z


def is_predicted(wald_value: float, alpha: float = 0.05) -> bool:
    """Whether a prediction survives the Wald test (strictly below the
    critical value)."""
    if wald_value < 0:
        raise ValueError("wald statistic must be >= 0")
    if alpha == 0.05:
        critical = CHI2_CRITICAL_1DF_05
    else:
        critical = float(stats.chi2.isf(alpha, df=1))
    return wald_value < critical


def log_likelihood(records) -> float:
    """Binomial log-likelihood of observed frame counts under predicted
    cell probabilities.

    ``records`` is an iterable of (FrameCounts, p_safe_gain, p_risky_gain,
    p_safe_loss, p_risky_loss) with predicted probabilities strictly
    inside (0, 1).
    """
    total = 0.0
    for counts, psg, prg, psl, prl in records:
        cells = (
            (counts.n_safe_gain, psg),
            (counts.n_risky_gain, prg),
            (counts.n_safe_loss, psl),
            (counts.n_risky_loss, prl),
        )
        for n_cell, p_cell in cells:
            if not 0.0 < p_cell < 1.0:
                raise DegenerateProportionError(
                    f"predicted cell probability {p_cell} outside (0, 1)"
                )
            total += n_cell * math.log(p_cell)
    return total


def clamp_predicted(p: float, n_samples: int) -> float:
    """Clamp a Monte Carlo proportion into (0, 1) by half a sample's
    worth of probability, so downstream log-odds stay finite."""
    eps = 1.0 / (2.0 * n_samples)
    return min(max(p, eps), 1.0 - eps)


def aic(k: int, lnl: float) -> float:
    """Akaike information criterion, 2k - 2 ln L."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return 2.0 * k - 2.0 * lnl


def bic(k: int, n: int, lnl: float) -> float:
    """Bayesian information criterion, k ln(n) - 2 ln L."""
    if k < 1 or n < 1:
        raise ValueError("k and n must be >= 1")
    return k * math.log(n) - 2.0 * lnl


def rlr(aic_a: float, aic_b: float) -> float:
    """Relative likelihood ratio exp((AIC_a - AIC_b) / 2): how probable
    model b is, relative to model a, to minimize information loss."""
    return math.exp((aic_a - aic_b) / 2.0)


@dataclass(frozen=True)
class MetricReport:
    """Per-experiment evaluation row."""

    reference: str
    category: str
    n_gain: float
    p_risky_gain: float
    n_loss: float
    p_risky_loss: float
    lor_actual: float
    lor_predicted: float
    se: float
    wald: float
    predicted: bool


REPORT_COLUMNS = (
    "reference", "category", "n_gain", "p_risky_gain", "n_loss", "p_risky_loss",
    "lor_actual", "lor_predicted", "se", "wald", "predicted",
)


def reports_to_csv(reports) -> str:
    """Render metric reports as CSV in the published table's column
    order (reference, counts, proportions, actual and predicted LOR,
    SE, chi-square, predicted flag)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for r in reports:
        writer.writerow([
            r.reference, r.category,
            f"{r.n_gain:g}", f"{r.p_risky_gain:.6f}",
            f"{r.n_loss:g}", f"{r.p_risky_loss:.6f}",
            f"{r.lor_actual:.6f}", f"{r.lor_predicted:.6f}",
            f"{r.se:.6f}", f"{r.wald:.6f}",
            "yes" if r.predicted else "no",
        ])
    return buf.getvalue()
