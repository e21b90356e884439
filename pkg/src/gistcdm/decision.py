"""Consensus decisions with a risk-sensitivity fallback, plus Monte Carlo
choice-distribution estimation.

One decision samples a categorical and an interval utility for every
choice (in choice order, two uniform draws per choice), prefers the
unique strict argmax on each level, and declares consensus when both
levels agree. Otherwise one further uniform draw against the logistic of
the risk-sensitivity parameter picks the riskiest or the safest choice.
The fallback draw sits at a fixed stream position (after all utility
draws) regardless of path, so a seed fully determines a decision and
common-random-number comparisons across parameter settings stay aligned.

Replicates use per-replicate derived generator keys, which makes
distributions embarrassingly parallel and independent of worker count.
``SimulationKernel`` evaluates many replicates at once on cached uniform
draws; it is replicate-for-replicate identical to :func:`decide`.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .domain import RDMP, IndividualDifferences, safest_and_riskiest
from .errors import AmbiguousRiskinessError
from .parsing import expected_value, quantity_count
from .utility import (
    SCALE_SNAP_EPS,
    UNIFORM_EPS,
    UtilitySample,
    sentiment_score,
    utilities,
)

_MASK64 = (1 << 64) - 1


def derive_seed(master: int, *tags) -> int:
    """Stable 64-bit sub-seed for a tagged stream (problem, frame, ...)."""
    blob = ":".join([str(int(master) & _MASK64)] + [str(t) for t in tags])
    return int.from_bytes(hashlib.sha256(blob.encode()).digest()[:8], "big")


def replicate_rng(seed: int, replicate: int) -> np.random.Generator:
    """Counter-based generator for one Monte Carlo replicate."""
    key = (int(seed) & _MASK64) | (int(replicate) << 64)
    return np.random.Generator(np.random.Philox(key=key))


class DecisionPath(str, Enum):
    CONSENSUS = "consensus"
    RISK_SENSITIVE = "risk_sensitive"


@dataclass(frozen=True)
class Decision:
    chosen: str
    path: DecisionPath
    pref_cat: str | None
    pref_int: str | None
    ambiguous_riskiness: bool = False
    utilities: tuple[UtilitySample, ...] = ()

    def __post_init__(self):
        if self.path is DecisionPath.CONSENSUS and not (
            self.pref_cat == self.pref_int == self.chosen
        ):
            raise ValueError("consensus decision must agree with both preferences")


@dataclass(frozen=True)
class ChoiceDistribution:
    """Empirical decision frequencies over independent replicates."""

    choice_ids: tuple[str, ...]
    counts: tuple[int, ...]
    n_samples: int
    seed: int
    safest: str
    riskiest: str
    consensus_rate: float

    @property
    def probabilities(self) -> tuple[float, ...]:
        return tuple(c / self.n_samples for c in self.counts)

    @property
    def p_risky(self) -> float:
        """Frequency of the riskiest choice."""
        return self.counts[self.choice_ids.index(self.riskiest)] / self.n_samples

    def probability_of(self, choice_id: str) -> float:
        return self.counts[self.choice_ids.index(choice_id)] / self.n_samples


def preferred(values) -> int | None:
    """Index of the unique strict maximum, or None when the maximum is
    attained more than once (exact float equality)."""
    values = list(values)
    if not values:
        raise ValueError("preferred() of empty list")
    best = max(values)
    winners = [i for i, v in enumerate(values) if v == best]
    return winners[0] if len(winners) == 1 else None


def p_risky(rs: float) -> float:
    """Probability of taking the riskiest choice on the fallback path."""
    return 1.0 / (1.0 + np.exp(-rs))


def decide(
    rdmp: RDMP,
    ivd: IndividualDifferences,
    categorizer,
    rng: np.random.Generator,
    ambiguous_policy: str = "raise",
) -> Decision:
    """Run one decision on a problem.

    ``ambiguous_policy`` controls what happens when the fallback path
    fires on a problem whose choices all tie on riskiness: ``"raise"``
    surfaces :class:`AmbiguousRiskinessError`, ``"first"`` keeps the
    lowest-index choice (which the tie rule makes both the safest and the
    riskiest) and flags the decision.
    """
    if ambiguous_policy not in ("raise", "first"):
        raise ValueError(f"unknown ambiguous_policy {ambiguous_policy!r}")
    samples = tuple(utilities(c, categorizer, ivd, rng) for c in rdmp.choices)
    u_fallback = rng.random()  # fixed stream position, drawn on every path

    pref_cat_idx = preferred([s.cu for s in samples])
    pref_int_idx = preferred([s.iu for s in samples])
    pref_cat = rdmp.choices[pref_cat_idx].id if pref_cat_idx is not None else None
    pref_int = rdmp.choices[pref_int_idx].id if pref_int_idx is not None else None

    if pref_cat is not None and pref_cat == pref_int:
        return Decision(
            chosen=pref_cat,
            path=DecisionPath.CONSENSUS,
            pref_cat=pref_cat,
            pref_int=pref_int,
            utilities=samples,
        )

    extremes = safest_and_riskiest(rdmp)
    if extremes.ambiguous and ambiguous_policy == "raise":
        raise AmbiguousRiskinessError(
            f"problem {rdmp.id!r}: all choices tie on riskiness on the fallback path"
        )
    chosen = extremes.riskiest if u_fallback <= p_risky(ivd.rs) else extremes.safest
    return Decision(
        chosen=chosen,
        path=DecisionPath.RISK_SENSITIVE,
        pref_cat=pref_cat,
        pref_int=pref_int,
        ambiguous_riskiness=extremes.ambiguous,
        utilities=samples,
    )


def _snap(s: float) -> float:
    return 0.0 if s < SCALE_SNAP_EPS else s


@dataclass
class DrawBlock:
    """Cached per-replicate uniforms for one problem, in logit space for
    the utility draws. Laid out exactly like the stream consumed by
    :func:`decide`: cu and iu draws per choice in order, then the
    fallback uniform."""

    logit_cu: np.ndarray  # (n, k)
    logit_iu: np.ndarray  # (n, k)
    u_fallback: np.ndarray  # (n,)

    @property
    def n(self) -> int:
        return self.logit_cu.shape[0]


class SimulationKernel:
    """Vectorized replicate evaluation for one problem under one
    categorizer. Per-choice sentiment, expected value and quantity count
    are fixed at construction, so repeated evaluations at different
    parameter settings (grid search under common random numbers) only pay
    for array arithmetic."""

    def __init__(self, rdmp: RDMP, categorizer):
        self.rdmp = rdmp
        self.choice_ids = tuple(c.id for c in rdmp.choices)
        sentiments = []
        evs = []
        qs = []
        for choice in rdmp.choices:
            category, _ = categorizer.predict_category(choice.text)
            p_pos, p_neg = categorizer.category_sentiment(category)
            sentiments.append(sentiment_score(p_pos, p_neg))
            evs.append(expected_value(choice.outcomes))
            qs.append(quantity_count(choice.outcomes))
        self.mu_cat = np.array(sentiments, dtype=float)
        self.ev = np.array(evs, dtype=float)
        self.q = np.array(qs, dtype=float)
        extremes = safest_and_riskiest(rdmp)
        self.safest_idx = self.choice_ids.index(extremes.safest)
        self.riskiest_idx = self.choice_ids.index(extremes.riskiest)
        self.ambiguous = extremes.ambiguous

    # --- draws -------------------------------------------------------------

    def draws(self, seed: int, n_samples: int) -> DrawBlock:
        return self._draw_range(seed, 0, n_samples)

    # --- simulation -----------------------------------------------------------

    def utilities_matrix(self, nfc: float, num: float, draws: DrawBlock):
        s_cat = np.array([_snap(abs(nfc - 1.0) * abs(m)) for m in self.mu_cat])
        s_int = np.array(
            [_snap(q * abs(num - 1.0) * abs(e)) for q, e in zip(self.q, self.ev)]
        )
        cu = self.mu_cat + s_cat * draws.logit_cu
        iu = (self.ev + s_int * draws.logit_iu) * cu
        return cu, iu

    @staticmethod
    def _unique_argmax(values: np.ndarray):
        best = values.max(axis=1, keepdims=True)
        is_max = values == best
        pref = np.argmax(is_max, axis=1)
        defined = is_max.sum(axis=1) == 1
        return pref, defined

    def consensus_and_fallback(self, nfc: float, num: float, draws: DrawBlock):
        """Per replicate: the consensus choice, or -1 where the levels
        disagree; nothing here depends on risk sensitivity."""
        cu, iu = self.utilities_matrix(nfc, num, draws)
        pref_cat, cat_ok = self._unique_argmax(cu)
        pref_int, int_ok = self._unique_argmax(iu)
        consensus = cat_ok & int_ok & (pref_cat == pref_int)
        chosen = np.where(consensus, pref_cat, -1)
        return chosen, consensus

    def _simulate_full(self, ivd: IndividualDifferences, draws: DrawBlock,
                       ambiguous_policy: str):
        chosen, consensus = self.consensus_and_fallback(ivd.nfc, ivd.num, draws)
        fallback = ~consensus
        if fallback.any():
            if self.ambiguous and ambiguous_policy == "raise":
                raise AmbiguousRiskinessError(
                    f"problem {self.rdmp.id!r}: all choices tie on riskiness on the fallback path"
                )
            take_risky = draws.u_fallback <= p_risky(ivd.rs)
            chosen = chosen.copy()
            chosen[fallback & take_risky] = self.riskiest_idx
            chosen[fallback & ~take_risky] = self.safest_idx
        return chosen, consensus

    def simulate(self, ivd: IndividualDifferences, draws: DrawBlock,
                 ambiguous_policy: str = "raise") -> np.ndarray:
        """Chosen choice index per replicate; mirrors :func:`decide`."""
        return self._simulate_full(ivd, draws, ambiguous_policy)[0]

    def distribution(self, ivd: IndividualDifferences, n_samples: int, seed: int,
                     ambiguous_policy: str = "raise", n_jobs: int = 1,
                     draws: DrawBlock | None = None) -> ChoiceDistribution:
        k = len(self.choice_ids)
        if draws is not None:
            chosen, consensus = self._simulate_full(ivd, draws, ambiguous_policy)
            counts = np.bincount(chosen, minlength=k)
            consensus_rate = consensus.mean()
        else:
            counts = np.zeros(k, dtype=int)
            cons_total = 0
            bounds = _chunk_bounds(n_samples, max(1, n_jobs))

            def run(lo_hi):
                lo, hi = lo_hi
                block = self._draw_range(seed, lo, hi)
                sim, cons = self._simulate_full(ivd, block, ambiguous_policy)
                return np.bincount(sim, minlength=k), int(cons.sum())

            if n_jobs > 1 and len(bounds) > 1:
                with ThreadPoolExecutor(max_workers=n_jobs) as pool:
                    results = list(pool.map(run, bounds))
            else:
                results = [run(b) for b in bounds]
            for c, nc in results:
                counts += c
                cons_total += nc
            consensus_rate = cons_total / n_samples
        return ChoiceDistribution(
            choice_ids=self.choice_ids,
            counts=tuple(int(c) for c in counts),
            n_samples=n_samples,
            seed=int(seed),
            safest=self.choice_ids[self.safest_idx],
            riskiest=self.choice_ids[self.riskiest_idx],
            consensus_rate=float(consensus_rate),
        )

    def _draw_range(self, seed: int, lo: int, hi: int) -> DrawBlock:
        k = len(self.choice_ids)
        u = np.empty((hi - lo, 2 * k + 1))
        for r in range(lo, hi):
            u[r - lo] = replicate_rng(seed, r).random(2 * k + 1)
        clipped = np.clip(u[:, : 2 * k], UNIFORM_EPS, 1.0 - UNIFORM_EPS)
        logits = np.log(clipped / (1.0 - clipped))
        return DrawBlock(
            logit_cu=np.ascontiguousarray(logits[:, 0::2]),
            logit_iu=np.ascontiguousarray(logits[:, 1::2]),
            u_fallback=np.ascontiguousarray(u[:, 2 * k]),
        )

    # --- risk-sensitivity factorization ------------------------------------

    def risky_profile(self, nfc: float, num: float, draws: DrawBlock):
        """Everything needed to evaluate the riskiest-choice frequency as
        a function of rs alone: the count of replicates whose consensus
        already lands on the riskiest choice, and the sorted fallback
        uniforms of the no-consensus replicates."""
        chosen, consensus = self.consensus_and_fallback(nfc, num, draws)
        cons_risky = int(np.sum(chosen == self.riskiest_idx))
        u_nc = np.sort(draws.u_fallback[~consensus])
        return cons_risky, u_nc

    @staticmethod
    def p_risky_from_profile(cons_risky: int, u_nc_sorted: np.ndarray, n: int,
                             rs: float) -> float:
        hits = int(np.searchsorted(u_nc_sorted, p_risky(rs), side="right"))
        return (cons_risky + hits) / n


def _chunk_bounds(n: int, chunks: int) -> list[tuple[int, int]]:
    size = (n + chunks - 1) // chunks
    return [(lo, min(lo + size, n)) for lo in range(0, n, size)]


def choice_distribution(
    rdmp: RDMP,
    ivd: IndividualDifferences,
    categorizer,
    n_samples: int,
    seed: int,
    ambiguous_policy: str = "raise",
    n_jobs: int = 1,
) -> ChoiceDistribution:
    """Empirical choice frequencies over ``n_samples`` independent
    replicates of :func:`decide`, each on its own derived generator."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    kernel = SimulationKernel(rdmp, categorizer)
    return kernel.distribution(ivd, n_samples, seed,
                               ambiguous_policy=ambiguous_policy, n_jobs=n_jobs)
