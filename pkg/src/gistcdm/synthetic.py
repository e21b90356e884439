"""Synthetic data generators for self-consistency tests and demos.

The individual-level questionnaire responses behind the published
evaluation are not distributed, so tests exercise the pipeline on cohorts
generated from known parameters: if the fitting machinery cannot recover
the behaviour of the process that generated the data, something is wrong.
"""

from __future__ import annotations

import numpy as np

from .decision import decide, derive_seed, replicate_rng, choice_distribution
from .domain import ExperimentRecord, IndividualDifferences, QuestionnaireResponse, RDMP


def generate_responses(
    rdps,
    ivd: IndividualDifferences,
    categorizer,
    seed: int,
    individual_id: str = "synthetic",
    ambiguous_policy: str = "first",
) -> list[QuestionnaireResponse]:
    """One simulated individual answering every problem once."""
    out = []
    for rdp in rdps:
        rng = replicate_rng(derive_seed(seed, "response", individual_id, rdp.id), 0)
        decision = decide(rdp, ivd, categorizer, rng, ambiguous_policy=ambiguous_policy)
        out.append(QuestionnaireResponse(
            individual_id=individual_id, rdmp_id=rdp.id, chosen=decision.chosen))
    return out


def generate_cohort(
    rdps,
    ivds: dict[str, IndividualDifferences],
    categorizer,
    seed: int,
    ambiguous_policy: str = "first",
) -> list[QuestionnaireResponse]:
    """A cohort of simulated individuals, one parameter triple each."""
    out = []
    for individual_id in sorted(ivds):
        out.extend(generate_responses(
            rdps, ivds[individual_id], categorizer,
            derive_seed(seed, individual_id), individual_id, ambiguous_policy))
    return out


def generate_random_responses(rdps, seed: int,
                              individual_id: str = "random") -> list[QuestionnaireResponse]:
    """A responder choosing uniformly at random; chance-level baseline."""
    rng = np.random.default_rng(derive_seed(seed, "uniform", individual_id))
    out = []
    for rdp in rdps:
        chosen = rdp.choices[int(rng.integers(len(rdp.choices)))].id
        out.append(QuestionnaireResponse(
            individual_id=individual_id, rdmp_id=rdp.id, chosen=chosen))
    return out


def generate_experiments(
    template_pairs: list[tuple[RDMP, RDMP]],
    ivd: IndividualDifferences,
    categorizer,
    seed: int,
    n_participants: int = 100,
    n_samples: int = 20_000,
    category: str = "synthetic",
) -> list[ExperimentRecord]:
    """Experiments whose observed proportions are the model's own
    behaviour under ``ivd``: the ideal ground truth for recovery tests."""
    out = []
    for i, (rdmp_gain, rdmp_loss) in enumerate(template_pairs):
        rid = f"syn{i:02d}"
        p_gain = choice_distribution(
            rdmp_gain, ivd, categorizer, n_samples,
            derive_seed(seed, "truth", rid, "gain")).p_risky
        p_loss = choice_distribution(
            rdmp_loss, ivd, categorizer, n_samples,
            derive_seed(seed, "truth", rid, "loss")).p_risky
        out.append(ExperimentRecord(
            reference=f"synthetic experiment {i}",
            category=category,
            rdmp_gain=rdmp_gain,
            rdmp_loss=rdmp_loss,
            n_gain=n_participants,
            p_risky_gain=p_gain,
            n_loss=n_participants,
            p_risky_loss=p_loss,
            record_id=rid,
        ))
    return out
