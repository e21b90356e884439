"""End-to-end evaluation pipelines: leave-one-out group prediction with
the full metric table, and individual-level cross-validation."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .decision import derive_seed
from .domain import ExperimentRecord, IndividualDifferences
from .inference import (
    CrossValidationReport,
    FitConfig,
    GroupFit,
    cross_validate_individuals,
    jloo_fit,
)
from .io import GroupDataset, IndividualDataset
from .metrics import (
    MetricReport,
    aic,
    bic,
    clamp_predicted,
    is_predicted,
    log_likelihood,
    lor,
    lor_se_from_counts,
    reports_to_csv,
    wald,
)

N_MODEL_PARAMETERS = 3  # one per individual-difference dimension


@dataclass(frozen=True)
class GroupEvaluation:
    reports: tuple[MetricReport, ...]
    fits: dict  # category -> list of (record_id, GroupFit)
    log_likelihood: float
    aic: float
    bic: float
    n_experiments: int
    n_data_points: int
    n_predicted: int
    eval_n_samples: int
    seed: int

    @property
    def fraction_predicted(self) -> float:
        return self.n_predicted / self.n_experiments

    def to_csv(self) -> str:
        return reports_to_csv(self.reports)

    def summary(self) -> dict:
        return {
            "n_experiments": self.n_experiments,
            "n_predicted": self.n_predicted,
            "fraction_predicted": self.fraction_predicted,
            "log_likelihood": self.log_likelihood,
            "aic": self.aic,
            "bic": self.bic,
            "k_parameters": N_MODEL_PARAMETERS,
            "n_data_points": self.n_data_points,
            "eval_n_samples": self.eval_n_samples,
            "seed": self.seed,
        }


def predict_record(record: ExperimentRecord, ivd: IndividualDifferences,
                   categorizer, n_samples: int, seed: int) -> tuple[float, float]:
    """Held-out prediction of one experiment's risky proportions under a
    fitted parameter triple, on evaluation draws separate from fitting."""
    from .decision import choice_distribution

    p_gain = choice_distribution(
        record.rdmp_gain, ivd, categorizer, n_samples,
        derive_seed(seed, "eval", record.key, "gain")).p_risky
    p_loss = choice_distribution(
        record.rdmp_loss, ivd, categorizer, n_samples,
        derive_seed(seed, "eval", record.key, "loss")).p_risky
    return p_gain, p_loss


def evaluate_group_dataset(
    dataset: GroupDataset,
    categorizer,
    config: FitConfig | None = None,
    eval_n_samples: int = 100_000,
    categories: list[str] | None = None,
) -> GroupEvaluation:
    """Leave-one-out evaluation of every experiment: fit each category's
    parameters without the held-out experiment, simulate its frames, and
    score predicted against actual log-odds ratios with the Wald test.

    The likelihood-based scores (AIC, BIC) aggregate over all evaluated
    experiments with the model's three parameters and two observed frames
    per experiment.
    """
    config = config or FitConfig()
    by_category = dataset.by_category()
    if categories is not None:
        unknown = set(categories) - set(by_category)
        if unknown:
            raise ValueError(f"unknown categories: {sorted(unknown)}")
        by_category = {c: by_category[c] for c in categories}

    reports: list[MetricReport] = []
    fits: dict[str, list[tuple[str, GroupFit]]] = {}
    likelihood_rows = []
    n_predicted = 0
    for category, records in by_category.items():
        category_fits = jloo_fit(records, categorizer, config)
        fits[category] = category_fits
        by_id = {rec.key: rec for rec in records}
        for record_id, fit in category_fits:
            record = by_id[record_id]
            p_gain_hat, p_loss_hat = predict_record(
                record, fit.ivd, categorizer, eval_n_samples, config.seed)
            psg_hat = clamp_predicted(1.0 - p_gain_hat, eval_n_samples)
            psl_hat = clamp_predicted(1.0 - p_loss_hat, eval_n_samples)
            counts = dataset.frame_counts(record)
            lor_actual, se_actual = lor_se_from_counts(counts)
            lor_hat = lor(psg_hat, psl_hat)
            chi2 = wald(lor_actual, lor_hat, se_actual)
            ok = is_predicted(chi2)
            n_predicted += int(ok)
            reports.append(MetricReport(
                reference=record.reference,
                category=category,
                n_gain=record.n_gain,
                p_risky_gain=record.p_risky_gain,
                n_loss=record.n_loss,
                p_risky_loss=record.p_risky_loss,
                lor_actual=lor_actual,
                lor_predicted=lor_hat,
                se=se_actual,
                wald=chi2,
                predicted=ok,
            ))
            likelihood_rows.append((
                counts,
                psg_hat, clamp_predicted(p_gain_hat, eval_n_samples),
                psl_hat, clamp_predicted(p_loss_hat, eval_n_samples),
            ))

    lnl = log_likelihood(likelihood_rows)
    n_experiments = len(reports)
    n_data_points = 2 * n_experiments
    return GroupEvaluation(
        reports=tuple(reports),
        fits=fits,
        log_likelihood=lnl,
        aic=aic(N_MODEL_PARAMETERS, lnl),
        bic=bic(N_MODEL_PARAMETERS, n_data_points, lnl),
        n_experiments=n_experiments,
        n_data_points=n_data_points,
        n_predicted=n_predicted,
        eval_n_samples=eval_n_samples,
        seed=config.seed,
    )


def evaluate_individual_dataset(
    dataset: IndividualDataset,
    categorizer,
    k: int = 5,
    config: FitConfig | None = None,
) -> CrossValidationReport:
    """K-fold cross-validation over every individual in the dataset."""
    config = config or FitConfig(ambiguous_policy="first")
    if config.ambiguous_policy != "first":
        config = replace(config, ambiguous_policy="first")
    return cross_validate_individuals(
        dataset.responses, dataset.rdps, categorizer, k=k, config=config)


def sweep_parameter(
    rdmp,
    categorizer,
    base_ivd: IndividualDifferences,
    param: str,
    values,
    n_samples: int,
    seed: int,
    ambiguous_policy: str = "raise",
):
    """Risky-choice probability and mean utility deviations as one
    parameter moves with the others held fixed, under common random
    numbers (the same draws for every grid value)."""
    from .decision import SimulationKernel, p_risky as rs_curve

    if param not in ("nfc", "num", "rs"):
        raise ValueError(f"unknown parameter {param!r}")
    kernel = SimulationKernel(rdmp, categorizer)
    draws = kernel.draws(seed, n_samples)
    rows = []
    for value in values:
        kwargs = {"nfc": base_ivd.nfc, "num": base_ivd.num, "rs": base_ivd.rs}
        kwargs[param] = float(value)
        ivd = IndividualDifferences(**kwargs)
        chosen, consensus = kernel.consensus_and_fallback(ivd.nfc, ivd.num, draws)
        if (~consensus).any():
            if kernel.ambiguous and ambiguous_policy == "raise":
                from .errors import AmbiguousRiskinessError

                raise AmbiguousRiskinessError(
                    f"problem {rdmp.id!r}: all choices tie on riskiness on the fallback path")
            take_risky = draws.u_fallback <= rs_curve(ivd.rs)
            chosen = chosen.copy()
            chosen[~consensus & take_risky] = kernel.riskiest_idx
            chosen[~consensus & ~take_risky] = kernel.safest_idx
        p_hat = float(np.mean(chosen == kernel.riskiest_idx))
        cu, iu = kernel.utilities_matrix(ivd.nfc, ivd.num, draws)
        # deviation of each level from its own collapse value: cu from the
        # category sentiment, iu from ev * cu (the interval noise alone)
        cu_dev = float(np.mean(np.abs(cu - kernel.mu_cat[None, :])))
        iu_dev = float(np.mean(np.abs(iu - kernel.ev[None, :] * cu)))
        rows.append({
            "param": param,
            "value": float(value),
            "p_risky": p_hat,
            "consensus_rate": float(np.mean(consensus)),
            "mean_cu_deviation": cu_dev,
            "mean_iu_deviation": iu_dev,
        })
    return rows
