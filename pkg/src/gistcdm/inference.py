"""Fitting individual-difference parameters at group and individual level.

Both fits share one strategy: a coarse grid over (nfc, num, rs) followed
by optional Nelder-Mead refinement, every objective evaluation running on
common random numbers (one cached draw table per problem and replicate,
reused across all candidate parameters) so that objective differences
reflect parameters rather than sampling noise.

The grid exploits that risk sensitivity only enters through the fallback
coin flip: for each (nfc, num) cell the consensus outcomes and the
fallback uniforms are computed once, and every rs value on the axis is
then scored by counting fallback uniforms under its risk-taking
probability. This is exactly equivalent to direct evaluation and removes
a factor of the rs-axis length from the grid cost.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .decision import SimulationKernel, derive_seed
from .domain import IO_CLAMP_MARGIN, IndividualDifferences, QuestionnaireResponse, RDMP
from .errors import SingletonCategoryWarning, TooFewResponsesError, UnknownReferenceError
from .optimize import grid_values, nelder_mead

PARAM_BOUNDS = (
    (IO_CLAMP_MARGIN, 1.0 - IO_CLAMP_MARGIN),          # nfc
    (IO_CLAMP_MARGIN, 1.0 - IO_CLAMP_MARGIN),          # num
    (-3.0 + IO_CLAMP_MARGIN, 3.0 - IO_CLAMP_MARGIN),   # rs
)


@dataclass(frozen=True)
class FitConfig:
    """Search settings shared by group- and individual-level fits."""

    nfc_points: int = 19
    num_points: int = 19
    rs_points: int = 15
    nfc_range: tuple[float, float] = (0.05, 0.95)
    num_range: tuple[float, float] = (0.05, 0.95)
    rs_range: tuple[float, float] = (-2.8, 2.8)
    refinement: str = "nelder_mead"  # "none" | "nelder_mead"
    max_refine_iter: int = 200
    n_samples: int = 10_000
    seed: int = 0
    ambiguous_policy: str = "raise"

    def __post_init__(self):
        if min(self.nfc_points, self.num_points, self.rs_points) < 2:
            raise ValueError("grid needs at least 2 points per axis")
        if self.n_samples < 100:
            raise ValueError("n_samples must be >= 100")
        if self.refinement not in ("none", "nelder_mead"):
            raise ValueError(f"unknown refinement {self.refinement!r}")

    def axes(self):
        return (
            grid_values(*self.nfc_range, self.nfc_points),
            grid_values(*self.num_range, self.num_points),
            grid_values(*self.rs_range, self.rs_points),
        )


@dataclass(frozen=True)
class GroupFit:
    ivd: IndividualDifferences
    objective: float
    predictions: tuple[tuple[str, float, float], ...]  # (record_id, p_gain, p_loss)
    n_samples: int
    seed: int
    refined: bool

    def predicted(self, record_id: str) -> tuple[float, float]:
        for rid, pg, pl in self.predictions:
            if rid == record_id:
                return pg, pl
        raise KeyError(record_id)


@dataclass(frozen=True)
class IndividualFit:
    individual_id: str
    ivd: IndividualDifferences
    accuracy: float  # mean probability mass on the individual's true choices
    n_samples: int
    seed: int
    refined: bool


class _ProblemCache:
    """One problem's kernel plus its common-random-number draw table."""

    def __init__(self, rdmp: RDMP, categorizer, seed: int, n_samples: int):
        self.kernel = SimulationKernel(rdmp, categorizer)
        self.draws = self.kernel.draws(seed, n_samples)
        self.n = n_samples

    def risky_profile(self, nfc: float, num: float):
        return self.kernel.risky_profile(nfc, num, self.draws)

    def mass_profile(self, nfc: float, num: float, ambiguous_policy: str):
        """Consensus counts per choice plus sorted fallback uniforms; with
        these, the probability mass of any choice is a cheap function of rs."""
        from .errors import AmbiguousRiskinessError

        kernel = self.kernel
        chosen, consensus = kernel.consensus_and_fallback(nfc, num, self.draws)
        if kernel.ambiguous and ambiguous_policy == "raise" and not consensus.all():
            raise AmbiguousRiskinessError(
                f"problem {kernel.rdmp.id!r}: all choices tie on riskiness on the fallback path"
            )
        cons_counts = np.bincount(chosen[consensus], minlength=len(kernel.choice_ids))
        u_nc = np.sort(self.draws.u_fallback[~consensus])
        return cons_counts, u_nc


def _choice_mass(cache: _ProblemCache, cons_counts, u_nc, rs: float, choice_idx: int) -> float:
    from .decision import p_risky

    kernel = cache.kernel
    nc = u_nc.size
    hits = int(np.searchsorted(u_nc, p_risky(rs), side="right"))
    mass = float(cons_counts[choice_idx])
    if choice_idx == kernel.riskiest_idx:
        mass += hits
    if choice_idx == kernel.safest_idx:
        mass += nc - hits
    return mass / cache.n


class GroupEvaluator:
    """Objective machinery for one set of experiments under shared seeds.

    Seeds are derived per (experiment, frame) from the master seed, so the
    same candidate parameters always see the same draws regardless of
    evaluation order or how many candidates were tried before.
    """

    def __init__(self, experiments, categorizer, config: FitConfig, seed_tag: str = "fit",
                 shared_caches: dict | None = None):
        self.experiments = list(experiments)
        self.config = config
        self.caches: list[tuple[_ProblemCache, _ProblemCache, float, float]] = []
        for rec in self.experiments:
            if shared_caches is not None and rec.key in shared_caches:
                cache_g, cache_l = shared_caches[rec.key]
            else:
                seed_g = derive_seed(config.seed, seed_tag, rec.key, "gain")
                seed_l = derive_seed(config.seed, seed_tag, rec.key, "loss")
                cache_g = _ProblemCache(rec.rdmp_gain, categorizer, seed_g, config.n_samples)
                cache_l = _ProblemCache(rec.rdmp_loss, categorizer, seed_l, config.n_samples)
                if shared_caches is not None:
                    shared_caches[rec.key] = (cache_g, cache_l)
            self.caches.append((cache_g, cache_l, rec.p_risky_gain, rec.p_risky_loss))

    def objective(self, ivd: IndividualDifferences) -> float:
        """Sum over experiments of the absolute gaps between observed and
        simulated risky-choice proportions, both frames."""
        total = 0.0
        for cache_g, cache_l, p_g, p_l in self.caches:
            for cache, target in ((cache_g, p_g), (cache_l, p_l)):
                cons, u_nc = cache.risky_profile(ivd.nfc, ivd.num)
                total += abs(target - cache.kernel.p_risky_from_profile(
                    cons, u_nc, cache.n, ivd.rs))
        return total

    def objective_vector(self, x) -> float:
        nfc, num, rs = x
        return self.objective(IndividualDifferences(nfc=nfc, num=num, rs=rs))

    def grid_search(self, axes) -> tuple[IndividualDifferences, float]:
        nfc_axis, num_axis, rs_axis = axes
        best = (np.inf, 0, 0, 0)
        for i, nfc in enumerate(nfc_axis):
            for j, num in enumerate(num_axis):
                profiles = []
                for cache_g, cache_l, p_g, p_l in self.caches:
                    profiles.append((cache_g, cache_g.risky_profile(nfc, num), p_g))
                    profiles.append((cache_l, cache_l.risky_profile(nfc, num), p_l))
                for k, rs in enumerate(rs_axis):
                    total = 0.0
                    for cache, (cons, u_nc), target in profiles:
                        total += abs(target - cache.kernel.p_risky_from_profile(
                            cons, u_nc, cache.n, rs))
                    if total < best[0]:
                        best = (total, i, j, k)
        value, i, j, k = best
        ivd = IndividualDifferences(nfc=float(nfc_axis[i]), num=float(num_axis[j]),
                                    rs=float(rs_axis[k]))
        return ivd, float(value)

    def predictions(self, ivd: IndividualDifferences) -> tuple[tuple[str, float, float], ...]:
        out = []
        for rec, (cache_g, cache_l, _, _) in zip(self.experiments, self.caches):
            pg = cache_g.kernel.p_risky_from_profile(
                *cache_g.risky_profile(ivd.nfc, ivd.num), cache_g.n, ivd.rs)
            pl = cache_l.kernel.p_risky_from_profile(
                *cache_l.risky_profile(ivd.nfc, ivd.num), cache_l.n, ivd.rs)
            out.append((rec.key, float(pg), float(pl)))
        return tuple(out)


def gl_objective(ivd: IndividualDifferences, experiments, categorizer,
                 config: FitConfig | None = None) -> float:
    """Group-level loss of one parameter setting: summed absolute gaps
    between observed and simulated risky proportions across experiments
    and frames, deterministic for a fixed (parameters, data, seed)."""
    config = config or FitConfig()
    return GroupEvaluator(experiments, categorizer, config).objective(ivd)


def _refine(evaluator, ivd0: IndividualDifferences, f0: float, config: FitConfig):
    axes = config.axes()
    steps = [
        0.5 * (axes[0][1] - axes[0][0]),
        0.5 * (axes[1][1] - axes[1][0]),
        0.5 * (axes[2][1] - axes[2][0]),
    ]
    x, fx, _ = nelder_mead(
        evaluator.objective_vector,
        [ivd0.nfc, ivd0.num, ivd0.rs],
        steps,
        PARAM_BOUNDS,
        max_iter=config.max_refine_iter,
        f0=f0,
    )
    return IndividualDifferences(nfc=float(x[0]), num=float(x[1]), rs=float(x[2])), float(fx)


def fit_group(experiments, categorizer, config: FitConfig | None = None,
              shared_caches: dict | None = None) -> GroupFit:
    """Fit one parameter triple to a set of experiments (normally one
    category) by grid search plus optional Nelder-Mead refinement under
    common random numbers."""
    experiments = list(experiments)
    if not experiments:
        raise ValueError("fit_group needs at least one experiment")
    config = config or FitConfig()
    evaluator = GroupEvaluator(experiments, categorizer, config,
                               shared_caches=shared_caches)
    ivd, value = evaluator.grid_search(config.axes())
    refined = False
    if config.refinement == "nelder_mead":
        ivd, value = _refine(evaluator, ivd, value, config)
        refined = True
    return GroupFit(
        ivd=ivd,
        objective=value,
        predictions=evaluator.predictions(ivd),
        n_samples=config.n_samples,
        seed=config.seed,
        refined=refined,
    )


def jloo_fit(category_experiments, categorizer,
             config: FitConfig | None = None) -> list[tuple[str, GroupFit]]:
    """Leave-one-out fits within a category: experiment i's parameters are
    estimated from every other experiment, so its own result never
    influences its prediction. A singleton category is fitted on itself
    and flagged with a warning."""
    experiments = list(category_experiments)
    if not experiments:
        raise ValueError("jloo_fit needs at least one experiment")
    config = config or FitConfig()
    categories = {e.category for e in experiments}
    if len(categories) > 1:
        raise ValueError(f"jloo_fit expects one category, got {sorted(categories)}")
    out = []
    if len(experiments) == 1:
        warnings.warn(
            f"category {experiments[0].category!r} has a single experiment; "
            "fitting it on itself",
            SingletonCategoryWarning,
            stacklevel=2,
        )
        out.append((experiments[0].key, fit_group(experiments, categorizer, config)))
        return out
    shared_caches: dict = {}  # draw tables reused across the held-out fits
    for i, rec in enumerate(experiments):
        rest = experiments[:i] + experiments[i + 1:]
        out.append((rec.key, fit_group(rest, categorizer, config,
                                       shared_caches=shared_caches)))
    return out


class IndividualEvaluator:
    """Cached kernels and draws for a set of problems; scores parameter
    candidates by the probability mass they put on given responses."""

    def __init__(self, rdps, categorizer, config: FitConfig, seed_tag: str = "fit"):
        self.config = config
        self.caches: dict[str, _ProblemCache] = {}
        for rdp in rdps:
            seed = derive_seed(config.seed, seed_tag, rdp.id)
            self.caches[rdp.id] = _ProblemCache(rdp, categorizer, seed, config.n_samples)

    def _target_indices(self, responses) -> list[tuple[_ProblemCache, int]]:
        out = []
        for resp in responses:
            cache = self.caches.get(resp.rdmp_id)
            if cache is None:
                raise UnknownReferenceError(f"unknown problem {resp.rdmp_id!r}")
            idx = cache.kernel.choice_ids.index(resp.chosen)
            out.append((cache, idx))
        return out

    def accuracy(self, ivd: IndividualDifferences, responses) -> float:
        """Mean over responses of the simulated probability of the
        individual's actual choice."""
        targets = self._target_indices(responses)
        if not targets:
            raise ValueError("no responses to score")
        policy = self.config.ambiguous_policy
        total = 0.0
        for cache, idx in targets:
            cons_counts, u_nc = cache.mass_profile(ivd.nfc, ivd.num, policy)
            total += _choice_mass(cache, cons_counts, u_nc, ivd.rs, idx)
        return total / len(targets)

    def grid_search(self, responses, axes) -> tuple[IndividualDifferences, float]:
        from .decision import p_risky

        targets = self._target_indices(responses)
        nfc_axis, num_axis, rs_axis = axes
        policy = self.config.ambiguous_policy
        best = (-np.inf, 0, 0, 0)
        p_rs = np.array([p_risky(rs) for rs in rs_axis])
        for i, nfc in enumerate(nfc_axis):
            for j, num in enumerate(num_axis):
                mass_by_rs = np.zeros(len(rs_axis))
                for cache, idx in targets:
                    cons_counts, u_nc = cache.mass_profile(nfc, num, policy)
                    kernel = cache.kernel
                    base = float(cons_counts[idx])
                    nc = u_nc.size
                    hits = np.searchsorted(u_nc, p_rs, side="right")
                    mass = np.full(len(rs_axis), base)
                    if idx == kernel.riskiest_idx:
                        mass = mass + hits
                    if idx == kernel.safest_idx:
                        mass = mass + (nc - hits)
                    mass_by_rs += mass / cache.n
                for k in range(len(rs_axis)):
                    value = mass_by_rs[k] / len(targets)
                    if value > best[0]:
                        best = (value, i, j, k)
        value, i, j, k = best
        ivd = IndividualDifferences(nfc=float(nfc_axis[i]), num=float(num_axis[j]),
                                    rs=float(rs_axis[k]))
        return ivd, float(value)

    def predict(self, ivd: IndividualDifferences, rdmp_id: str) -> str:
        """Most frequent simulated choice for one problem."""
        cache = self.caches[rdmp_id]
        cons_counts, u_nc = cache.mass_profile(ivd.nfc, ivd.num,
                                               self.config.ambiguous_policy)
        masses = [
            _choice_mass(cache, cons_counts, u_nc, ivd.rs, idx)
            for idx in range(len(cache.kernel.choice_ids))
        ]
        best = max(range(len(masses)), key=lambda i: (masses[i], -i))
        return cache.kernel.choice_ids[best]


def il_objective(ivd: IndividualDifferences, responses, rdps, categorizer,
                 config: FitConfig | None = None) -> float:
    """Individual-level objective: expected agreement between simulated
    decisions and the individual's actual choices (mean probability mass
    on the chosen options)."""
    responses = list(responses)
    if not responses:
        raise ValueError("il_objective needs at least one response")
    config = config or FitConfig(ambiguous_policy="first")
    return IndividualEvaluator(rdps, categorizer, config).accuracy(ivd, responses)


def fit_individual(responses, rdps, categorizer,
                   config: FitConfig | None = None,
                   individual_id: str | None = None) -> IndividualFit:
    """Fit one individual's parameters by maximizing the probability mass
    on their observed choices; same grid plus refinement strategy as the
    group fit."""
    responses = list(responses)
    if not responses:
        raise ValueError("fit_individual needs at least one response")
    config = config or FitConfig(ambiguous_policy="first")
    if individual_id is None:
        individual_id = responses[0].individual_id
    needed_ids = {r.rdmp_id for r in responses}
    rdps = [r for r in rdps if r.id in needed_ids]
    evaluator = IndividualEvaluator(rdps, categorizer, config)
    ivd, value = evaluator.grid_search(responses, config.axes())
    refined = False
    if config.refinement == "nelder_mead":
        def neg_accuracy(x):
            return -evaluator.accuracy(
                IndividualDifferences(nfc=float(x[0]), num=float(x[1]), rs=float(x[2])),
                responses,
            )

        axes = config.axes()
        steps = [0.5 * (a[1] - a[0]) for a in axes]
        x, fx, _ = nelder_mead(neg_accuracy, [ivd.nfc, ivd.num, ivd.rs], steps,
                               PARAM_BOUNDS, max_iter=config.max_refine_iter,
                               f0=-value)
        ivd = IndividualDifferences(nfc=float(x[0]), num=float(x[1]), rs=float(x[2]))
        value = -float(fx)
        refined = True
    return IndividualFit(
        individual_id=individual_id,
        ivd=ivd,
        accuracy=value,
        n_samples=config.n_samples,
        seed=config.seed,
        refined=refined,
    )


@dataclass(frozen=True)
class IndividualCrossValidation:
    individual_id: str
    fold_accuracies: tuple[float, ...]
    mean_accuracy: float
    fits: tuple[IndividualFit, ...]


@dataclass(frozen=True)
class CrossValidationReport:
    individuals: tuple[IndividualCrossValidation, ...]
    mean_accuracy: float
    min_accuracy: float
    max_accuracy: float
    per_question: dict = field(default_factory=dict)  # rdmp_id -> accuracy

    @property
    def histogram_data(self) -> tuple[float, ...]:
        """Per-individual mean accuracies (ready for a histogram)."""
        return tuple(i.mean_accuracy for i in self.individuals)


def seeded_folds(n: int, k: int, seed: int) -> list[np.ndarray]:
    """Deterministic partition of range(n) into k near-equal folds."""
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    return [fold for fold in np.array_split(perm, k)]


def cross_validate_individuals(responses, rdps, categorizer, k: int = 5,
                               config: FitConfig | None = None) -> CrossValidationReport:
    """Per-individual k-fold cross-validation: fit on k-1 folds of that
    individual's answered problems, predict each held-out problem by the
    most frequent simulated choice, and report accuracies per individual
    and per question."""
    if k < 2:
        raise ValueError("k must be >= 2")
    config = config or FitConfig(ambiguous_policy="first")
    by_individual: dict[str, list[QuestionnaireResponse]] = {}
    for resp in responses:
        by_individual.setdefault(resp.individual_id, []).append(resp)
    if not by_individual:
        raise ValueError("no responses")
    for ind, resp_list in by_individual.items():
        if len(resp_list) < k:
            raise TooFewResponsesError(
                f"individual {ind!r} answered {len(resp_list)} problems; need >= {k}"
            )

    rdp_by_id = {r.id: r for r in rdps}
    question_hits: dict[str, list[int]] = {}
    results = []
    for ind in sorted(by_individual):
        resp_list = by_individual[ind]
        folds = seeded_folds(len(resp_list), k, derive_seed(config.seed, "folds", ind))
        fold_accs = []
        fits = []
        for fold in folds:
            held_idx = {int(j) for j in fold}
            held = [resp_list[i] for i in fold]
            train = [resp_list[i] for i in range(len(resp_list)) if i not in held_idx]
            fit = fit_individual(train, [rdp_by_id[r.rdmp_id] for r in train],
                                 categorizer, config, individual_id=ind)
            fits.append(fit)
            eval_config = replace(config, seed=derive_seed(config.seed, "eval"))
            evaluator = IndividualEvaluator(
                [rdp_by_id[r.rdmp_id] for r in held], categorizer, eval_config)
            hits = 0
            for resp in held:
                predicted = evaluator.predict(fit.ivd, resp.rdmp_id)
                correct = int(predicted == resp.chosen)
                hits += correct
                question_hits.setdefault(resp.rdmp_id, []).append(correct)
            fold_accs.append(hits / len(held))
        results.append(IndividualCrossValidation(
            individual_id=ind,
            fold_accuracies=tuple(fold_accs),
            mean_accuracy=float(np.mean(fold_accs)),
            fits=tuple(fits),
        ))

    means = [r.mean_accuracy for r in results]
    per_question = {
        qid: float(np.mean(hits)) for qid, hits in sorted(question_hits.items())
    }
    return CrossValidationReport(
        individuals=tuple(results),
        mean_accuracy=float(np.mean(means)),
        min_accuracy=float(np.min(means)),
        max_accuracy=float(np.max(means)),
        per_question=per_question,
    )
