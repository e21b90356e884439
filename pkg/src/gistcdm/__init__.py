"""Computational model of text-based risky decision-making.

The pipeline: choice text is parsed into (probability, quantity)
outcomes; a categorizer assigns each choice a gist category with a
sentiment split; categorical and interval utilities are sampled with
individual-difference noise; decisions arise from cross-level consensus
or a risk-sensitivity fallback; group- and individual-level parameters
are fitted by derivative-free search under common random numbers and
scored with log-odds-ratio statistics.
"""

from .domain import (
    Choice,
    ExperimentRecord,
    Frame,
    IndividualDifferences,
    Outcome,
    QuestionnaireResponse,
    RDMP,
    RiskExtremes,
    riskiness,
    safest_and_riskiest,
)
from .parsing import (
    DEFAULT_RULES,
    ParseRule,
    extract_outcomes,
    expected_value,
    load_rules,
    parse_choice,
    quantity_count,
)
from .cat2vec import (
    Cat2VecModel,
    TrainingConfig,
    TrainingExample,
    Vocabulary,
    nce_loss,
    train,
)
from .lexicon import (
    DEFAULT_LEXICON,
    Categorizer,
    LexiconCategorizer,
    MappingCategorizer,
    StaticCategorizer,
)
from .utility import (
    LogisticSpec,
    UtilitySample,
    cu_spec,
    iu_spec,
    sample_logistic,
    sentiment_score,
    utilities,
)
from .decision import (
    ChoiceDistribution,
    Decision,
    DecisionPath,
    SimulationKernel,
    choice_distribution,
    decide,
    derive_seed,
    p_risky,
    preferred,
    replicate_rng,
)
from .metrics import (
    FrameCounts,
    MetricReport,
    aic,
    bic,
    clamp_predicted,
    is_predicted,
    log_likelihood,
    lor,
    lor_se_from_counts,
    rlr,
    se,
    wald,
)

__version__ = "0.1.0"
