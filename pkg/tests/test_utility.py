import numpy as np
import pytest
from scipy import stats

from gistcdm.decision import replicate_rng
from gistcdm.domain import IndividualDifferences
from gistcdm.utility import (
    LogisticSpec,
    cu_spec,
    iu_spec,
    logistic_quantile,
    sample_logistic,
    sentiment_score,
    utilities,
)


class TestSentimentScore:
    def test_worked_example_value(self):
        assert sentiment_score(0.9999, 0.0001) == pytest.approx(0.9998)

    def test_neutral(self):
        assert sentiment_score(0.5, 0.5) == 0.0

    def test_pure_negative_boundary(self):
        assert sentiment_score(0.0, 1.0) == -1.0


class TestSpecs:
    def test_cu_scale_at_half_nfc(self):
        spec = cu_spec(0.9998, 0.5)
        assert spec.mu == 0.9998
        assert spec.s == pytest.approx(0.4999)

    def test_cu_deterministic_limit_snaps_to_zero(self):
        ivd = IndividualDifferences.deterministic_limit()
        assert cu_spec(0.9998, ivd.nfc).s == 0.0

    def test_cu_zero_sentiment_has_zero_scale(self):
        assert cu_spec(0.0, 0.3).s == 0.0

    def test_negative_sentiment_gets_nonnegative_scale(self):
        spec = cu_spec(-0.8, 0.5)
        assert spec.mu == -0.8
        assert spec.s == pytest.approx(0.4)

    def test_iu_scale_formula(self):
        spec = iu_spec(200.0, 0.8, 2)
        assert spec.mu == 200.0
        assert spec.s == pytest.approx(80.0)

    def test_iu_deterministic_limit(self):
        ivd = IndividualDifferences.deterministic_limit()
        assert iu_spec(200.0, ivd.num, 1).s == 0.0

    def test_iu_zero_ev(self):
        assert iu_spec(0.0, 0.2, 3).s == 0.0

    def test_iu_requires_positive_quantity_count(self):
        with pytest.raises(ValueError):
            iu_spec(10.0, 0.5, 0)

    def test_negative_scale_rejected(self):
        with pytest.raises(ValueError):
            LogisticSpec(mu=0.0, s=-1.0)


class TestSampling:
    def test_degenerate_scale_returns_location(self):
        rng = replicate_rng(1, 0)
        assert sample_logistic(LogisticSpec(5.0, 0.0), rng) == 5.0

    def test_median_draw_is_location(self):
        assert logistic_quantile(LogisticSpec(3.0, 2.0), 0.5) == pytest.approx(3.0)

    def test_degenerate_scale_still_consumes_a_draw(self):
        r1 = replicate_rng(9, 0)
        sample_logistic(LogisticSpec(0.0, 0.0), r1)
        r2 = replicate_rng(9, 0)
        r2.random()
        assert r1.random() == r2.random()

    def test_empirical_moments(self):
        # same transform the sampler applies, vectorized for speed
        u = np.clip(np.random.default_rng(42).random(1_000_000), 1e-12, 1 - 1e-12)
        x = np.log(u / (1 - u))
        assert abs(x.mean()) < 0.01
        assert abs(x.var() / (np.pi ** 2 / 3) - 1) < 0.02

    @pytest.mark.parametrize("mu", [-1.0, 0.0, 1.0])
    @pytest.mark.parametrize("s", [0.1, 1.0, 10.0])
    def test_kolmogorov_smirnov_grid(self, mu, s):
        spec = LogisticSpec(mu, s)
        rng = replicate_rng(2024, 0)
        draws = np.array([sample_logistic(spec, rng) for _ in range(100_000)])
        result = stats.kstest(draws, stats.logistic(loc=mu, scale=s).cdf)
        assert result.pvalue > 0.01


class TestUtilities:
    def test_worked_example_deterministic_limit(self, adp_gain, life_stub, det_limit):
        rng = replicate_rng(5, 0)
        samples = [utilities(c, life_stub, det_limit, rng) for c in adp_gain.choices]
        for s in samples:
            assert s.cu == pytest.approx(0.9998, abs=1e-12)
            assert s.iu == pytest.approx(199.96, abs=1e-9)

    def test_zero_sentiment_collapses_everything(self, adp_gain):
        from gistcdm.lexicon import StaticCategorizer

        neutral = StaticCategorizer("flat", 0.5)
        ivd = IndividualDifferences(0.3, 0.4, 0.0)
        rng = replicate_rng(6, 0)
        s = utilities(adp_gain.choices[0], neutral, ivd, rng)
        assert s.cu == 0.0 and s.iu == 0.0

    def test_fixed_seed_reproduces_samples(self, adp_gain, life_stub):
        ivd = IndividualDifferences(0.4, 0.6, 1.0)
        a = utilities(adp_gain.choices[1], life_stub, ivd, replicate_rng(11, 3))
        b = utilities(adp_gain.choices[1], life_stub, ivd, replicate_rng(11, 3))
        assert (a.cu, a.iu) == (b.cu, b.iu)

    def test_common_draws_nfc_monotone_deviation(self):
        spec_u = 0.81  # one fixed uniform draw
        sentiment = 0.9
        devs = []
        for nfc in (0.1, 0.3, 0.5, 0.7, 0.9, 0.999):
            x = logistic_quantile(cu_spec(sentiment, nfc), spec_u)
            devs.append(abs(x - sentiment))
        assert devs == sorted(devs, reverse=True)
