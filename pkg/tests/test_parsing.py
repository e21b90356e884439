from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from gistcdm.errors import NoQuantityFoundError, UnpairedProbabilityError
from gistcdm.parsing import (
    DEFAULT_RULES,
    expected_value,
    extract_outcomes,
    load_rules,
    parse_choice,
    quantity_count,
)

ADP_RISKY = ("1/3 probability that all 600 lives will be saved; "
             "2/3 probability that no lives will be saved")


def pairs(outcomes):
    return [(o.probability, o.quantity) for o in outcomes]


class TestExtractOutcomes:
    def test_adp_risky_program(self):
        assert pairs(extract_outcomes(ADP_RISKY)) == [
            (Fraction(1, 3), 600.0), (Fraction(2, 3), 0.0)]

    def test_sure_win(self):
        assert pairs(extract_outcomes("A sure win of $30")) == [(Fraction(1), 30.0)]

    def test_gamble_gets_implied_complement(self):
        assert pairs(extract_outcomes("80% chance to win $45")) == [
            (Fraction(4, 5), 45.0), (Fraction(1, 5), 0.0)]

    def test_complement_off_keeps_truncation(self):
        assert pairs(extract_outcomes("80% chance to win $45", infer_complement=False)) == [
            (Fraction(4, 5), 45.0)]

    def test_complement_not_added_to_non_gamble_phrasing(self):
        # "chance of losing" is not win-gamble phrasing; stays truncated
        outs = extract_outcomes(
            "Disagree to the proposal: 2/3 chance of losing the lawsuit "
            "and incurring costs of $1100000")
        assert pairs(outs) == [(Fraction(2, 3), 1_100_000.0)]

    def test_lone_quantity_is_certain(self):
        assert pairs(extract_outcomes("400 people will die")) == [(Fraction(1), 400.0)]

    def test_negation_zero(self):
        outs = extract_outcomes(
            "1/3 probability that no one will die and a 2/3 probability "
            "that all 600 will die")
        assert pairs(outs) == [(Fraction(1, 3), 0.0), (Fraction(2, 3), 600.0)]

    def test_word_fractions(self):
        outs = extract_outcomes(
            "there is a one-third probability that all six of them will be "
            "saved, and two-thirds probability that none of them will be saved.")
        assert pairs(outs) == [(Fraction(1, 3), 6.0), (Fraction(2, 3), 0.0)]

    def test_n_in_m_chance(self):
        outs = extract_outcomes("a 2 in 3 chance of losing $900", infer_complement=False)
        assert pairs(outs) == [(Fraction(2, 3), 900.0)]

    def test_coin_flip_halves(self):
        outs = extract_outcomes(
            "Flipping a coin and winning another $1000 if heads comes up or "
            "getting no additional money if tails comes up.")
        assert pairs(outs) == [(Fraction(1, 2), 1000.0), (Fraction(1, 2), 0.0)]

    def test_percent_as_quantity_vs_probability(self):
        outs = extract_outcomes(
            "Don't compete with ATC: 100% chance of capturing 14% market share")
        assert pairs(outs) == [(Fraction(1), 14.0)]

    def test_population_denominator_dropped(self):
        assert pairs(extract_outcomes("600 of the 1000 students will drop out")) == [
            (Fraction(1), 600.0)]
        assert pairs(extract_outcomes(
            "there is 1/3 probability that all of the 12 fish species will survive"
        )) == [(Fraction(1, 3), 12.0)]

    def test_time_durations_are_not_quantities(self):
        outs = extract_outcomes("save 5 dollars but lose 20 minutes")
        assert pairs(outs) == [(Fraction(1), 5.0)]

    def test_label_numbers_are_not_quantities(self):
        outs = extract_outcomes("Program 1: 600 of the 1000 students will drop out")
        assert pairs(outs) == [(Fraction(1), 600.0)]

    def test_decimal_dollar_amount(self):
        assert pairs(extract_outcomes("Turn it off and lose $6.95")) == [
            (Fraction(1), 6.95)]

    def test_comma_grouped_number(self):
        outs = extract_outcomes("losing $1,100,000 in damages", infer_complement=False)
        assert pairs(outs) == [(Fraction(1), 1_100_000.0)]

    def test_multiple_quantities_share_clause_probability(self):
        outs = extract_outcomes(
            "This plan has a 2/3 probability of resulting in the loss of 3 "
            "plants and all 6000 jobs, but has a 1/3 probability of losing "
            "no plants and no jobs")
        assert pairs(outs) == [
            (Fraction(2, 3), 3.0), (Fraction(2, 3), 6000.0),
            (Fraction(1, 3), 0.0), (Fraction(1, 3), 0.0)]

    def test_no_quantity_raises(self):
        with pytest.raises(NoQuantityFoundError):
            extract_outcomes("Continue to watch")

    def test_unpaired_probability_raises(self):
        with pytest.raises(UnpairedProbabilityError):
            extract_outcomes("1/3 chance of winning the case")

    def test_empty_text_raises(self):
        with pytest.raises(NoQuantityFoundError):
            extract_outcomes("   ")


class TestExpectedValue:
    def test_adp_program_value(self):
        assert expected_value(extract_outcomes(ADP_RISKY)) == 200.0

    def test_certain_outcome(self):
        assert expected_value(extract_outcomes("A sure win of $30")) == 30.0

    def test_gamble_with_complement(self):
        assert expected_value(extract_outcomes("80% chance to win $45")) == 36.0

    @given(st.floats(min_value=-50, max_value=50, allow_nan=False))
    def test_linearity_in_quantities(self, c):
        outs = extract_outcomes(ADP_RISKY)
        scaled = [o.__class__(o.probability, o.quantity * c) for o in outs]
        assert expected_value(scaled) == pytest.approx(c * expected_value(outs), abs=1e-9)


class TestQuantityCount:
    def test_adp_program_has_two_slots(self):
        assert quantity_count(extract_outcomes(ADP_RISKY)) == 2

    def test_certain_single(self):
        assert quantity_count(extract_outcomes("A sure win of $30")) == 1

    def test_complement_counts_as_slot(self):
        assert quantity_count(extract_outcomes("80% chance to win $45")) == 2


class TestRewordInvariance:
    @given(st.integers(0, 3), st.booleans())
    def test_whitespace_and_case(self, extra_spaces, upper):
        text = ADP_RISKY.replace(" ", " " * (1 + extra_spaces))
        if upper:
            text = text.upper()
        outs = extract_outcomes(text)
        assert pairs(outs) == pairs(extract_outcomes(ADP_RISKY))
        assert expected_value(outs) == 200.0


class TestQuestionnaireCoverage:
    NUMBERLESS = {("Q10", "a"), ("Q22", "b"), ("Q24", "a"), ("Q24", "b"),
                  ("Q30", "a"), ("Q30", "b")}

    def test_every_numeric_option_parses(self, questionnaire):
        failures = {(f.rdmp_id, f.choice_id) for f in questionnaire.parse_failures}
        assert failures == self.NUMBERLESS

    def test_complete_choices_sum_exactly_to_one(self, questionnaire):
        checked = 0
        for rdp in questionnaire.rdps:
            for c in rdp.choices:
                if c.complete:
                    assert sum((o.probability for o in c.outcomes), Fraction(0)) == 1
                    checked += 1
        assert checked > 30

    def test_equal_expected_values_for_framing_pairs(self, questionnaire):
        expected = {"Q2": 4000, "Q6": 2000, "Q7": 600, "Q8": 500, "Q11": 200,
                    "Q14": 2, "Q16": 4, "Q17": 480, "Q21": 4, "Q23": 400,
                    "Q26": 2000, "Q27": 400, "Q34": 4000, "Q35": 240, "Q36": 2}
        for rdp in questionnaire.rdps:
            if rdp.id in expected:
                for c in rdp.choices:
                    assert expected_value(c.outcomes) == expected[rdp.id], rdp.id


class TestParseChoice:
    def test_marks_completeness(self):
        assert parse_choice("b", ADP_RISKY).complete
        assert not parse_choice("b", "1/3 probability that 600 people will be saved").complete


class TestRuleTable:
    def test_packaged_rule_file_matches_defaults(self):
        from gistcdm.io import packaged_dataset

        path = packaged_dataset("default").with_suffix(".rules")
        rules = load_rules(path)
        assert rules == DEFAULT_RULES

    def test_custom_rules_extend_coverage(self, tmp_path):
        table = tmp_path / "extra.rules"
        table.write_text(
            "word-fraction\t\\bfifty-fifty\\s+(?:probability|chance)\\b\t1/2\n"
            "negation-zero\t\\bzilch\\b\n"
            "count\t\\b(\\d+)\\b\n"
        )
        rules = load_rules(table)
        outs = extract_outcomes(
            "fifty-fifty chance that 80 show up", rules=rules)
        assert pairs(outs) == [(Fraction(1, 2), 80.0)]
