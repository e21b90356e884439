import json

import pytest

from gistcdm.domain import Frame, IndividualDifferences
from gistcdm.errors import (
    EmptyDatasetError,
    SchemaError,
    UnknownReferenceError,
)
from gistcdm.io import (
    load_group_dataset,
    load_individual_dataset,
    packaged_dataset,
    save_json,
    serialize_group_dataset,
    serialize_individual_dataset,
)
from gistcdm.parsing import expected_value
from gistcdm.synthetic import generate_responses


class TestPackagedGroupDataset:
    def test_shape(self, group_dataset):
        assert len(group_dataset.experiments) == 88
        assert len(group_dataset.categories) == 20

    def test_tversky_row_loads_with_counts(self, group_dataset):
        rec = group_dataset.experiments[0]
        assert "Tversky" in rec.reference
        assert (rec.n_gain, rec.p_risky_gain) == (152, 0.28)
        assert (rec.n_loss, rec.p_risky_loss) == (155, 0.78)
        counts = group_dataset.frame_counts(rec)
        assert counts.n_safe_gain == pytest.approx(109.44)

    def test_category_sizes_match_section_totals(self, group_dataset):
        sizes = {cat: len(records) for cat, records in group_dataset.by_category().items()}
        assert sizes["Standard ADP; one presentation, between-subjects, low PISA"] == 14
        assert sizes["Standard ADP; within-subjects, low PISA"] == 3
        assert sizes["Allais Paradox gambles; low PISA (laboratory)"] == 1

    def test_round_trip_is_identity(self, group_dataset, tmp_path):
        path = tmp_path / "group.json"
        save_json(serialize_group_dataset(group_dataset), path)
        reloaded = load_group_dataset(path)
        assert reloaded.experiments == group_dataset.experiments


class TestPackagedQuestionnaire:
    def test_thirty_eight_problems(self, questionnaire):
        assert len(questionnaire.rdps) == 38
        ids = [r.id for r in questionnaire.rdps]
        assert {"Q9(i)", "Q9(ii)", "Q9(iii)"} <= set(ids)

    def test_adp_item_has_equal_expected_values(self, questionnaire):
        q11 = questionnaire.rdp("Q11")
        assert [expected_value(c.outcomes) for c in q11.choices] == [200.0, 200.0]

    def test_both_frame_items_flagged(self, questionnaire):
        assert questionnaire.rdp("Q20").frame is Frame.BOTH
        assert questionnaire.rdp("Q9(iii)").frame is Frame.BOTH

    def test_round_trip_with_responses(self, questionnaire, lexicon, tmp_path):
        responses = generate_responses(questionnaire.rdps[:6],
                                       IndividualDifferences(0.4, 0.4, 0.5),
                                       lexicon, seed=3, individual_id="i0")
        blob = serialize_individual_dataset(questionnaire)
        blob["responses"] = [
            {"individual_id": r.individual_id, "rdmp_id": r.rdmp_id,
             "chosen": r.chosen} for r in responses
        ]
        path = tmp_path / "quest.json"
        save_json(blob, path)
        reloaded = load_individual_dataset(path)
        assert len(reloaded.responses) == 6
        assert reloaded.rdps == questionnaire.rdps


class TestSchemaValidation:
    def _one_record_blob(self, group_dataset, **overrides):
        blob = serialize_group_dataset(group_dataset)
        blob["experiments"] = [dict(blob["experiments"][0], **overrides)]
        return blob

    def test_out_of_range_proportion(self, group_dataset, tmp_path):
        blob = self._one_record_blob(group_dataset, p_risky_gain=1.2)
        path = tmp_path / "bad.json"
        save_json(blob, path)
        with pytest.raises(SchemaError):
            load_group_dataset(path)

    def test_nonpositive_count(self, group_dataset, tmp_path):
        blob = self._one_record_blob(group_dataset, n_gain=0)
        path = tmp_path / "bad.json"
        save_json(blob, path)
        with pytest.raises(SchemaError):
            load_group_dataset(path)

    def test_missing_field(self, group_dataset, tmp_path):
        blob = self._one_record_blob(group_dataset)
        del blob["experiments"][0]["reference"]
        path = tmp_path / "bad.json"
        save_json(blob, path)
        with pytest.raises(SchemaError):
            load_group_dataset(path)

    def test_empty_experiments(self, tmp_path):
        path = tmp_path / "bad.json"
        save_json({"schema_version": 1, "experiments": []}, path)
        with pytest.raises(EmptyDatasetError):
            load_group_dataset(path)

    def test_unsupported_version(self, tmp_path):
        path = tmp_path / "bad.json"
        save_json({"schema_version": 99, "experiments": [{}]}, path)
        with pytest.raises(SchemaError):
            load_group_dataset(path)

    def test_duplicate_record_ids(self, group_dataset, tmp_path):
        blob = serialize_group_dataset(group_dataset)
        blob["experiments"] = [blob["experiments"][0], dict(blob["experiments"][0])]
        path = tmp_path / "bad.json"
        save_json(blob, path)
        with pytest.raises(SchemaError):
            load_group_dataset(path)


class TestResponseValidation:
    def test_unknown_problem_reference(self, questionnaire, tmp_path):
        blob = serialize_individual_dataset(questionnaire)
        blob["responses"] = [{"individual_id": "i", "rdmp_id": "Q99", "chosen": "a"}]
        path = tmp_path / "quest.json"
        save_json(blob, path)
        with pytest.raises(UnknownReferenceError):
            load_individual_dataset(path)

    def test_unknown_choice_reference(self, questionnaire, tmp_path):
        blob = serialize_individual_dataset(questionnaire)
        blob["responses"] = [{"individual_id": "i", "rdmp_id": "Q1", "chosen": "zzz"}]
        path = tmp_path / "quest.json"
        save_json(blob, path)
        with pytest.raises(UnknownReferenceError):
            load_individual_dataset(path)


class TestPackagedPaths:
    def test_datasets_resolve(self):
        assert packaged_dataset("group_experiments").exists()
        assert packaged_dataset("questionnaire").exists()
