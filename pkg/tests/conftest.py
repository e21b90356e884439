import pytest

from gistcdm.domain import IndividualDifferences
from gistcdm.io import load_group_dataset, load_individual_dataset, packaged_dataset
from gistcdm.lexicon import LexiconCategorizer, MappingCategorizer, StaticCategorizer


@pytest.fixture(scope="session")
def group_dataset():
    return load_group_dataset(packaged_dataset("group_experiments"))


@pytest.fixture(scope="session")
def questionnaire():
    return load_individual_dataset(packaged_dataset("questionnaire"))


@pytest.fixture(scope="session")
def lexicon():
    return LexiconCategorizer()


@pytest.fixture()
def life_stub():
    """Categorizer of the worked example: every text is `life` with
    sentiments (0.9999, 0.0001)."""
    return StaticCategorizer("life", 0.9999)


@pytest.fixture(scope="session")
def adp_gain(group_dataset):
    return group_dataset.experiments[0].rdmp_gain


@pytest.fixture(scope="session")
def adp_loss(group_dataset):
    return group_dataset.experiments[0].rdmp_loss


@pytest.fixture()
def det_limit():
    return IndividualDifferences.deterministic_limit(rs=0.0)


def contrast_categorizer(gain_text: str, loss_text: str,
                         pos: float = 0.95) -> MappingCategorizer:
    """Two-category mapping: one text positive, the other negative."""
    return MappingCategorizer(
        text_to_category={gain_text: "good", loss_text: "bad"},
        sentiments={"good": (pos, 1 - pos), "bad": (1 - pos, pos)},
    )
