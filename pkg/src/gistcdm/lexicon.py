"""Static keyword categorizers.

Any object with ``predict_category(text) -> (label, scores)`` and
``category_sentiment(label) -> (p_pos, p_neg)`` can drive the utility and
decision engines. The trained embedding model implements this contract;
the lexicon categorizer here is the dependency-free alternative, mapping
keyword patterns to a category and each category to a fixed sentiment
split, so the decision pipeline is testable and runnable without any
training.

Negated outcomes get their own categories: "no people will be saved" is
not a saving gist but its nullification, and "no one will die" is relief
rather than harm. These mixed-wording gists are what distinguishes a
risky option carrying a zero complement from a pure certain option, and
they disappear under truncation exactly like the framing effects in the
published experiment families. Pattern categories are listed first and
claim their text spans before plain keywords count, and score ties
resolve toward the earlier category, so a mixed prospect tilts toward
its nullifying clause.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Protocol, runtime_checkable

from .errors import EmptyDocumentError


@runtime_checkable
class Categorizer(Protocol):
    def predict_category(self, text: str) -> tuple[str, dict[str, float]]: ...

    def category_sentiment(self, category: str) -> tuple[float, float]: ...


@dataclass(frozen=True)
class LexiconCategory:
    """One category: regex patterns scored on normalized token text, and
    the category's fixed sentiment split."""

    name: str
    patterns: tuple[str, ...]
    p_pos: float

    def __post_init__(self):
        if not 0.0 <= self.p_pos <= 1.0:
            raise ValueError(f"p_pos must be in [0, 1], got {self.p_pos}")
        for p in self.patterns:
            re.compile(p)


_NEG = r"(?:no|none|not|nothing|nobody)"
_GOOD_VERBS = (
    r"(?:sav\w*|surviv\w*|alive|liv\w*|rescu\w*|cur\w*|stay\w*|recover\w*|"
    r"win\w*|won|gain\w*|captur\w*|keep\w*|get\w*|tak\w*|money)"
)
_BAD_VERBS = (
    r"(?:die\w*|dying|dead|death\w*|kill\w*|destroy\w*|damag\w*|infect\w*|"
    r"fatal\w*|drop\w*|los\w*|cost\w*|incur\w*|suit|lawsuit)"
)

DEFAULT_LEXICON: tuple[LexiconCategory, ...] = (
    # a good outcome negated away ("no people will be saved", "win nothing")
    LexiconCategory(
        "nullified gain",
        (rf"\b{_NEG}\b[\w\s$%]{{0,50}}?\b{_GOOD_VERBS}",
         rf"\b{_GOOD_VERBS}\b[\w\s$%]{{0,14}}?\b{_NEG}\b"),
        p_pos=0.10,
    ),
    # a bad outcome negated away ("no one will die", "lose nothing")
    LexiconCategory(
        "nullified loss",
        (rf"\b{_NEG}\b[\w\s$%]{{0,50}}?\b{_BAD_VERBS}",
         rf"\b{_BAD_VERBS}\b[\w\s$%]{{0,14}}?\b{_NEG}\b"),
        p_pos=0.90,
    ),
    LexiconCategory(
        "life",
        (r"\b(?:sav\w*|surviv\w*|alive|lives?|living|rescu\w*|cur\w*|stay\w*|recover\w*)\b",),
        p_pos=0.985,
    ),
    LexiconCategory(
        "harm",
        (r"\b(?:die\w*|dying|dead|death\w*|kill\w*|destroy\w*|damag\w*|infect\w*|"
         r"fatal\w*|dropout|drop|suit|lawsuit)\b",),
        p_pos=0.015,
    ),
    LexiconCategory(
        "reward",
        (r"\b(?:win\w*|won|gain\w*|captur\w*|keep\w*|taking|additional)\b",),
        p_pos=0.95,
    ),
    LexiconCategory(
        "forfeit",
        (r"\b(?:los\w*|cost\w*|incur\w*|pay\w*|forfeit\w*|damages)\b",),
        p_pos=0.05,
    ),
    LexiconCategory("neutral", (), p_pos=0.5),
)


class LexiconCategorizer:
    """Pattern-count categorizer with per-category fixed sentiment.

    Categories are matched in order and claim non-overlapping spans, so
    an earlier category's match hides its words from later categories;
    the winning category is the one with the most claimed matches, ties
    resolving toward the earlier entry.
    """

    def __init__(self, categories: tuple[LexiconCategory, ...] = DEFAULT_LEXICON):
        if len(categories) < 2:
            raise ValueError("lexicon needs at least 2 categories")
        self.categories = tuple(categories)
        self._sentiments = {c.name: (c.p_pos, 1.0 - c.p_pos) for c in self.categories}
        self._compiled = [
            (idx, re.compile(p))
            for idx, cat in enumerate(self.categories)
            for p in cat.patterns
        ]

    def predict_category(self, text: str) -> tuple[str, dict[str, float]]:
        tokens = re.findall(r"[a-z0-9$%]+", text.lower())
        if not tokens:
            raise EmptyDocumentError("no tokens in text")
        joined = " ".join(tokens)
        taken = [False] * len(joined)
        counts = [0] * len(self.categories)
        for idx, pattern in self._compiled:
            for m in pattern.finditer(joined):
                if any(taken[m.start():m.end()]):
                    continue
                for i in range(m.start(), m.end()):
                    taken[i] = True
                counts[idx] += 1
        total = sum(counts)
        if total == 0:
            scores = [1.0 if c.name == "neutral" else 0.0 for c in self.categories]
        else:
            scores = [c / total for c in counts]
        best = max(range(len(scores)), key=lambda i: (scores[i], -i))
        return self.categories[best].name, {
            c.name: scores[i] for i, c in enumerate(self.categories)
        }

    def category_sentiment(self, category: str) -> tuple[float, float]:
        return self._sentiments[category]


class StaticCategorizer:
    """Returns one fixed category and sentiment for every text; used for
    worked examples and controlled experiments."""

    def __init__(self, category: str = "life", p_pos: float = 0.9999):
        self.category = category
        self.p_pos = float(p_pos)

    def predict_category(self, text: str) -> tuple[str, dict[str, float]]:
        return self.category, {self.category: 1.0}

    def category_sentiment(self, category: str) -> tuple[float, float]:
        return self.p_pos, 1.0 - self.p_pos


@dataclass
class MappingCategorizer:
    """Categorize by exact lookup of the choice text; sentiments per
    category are fixed. Convenient for tests that need full control."""

    text_to_category: dict[str, str] = field(default_factory=dict)
    sentiments: dict[str, tuple[float, float]] = field(default_factory=dict)
    default_category: str = "neutral"

    def predict_category(self, text: str) -> tuple[str, dict[str, float]]:
        category = self.text_to_category.get(text, self.default_category)
        return category, {category: 1.0}

    def category_sentiment(self, category: str) -> tuple[float, float]:
        return self.sentiments.get(category, (0.5, 0.5))
