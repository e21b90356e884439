"""Rule-based extraction of (probability, quantity) outcomes from choice text.

The grammar is an ordered table of token patterns (first match wins), not a
learned tagger: the target corpora are small, fixed questionnaires where
every lexical form can be enumerated and audited. The engine works in
stages:

1. normalize text and rewrite ``X of the N`` population denominators
   ("600 of the 1000 students" keeps 600, "all of the 12 species" keeps 12,
   "none of the 1000" keeps the zero marker);
2. claim certainty markers ("sure", "for sure"), which assert the default
   probability of one and would otherwise shadow quantities;
3. claim clause-tail probability markers ("... if heads comes up"), which
   own the text to their *left*;
4. claim forward probability markers (fractions, percentages, word
   fractions, "2 in 3 chance"), which own the text up to the next marker;
5. inside each owned span, claim zero-implying negations ("no lives",
   "none", "nothing", "not losing any") and numeric quantities (dollar
   amounts, percents used as plain quantities, digit and word numbers).

Numbers attached to time durations ("20 minutes", "five years") and label
positions ("Program 1:") are never quantities. A span with a probability
but no quantity is an unpaired probability; quantities outside any
probability span are certain. The implied complement outcome ``(1 - p, 0)``
is appended only for "chance to win" gamble phrasing (or on request), so
deliberately truncated problems stay truncated.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .domain import Choice, Outcome
from .errors import NoQuantityFoundError, ParseError, UnpairedProbabilityError

RULE_KINDS = ("fraction", "percentage", "word-fraction", "certainty", "negation-zero", "count")

_TIME_UNITS = r"(?:minutes?|hours?|days?|weeks?|months?|years?)"

_WORD_NUMBERS = {
    "one": 1.0, "two": 2.0, "three": 3.0, "four": 4.0, "five": 5.0,
    "six": 6.0, "seven": 7.0, "eight": 8.0, "nine": 9.0, "ten": 10.0,
    "eleven": 11.0, "twelve": 12.0,
}


@dataclass(frozen=True)
class ParseRule:
    """One ordered extraction rule.

    ``value`` carries the fixed probability for word-fraction forms.
    ``tail`` marks markers that close the clause to their left instead of
    opening one to their right ("... if heads comes up").
    """

    kind: str
    pattern: str
    value: Fraction | None = None
    tail: bool = False

    def __post_init__(self):
        if self.kind not in RULE_KINDS:
            raise ValueError(f"unknown rule kind {self.kind!r}")
        re.compile(self.pattern)


def _frac(n: int, d: int) -> Fraction:
    return Fraction(n, d)


DEFAULT_RULES: tuple[ParseRule, ...] = (
    # probability forms
    ParseRule("fraction", r"\b(\d+)\s*/\s*(\d+)\s+(?:probability|chance)\b"),
    ParseRule("fraction", r"\b(\d+)\s+in\s+(\d+)\s+(?:probability|chance)\b"),
    ParseRule("percentage", r"\b(\d+(?:\.\d+)?)\s*%\s*(?:probability|chance)\b"),
    ParseRule("word-fraction", r"\bone[-\s]half\s+(?:probability|chance)\b", _frac(1, 2)),
    ParseRule("word-fraction", r"\bone[-\s]third\s+(?:probability|chance)\b", _frac(1, 3)),
    ParseRule("word-fraction", r"\btwo[-\s]thirds?\s+(?:probability|chance)\b", _frac(2, 3)),
    ParseRule("word-fraction", r"\bone[-\s]quarter\s+(?:probability|chance)\b", _frac(1, 4)),
    ParseRule("word-fraction", r"\bthree[-\s]quarters?\s+(?:probability|chance)\b", _frac(3, 4)),
    ParseRule("word-fraction", r"\bone[-\s]fifth\s+(?:probability|chance)\b", _frac(1, 5)),
    ParseRule("word-fraction", r"\btwo[-\s]fifths?\s+(?:probability|chance)\b", _frac(2, 5)),
    ParseRule("word-fraction", r"\bthree[-\s]fifths?\s+(?:probability|chance)\b", _frac(3, 5)),
    ParseRule("word-fraction", r"\bfour[-\s]fifths?\s+(?:probability|chance)\b", _frac(4, 5)),
    ParseRule("word-fraction", r"\bif\s+heads\s+comes?\s+up\b", _frac(1, 2), tail=True),
    ParseRule("word-fraction", r"\bif\s+tails\s+comes?\s+up\b", _frac(1, 2), tail=True),
    ParseRule("certainty", r"\b(?:for\s+sure|sure|certainly|certain|guaranteed)\b", _frac(1, 1)),
    # zero-implying quantities
    ParseRule("negation-zero", r"\bno\s+one\b"),
    ParseRule("negation-zero", r"\bnone\b"),
    ParseRule("negation-zero", r"\bnothing\b"),
    ParseRule("negation-zero", r"\bnobody\b"),
    ParseRule("negation-zero", r"\bnot\s+\w+ing\s+any\b"),
    ParseRule("negation-zero", r"\bno\s+[a-z]+"),
    # numeric quantities
    ParseRule("count", r"\$\s*(\d[\d,]*(?:\.\d+)?)"),
    ParseRule("count", r"\b(\d[\d,]*(?:\.\d+)?)\s*%"),
    ParseRule("count", r"\b(\d[\d,]*(?:\.\d+)?)\b"),
    ParseRule("count", r"\b(one|two|three|four|five|six|seven|eight|nine|ten|eleven|twelve)\b"),
)

_COMPLEMENT_TRIGGER = re.compile(r"chance\s+(?:to\s+win|of\s+winning)\b")

# population denominators: the second number of "X of the N <noun>" is the
# group size, not an outcome
_DENOM_ALL = re.compile(r"\ball\s+of\s+the\s+(\d[\d,]*)")
_DENOM_NONE = re.compile(r"\b(none|no\s+one)\s+of\s+the\s+\d[\d,]*")
_DENOM_NUM = re.compile(r"\b(\d[\d,]*(?:\.\d+)?)\s+of\s+the\s+\d[\d,]*")

_NUM_COMMA = re.compile(r"(?<=\d),(?=\d{3}\b)")


def load_rules(path: str | Path) -> tuple[ParseRule, ...]:
    """Read a rule table from a plain-text file, one rule per line.

    Line format: ``kind<TAB>pattern[<TAB>value][<TAB>tail]`` where value
    is a fraction like ``1/3`` and the literal word ``tail`` marks
    clause-tail markers. ``#`` starts a comment.
    """
    rules = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) < 2:
            raise ParseError(f"rule file line {lineno}: expected 'kind<TAB>pattern'", line)
        kind, pattern = parts[0].strip(), parts[1].strip()
        value = None
        tail = False
        for extra in parts[2:]:
            extra = extra.strip()
            if extra == "tail":
                tail = True
            elif extra:
                value = Fraction(extra)
        rules.append(ParseRule(kind, pattern, value, tail))
    return tuple(rules)


def _normalize(text: str) -> str:
    t = text.lower()
    t = _NUM_COMMA.sub("", t)
    t = re.sub(r"\s+", " ", t).strip()
    # strip the group size out of population phrases
    t = _DENOM_ALL.sub(lambda m: m.group(1), t)
    t = _DENOM_NONE.sub(lambda m: m.group(1), t)
    t = _DENOM_NUM.sub(lambda m: m.group(1), t)
    return t


class _Claims:
    """Tracks which character spans of the text are already consumed."""

    def __init__(self, n: int):
        self.taken = [False] * n

    def free(self, start: int, end: int) -> bool:
        return not any(self.taken[start:end])

    def claim(self, start: int, end: int):
        for i in range(start, end):
            self.taken[i] = True


def _rule_matches(text: str, claims: _Claims, rules, kinds) -> list[tuple[int, int, ParseRule, re.Match]]:
    """All non-overlapping matches of the given rule kinds, in rule order
    (earlier rules claim their spans first), returned sorted by position."""
    found = []
    for rule in rules:
        if rule.kind not in kinds:
            continue
        for m in re.finditer(rule.pattern, text):
            if claims.free(m.start(), m.end()):
                claims.claim(m.start(), m.end())
                found.append((m.start(), m.end(), rule, m))
    found.sort(key=lambda item: item[0])
    return found


def _probability_of(rule: ParseRule, m: re.Match, text: str) -> Fraction:
    if rule.kind == "fraction":
        num, den = int(m.group(1)), int(m.group(2))
        if den == 0:
            raise ParseError("fraction with zero denominator", text)
        p = Fraction(num, den)
    elif rule.kind == "percentage":
        p = Fraction(m.group(1)) / 100
    else:
        if rule.value is None:
            raise ParseError(f"rule {rule.pattern!r} needs a value", text)
        p = rule.value
    if not 0 <= p <= 1:
        raise ParseError(f"probability {p} outside [0, 1]", text)
    return p


def _quantities_in(segment: str, offset: int, rules) -> list[tuple[int, float]]:
    """Zero markers and numbers inside one probability span, by position."""
    claims = _Claims(len(segment))
    quantities: list[tuple[int, float]] = []
    for start, end, rule, m in _rule_matches(segment, claims, rules, ("negation-zero",)):
        quantities.append((offset + start, 0.0))
    for start, end, rule, m in _rule_matches(segment, claims, rules, ("count",)):
        token = m.group(1)
        follow = segment[end:]
        if re.match(r"\s*:", follow):
            continue  # "Program 1:" labels
        if re.match(rf"\s*(?:more\s+)?{_TIME_UNITS}\b", follow):
            continue  # durations are not outcome quantities
        if token in _WORD_NUMBERS:
            value = _WORD_NUMBERS[token]
        else:
            value = float(token.replace(",", ""))
        quantities.append((offset + start, value))
    quantities.sort(key=lambda item: item[0])
    return quantities


def extract_outcomes(
    text: str,
    rules: tuple[ParseRule, ...] | None = None,
    infer_complement: bool | None = None,
) -> list[Outcome]:
    """Extract the ordered outcome list of one choice.

    ``infer_complement``: True always appends the implied ``(1 - p, 0)``
    complement when probabilities sum below one, False never does, and
    None (default) appends it only for "chance to win" gamble phrasing.

    Raises :class:`NoQuantityFoundError` when nothing quantity-like is
    recognized and :class:`UnpairedProbabilityError` when probabilities
    outnumber quantities.
    """
    if rules is None:
        rules = DEFAULT_RULES
    norm = _normalize(text)
    if not norm:
        raise NoQuantityFoundError("empty choice text", text)

    claims = _Claims(len(norm))
    _rule_matches(norm, claims, rules, ("certainty",))  # claim and ignore

    # clause-tail markers own the text from the previous boundary leftward
    tail_rules = tuple(r for r in rules if r.tail)
    head_rules = tuple(r for r in rules if not r.tail)
    spans: list[tuple[Fraction | None, int, int, int]] = []  # (p, start, end, order)
    cursor = 0
    for start, end, rule, m in _rule_matches(norm, claims, tail_rules, ("fraction", "percentage", "word-fraction")):
        spans.append((_probability_of(rule, m, text), cursor, start, start))
        cursor = end

    markers = _rule_matches(norm, claims, head_rules, ("fraction", "percentage", "word-fraction"))
    markers = [item for item in markers if item[0] >= cursor]
    if markers:
        first = markers[0][0]
        if first > cursor:
            spans.append((None, cursor, first, cursor))
        for i, (start, end, rule, m) in enumerate(markers):
            stop = markers[i + 1][0] if i + 1 < len(markers) else len(norm)
            spans.append((_probability_of(rule, m, text), end, stop, start))
    elif cursor < len(norm):
        spans.append((None, cursor, len(norm), cursor))

    spans.sort(key=lambda item: item[3])
    outcomes: list[Outcome] = []
    unpaired: list[Fraction] = []
    for p, start, stop, _order in spans:
        quantities = _quantities_in(norm[start:stop], start, rules)
        if not quantities:
            if p is not None:
                unpaired.append(p)
            continue
        prob = Fraction(1) if p is None else p
        for _pos, q in quantities:
            outcomes.append(Outcome(probability=prob, quantity=q))

    if unpaired:
        raise UnpairedProbabilityError(
            f"{len(unpaired)} probabilit{'y' if len(unpaired) == 1 else 'ies'} without a quantity",
            text,
        )
    if not outcomes:
        raise NoQuantityFoundError("no numeric or zero-implying quantity recognized", text)

    if infer_complement is None:
        infer_complement = bool(_COMPLEMENT_TRIGGER.search(norm))
    if infer_complement:
        total = sum((o.probability for o in outcomes), Fraction(0))
        if total < 1:
            outcomes.append(Outcome(probability=1 - total, quantity=0.0))
    return outcomes


def expected_value(outcomes: list[Outcome] | tuple[Outcome, ...]) -> float:
    """Probability-weighted sum of quantities, computed exactly in
    rational arithmetic before the final float conversion."""
    if not outcomes:
        raise ValueError("expected_value of empty outcome list")
    total = sum((o.probability * Fraction(o.quantity) for o in outcomes), Fraction(0))
    return float(total)


def quantity_count(outcomes: list[Outcome] | tuple[Outcome, ...]) -> int:
    """Number of quantity slots in a choice; explicit zeros and inferred
    complements each count as one."""
    if not outcomes:
        raise ValueError("quantity_count of empty outcome list")
    return len(outcomes)


def parse_choice(
    choice_id: str,
    text: str,
    rules: tuple[ParseRule, ...] | None = None,
    infer_complement: bool | None = None,
) -> Choice:
    """Parse one option into a :class:`Choice`, marking it complete when
    its probabilities sum to exactly one."""
    outcomes = extract_outcomes(text, rules=rules, infer_complement=infer_complement)
    total = sum((o.probability for o in outcomes), Fraction(0))
    return Choice(id=choice_id, text=text, outcomes=tuple(outcomes), complete=total == 1)
