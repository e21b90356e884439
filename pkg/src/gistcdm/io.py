"""Dataset loading, serialization, and run manifests.

Datasets are single JSON documents with an explicit ``schema_version``.
Problem texts are the source of truth: outcomes are extracted eagerly at
load time, and extraction failures in the individual questionnaire are
reported per question rather than aborting the load (the affected choice
falls back to zero quantities so decisions remain well defined).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .domain import (
    RDMP,
    Choice,
    ExperimentRecord,
    Frame,
    Outcome,
    QuestionnaireResponse,
)
from .errors import (
    EmptyDatasetError,
    NoQuantityFoundError,
    SchemaError,
    UnknownReferenceError,
    UnpairedProbabilityError,
)
from .metrics import FrameCounts
from .parsing import ParseRule, extract_outcomes

GROUP_SCHEMA_VERSION = 1
INDIVIDUAL_SCHEMA_VERSION = 1


def packaged_dataset(name: str) -> Path:
    """Path of a dataset shipped inside the package (``group_experiments``
    or ``questionnaire``)."""
    return Path(resources.files("gistcdm.data") / f"{name}.json")


@dataclass(frozen=True)
class ParseFailure:
    """A choice whose text yielded no usable outcomes at load time."""

    rdmp_id: str
    choice_id: str
    error: str
    message: str


@dataclass(frozen=True)
class GroupDataset:
    experiments: tuple[ExperimentRecord, ...]
    schema_version: int = GROUP_SCHEMA_VERSION
    source: str = ""

    def __post_init__(self):
        if not self.experiments:
            raise EmptyDatasetError("group dataset has no experiments")
        ids = [e.key for e in self.experiments]
        if len(set(ids)) != len(ids):
            raise SchemaError("duplicate experiment record ids")

    @property
    def categories(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for e in self.experiments:
            seen.setdefault(e.category, None)
        return tuple(seen)

    def by_category(self) -> dict[str, list[ExperimentRecord]]:
        out: dict[str, list[ExperimentRecord]] = {}
        for e in self.experiments:
            out.setdefault(e.category, []).append(e)
        return out

    def frame_counts(self, record: ExperimentRecord) -> FrameCounts:
        return FrameCounts.from_proportions(
            record.n_gain, record.p_risky_gain, record.n_loss, record.p_risky_loss
        )


@dataclass(frozen=True)
class IndividualDataset:
    rdps: tuple[RDMP, ...]
    responses: tuple[QuestionnaireResponse, ...] = ()
    parse_failures: tuple[ParseFailure, ...] = ()
    stems: dict = field(default_factory=dict)
    schema_version: int = INDIVIDUAL_SCHEMA_VERSION
    source: str = ""

    def __post_init__(self):
        if not self.rdps:
            raise EmptyDatasetError("individual dataset has no problems")
        by_id = {r.id: r for r in self.rdps}
        if len(by_id) != len(self.rdps):
            raise SchemaError("duplicate problem ids")
        for resp in self.responses:
            rdp = by_id.get(resp.rdmp_id)
            if rdp is None:
                raise UnknownReferenceError(
                    f"response by {resp.individual_id!r} references unknown problem {resp.rdmp_id!r}"
                )
            if resp.chosen not in rdp.choice_ids():
                raise UnknownReferenceError(
                    f"response by {resp.individual_id!r} on {resp.rdmp_id!r} "
                    f"references unknown choice {resp.chosen!r}"
                )

    def rdp(self, rdmp_id: str) -> RDMP:
        for r in self.rdps:
            if r.id == rdmp_id:
                return r
        raise UnknownReferenceError(f"unknown problem {rdmp_id!r}")

    def responses_by_individual(self) -> dict[str, list[QuestionnaireResponse]]:
        out: dict[str, list[QuestionnaireResponse]] = {}
        for resp in self.responses:
            out.setdefault(resp.individual_id, []).append(resp)
        return out


def _require(blob: dict, key: str, record=None):
    if key not in blob:
        raise SchemaError(f"missing field {key!r}", record=record)
    return blob[key]


def _parse_rdmp(blob: dict, record=None,
                rules: tuple[ParseRule, ...] | None = None,
                collect_failures: list[ParseFailure] | None = None) -> RDMP:
    rid = _require(blob, "id", record)
    frame = Frame(_require(blob, "frame", record))
    choices = []
    for ch in _require(blob, "choices", record):
        cid = _require(ch, "id", record)
        text = _require(ch, "text", record)
        try:
            outcomes = extract_outcomes(text, rules=rules)
        except (NoQuantityFoundError, UnpairedProbabilityError) as exc:
            if collect_failures is None:
                raise SchemaError(
                    f"choice {cid!r} of {rid!r}: {exc}", record=record
                ) from exc
            collect_failures.append(
                ParseFailure(rdmp_id=rid, choice_id=cid,
                             error=type(exc).__name__, message=str(exc)))
            outcomes = _fallback_outcomes(exc)
        total = sum((o.probability for o in outcomes), Fraction(0))
        choices.append(Choice(id=cid, text=text, outcomes=tuple(outcomes),
                              complete=total == 1))
    return RDMP(id=rid, frame=frame, choices=tuple(choices))


def _fallback_outcomes(exc) -> list[Outcome]:
    # numberless options still need a defined expected value: zero quantity,
    # keeping any recognized probability so riskiness stays meaningful
    if isinstance(exc, UnpairedProbabilityError) and getattr(exc, "text", ""):
        try:
            probs = [o.probability for o in
                     extract_outcomes(exc.text + " 0", infer_complement=False)]
            return [Outcome(probability=p, quantity=0.0) for p in probs]
        except Exception:
            pass
    return [Outcome(probability=Fraction(1), quantity=0.0)]


def load_group_dataset(path: str | Path,
                       rules: tuple[ParseRule, ...] | None = None) -> GroupDataset:
    """Load and validate a group-level experiment table; problem texts are
    parsed eagerly and any invariant failure is a hard error with record
    diagnostics."""
    path = Path(path)
    blob = json.loads(path.read_text())
    version = blob.get("schema_version")
    if version != GROUP_SCHEMA_VERSION:
        raise SchemaError(f"unsupported group schema version {version!r}")
    raw = blob.get("experiments", [])
    if not raw:
        raise EmptyDatasetError(f"{path}: no experiments")
    records = []
    for i, rec in enumerate(raw):
        rid = rec.get("id", f"#{i}")
        for p_key in ("p_risky_gain", "p_risky_loss"):
            p = _require(rec, p_key, rid)
            if not 0.0 <= float(p) <= 1.0:
                raise SchemaError(f"{p_key}={p} outside [0, 1]", record=rid)
        for n_key in ("n_gain", "n_loss"):
            n = _require(rec, n_key, rid)
            if int(n) <= 0:
                raise SchemaError(f"{n_key}={n} must be positive", record=rid)
        try:
            record = ExperimentRecord(
                reference=_require(rec, "reference", rid),
                category=_require(rec, "category", rid),
                rdmp_gain=_parse_rdmp(_require(rec, "rdmp_gain", rid), rid, rules),
                rdmp_loss=_parse_rdmp(_require(rec, "rdmp_loss", rid), rid, rules),
                n_gain=int(rec["n_gain"]),
                p_risky_gain=float(rec["p_risky_gain"]),
                n_loss=int(rec["n_loss"]),
                p_risky_loss=float(rec["p_risky_loss"]),
                published=rec.get("published", {}),
                record_id=rec.get("id", ""),
            )
        except ValueError as exc:
            raise SchemaError(str(exc), record=rid) from exc
        records.append(record)
    return GroupDataset(experiments=tuple(records), schema_version=version,
                        source=str(path))


def load_individual_dataset(path: str | Path,
                            rules: tuple[ParseRule, ...] | None = None) -> IndividualDataset:
    """Load a questionnaire (problems plus optional responses). Choices
    whose text defeats the extractor are reported in ``parse_failures``
    and fall back to zero-quantity outcomes."""
    path = Path(path)
    blob = json.loads(path.read_text())
    version = blob.get("schema_version")
    if version != INDIVIDUAL_SCHEMA_VERSION:
        raise SchemaError(f"unsupported questionnaire schema version {version!r}")
    failures: list[ParseFailure] = []
    rdps = []
    stems = {}
    for i, rec in enumerate(blob.get("rdps", [])):
        rdp = _parse_rdmp(rec, rec.get("id", f"#{i}"), rules, collect_failures=failures)
        rdps.append(rdp)
        if "stem" in rec:
            stems[rdp.id] = rec["stem"]
    responses = tuple(
        QuestionnaireResponse(
            individual_id=_require(r, "individual_id", i),
            rdmp_id=_require(r, "rdmp_id", i),
            chosen=_require(r, "chosen", i),
        )
        for i, r in enumerate(blob.get("responses", []))
    )
    return IndividualDataset(
        rdps=tuple(rdps),
        responses=responses,
        parse_failures=tuple(failures),
        stems=stems,
        schema_version=version,
        source=str(path),
    )


def serialize_group_dataset(dataset: GroupDataset) -> dict:
    return {
        "schema_version": dataset.schema_version,
        "experiments": [
            {
                "id": e.record_id,
                "reference": e.reference,
                "category": e.category,
                "n_gain": e.n_gain,
                "p_risky_gain": e.p_risky_gain,
                "n_loss": e.n_loss,
                "p_risky_loss": e.p_risky_loss,
                "rdmp_gain": _serialize_rdmp(e.rdmp_gain),
                "rdmp_loss": _serialize_rdmp(e.rdmp_loss),
                "published": e.published,
            }
            for e in dataset.experiments
        ],
    }


def serialize_individual_dataset(dataset: IndividualDataset) -> dict:
    rdps = []
    for r in dataset.rdps:
        rec = {"id": r.id, "frame": r.frame.value}
        if r.id in dataset.stems:
            rec["stem"] = dataset.stems[r.id]
        rec["choices"] = [{"id": c.id, "text": c.text} for c in r.choices]
        rdps.append(rec)
    return {
        "schema_version": dataset.schema_version,
        "rdps": rdps,
        "responses": [
            {"individual_id": r.individual_id, "rdmp_id": r.rdmp_id, "chosen": r.chosen}
            for r in dataset.responses
        ],
    }


def _serialize_rdmp(rdmp: RDMP) -> dict:
    return {
        "id": rdmp.id,
        "frame": rdmp.frame.value,
        "choices": [{"id": c.id, "text": c.text} for c in rdmp.choices],
    }


def save_json(blob: dict, path: str | Path):
    Path(path).write_text(json.dumps(blob, indent=1) + "\n")


@dataclass
class RunManifest:
    """Provenance sidecar written next to every CLI output."""

    command: str
    argv: list[str]
    seed: int | None
    config: dict
    outputs: list[str]
    package_version: str
    started: str = ""
    finished: str = ""

    def write(self, path: str | Path):
        blob = {
            "command": self.command,
            "argv": self.argv,
            "seed": self.seed,
            "config": self.config,
            "outputs": self.outputs,
            "package_version": self.package_version,
            "started": self.started,
            "finished": self.finished,
        }
        Path(path).write_text(json.dumps(blob, indent=1) + "\n")


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()
