"""Sequence-score ingestion and model rank tables.

A "logit" here is the sequence log-score a harvester assigned to one
rendered sentence, in natural-log units. Scores arrive as versioned JSONL
(see ``LOGIT_SCHEMA_VERSION``); per-pair means are taken over the template
set and ranks are assigned per disease by descending mean.

Two scoring modes exist because demographic terms differ in token length
across subgroups and languages: ``sum_logprob`` (default) and
``mean_logprob`` (length-normalized). A table may carry both, but mixing
modes inside one aggregation group is an error, and every rank table
records the mode that produced it.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .errors import (
    DuplicateRecord,
    IncompleteTemplates,
    MissingSubgroup,
    MixedScoringModes,
    NonFiniteScore,
    ParseError,
)
from .ranking import RankTable, build_rank_table

LOGIT_SCHEMA_VERSION = 1
SCORING_MODES = ("sum_logprob", "mean_logprob")
VALID_CATEGORIES = ("race_ethnicity", "gender")


@dataclass(frozen=True)
class LogitRecord:
    model: str
    language: str
    disease_id: str
    subgroup_id: str
    category: str
    template_index: int
    score: float
    scoring_mode: str

    @property
    def key(self) -> tuple[str, str, str, str, int]:
        return (self.model, self.language, self.disease_id, self.subgroup_id, self.template_index)


@dataclass(frozen=True)
class MeanLogit:
    model: str
    language: str
    disease_id: str
    subgroup_id: str
    category: str
    mean: float
    n_templates: int
    scoring_mode: str


class LogitTable:
    """Validated collection of logit records.

    Completeness invariant: within every (model, language, category)
    group, all (disease, subgroup) pairs carry the same template set.
    Enforced on construction, before any aggregation.
    """

    def __init__(self, records):
        self.records: tuple[LogitRecord, ...] = tuple(records)
        seen: set = set()
        for r in self.records:
            if r.key in seen:
                raise DuplicateRecord(r.key)
            seen.add(r.key)
        self.models = frozenset(r.model for r in self.records)
        self.languages = frozenset(r.language for r in self.records)
        self._check_completeness()

    def _check_completeness(self):
        groups: dict[tuple[str, str, str], dict[tuple[str, str], list[int]]] = {}
        modes: dict[tuple[str, str, str], set[str]] = {}
        for r in self.records:
            group = (r.model, r.language, r.category)
            groups.setdefault(group, {}).setdefault(
                (r.disease_id, r.subgroup_id), []
            ).append(r.template_index)
            modes.setdefault(group, set()).add(r.scoring_mode)
        for group, pairs in groups.items():
            if len(modes[group]) > 1:
                raise MixedScoringModes(group, modes[group])
            expected: tuple[int, ...] | None = None
            for pair in sorted(pairs):
                templates = tuple(sorted(pairs[pair]))
                if expected is None:
                    expected = templates
                elif templates != expected:
                    raise IncompleteTemplates(group + pair, len(templates), len(expected))

    def subset(self, model: str | None = None, language: str | None = None, category: str | None = None):
        out = [
            r
            for r in self.records
            if (model is None or r.model == model)
            and (language is None or r.language == language)
            and (category is None or r.category == category)
        ]
        return LogitTable(out)

    def __len__(self):
        return len(self.records)


def _parse_line(line: str, lineno: int, source: str) -> LogitRecord:
    try:
        raw = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{source}:{lineno}: invalid JSON: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ParseError(f"{source}:{lineno}: record must be an object")
    if raw.get("v") != LOGIT_SCHEMA_VERSION:
        raise ParseError(f"{source}:{lineno}: unsupported schema version {raw.get('v')!r}")
    try:
        record = LogitRecord(
            model=raw["model"],
            language=raw["language"],
            disease_id=raw["disease"],
            subgroup_id=raw["subgroup"],
            category=raw["category"],
            template_index=raw["template"],
            score=raw["score"],
            scoring_mode=raw["scoring_mode"],
        )
    except KeyError as exc:
        raise ParseError(f"{source}:{lineno}: missing field {exc}") from None
    for name, value in (
        ("model", record.model),
        ("language", record.language),
        ("disease", record.disease_id),
        ("subgroup", record.subgroup_id),
    ):
        if not isinstance(value, str) or not value:
            raise ParseError(f"{source}:{lineno}: {name} must be a non-empty string")
    if record.category not in VALID_CATEGORIES:
        raise ParseError(f"{source}:{lineno}: unknown category {record.category!r}")
    if not isinstance(record.template_index, int) or record.template_index < 0:
        raise ParseError(f"{source}:{lineno}: template must be a non-negative integer")
    if record.scoring_mode not in SCORING_MODES:
        raise ParseError(f"{source}:{lineno}: unknown scoring_mode {record.scoring_mode!r}")
    if not isinstance(record.score, (int, float)) or isinstance(record.score, bool):
        raise ParseError(f"{source}:{lineno}: score must be a number")
    if not math.isfinite(record.score):
        raise NonFiniteScore(record.key)
    return record


def load_logits(path) -> LogitTable:
    """Load a logit JSONL file, rejecting duplicates and non-finite scores."""
    path = Path(path)
    records = []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if line.strip():
                    records.append(_parse_line(line, lineno, str(path)))
    except OSError as exc:
        raise ParseError(f"cannot read logits {path}: {exc}") from exc
    return LogitTable(records)


def write_logits(records, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(
                json.dumps(
                    {
                        "v": LOGIT_SCHEMA_VERSION,
                        "model": r.model,
                        "language": r.language,
                        "disease": r.disease_id,
                        "subgroup": r.subgroup_id,
                        "category": r.category,
                        "template": r.template_index,
                        "score": r.score,
                        "scoring_mode": r.scoring_mode,
                    },
                    ensure_ascii=False,
                )
            )
            fh.write("\n")


def mean_logits(table: LogitTable) -> list[MeanLogit]:
    """Arithmetic mean of each pair's scores across its template set."""
    groups: dict[tuple[str, str, str, str, str], list[float]] = {}
    modes: dict[tuple[str, str, str, str, str], str] = {}
    for r in table.records:
        key = (r.model, r.language, r.category, r.disease_id, r.subgroup_id)
        groups.setdefault(key, []).append(r.score)
        modes[key] = r.scoring_mode
    out = []
    for key in sorted(groups):
        model, language, category, disease_id, subgroup_id = key
        scores = groups[key]
        out.append(
            MeanLogit(
                model=model,
                language=language,
                disease_id=disease_id,
                subgroup_id=subgroup_id,
                category=category,
                mean=math.fsum(scores) / len(scores),
                n_templates=len(scores),
                scoring_mode=modes[key],
            )
        )
    return out


def rank_from_logits(means, model: str, language: str, category: str) -> RankTable:
    """Rank subgroups per disease by descending mean logit."""
    selected = [
        m
        for m in means
        if m.model == model and m.language == language and m.category == category
    ]
    if not selected:
        raise MissingSubgroup(f"<no means for {model}/{language}/{category}>", "*")
    scoring_modes = {m.scoring_mode for m in selected}
    if len(scoring_modes) > 1:
        raise MixedScoringModes((model, language, category), scoring_modes)

    universe = tuple(sorted({m.subgroup_id for m in selected}))
    per_disease: dict[str, dict[str, float]] = {}
    for m in selected:
        per_disease.setdefault(m.disease_id, {})[m.subgroup_id] = m.mean
    for disease_id in sorted(per_disease):
        for subgroup_id in universe:
            if subgroup_id not in per_disease[disease_id]:
                raise MissingSubgroup(disease_id, subgroup_id)
    return build_rank_table(
        source=model,
        category=category,
        language=language,
        scoring_mode=scoring_modes.pop(),
        per_disease_values=per_disease,
        universe=universe,
    )
