"""Rank-comparison statistics.

Kendall's tau is the plain pairwise sign-product form (tau-a):

    tau = 2 / (n*(n-1)) * sum_{k<l} sgn(x_k - x_l) * sgn(y_k - y_l)

Tied pairs contribute zero to the sum and the denominator is NOT
tie-corrected; tau-b is deliberately not offered so results cannot
silently drift to a different statistic. Drift between a base model and
an aligned model is the mean per-disease tau (delta); 1 means the
aligned model kept the base ranking everywhere.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import stdev
from typing import Mapping

from .errors import (
    DiseaseSetMismatch,
    EmptyInput,
    IncompleteTemplates,
    SubgroupMismatch,
    ValidationError,
)
from .logits import LogitTable
from .ranking import RankTable, assign_ranks

POSITION_TOP = "top"
POSITION_BOTTOM = "bottom"
POSITION_SECOND_BOTTOM = "second_bottom"
POSITIONS = (POSITION_TOP, POSITION_BOTTOM, POSITION_SECOND_BOTTOM)


@dataclass(frozen=True)
class TauResult:
    disease_id: str
    tau: float
    n: int
    sources: tuple[str, str]


def _sign(value) -> int:
    if value > 0:
        return 1
    if value < 0:
        return -1
    return 0


def kendall_tau(
    x: Mapping[str, float],
    y: Mapping[str, float],
    disease_id: str = "ALL",
    sources: tuple[str, str] = ("left", "right"),
) -> TauResult:
    """Tau-a concordance between two rankings of the same subgroup set."""
    keys = sorted(x)
    if set(y) != set(x):
        raise SubgroupMismatch(
            f"rankings cover different subgroups: {sorted(x)!r} vs {sorted(y)!r}"
        )
    n = len(keys)
    if n < 2:
        raise SubgroupMismatch(f"need at least 2 subgroups to compare, got {n}")
    s = 0
    for i in range(n):
        for j in range(i + 1, n):
            s += _sign(x[keys[i]] - x[keys[j]]) * _sign(y[keys[i]] - y[keys[j]])
    return TauResult(disease_id=disease_id, tau=2.0 * s / (n * (n - 1)), n=n, sources=sources)


@dataclass
class DriftReport:
    base_model: str
    aligned_model: str
    language: str | None
    category: str
    per_disease_tau: dict[str, float]
    delta: float
    subgroup_count: int
    incomplete: tuple[str, ...] = ()


def drift(base: RankTable, aligned: RankTable) -> DriftReport:
    """Per-disease tau between a base and an aligned model, plus delta.

    Delta averages only diseases where both tables rank the full subgroup
    universe; partial diseases are reported, never imputed.
    """
    if base.category != aligned.category:
        raise ValidationError(
            f"cannot drift across categories: {base.category!r} vs {aligned.category!r}"
        )
    if base.language != aligned.language:
        raise ValidationError(
            f"cannot drift across languages: {base.language!r} vs {aligned.language!r}"
        )
    base_diseases = set(base.diseases)
    aligned_diseases = set(aligned.diseases)
    if base_diseases != aligned_diseases:
        raise DiseaseSetMismatch(base_diseases - aligned_diseases, aligned_diseases - base_diseases)

    per_disease: dict[str, float] = {}
    incomplete: list[str] = []
    for disease_id in sorted(base_diseases):
        if base.is_partial(disease_id) or aligned.is_partial(disease_id):
            incomplete.append(disease_id)
            continue
        result = kendall_tau(
            base.row(disease_id),
            aligned.row(disease_id),
            disease_id=disease_id,
            sources=(base.source, aligned.source),
        )
        per_disease[disease_id] = result.tau
    if not per_disease:
        raise EmptyInput("no complete diseases shared by both rank tables")
    return DriftReport(
        base_model=base.source,
        aligned_model=aligned.source,
        language=base.language,
        category=base.category,
        per_disease_tau=per_disease,
        delta=math.fsum(per_disease.values()) / len(per_disease),
        subgroup_count=len(base.subgroups),
        incomplete=tuple(incomplete),
    )


def compare_tables(left: RankTable, right: RankTable) -> list[TauResult]:
    """Per-disease tau between two rank tables of the same category.

    Disease sets must match exactly. Per disease, the comparison restricts
    to the subgroups both sides ranked (a partial table compares on its
    shared subgroup set); rank values keep their original gaps, which is
    irrelevant to a sign-product statistic.
    """
    if left.category != right.category:
        raise ValidationError(
            f"cannot compare across categories: {left.category!r} vs {right.category!r}"
        )
    left_diseases = set(left.diseases)
    right_diseases = set(right.diseases)
    if left_diseases != right_diseases:
        raise DiseaseSetMismatch(left_diseases - right_diseases, right_diseases - left_diseases)
    results = []
    for disease_id in sorted(left_diseases):
        lrow = left.row(disease_id)
        rrow = right.row(disease_id)
        shared = sorted(set(lrow) & set(rrow))
        if len(shared) < 2:
            raise SubgroupMismatch(
                f"disease {disease_id!r}: fewer than 2 shared subgroups between "
                f"{left.source!r} and {right.source!r}"
            )
        results.append(
            kendall_tau(
                {s: lrow[s] for s in shared},
                {s: rrow[s] for s in shared},
                disease_id=disease_id,
                sources=(left.source, right.source),
            )
        )
    return results


def mean_tau(results) -> float:
    taus = [r.tau for r in results]
    if not taus:
        raise EmptyInput("no tau results to aggregate")
    return math.fsum(taus) / len(taus)


@dataclass
class PositionTally:
    source: str
    reference: str
    category: str
    position: str
    counts: dict[str, int]
    match_count: int
    ambiguous: tuple[str, ...] = ()


def _position_holder(row: Mapping[str, int], position: str) -> str | None:
    """Unique subgroup at the target rank, or None when ties or gaps make
    the position ambiguous (min-rank ties can leave target ranks vacant)."""
    size = len(row)
    target = {POSITION_TOP: 1, POSITION_BOTTOM: size, POSITION_SECOND_BOTTOM: size - 1}[position]
    holders = [s for s, r in row.items() if r == target]
    if len(holders) == 1:
        return holders[0]
    return None


def position_tally(source: RankTable, reference: RankTable, position: str) -> PositionTally:
    """Count which subgroup holds ``position`` per disease in ``source`` and
    how often it agrees with ``reference``.

    Diseases where either side has no unique holder are excluded from both
    the per-subgroup counts and the match count, and surfaced in
    ``ambiguous``; with untied rankings the counts sum to the disease count.
    """
    if position not in POSITIONS:
        raise ValidationError(f"unknown position {position!r} (expected one of {POSITIONS})")
    if source.category != reference.category:
        raise SubgroupMismatch(
            f"cannot tally across categories: {source.category!r} vs {reference.category!r}"
        )
    source_diseases = set(source.diseases)
    reference_diseases = set(reference.diseases)
    if source_diseases != reference_diseases:
        raise DiseaseSetMismatch(
            source_diseases - reference_diseases, reference_diseases - source_diseases
        )

    counts: dict[str, int] = {}
    match_count = 0
    ambiguous: list[str] = []
    for disease_id in sorted(source_diseases):
        holder = _position_holder(source.row(disease_id), position)
        ref_holder = _position_holder(reference.row(disease_id), position)
        if holder is None or ref_holder is None:
            ambiguous.append(disease_id)
            continue
        counts[holder] = counts.get(holder, 0) + 1
        if holder == ref_holder:
            match_count += 1
    return PositionTally(
        source=source.source,
        reference=reference.source,
        category=source.category,
        position=position,
        counts=counts,
        match_count=match_count,
        ambiguous=tuple(ambiguous),
    )


@dataclass(frozen=True)
class QuartileBin:
    index: int
    diseases: tuple[str, ...]
    mean_tau: float | None
    total_range: tuple[float, float] | None


def quartile_tau(taus: Mapping[str, float], totals: Mapping[str, float]) -> list[QuartileBin]:
    """Mean tau per disease-count quartile.

    Diseases are sorted by ascending total co-occurrence count (ties broken
    by id) and split into four equal-size bins; when the count is not
    divisible by four, lower quartiles take the remainder.
    """
    if not taus:
        raise EmptyInput("no tau values supplied")
    missing = sorted(set(taus) - set(totals))
    if missing:
        raise ValidationError(f"diseases missing a total count: {missing!r}")
    ordered = sorted(taus, key=lambda d: (totals[d], d))
    n = len(ordered)
    base, remainder = divmod(n, 4)
    bins: list[QuartileBin] = []
    cursor = 0
    for i in range(4):
        size = base + (1 if i < remainder else 0)
        members = tuple(ordered[cursor : cursor + size])
        cursor += size
        if members:
            mean = math.fsum(taus[d] for d in members) / len(members)
            span = (min(totals[d] for d in members), max(totals[d] for d in members))
        else:
            mean = None
            span = None
        bins.append(QuartileBin(index=i + 1, diseases=members, mean_tau=mean, total_range=span))
    return bins


@dataclass
class TemplateRobustness:
    model: str
    language: str
    category: str
    metric: str
    per_disease: dict[str, float]
    mean: float
    std_error: float


def _per_template_scores(table: LogitTable, model: str, language: str, category: str):
    """disease -> template -> {subgroup: score}; template sets validated equal."""
    subset = table.subset(model=model, language=language, category=category)
    if not len(subset):
        raise EmptyInput(f"no records for {model}/{language}/{category}")
    scores: dict[str, dict[int, dict[str, float]]] = {}
    for r in subset.records:
        scores.setdefault(r.disease_id, {}).setdefault(r.template_index, {})[r.subgroup_id] = r.score
    expected_templates: tuple[int, ...] | None = None
    for disease_id in sorted(scores):
        templates = tuple(sorted(scores[disease_id]))
        if expected_templates is None:
            expected_templates = templates
        elif templates != expected_templates:
            raise IncompleteTemplates(disease_id, len(templates), len(expected_templates))
    return scores


def _std_error(values) -> float:
    if len(values) < 2:
        return 0.0
    return stdev(values) / math.sqrt(len(values))


def template_top_agreement(table: LogitTable, model: str, language: str, category: str) -> TemplateRobustness:
    """Modal count of the top-ranked subgroup across templates, per disease.

    A template with a tied top contributes to no subgroup. The mean over
    diseases is the headline number (max = template count), with standard
    error across diseases.
    """
    scores = _per_template_scores(table, model, language, category)
    per_disease: dict[str, float] = {}
    for disease_id in sorted(scores):
        tally: dict[str, int] = {}
        for template_index in sorted(scores[disease_id]):
            subgroup_scores = scores[disease_id][template_index]
            best = max(subgroup_scores.values())
            tops = [s for s, v in subgroup_scores.items() if v == best]
            if len(tops) == 1:
                tally[tops[0]] = tally.get(tops[0], 0) + 1
        per_disease[disease_id] = float(max(tally.values())) if tally else 0.0
    values = list(per_disease.values())
    return TemplateRobustness(
        model=model,
        language=language,
        category=category,
        metric="top_agreement",
        per_disease=per_disease,
        mean=math.fsum(values) / len(values),
        std_error=_std_error(values),
    )


def template_pairwise_tau(table: LogitTable, model: str, language: str, category: str) -> TemplateRobustness:
    """Mean tau over all template pairs' subgroup rankings, then over diseases."""
    scores = _per_template_scores(table, model, language, category)
    per_disease: dict[str, float] = {}
    for disease_id in sorted(scores):
        templates = sorted(scores[disease_id])
        if len(templates) < 2:
            raise IncompleteTemplates(disease_id, len(templates), 2)
        rankings = {}
        for t in templates:
            ranks, _ = assign_ranks(scores[disease_id][t])
            rankings[t] = ranks
        taus = []
        for i, ti in enumerate(templates):
            for tj in templates[i + 1 :]:
                taus.append(kendall_tau(rankings[ti], rankings[tj], disease_id=disease_id).tau)
        per_disease[disease_id] = math.fsum(taus) / len(taus)
    values = list(per_disease.values())
    return TemplateRobustness(
        model=model,
        language=language,
        category=category,
        metric="pairwise_tau",
        per_disease=per_disease,
        mean=math.fsum(values) / len(values),
        std_error=_std_error(values),
    )
