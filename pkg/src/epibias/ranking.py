"""Rank assignment shared by the counts, logits, and prevalence pipelines.

Rank 1 is always the largest value (highest count, mean logit, or
prevalence rate). Ties take the minimum rank of the tied block and are
flagged, so downstream sign-product statistics see equal ranks and
contribute zero for tied pairs.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from .errors import ValidationError


def assign_ranks(values: Mapping[str, float]) -> tuple[dict[str, int], set[str]]:
    """Min-rank assignment: rank = 1 + number of strictly greater values."""
    items = list(values.items())
    ranks: dict[str, int] = {}
    tied: set[str] = set()
    for key, value in items:
        greater = sum(1 for _, other in items if other > value)
        equal = sum(1 for _, other in items if other == value)
        ranks[key] = greater + 1
        if equal > 1:
            tied.add(key)
    return ranks, tied


@dataclass
class RankTable:
    """Per-disease ordering of demographic subgroups for one source.

    ``ranks`` maps (disease_id, subgroup_id) to an integer rank;
    ``tie_flags`` holds the pairs whose rank is shared; ``partial`` maps
    diseases ranked over fewer subgroups than the table's universe to the
    tuple of subgroups they are missing.
    """

    source: str
    category: str
    language: str | None = None
    scoring_mode: str | None = None
    ranks: dict[tuple[str, str], int] = field(default_factory=dict)
    tie_flags: set[tuple[str, str]] = field(default_factory=set)
    partial: dict[str, tuple[str, ...]] = field(default_factory=dict)

    @property
    def diseases(self) -> tuple[str, ...]:
        return tuple(sorted({d for d, _ in self.ranks}))

    @property
    def subgroups(self) -> tuple[str, ...]:
        return tuple(sorted({s for _, s in self.ranks}))

    def row(self, disease_id: str) -> dict[str, int]:
        row = {s: r for (d, s), r in self.ranks.items() if d == disease_id}
        if not row:
            raise ValidationError(f"no ranking for disease {disease_id!r} in {self.source!r}")
        return row

    def is_partial(self, disease_id: str) -> bool:
        return disease_id in self.partial


def build_rank_table(
    source: str,
    category: str,
    per_disease_values: Mapping[str, Mapping[str, float]],
    language: str | None = None,
    scoring_mode: str | None = None,
    universe: tuple[str, ...] | None = None,
) -> RankTable:
    """Rank each disease's subgroups by descending value.

    ``universe`` is the full subgroup set of the category; diseases whose
    value map misses part of it are ranked over what they have and flagged
    as partial. Defaults to the union observed across diseases.
    """
    if universe is None:
        seen: set[str] = set()
        for values in per_disease_values.values():
            seen.update(values)
        universe = tuple(sorted(seen))

    table = RankTable(source=source, category=category, language=language, scoring_mode=scoring_mode)
    for disease_id in sorted(per_disease_values):
        values = per_disease_values[disease_id]
        missing = tuple(s for s in universe if s not in values)
        if missing:
            table.partial[disease_id] = missing
        if not values:
            continue
        ranks, tied = assign_ranks(values)
        for subgroup_id, rank in ranks.items():
            table.ranks[(disease_id, subgroup_id)] = rank
            if subgroup_id in tied:
                table.tie_flags.add((disease_id, subgroup_id))
    return table
