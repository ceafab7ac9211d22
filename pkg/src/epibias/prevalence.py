"""Real-world prevalence tables: the "gold" ranking source.

Rates are age-adjusted cases per 10,000 persons. Input data arrives
pre-adjusted from its survey source; only scale normalization is done
here. Zero rates are legal; negative rates are not. Subgroups with no
data stay absent (missing is not zero), so diseases missing part of the
subgroup universe rank over what they have and carry a partial flag.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

from .errors import EmptyCategory, NegativeRate, ParseError, ZeroDenominator
from .ranking import RankTable, build_rank_table

PREVALENCE_HEADER = ["disease", "subgroup", "category", "rate_per_10k", "source", "year"]


@dataclass(frozen=True)
class PrevalenceRow:
    rate: float
    source: str
    year: int | None


@dataclass
class PrevalenceTable:
    rows: dict[tuple[str, str], PrevalenceRow] = field(default_factory=dict)
    subgroup_categories: dict[str, str] = field(default_factory=dict)

    def rate(self, disease_id: str, subgroup_id: str) -> float:
        return self.rows[(disease_id, subgroup_id)].rate

    def diseases(self) -> tuple[str, ...]:
        return tuple(sorted({d for d, _ in self.rows}))

    def subgroups(self, category: str | None = None) -> tuple[str, ...]:
        if category is None:
            return tuple(sorted(self.subgroup_categories))
        return tuple(sorted(s for s, c in self.subgroup_categories.items() if c == category))

    def sources(self) -> tuple[str, ...]:
        return tuple(sorted({row.source for row in self.rows.values()}))


def load_prevalence(path) -> PrevalenceTable:
    path = Path(path)
    table = PrevalenceTable()
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise ParseError(f"cannot read prevalence {path}: {exc}") from exc
    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != PREVALENCE_HEADER:
            raise ParseError(
                f"{path}: expected header {','.join(PREVALENCE_HEADER)}, "
                f"got {reader.fieldnames!r}"
            )
        for lineno, row in enumerate(reader, start=2):
            descriptor = f"{path}:{lineno}"
            disease = row["disease"]
            subgroup = row["subgroup"]
            category = row["category"]
            if not disease or not subgroup or not category:
                raise ParseError(f"{descriptor}: empty disease/subgroup/category")
            try:
                rate = float(row["rate_per_10k"])
            except (TypeError, ValueError):
                raise ParseError(f"{descriptor}: rate_per_10k is not a number") from None
            if rate < 0:
                raise NegativeRate(f"{descriptor}: {disease}/{subgroup} rate {rate}")
            year_text = (row["year"] or "").strip()
            try:
                year = int(year_text) if year_text else None
            except ValueError:
                raise ParseError(f"{descriptor}: year is not an integer") from None
            key = (disease, subgroup)
            if key in table.rows:
                raise ParseError(f"{descriptor}: duplicate row for {key!r}")
            known = table.subgroup_categories.get(subgroup)
            if known is not None and known != category:
                raise ParseError(
                    f"{descriptor}: subgroup {subgroup!r} listed under two categories"
                )
            table.subgroup_categories[subgroup] = category
            table.rows[key] = PrevalenceRow(rate=rate, source=row["source"], year=year)
    return table


def save_prevalence(table: PrevalenceTable, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PREVALENCE_HEADER)
        for disease, subgroup in sorted(table.rows):
            row = table.rows[(disease, subgroup)]
            writer.writerow(
                [
                    disease,
                    subgroup,
                    table.subgroup_categories[subgroup],
                    format(row.rate, "g"),
                    row.source,
                    "" if row.year is None else row.year,
                ]
            )


def rank_from_prevalence(table: PrevalenceTable, category: str, source: str = "real") -> RankTable:
    """Rank subgroups per disease by descending prevalence rate."""
    universe = table.subgroups(category)
    if not universe:
        raise EmptyCategory(category)
    per_disease: dict[str, dict[str, float]] = {}
    for (disease_id, subgroup_id), row in table.rows.items():
        if table.subgroup_categories[subgroup_id] != category:
            continue
        per_disease.setdefault(disease_id, {})[subgroup_id] = row.rate
    return build_rank_table(
        source=source, category=category, per_disease_values=per_disease, universe=universe
    )


def normalize_rate(raw_rate: float, raw_denominator: float) -> float:
    """Rescale a rate to cases per 10,000 persons."""
    if raw_denominator <= 0:
        raise ZeroDenominator(f"denominator must be positive, got {raw_denominator!r}")
    return raw_rate * (10_000.0 / raw_denominator)
