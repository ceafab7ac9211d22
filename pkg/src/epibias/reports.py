"""Deterministic CSV/JSON report emission and re-ingestion.

Every writer sorts its rows (counts by disease, category, subgroup, then
numeric window) and uses ``\n`` line endings, so reruns are byte-identical
and outputs diff cleanly. Rank CSVs round-trip through ``load_rank_csv``
so comparison commands can be chained through files.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

from .errors import ParseError
from .ranking import RankTable
from .scanner import CoOccurrenceMatrix

RANK_COMMENT = "# rank 1 = most prevalent (largest count / mean logit / prevalence rate)"
COUNTS_HEADER = ["disease", "subgroup", "category", "window", "count"]
RANK_HEADER = ["source", "language", "category", "scoring_mode", "disease", "subgroup", "rank", "tied"]


def _count_rows(matrix: CoOccurrenceMatrix):
    diseases = matrix.diseases()
    for disease in diseases:
        entries = []
        for subgroup, category in matrix.subgroup_categories.items():
            for window in matrix.windows:
                entries.append((disease, category, subgroup, window))
        for disease_id, category, subgroup, window in sorted(entries):
            yield {
                "disease": disease_id,
                "subgroup": subgroup,
                "category": category,
                "window": window,
                "count": matrix.count(disease_id, subgroup, window),
            }


def write_counts_csv(matrix: CoOccurrenceMatrix, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=COUNTS_HEADER, lineterminator="\n")
        writer.writeheader()
        for row in _count_rows(matrix):
            writer.writerow(row)


def write_counts_json(matrix: CoOccurrenceMatrix, path) -> None:
    payload = {
        "docs_scanned": matrix.docs_scanned,
        "tokens_scanned": matrix.tokens_scanned,
        "windows": list(matrix.windows),
        "counts": list(_count_rows(matrix)),
    }
    _write_json(payload, path)


def load_counts_csv(path) -> CoOccurrenceMatrix:
    path = Path(path)
    rows = []
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise ParseError(f"cannot read counts {path}: {exc}") from exc
    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != COUNTS_HEADER:
            raise ParseError(f"{path}: expected header {','.join(COUNTS_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            try:
                rows.append(
                    (
                        row["disease"],
                        row["subgroup"],
                        row["category"],
                        int(row["window"]),
                        int(row["count"]),
                    )
                )
            except (TypeError, ValueError, KeyError):
                raise ParseError(f"{path}:{lineno}: malformed counts row") from None
    if not rows:
        raise ParseError(f"{path}: no count rows")
    windows = tuple(sorted({w for _, _, _, w, _ in rows}))
    matrix = CoOccurrenceMatrix(windows=windows)
    for disease, subgroup, category, window, count in rows:
        matrix.register_subgroups({subgroup: category})
        if count < 0:
            raise ParseError(f"{path}: negative count for {(disease, subgroup, window)!r}")
        matrix.counts[(disease, subgroup, window)] = (
            matrix.counts.get((disease, subgroup, window), 0) + count
        )
    return matrix


def write_rank_csv(table: RankTable, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(RANK_COMMENT + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RANK_HEADER)
        for disease_id, subgroup_id in sorted(table.ranks):
            writer.writerow(
                [
                    table.source,
                    table.language or "",
                    table.category,
                    table.scoring_mode or "",
                    disease_id,
                    subgroup_id,
                    table.ranks[(disease_id, subgroup_id)],
                    "true" if (disease_id, subgroup_id) in table.tie_flags else "false",
                ]
            )


def load_rank_csv(path) -> RankTable:
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ParseError(f"cannot read rank table {path}: {exc}") from exc
    rows = list(csv.reader(line for line in lines if not line.startswith("#")))
    if not rows or rows[0] != RANK_HEADER:
        raise ParseError(f"{path}: expected rank header {','.join(RANK_HEADER)}")
    table: RankTable | None = None
    for cells in rows[1:]:
        if len(cells) != len(RANK_HEADER):
            raise ParseError(f"{path}: malformed rank row {cells!r}")
        source, language, category, scoring_mode, disease_id, subgroup_id, rank, tied = cells
        if table is None:
            table = RankTable(
                source=source,
                category=category,
                language=language or None,
                scoring_mode=scoring_mode or None,
            )
        elif (source, category, language or None) != (table.source, table.category, table.language):
            raise ParseError(f"{path}: mixed sources in one rank file")
        try:
            table.ranks[(disease_id, subgroup_id)] = int(rank)
        except ValueError:
            raise ParseError(f"{path}: non-integer rank {rank!r}") from None
        if tied == "true":
            table.tie_flags.add((disease_id, subgroup_id))
    if table is None:
        raise ParseError(f"{path}: no rank rows")
    universe = set(table.subgroups)
    for disease_id in table.diseases:
        missing = tuple(sorted(universe - set(table.row(disease_id))))
        if missing:
            table.partial[disease_id] = missing
    return table


def write_tau_csv(results, mean: float, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["left", "right", "disease", "tau", "n"])
        for r in sorted(results, key=lambda r: r.disease_id):
            writer.writerow([r.sources[0], r.sources[1], r.disease_id, repr(r.tau), r.n])
        if results:
            first = results[0]
            writer.writerow([first.sources[0], first.sources[1], "ALL", repr(mean), len(results)])


def write_compare_json(results, mean: float, tallies, path) -> None:
    payload = {
        "mean_tau": mean,
        "per_disease": [
            {
                "left": r.sources[0],
                "right": r.sources[1],
                "disease": r.disease_id,
                "tau": r.tau,
                "n": r.n,
            }
            for r in sorted(results, key=lambda r: r.disease_id)
        ],
        "position_tallies": [
            {
                "source": t.source,
                "reference": t.reference,
                "category": t.category,
                "position": t.position,
                "counts": {s: t.counts[s] for s in sorted(t.counts)},
                "match_count": t.match_count,
                "ambiguous": list(t.ambiguous),
            }
            for t in tallies
        ],
    }
    _write_json(payload, path)


def write_tally_csv(tallies, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["source", "reference", "category", "position", "subgroup", "count", "match_count"])
        for t in tallies:
            for subgroup in sorted(t.counts):
                writer.writerow(
                    [t.source, t.reference, t.category, t.position, subgroup, t.counts[subgroup], t.match_count]
                )


def write_drift_csv(reports, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["base", "aligned", "language", "category", "delta"])
        for report in reports:
            writer.writerow(
                [
                    report.base_model,
                    report.aligned_model,
                    report.language or "",
                    report.category,
                    repr(report.delta),
                ]
            )


def write_drift_detail_csv(reports, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["base", "aligned", "language", "category", "disease", "tau"])
        for report in reports:
            for disease_id in sorted(report.per_disease_tau):
                writer.writerow(
                    [
                        report.base_model,
                        report.aligned_model,
                        report.language or "",
                        report.category,
                        disease_id,
                        repr(report.per_disease_tau[disease_id]),
                    ]
                )


def write_drift_json(reports, path) -> None:
    payload = [
        {
            "base": r.base_model,
            "aligned": r.aligned_model,
            "language": r.language,
            "category": r.category,
            "delta": r.delta,
            "subgroup_count": r.subgroup_count,
            "per_disease_tau": {d: r.per_disease_tau[d] for d in sorted(r.per_disease_tau)},
            "incomplete": list(r.incomplete),
        }
        for r in reports
    ]
    _write_json(payload, path)


def write_quartiles_csv(bins, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["quartile", "size", "mean_tau", "total_min", "total_max"])
        for b in bins:
            writer.writerow(
                [
                    b.index,
                    len(b.diseases),
                    "" if b.mean_tau is None else repr(b.mean_tau),
                    "" if b.total_range is None else format(b.total_range[0], "g"),
                    "" if b.total_range is None else format(b.total_range[1], "g"),
                ]
            )


def write_robustness_csv(metrics, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["model", "language", "category", "metric", "mean", "std_error"])
        for m in metrics:
            writer.writerow([m.model, m.language, m.category, m.metric, repr(m.mean), repr(m.std_error)])


def write_robustness_detail_csv(metrics, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["model", "language", "category", "metric", "disease", "value"])
        for m in metrics:
            for disease_id in sorted(m.per_disease):
                writer.writerow(
                    [m.model, m.language, m.category, m.metric, disease_id, repr(m.per_disease[disease_id])]
                )


def _write_json(payload, path) -> None:
    Path(path).write_text(
        json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=False) + "\n",
        encoding="utf-8",
    )
