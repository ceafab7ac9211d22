"""Corpus scanning: tokenize documents and count disease-demographic
co-occurrences within configurable token windows.

A co-occurrence is a disease mention and a demographic mention whose
start-token indexes lie within ``W`` tokens of each other. Counting is
either per mention pair (default) or per document, chosen by
``WindowConfig.dedup_mode``. Counts are plain mergeable dictionaries, so
corpus scans parallelize by document with no shared mutable state and the
result is independent of worker count and document order.
"""
from __future__ import annotations

import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .corpus import RawDocument
from .dictionary import CATEGORY_DISEASE, CompiledMatcher
from .errors import EmptyCategory, ValidationError
from .ranking import RankTable, build_rank_table
from .text import tokenize

DEDUP_MENTION_PAIRS = "mention_pairs"
DEDUP_PER_DOCUMENT = "per_document"
DEFAULT_WINDOWS = (50, 100, 250)


@dataclass(frozen=True)
class TokenStream:
    tokens: tuple[str, ...]
    source_doc_id: str = ""


def normalize_text(raw: str, doc_id: str = "") -> TokenStream:
    """Lowercase, split on whitespace/punctuation, drop punctuation-only tokens."""
    return TokenStream(tokens=tuple(tokenize(raw)), source_doc_id=doc_id)


@dataclass(frozen=True)
class WindowConfig:
    windows: tuple[int, ...] = DEFAULT_WINDOWS
    dedup_mode: str = DEDUP_MENTION_PAIRS

    def __post_init__(self):
        if not self.windows:
            raise ValidationError("at least one window size is required")
        if any(w <= 0 for w in self.windows):
            raise ValidationError(f"window sizes must be positive: {self.windows!r}")
        if list(self.windows) != sorted(set(self.windows)):
            raise ValidationError(f"window sizes must be strictly increasing: {self.windows!r}")
        if self.dedup_mode not in (DEDUP_MENTION_PAIRS, DEDUP_PER_DOCUMENT):
            raise ValidationError(f"unknown dedup_mode {self.dedup_mode!r}")


@dataclass
class CoOccurrenceMatrix:
    """Counts indexed by (disease_id, subgroup_id, window), mergeable.

    ``subgroup_categories`` records every demographic subgroup the matcher
    knew about, including those that never co-occurred, so rankings can
    zero-fill instead of silently dropping subgroups.
    """

    windows: tuple[int, ...]
    counts: dict[tuple[str, str, int], int] = field(default_factory=dict)
    subgroup_categories: dict[str, str] = field(default_factory=dict)
    docs_scanned: int = 0
    tokens_scanned: int = 0

    def count(self, disease_id: str, subgroup_id: str, window: int) -> int:
        return self.counts.get((disease_id, subgroup_id, window), 0)

    def add_pair(self, disease_id: str, subgroup_id: str, window: int, n: int = 1) -> None:
        if n:
            key = (disease_id, subgroup_id, window)
            self.counts[key] = self.counts.get(key, 0) + n

    def register_subgroups(self, categories: dict[str, str]) -> None:
        for subgroup_id, category in categories.items():
            known = self.subgroup_categories.get(subgroup_id)
            if known is not None and known != category:
                raise ValidationError(
                    f"subgroup {subgroup_id!r} registered under two categories: "
                    f"{known!r} and {category!r}"
                )
            self.subgroup_categories[subgroup_id] = category

    def merge_in(self, other: "CoOccurrenceMatrix") -> None:
        if self.windows != other.windows:
            raise ValidationError(
                f"cannot merge matrices with windows {self.windows!r} and {other.windows!r}"
            )
        self.register_subgroups(other.subgroup_categories)
        for key, n in other.counts.items():
            self.counts[key] = self.counts.get(key, 0) + n
        self.docs_scanned += other.docs_scanned
        self.tokens_scanned += other.tokens_scanned

    def diseases(self) -> tuple[str, ...]:
        return tuple(sorted({d for d, _, _ in self.counts}))

    def subgroups(self, category: str | None = None) -> tuple[str, ...]:
        if category is None:
            return tuple(sorted(self.subgroup_categories))
        return tuple(sorted(s for s, c in self.subgroup_categories.items() if c == category))

    def nonzero(self) -> dict[tuple[str, str, int], int]:
        """Counts with explicit zero entries dropped, for comparisons."""
        return {k: v for k, v in self.counts.items() if v}


def merge(a: CoOccurrenceMatrix, b: CoOccurrenceMatrix) -> CoOccurrenceMatrix:
    out = CoOccurrenceMatrix(windows=a.windows)
    out.merge_in(a)
    out.merge_in(b)
    return out


def scan_document(doc: TokenStream, matcher: CompiledMatcher, cfg: WindowConfig) -> CoOccurrenceMatrix:
    """Count co-occurrences in one document.

    Window distance is measured between phrase start indexes, so a
    multi-token phrase is located at its first token. One disease mention
    may pair with many demographic mentions; there is no 1:1 assignment.
    """
    matrix = CoOccurrenceMatrix(windows=cfg.windows)
    matrix.register_subgroups(matcher.demographic_categories())
    matrix.docs_scanned = 1
    matrix.tokens_scanned = len(doc.tokens)

    occurrences = matcher.find(doc.tokens)
    disease_mentions = [o for o in occurrences if o.category == CATEGORY_DISEASE]
    demo_mentions = [o for o in occurrences if o.category != CATEGORY_DISEASE]
    if not disease_mentions or not demo_mentions:
        return matrix

    if cfg.dedup_mode == DEDUP_MENTION_PAIRS:
        for d in disease_mentions:
            for s in demo_mentions:
                distance = abs(d.start - s.start)
                for window in cfg.windows:
                    if distance <= window:
                        matrix.add_pair(d.concept_id, s.concept_id, window)
    else:
        seen: set[tuple[str, str, int]] = set()
        for d in disease_mentions:
            for s in demo_mentions:
                distance = abs(d.start - s.start)
                for window in cfg.windows:
                    if distance <= window:
                        seen.add((d.concept_id, s.concept_id, window))
        for key in seen:
            matrix.counts[key] = 1
    return matrix


def count_corpus(
    docs,
    matcher: CompiledMatcher,
    cfg: WindowConfig,
    parallelism: int = 1,
    progress=None,
    progress_every: int = 2000,
) -> CoOccurrenceMatrix:
    """Scan an iterable of :class:`RawDocument` and merge the results.

    Equal to the elementwise sum of ``scan_document`` over all documents;
    the outcome is independent of ``parallelism`` and of document order.
    ``progress`` is an optional callback receiving throughput dicts on a
    side channel every ``progress_every`` documents.
    """
    total = CoOccurrenceMatrix(windows=cfg.windows)
    total.register_subgroups(matcher.demographic_categories())
    started = time.perf_counter()

    def work(doc: RawDocument) -> CoOccurrenceMatrix:
        return scan_document(normalize_text(doc.text, doc.doc_id), matcher, cfg)

    def note_progress():
        if progress is not None and progress_every and total.docs_scanned % progress_every == 0:
            elapsed = max(time.perf_counter() - started, 1e-9)
            progress(
                {
                    "docs": total.docs_scanned,
                    "tokens": total.tokens_scanned,
                    "docs_per_s": round(total.docs_scanned / elapsed, 1),
                    "tokens_per_s": round(total.tokens_scanned / elapsed, 1),
                }
            )

    if parallelism <= 1:
        for doc in docs:
            total.merge_in(work(doc))
            note_progress()
        return total

    # Bounded submission window: keeps memory flat on long corpora while
    # preserving a deterministic merge (merging is commutative anyway).
    pending: deque = deque()
    docs_iter = iter(docs)
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        exhausted = False
        while pending or not exhausted:
            while not exhausted and len(pending) < parallelism * 4:
                try:
                    doc = next(docs_iter)
                except StopIteration:
                    exhausted = True
                    break
                pending.append(pool.submit(work, doc))
            if pending:
                total.merge_in(pending.popleft().result())
                note_progress()
    return total


def rank_from_counts(
    matrix: CoOccurrenceMatrix, category: str, window: int, source: str = "counts"
) -> RankTable:
    """Rank subgroups per disease by descending co-occurrence count."""
    if window not in matrix.windows:
        raise ValidationError(f"window {window} not present (have {matrix.windows!r})")
    subgroups = matrix.subgroups(category)
    if not subgroups:
        raise EmptyCategory(category)
    per_disease = {
        disease: {s: matrix.count(disease, s, window) for s in subgroups}
        for disease in matrix.diseases()
    }
    return build_rank_table(source=source, category=category, per_disease_values=per_disease, universe=subgroups)
