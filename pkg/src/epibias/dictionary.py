"""Keyword dictionaries for diseases and demographic subgroups.

Dictionaries are curated JSON files with one concept per disease or
subgroup, each carrying per-language display forms and synonym phrase
lists. Loading validates the bundle, and ``compile_matcher`` turns it
into an immutable token-sequence automaton used by the corpus scanner.

Matching is token-based and case-insensitive: a phrase matches only
whole tokens, so "art" never fires inside "heart". Surface forms are
matched without word-sense disambiguation; "white" inside "white blood
cells" is a known false-positive class that callers must keep in mind
when interpreting counts.
"""
from __future__ import annotations

import json
import logging
from collections import deque
from dataclasses import dataclass
from pathlib import Path

from .errors import MissingDisplay, MissingLanguage, ParseError, ValidationError
from .text import normalize_phrase

log = logging.getLogger(__name__)

CATEGORY_DISEASE = "disease"
CATEGORY_RACE = "race_ethnicity"
CATEGORY_GENDER = "gender"
DEMOGRAPHIC_CATEGORIES = (CATEGORY_RACE, CATEGORY_GENDER)

# JSON section name -> concept category.
SECTION_CATEGORIES = {
    "diseases": CATEGORY_DISEASE,
    "race": CATEGORY_RACE,
    "gender": CATEGORY_GENDER,
}
DEFAULT_SECTIONS = ("diseases", "race", "gender")


@dataclass(frozen=True)
class Concept:
    """One canonical disease or demographic subgroup.

    ``synonyms`` maps language code to a tuple of pre-normalized phrases
    (see :func:`epibias.text.normalize_phrase`); ``display`` maps language
    code to the surface form inserted into prompt templates.
    """

    id: str
    category: str
    display: dict[str, str]
    synonyms: dict[str, tuple[str, ...]]

    def display_for(self, language: str) -> str:
        try:
            return self.display[language]
        except KeyError:
            raise MissingDisplay(self.id, language) from None

    def synonyms_for(self, language: str) -> tuple[str, ...]:
        phrases = self.synonyms.get(language, ())
        if not phrases:
            raise MissingLanguage(self.id, language)
        return phrases


@dataclass(frozen=True)
class DictionaryBundle:
    version: str
    diseases: tuple[Concept, ...]
    race: tuple[Concept, ...]
    gender: tuple[Concept, ...]

    def concepts(self, category: str) -> tuple[Concept, ...]:
        if category == CATEGORY_DISEASE:
            return self.diseases
        if category == CATEGORY_RACE:
            return self.race
        if category == CATEGORY_GENDER:
            return self.gender
        raise ValidationError(f"unknown category {category!r}")

    def all_concepts(self) -> tuple[Concept, ...]:
        return self.diseases + self.race + self.gender

    def subgroup_categories(self) -> dict[str, str]:
        """Map subgroup id -> demographic category."""
        return {c.id: c.category for c in self.race + self.gender}

    def sizes(self) -> tuple[int, int, int]:
        return (len(self.diseases), len(self.race), len(self.gender))


def _parse_concept(entry, category: str, section: str) -> Concept:
    if not isinstance(entry, dict):
        raise ParseError(f"section {section!r}: concept entries must be objects")
    try:
        concept_id = entry["id"]
        display = entry["display"]
        synonyms = entry["synonyms"]
    except KeyError as exc:
        raise ParseError(f"section {section!r}: concept missing key {exc}") from None
    if not isinstance(concept_id, str) or not concept_id:
        raise ValidationError(f"section {section!r}: concept id must be a non-empty string")
    if not isinstance(display, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in display.items()
    ):
        raise ParseError(f"concept {concept_id!r}: display must map language to string")
    if not isinstance(synonyms, dict):
        raise ParseError(f"concept {concept_id!r}: synonyms must map language to list")

    norm_synonyms: dict[str, tuple[str, ...]] = {}
    for lang, phrases in synonyms.items():
        if not isinstance(phrases, list) or not all(isinstance(p, str) for p in phrases):
            raise ParseError(f"concept {concept_id!r}: synonyms[{lang!r}] must be a list of strings")
        seen: list[str] = []
        for phrase in phrases:
            norm = normalize_phrase(phrase)
            if not norm:
                raise ValidationError(
                    f"concept {concept_id!r}: synonym {phrase!r} is empty after normalization",
                    concept_ids=(concept_id,),
                )
            if norm not in seen:
                seen.append(norm)
        norm_synonyms[lang] = tuple(seen)
    return Concept(id=concept_id, category=category, display=dict(display), synonyms=norm_synonyms)


def load_dictionary(path, sections: tuple[str, ...] = DEFAULT_SECTIONS) -> DictionaryBundle:
    """Load and validate a dictionary JSON file.

    ``sections`` is the expected category set; a file with extra category
    keys is rejected. Raises :class:`ParseError` for malformed files and
    :class:`ValidationError` for domain violations (duplicate phrases
    within a category, missing "en" synonyms, unknown categories), each
    naming the offending concept ids.
    """
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read dictionary {path}: {exc}") from exc
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ParseError(f"{path}: top level must be an object")

    unknown = set(data) - set(sections) - {"version"}
    if unknown:
        raise ValidationError(f"{path}: unknown category sections {sorted(unknown)!r}")
    version = data.get("version")
    if not isinstance(version, str):
        raise ParseError(f"{path}: missing or non-string 'version'")

    by_section: dict[str, tuple[Concept, ...]] = {}
    for section in sections:
        if section not in SECTION_CATEGORIES:
            raise ValidationError(f"unknown category section {section!r}")
        entries = data.get(section)
        if not isinstance(entries, list) or not entries:
            raise ParseError(f"{path}: section {section!r} must be a non-empty list")
        category = SECTION_CATEGORIES[section]
        concepts = tuple(_parse_concept(e, category, section) for e in entries)
        by_section[section] = concepts

    bundle = DictionaryBundle(
        version=version,
        diseases=by_section.get("diseases", ()),
        race=by_section.get("race", ()),
        gender=by_section.get("gender", ()),
    )
    _validate_bundle(bundle)
    return bundle


def _validate_bundle(bundle: DictionaryBundle) -> None:
    for category in (CATEGORY_DISEASE, CATEGORY_RACE, CATEGORY_GENDER):
        concepts = bundle.concepts(category)
        ids: set[str] = set()
        for c in concepts:
            if c.id in ids:
                raise ValidationError(
                    f"duplicate concept id {c.id!r} in category {category!r}",
                    concept_ids=(c.id,),
                )
            ids.add(c.id)
            if not c.synonyms.get("en"):
                raise ValidationError(
                    f"concept {c.id!r} has no synonyms for corpus language 'en'",
                    concept_ids=(c.id,),
                )

        # Same-category phrase collisions are errors naming both owners.
        owners: dict[str, str] = {}
        for c in concepts:
            for phrases in c.synonyms.values():
                for phrase in phrases:
                    other = owners.get(phrase)
                    if other is not None and other != c.id:
                        raise ValidationError(
                            f"synonym {phrase!r} is claimed by both {other!r} and {c.id!r} "
                            f"in category {category!r}",
                            concept_ids=(other, c.id),
                        )
                    owners[phrase] = c.id

    # Cross-category overlap is legal (categories are counted independently)
    # but worth surfacing.
    phrase_homes: dict[str, list[str]] = {}
    for c in bundle.all_concepts():
        for phrases in c.synonyms.values():
            for phrase in phrases:
                home = f"{c.category}:{c.id}"
                homes = phrase_homes.setdefault(phrase, [])
                if home not in homes:
                    homes.append(home)
    for phrase, homes in sorted(phrase_homes.items()):
        categories = {h.split(":", 1)[0] for h in homes}
        if len(categories) > 1:
            log.warning("phrase %r is shared across categories: %s", phrase, ", ".join(homes))


def save_dictionary(bundle: DictionaryBundle, path) -> None:
    """Write ``bundle`` back to the documented JSON schema."""
    data = {"version": bundle.version}
    for section, category in SECTION_CATEGORIES.items():
        data[section] = [
            {
                "id": c.id,
                "display": c.display,
                "synonyms": {lang: list(phrases) for lang, phrases in c.synonyms.items()},
            }
            for c in bundle.concepts(category)
        ]
    Path(path).write_text(
        json.dumps(data, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )


@dataclass(frozen=True)
class Occurrence:
    """A matched phrase: token span is inclusive on both ends."""

    concept_id: str
    category: str
    start: int
    end: int


class CompiledMatcher:
    """Token-sequence Aho-Corasick automaton over dictionary phrases.

    Immutable after construction and safe to share across scanner workers.
    ``find`` reports, for each (category, start index), only the longest
    matching phrase; overlapping matches at different start indexes are
    all reported.
    """

    def __init__(self, patterns: dict[tuple[str, ...], list[tuple[str, str]]], language: str):
        self.language = language
        self._goto: list[dict[str, int]] = [{}]
        self._fail: list[int] = [0]
        # out[state]: (phrase length, concept id, category) for phrases ending there.
        self._out: list[list[tuple[int, str, str]]] = [[]]
        self.concept_categories: dict[str, str] = {}

        for tokens in sorted(patterns):
            state = 0
            for tok in tokens:
                nxt = self._goto[state].get(tok)
                if nxt is None:
                    self._goto.append({})
                    self._fail.append(0)
                    self._out.append([])
                    nxt = len(self._goto) - 1
                    self._goto[state][tok] = nxt
                state = nxt
            for concept_id, category in sorted(patterns[tokens]):
                self._out[state].append((len(tokens), concept_id, category))
                self.concept_categories[concept_id] = category

        queue: deque[int] = deque()
        for state in self._goto[0].values():
            queue.append(state)
        while queue:
            r = queue.popleft()
            for tok, u in self._goto[r].items():
                queue.append(u)
                f = self._fail[r]
                while f and tok not in self._goto[f]:
                    f = self._fail[f]
                candidate = self._goto[f].get(tok, 0)
                self._fail[u] = candidate if candidate != u else 0
                self._out[u] = self._out[u] + self._out[self._fail[u]]

    def demographic_categories(self) -> dict[str, str]:
        return {
            cid: cat
            for cid, cat in self.concept_categories.items()
            if cat != CATEGORY_DISEASE
        }

    def find(self, tokens) -> list[Occurrence]:
        """All phrase occurrences in a token sequence, longest-match filtered."""
        state = 0
        goto = self._goto
        fail = self._fail
        out = self._out
        raw: list[Occurrence] = []
        for i, tok in enumerate(tokens):
            while state and tok not in goto[state]:
                state = fail[state]
            state = goto[state].get(tok, 0)
            if out[state]:
                for length, concept_id, category in out[state]:
                    raw.append(Occurrence(concept_id, category, i - length + 1, i))
        best: dict[tuple[str, int], Occurrence] = {}
        for occ in raw:
            key = (occ.category, occ.start)
            cur = best.get(key)
            if cur is None or occ.end > cur.end:
                best[key] = occ
        return sorted(best.values(), key=lambda o: (o.start, o.category, o.concept_id))


def compile_matcher(bundle: DictionaryBundle, language: str = "en") -> CompiledMatcher:
    """Compile every synonym phrase of ``bundle`` for ``language``.

    Raises :class:`MissingLanguage` if any concept has no synonyms for the
    requested language.
    """
    patterns: dict[tuple[str, ...], list[tuple[str, str]]] = {}
    for concept in bundle.all_concepts():
        for phrase in concept.synonyms_for(language):
            key = tuple(phrase.split(" "))
            patterns.setdefault(key, []).append((concept.id, concept.category))
    return CompiledMatcher(patterns, language)
