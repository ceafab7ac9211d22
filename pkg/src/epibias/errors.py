"""Exception hierarchy for the toolkit.

Every error message names the offending entity (concept id, record key,
document ordinal, ...) so failures in large batch runs are actionable.
The ``exit_code`` attribute drives the CLI process status: 2 for data
errors, 3 for I/O.
"""
from __future__ import annotations


class AuditError(Exception):
    exit_code = 2


class ParseError(AuditError):
    """A file does not conform to its documented schema."""


class IoError(AuditError):
    """A path cannot be opened or read."""

    exit_code = 3


class ValidationError(AuditError):
    """Structurally valid input violates a domain invariant."""

    def __init__(self, message: str, concept_ids: tuple[str, ...] = ()):
        super().__init__(message)
        self.concept_ids = concept_ids


class MissingLanguage(AuditError):
    def __init__(self, concept_id: str, language: str):
        super().__init__(f"concept {concept_id!r} has no synonyms for language {language!r}")
        self.concept_id = concept_id
        self.language = language


class MissingDisplay(AuditError):
    def __init__(self, concept_id: str, language: str):
        super().__init__(f"concept {concept_id!r} has no display form for language {language!r}")
        self.concept_id = concept_id
        self.language = language


class FormatError(AuditError):
    """A corpus document cannot be decoded; carries the document ordinal."""

    def __init__(self, ordinal: int, source: str, reason: str):
        super().__init__(f"{source}: document {ordinal}: {reason}")
        self.ordinal = ordinal
        self.source = source


class EmptyCategory(AuditError):
    def __init__(self, category: str):
        super().__init__(f"no subgroups known for category {category!r}")
        self.category = category


class DuplicateRecord(AuditError):
    def __init__(self, key):
        super().__init__(f"duplicate logit record for key {key!r}")
        self.key = key


class NonFiniteScore(AuditError):
    def __init__(self, key):
        super().__init__(f"non-finite score for key {key!r}")
        self.key = key


class IncompleteTemplates(AuditError):
    def __init__(self, pair, found: int, expected: int):
        super().__init__(
            f"pair {pair!r} carries {found} templates where {expected} are expected"
        )
        self.pair = pair
        self.found = found
        self.expected = expected


class MixedScoringModes(AuditError):
    def __init__(self, group, modes):
        super().__init__(f"group {group!r} mixes scoring modes {sorted(modes)!r}")
        self.group = group
        self.modes = modes


class MissingSubgroup(AuditError):
    def __init__(self, disease_id: str, subgroup_id: str):
        super().__init__(f"disease {disease_id!r} is missing subgroup {subgroup_id!r}")
        self.disease_id = disease_id
        self.subgroup_id = subgroup_id


class SubgroupMismatch(AuditError):
    """Two rankings do not cover a comparable subgroup set."""


class DiseaseSetMismatch(AuditError):
    def __init__(self, left_only, right_only):
        left_only = tuple(sorted(left_only))
        right_only = tuple(sorted(right_only))
        super().__init__(
            f"disease sets differ: left-only {left_only!r}, right-only {right_only!r}"
        )
        self.left_only = left_only
        self.right_only = right_only


class EmptyInput(AuditError):
    pass


class NegativeRate(AuditError):
    def __init__(self, row: str):
        super().__init__(f"negative prevalence rate in row: {row}")
        self.row = row


class ZeroDenominator(AuditError):
    pass
