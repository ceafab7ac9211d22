"""Tokenization shared by dictionary compilation and corpus scanning.

Keyword phrases and corpus text must pass through the same normalization,
otherwise token-window distances and phrase boundaries would disagree.
"""
from __future__ import annotations

import re

# Maximal runs of Unicode word characters, underscore excluded. Punctuation
# can never appear inside a token, so punctuation-only input yields nothing.
_TOKEN_RE = re.compile(r"[^\W_]+")


def tokenize(raw: str) -> list[str]:
    """Lowercase ``raw`` and split it into word tokens.

    "COVID-19 spreads." -> ["covid", "19", "spreads"]
    """
    return _TOKEN_RE.findall(raw.lower())


def normalize_phrase(phrase: str) -> str:
    """Canonical single-spaced form of a keyword phrase."""
    return " ".join(tokenize(phrase))
