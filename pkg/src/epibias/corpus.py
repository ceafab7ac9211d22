"""Streaming JSONL corpus input.

One document per line, ``{"text": str, "meta": {...}}``. Shards ending in
``.gz`` or ``.zst`` are decoded transparently by extension (zstd requires
the optional ``zstandard`` package).
"""
from __future__ import annotations

import gzip
import io
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import FormatError, IoError


@dataclass(frozen=True)
class RawDocument:
    doc_id: str
    text: str


def open_text(path: Path):
    suffix = path.suffix.lower()
    try:
        if suffix == ".gz":
            return io.TextIOWrapper(gzip.open(path, "rb"), encoding="utf-8")
        if suffix == ".zst":
            try:
                import zstandard
            except ImportError:
                raise IoError(
                    f"{path}: .zst shards need the optional 'zstandard' package "
                    "(pip install epibias[zstd])"
                ) from None
            fh = zstandard.ZstdDecompressor().stream_reader(open(path, "rb"))
            return io.TextIOWrapper(fh, encoding="utf-8")
        return open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot open corpus shard {path}: {exc}") from exc


class CorpusReader:
    """Iterate documents across shards, tracking skips under lenient mode.

    Strict mode raises :class:`FormatError` on the first undecodable line;
    lenient mode records (shard, ordinal, reason) in ``skipped`` and keeps
    going. Ordinals are per-shard line numbers, starting at 1.
    """

    def __init__(self, paths, lenient: bool = False):
        self.paths = [Path(p) for p in paths]
        self.lenient = lenient
        self.skipped: list[tuple[str, int, str]] = []

    def __iter__(self):
        for path in self.paths:
            with open_text(path) as fh:
                ordinal = 0
                while True:
                    try:
                        line = fh.readline()
                    except (OSError, EOFError, UnicodeDecodeError) as exc:
                        raise IoError(f"error reading shard {path}: {exc}") from exc
                    if not line:
                        break
                    ordinal += 1
                    if not line.strip():
                        continue
                    try:
                        doc = self._parse(line, path, ordinal)
                    except FormatError as exc:
                        if not self.lenient:
                            raise
                        self.skipped.append((str(path), ordinal, str(exc)))
                        continue
                    yield doc

    def _parse(self, line: str, path: Path, ordinal: int) -> RawDocument:
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(ordinal, str(path), f"invalid JSON ({exc.msg})") from exc
        if not isinstance(record, dict) or not isinstance(record.get("text"), str):
            raise FormatError(ordinal, str(path), "missing string 'text' field")
        meta = record.get("meta")
        doc_id = ""
        if isinstance(meta, dict):
            doc_id = str(meta.get("id", ""))
        if not doc_id:
            doc_id = f"{path.name}#{ordinal}"
        return RawDocument(doc_id=doc_id, text=record["text"])


def write_corpus(documents, path: Path) -> None:
    """Write documents as corpus JSONL (plain or .gz by extension)."""
    path = Path(path)
    opener = gzip.open if path.suffix.lower() == ".gz" else open
    with opener(path, "wt", encoding="utf-8") as fh:
        for doc in documents:
            fh.write(json.dumps({"text": doc.text, "meta": {"id": doc.doc_id}}, ensure_ascii=False))
            fh.write("\n")
