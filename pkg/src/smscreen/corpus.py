"""Corpus ingestion: text normalization, file loading, deduplication.

A corpus is an ordered, immutable collection of labeled posts. Text is
normalized once at load time and every downstream stage works on the
normalized form.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Optional

from .labels import ClassLabel, UnknownLabelError, parse_label

log = logging.getLogger(__name__)


class CorpusFormatError(ValueError):
    """Malformed input file: bad row, missing field, unknown label."""


# Cleaning order is fixed: lowercase -> URLs -> @mentions -> non-alphanumeric
# -> whitespace collapse. URL pattern covers scheme- and www-prefixed tokens.
_URL_RE = re.compile(r"(?:https?://|www\.)\S+")
_MENTION_RE = re.compile(r"@\w+")
_NON_ALNUM_RE = re.compile(r"[^a-z0-9 ]")


def clean_text(raw: str) -> str:
    """Normalize raw post text to lowercase [a-z0-9 ] with single spaces.

    Idempotent: clean_text(clean_text(x)) == clean_text(x).
    """
    s = raw.lower()
    s = _URL_RE.sub(" ", s)
    s = _MENTION_RE.sub(" ", s)
    s = _NON_ALNUM_RE.sub(" ", s)
    return " ".join(s.split())


def content_id(clean: str, label: ClassLabel) -> str:
    """Stable id derived from normalized content and label."""
    digest = hashlib.sha256(f"{clean}\x1f{label.value}".encode("utf-8")).hexdigest()
    return digest[:16]


@dataclass(frozen=True)
class LabeledPost:
    id: str
    raw_text: str
    clean_text: str
    label: ClassLabel
    source_tag: Optional[str] = None

    @classmethod
    def make(
        cls,
        raw_text: str,
        label: ClassLabel,
        post_id: Optional[str] = None,
        source_tag: Optional[str] = None,
    ) -> "LabeledPost":
        clean = clean_text(raw_text)
        return cls(
            id=post_id if post_id is not None else content_id(clean, label),
            raw_text=raw_text,
            clean_text=clean,
            label=label,
            source_tag=source_tag,
        )


class Corpus:
    """Ordered collection of posts with unique ids.

    Immutable after construction; safe to share across threads.
    """

    def __init__(self, posts: Iterable[LabeledPost]):
        self._posts = tuple(posts)
        seen: set[str] = set()
        for p in self._posts:
            if p.id in seen:
                raise ValueError(f"duplicate post id in corpus: {p.id}")
            seen.add(p.id)
        self._class_counts = Counter(p.label for p in self._posts)

    @property
    def posts(self) -> tuple[LabeledPost, ...]:
        return self._posts

    @property
    def class_counts(self) -> dict[ClassLabel, int]:
        return dict(self._class_counts)

    def classes(self) -> tuple[ClassLabel, ...]:
        return tuple(sorted(self._class_counts, key=lambda c: c.value))

    def by_class(self, label: ClassLabel) -> tuple[LabeledPost, ...]:
        return tuple(p for p in self._posts if p.label == label)

    def __len__(self) -> int:
        return len(self._posts)

    def __iter__(self) -> Iterator[LabeledPost]:
        return iter(self._posts)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Corpus) and self._posts == other._posts

    def __repr__(self) -> str:
        return f"Corpus({len(self._posts)} posts, {len(self._class_counts)} classes)"


def _assign_ids(records: list[tuple[str, ClassLabel, Optional[str], Optional[str]]]) -> list[LabeledPost]:
    """Build posts, disambiguating content-hash ids for repeated rows.

    Identical (text, label) rows are legal at load time (dedup is a separate
    op) but corpus ids must stay unique, so repeats get an occurrence suffix.
    """
    posts: list[LabeledPost] = []
    seen: Counter[str] = Counter()
    for raw, label, explicit_id, source in records:
        if explicit_id is not None:
            posts.append(LabeledPost.make(raw, label, post_id=explicit_id, source_tag=source))
            continue
        base = content_id(clean_text(raw), label)
        seen[base] += 1
        pid = base if seen[base] == 1 else f"{base}-{seen[base]}"
        posts.append(LabeledPost.make(raw, label, post_id=pid, source_tag=source))
    return posts


def load_corpus(path: str | Path, fmt: Optional[str] = None) -> Corpus:
    """Load a corpus from CSV (header: text,label) or JSONL ({"text","label"}).

    Unknown labels and malformed rows are rejected with their line number.
    Rows are not deduplicated here.
    """
    path = Path(path)
    if fmt is None:
        fmt = "csv" if path.suffix.lower() == ".csv" else "jsonl"
    if fmt not in ("csv", "jsonl"):
        raise ValueError(f"unsupported corpus format: {fmt}")

    records: list[tuple[str, ClassLabel, Optional[str], Optional[str]]] = []
    if fmt == "csv":
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or not {"text", "label"} <= set(reader.fieldnames):
                raise CorpusFormatError(f"{path}: CSV header must include 'text' and 'label'")
            for lineno, row in enumerate(reader, start=2):
                text, label_str = row.get("text"), row.get("label")
                if text is None or label_str is None:
                    raise CorpusFormatError(f"{path}:{lineno}: missing text or label")
                try:
                    label = parse_label(label_str)
                except UnknownLabelError as e:
                    raise CorpusFormatError(f"{path}:{lineno}: {e}") from None
                records.append((text, label, row.get("id") or None, row.get("source") or None))
    else:
        with path.open(encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as e:
                    raise CorpusFormatError(f"{path}:{lineno}: invalid JSON ({e.msg})") from None
                if not isinstance(obj, dict) or "text" not in obj or "label" not in obj:
                    raise CorpusFormatError(f"{path}:{lineno}: record must have 'text' and 'label'")
                try:
                    label = parse_label(str(obj["label"]))
                except UnknownLabelError as e:
                    raise CorpusFormatError(f"{path}:{lineno}: {e}") from None
                records.append((str(obj["text"]), label, obj.get("id"), obj.get("source")))

    return Corpus(_assign_ids(records))


def save_corpus(c: Corpus, path: str | Path) -> None:
    """Write a corpus as JSONL; load_corpus(save_corpus(c)) round-trips."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for p in c:
            rec: dict = {"id": p.id, "text": p.raw_text, "label": p.label.value}
            if p.source_tag is not None:
                rec["source"] = p.source_tag
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def deduplicate(c: Corpus) -> Corpus:
    """Keep at most one post per distinct clean_text, first occurrence wins.

    The key is text-only: a later post with the same text but a different
    label is dropped with a warning, since cross-split leakage is about the
    text, not the label.
    """
    survivors: list[LabeledPost] = []
    keeper_by_text: dict[str, LabeledPost] = {}
    for p in c:
        kept = keeper_by_text.get(p.clean_text)
        if kept is None:
            keeper_by_text[p.clean_text] = p
            survivors.append(p)
        elif kept.label != p.label:
            log.warning(
                "dropping duplicate text with conflicting label: kept %s (%s), dropped %s (%s)",
                kept.id, kept.label, p.id, p.label,
            )
    return Corpus(survivors)
