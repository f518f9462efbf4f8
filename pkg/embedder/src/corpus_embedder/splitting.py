"""Rule-based sentence splitting with abbreviation guards."""

from __future__ import annotations

import re

# Common abbreviations whose trailing period does not end a sentence.
_ABBREVIATIONS = {
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "vs", "etc",
    "e.g", "i.e", "cf", "al", "inc", "ltd", "co", "corp", "no", "vol",
    "fig", "approx", "dept", "est", "min", "max", "u.s", "u.k",
}

_BOUNDARY = re.compile(r"([.!?]+)(\s+|$)")


def _ends_with_abbreviation(chunk: str) -> bool:
    tail = chunk.rstrip(".!?").rsplit(None, 1)
    if not tail:
        return False
    word = tail[-1].lower().lstrip("\"'([{")
    return word in _ABBREVIATIONS


def split_sentences(text: str) -> list[str]:
    """Split on sentence-final punctuation; never empty for non-empty text."""
    if not text or not text.strip():
        raise ValueError("cannot split empty text")
    sentences: list[str] = []
    start = 0
    for match in _BOUNDARY.finditer(text):
        candidate = text[start : match.end(1)].strip()
        if not candidate:
            start = match.end()
            continue
        if match.group(1) == "." and _ends_with_abbreviation(candidate):
            continue  # the period belongs to an abbreviation
        sentences.append(candidate)
        start = match.end()
    remainder = text[start:].strip()
    if remainder:
        sentences.append(remainder)
    if not sentences:
        sentences = [text.strip()]
    return sentences
