"""Word normalization and tokenization used by scoring.

A word is normalized by lowercasing, stripping punctuation, and mapping
it through an equivalence table (synonyms/homophones spelled differently
between transcripts, e.g. "ok" and "okay").

Punctuation handling: every Unicode punctuation character is deleted,
with one exception -- an apostrophe flanked by letters or digits stays,
so "don't" remains a single contraction.  Deleting an internal hyphen
joins the parts, so "x-ray" normalizes to "xray" and stays comparable
across transcripts that disagree about hyphenation.
"""

from __future__ import annotations

import unicodedata

from diarfuse.errors import ParseError, ValidationError

_APOSTROPHES = {"'", "’"}


def _strip_word(word: str) -> str:
    """Delete punctuation, keeping apostrophes flanked by word characters."""
    out = []
    for index, ch in enumerate(word):
        if ch in _APOSTROPHES:
            before = word[index - 1] if index > 0 else ""
            after = word[index + 1] if index + 1 < len(word) else ""
            if before.isalnum() and after.isalnum():
                out.append("'")
            continue
        if unicodedata.category(ch).startswith("P"):
            continue
        out.append(ch)
    return "".join(out)


class NormalizationTable:
    """Disjoint equivalence classes of words, each with a canonical form.

    Members and canonicals are themselves stored normalized (lowercased,
    punctuation-stripped) so that lookups and outputs are stable:
    normalizing an already-normalized word is a no-op.
    """

    def __init__(self, classes: list[list[str]] | None = None):
        self._canonical: dict[str, str] = {}
        for cls in classes or []:
            self.add_class(cls)

    def add_class(self, members: list[str]) -> None:
        """Register one equivalence class; the first member is canonical."""
        cleaned = [_strip_word(m.lower()) for m in members]
        cleaned = [m for m in cleaned if m]
        if len(cleaned) < 2:
            raise ValidationError(f"equivalence class needs at least two words, got {members!r}")
        canonical = cleaned[0]
        for member in cleaned:
            existing = self._canonical.get(member)
            if existing is not None and existing != canonical:
                raise ValidationError(
                    f"word {member!r} already belongs to the class of {existing!r}"
                )
            self._canonical[member] = canonical

    def canonical_for(self, word: str) -> str | None:
        return self._canonical.get(word)

    def classes(self) -> list[list[str]]:
        """Reconstruct the classes, canonical first, members sorted."""
        grouped: dict[str, list[str]] = {}
        for member, canonical in self._canonical.items():
            grouped.setdefault(canonical, []).append(member)
        out = []
        for canonical in sorted(grouped):
            members = sorted(grouped[canonical])
            members.remove(canonical)
            out.append([canonical, *members])
        return out

    def __eq__(self, other) -> bool:
        return isinstance(other, NormalizationTable) and self._canonical == other._canonical

    def __len__(self) -> int:
        return len(self._canonical)


# The only equivalences shipped by default; extend via a table file.
DEFAULT_TABLE = NormalizationTable([["okay", "ok"], ["um", "uhm"], ["titers", "titres"]])


def parse_table(data: bytes) -> NormalizationTable:
    """Parse a table file: one comma-separated class per line, first entry canonical."""
    table = NormalizationTable()
    for lineno, raw in enumerate(data.decode("utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        members = [part.strip() for part in line.split(",") if part.strip()]
        try:
            table.add_class(members)
        except ValidationError as exc:
            raise ParseError(f"normalization table line {lineno}: {exc}", line=lineno) from exc
    return table


def emit_table(table: NormalizationTable) -> bytes:
    lines = [",".join(cls) for cls in table.classes()]
    return ("\n".join(lines) + "\n").encode("utf-8")


def normalize_word(word: str, table: NormalizationTable | None = None) -> str:
    """Lowercase, strip punctuation, and map through the equivalence table.

    Returns "" when nothing survives stripping; callers drop empty tokens.
    """
    stripped = _strip_word(word.lower())
    if table is not None:
        canonical = table.canonical_for(stripped)
        if canonical is not None:
            return canonical
    return stripped


def tokenize(text: str, table: NormalizationTable | None = None) -> list[str]:
    """Split on whitespace, normalize each token, and drop empties."""
    tokens = []
    for raw in text.split():
        word = normalize_word(raw, table)
        if word:
            tokens.append(word)
    return tokens
