"""Corpus ingestion, normalization and character inventories."""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable

# Detached from words into standalone tokens.
PUNCTUATION = frozenset(".,;:!?\"()[]")


@dataclass(frozen=True)
class CorpusLine:
    text: str
    language_tag: str = "multi"


@dataclass(frozen=True)
class CharacterInventory:
    """Sorted set of distinct characters."""

    characters: tuple[str, ...]
    includes_space: bool = False

    def __post_init__(self):
        chars = tuple(sorted(set(self.characters)))
        object.__setattr__(self, "characters", chars)
        object.__setattr__(self, "includes_space", self.includes_space or " " in chars)

    def __len__(self):
        return len(self.characters)

    def __contains__(self, ch):
        return ch in self.characters

    def __iter__(self):
        return iter(self.characters)

    def union(self, other: CharacterInventory) -> CharacterInventory:
        return unify_inventories(self, other)

    def write(self, path):
        """One character per line; the space is written as ``<space>``."""
        with open(path, "w", encoding="utf-8") as f:
            for i, ch in enumerate(self.characters):
                f.write(f"{_escape(ch)}\t{i}\n")

    @classmethod
    def read(cls, path) -> CharacterInventory:
        chars = []
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, 1):
                line = line.rstrip("\n")
                if not line:
                    continue
                sym = line.split("\t")[0]
                ch = _unescape(sym)
                if len(ch) != 1:
                    raise ValueError(f"{path}:{lineno}: not a single character: {sym!r}")
                chars.append(ch)
        return cls(tuple(chars))


def _escape(ch):
    return "<space>" if ch == " " else ch


def _unescape(sym):
    return " " if sym == "<space>" else sym


def normalize(text: str) -> str:
    """NFC-normalize and collapse runs of whitespace to single spaces."""
    return " ".join(unicodedata.normalize("NFC", text).split())


def load_corpus(path, language_tag: str = "multi") -> list[CorpusLine]:
    """Read a one-sample-per-line UTF-8 file.

    Files with a ``.tsv`` suffix are read as ``language_tag<TAB>text`` and the
    per-line tag overrides ``language_tag``. Blank lines are skipped.
    """
    path = Path(path)
    tagged = path.suffix == ".tsv"
    raw = path.read_bytes()
    out = []
    for lineno, bline in enumerate(raw.split(b"\n"), 1):
        try:
            line = bline.decode("utf-8")
        except UnicodeDecodeError as e:
            raise ValueError(f"{path}:{lineno}: invalid UTF-8 ({e.reason})") from None
        tag = language_tag
        if tagged and line.strip():
            if "\t" not in line:
                raise ValueError(f"{path}:{lineno}: expected language_tag<TAB>text")
            tag, line = line.split("\t", 1)
            tag = tag.strip()
        text = normalize(line)
        if text:
            out.append(CorpusLine(text, tag))
    return out


def sample_corpus(language: str, split: str = "train") -> list[CorpusLine]:
    """Bundled FR/EN sample text; ``split`` is one of train, dev, test."""
    ref = resources.files("multigram") / "data" / f"{language}_{split}.txt"
    with resources.as_file(ref) as p:
        return load_corpus(p, language)


def build_character_inventory(lines: Iterable[CorpusLine | str]) -> CharacterInventory:
    chars = set()
    n = 0
    for line in lines:
        n += 1
        chars.update(line.text if isinstance(line, CorpusLine) else line)
    if n == 0:
        raise ValueError("cannot build a character inventory from no lines")
    return CharacterInventory(tuple(chars))


def unify_inventories(a: CharacterInventory, b: CharacterInventory) -> CharacterInventory:
    return CharacterInventory(a.characters + b.characters, a.includes_space or b.includes_space)


def split_words(line: CorpusLine | str) -> list[str]:
    """Split on spaces, detaching punctuation marks into single-character tokens."""
    text = line.text if isinstance(line, CorpusLine) else line
    return [tok for chunk in text.split(" ") for tok in _detach(chunk)]


def split_words_with_boundaries(line: CorpusLine | str) -> list[list[str]]:
    """Like :func:`split_words` but grouped by space-delimited chunk.

    Tokens inside one group were written without spaces between them
    (e.g. ``["darling", "."]``).
    """
    text = line.text if isinstance(line, CorpusLine) else line
    return [_detach(chunk) for chunk in text.split(" ") if chunk]


def _detach(chunk):
    toks = []
    cur = []
    for ch in chunk:
        if ch in PUNCTUATION:
            if cur:
                toks.append("".join(cur))
                cur = []
            toks.append(ch)
        else:
            cur.append(ch)
    if cur:
        toks.append("".join(cur))
    return toks
