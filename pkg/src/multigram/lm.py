"""Backoff n-gram language models with modified Kneser-Ney smoothing.

All probabilities are log10, following the ARPA convention.
"""

from __future__ import annotations

import logging
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .corpus import CorpusLine, split_words

logger = logging.getLogger(__name__)

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"
SP = "<sp>"
SPECIALS = (BOS, EOS, SP, UNK)
# log10 probability written for <s>, which is never predicted
BOS_LOGPROB = -99.0
FALLBACK_DISCOUNT = 0.5


class ArpaFormatError(ValueError):
    pass


@dataclass
class NgramCounts:
    order: int
    counts: dict[tuple[str, ...], int]

    def of_order(self, k: int) -> dict[tuple[str, ...], int]:
        return {g: c for g, c in self.counts.items() if len(g) == k}

    def continuation_counts(self, k: int) -> dict[tuple[str, ...], int]:
        """Number of distinct left extensions of every k-gram."""
        cc: Counter[tuple[str, ...]] = Counter()
        for g in self.counts:
            if len(g) == k + 1:
                cc[g[1:]] += 1
        return dict(cc)


@dataclass
class NgramModel:
    order: int
    vocabulary: frozenset[str]
    entries: dict[tuple[str, ...], tuple[float, float]] = field(repr=False)

    def __post_init__(self):
        self.vocabulary = frozenset(self.vocabulary) | {BOS, EOS, SP, UNK}

    @property
    def predictable(self) -> list[str]:
        """Vocabulary tokens that can follow a context (everything but ``<s>``)."""
        return sorted(self.vocabulary - {BOS})

    def log10_prob(self, word: str, context: Sequence[str] = ()) -> float:
        """``log10 P(word | context)`` with backoff."""
        if word not in self.vocabulary:
            word = UNK
        context = tuple(context)[-(self.order - 1) :] if self.order > 1 else ()
        penalty = 0.0
        while True:
            e = self.entries.get(context + (word,))
            if e is not None:
                return penalty + e[0]
            if not context:
                # only reachable for tokens missing from the unigram table
                return penalty + self.entries.get((UNK,), (-math.inf,))[0]
            c = self.entries.get(context)
            if c is not None:
                penalty += c[1]
            context = context[1:]

    def map_unknown(self, tokens: Iterable[str]) -> list[str]:
        return [t if t in self.vocabulary else UNK for t in tokens]

    def contexts(self) -> list[tuple[str, ...]]:
        return [g for g in self.entries if len(g) < self.order]


def _stream(seqs, concatenate):
    if concatenate:
        s = [BOS]
        for i, seq in enumerate(seqs):
            if i:
                s.append(SP)
            s.extend(seq)
        s.append(EOS)
        yield s
    else:
        for seq in seqs:
            yield [BOS, *seq, EOS]


def count_ngrams(token_sequences: Sequence[Sequence[str]], order: int, concatenate: bool = False) -> NgramCounts:
    """Count all n-grams up to ``order``.

    With ``concatenate`` the sequences are joined with ``<sp>`` into a single
    stream padded once with ``<s>``/``</s>``, so n-grams crossing line
    boundaries are counted; otherwise every sequence is padded separately.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    seqs = [list(s) for s in token_sequences]
    if not seqs:
        raise ValueError("no token sequences to count")
    counts: Counter[tuple[str, ...]] = Counter()
    for s in _stream(seqs, concatenate):
        n = len(s)
        for i in range(n):
            for k in range(1, min(order, i + 1) + 1):
                counts[tuple(s[i - k + 1 : i + 1])] += 1
    return NgramCounts(order, dict(counts))


def _discounts(adjusted: dict, order_k: int):
    n = Counter()
    for c in adjusted.values():
        if c <= 4:
            n[c] += 1
    n1, n2, n3, n4 = n[1], n[2], n[3], n[4]
    try:
        y = n1 / (n1 + 2 * n2)
        d = (1 - 2 * y * n2 / n1, 2 - 3 * y * n3 / n2, 3 - 4 * y * n4 / n3)
    except ZeroDivisionError:
        d = None
    if d is None or not (0 < d[0] < 1 and 0 < d[1] < 2 and 0 < d[2] < 3):
        logger.warning(
            "order %d: degenerate count-of-counts (n1..n4 = %d %d %d %d), using absolute discount %.1f",
            order_k, n1, n2, n3, n4, FALLBACK_DISCOUNT,
        )
        return (FALLBACK_DISCOUNT,) * 3
    return d


def estimate_kneser_ney(counts: NgramCounts, vocabulary: Iterable[str] = ()) -> NgramModel:
    """Interpolated modified Kneser-Ney, stored in backoff form.

    Each order gets its own three discounts. Lower orders use continuation
    counts except for n-grams starting with ``<s>``. The unigram level is
    interpolated with a uniform distribution over the vocabulary, which is
    where ``<unk>`` and any zero-count ``vocabulary`` tokens get their mass.
    """
    N = counts.order
    if not counts.counts:
        raise ValueError("empty counts")
    vocab = {g[0] for g in counts.counts if len(g) == 1} | set(vocabulary) | set(SPECIALS)
    predictable = sorted(vocab - {BOS})

    # adjusted counts per order, excluding n-grams that predict <s>
    adjusted: dict[int, dict[tuple[str, ...], int]] = {}
    for k in range(1, N + 1):
        raw = {g: c for g, c in counts.counts.items() if len(g) == k and g[-1] != BOS}
        if k == N:
            adjusted[k] = raw
        else:
            cont = counts.continuation_counts(k)
            adjusted[k] = {g: (c if g[0] == BOS else cont.get(g, c)) for g, c in raw.items()}

    entries: dict[tuple[str, ...], tuple[float, float]] = {}
    prob: dict[tuple[str, ...], float] = {}
    gamma: dict[tuple[str, ...], float] = {}

    for k in range(1, N + 1):
        adj = adjusted[k]
        D = _discounts(adj, k)
        totals: dict[tuple[str, ...], float] = defaultdict(float)
        nr: dict[tuple[str, ...], list[int]] = defaultdict(lambda: [0, 0, 0])
        for g, c in adj.items():
            h = g[:-1]
            totals[h] += c
            nr[h][min(c, 3) - 1] += 1
        for h, tot in totals.items():
            n = nr[h]
            gamma[h] = (D[0] * n[0] + D[1] * n[1] + D[2] * n[2]) / tot
        if k == 1:
            uniform = 1.0 / len(predictable)
            g0 = gamma.get((), 1.0)
            for w in predictable:
                c = adj.get((w,), 0)
                disc = (c - D[min(c, 3) - 1]) / totals[()] if c else 0.0
                prob[(w,)] = disc + g0 * uniform
        else:
            for g, c in adj.items():
                h = g[:-1]
                lower = _interp_lookup(prob, gamma, g[1:])
                prob[g] = (c - D[min(c, 3) - 1]) / totals[h] + gamma[h] * lower

    for g, p in prob.items():
        bow = gamma.get(g) if len(g) < N else None
        entries[g] = (math.log10(p), math.log10(bow) if bow else 0.0)
    bos_bow = gamma.get((BOS,))
    entries[(BOS,)] = (BOS_LOGPROB, math.log10(bos_bow) if bos_bow else 0.0)
    return NgramModel(N, frozenset(vocab), entries)


def _interp_lookup(prob, gamma, g):
    """Interpolated probability of ``g`` from already-computed lower orders."""
    bw = 1.0
    while g not in prob:
        bw *= gamma.get(g[:-1], 1.0)
        g = g[1:]
    return bw * prob[g]


def train_lm(
    token_sequences: Sequence[Sequence[str]],
    order: int,
    concatenate: bool = True,
    vocabulary: Iterable[str] = (),
) -> NgramModel:
    return estimate_kneser_ney(count_ngrams(token_sequences, order, concatenate), vocabulary)


def score_sequence(model: NgramModel, tokens: Sequence[str]) -> float:
    """log10 P(tokens </s> | <s>); unknown tokens score as ``<unk>``."""
    hist = [BOS]
    total = 0.0
    for w in list(model.map_unknown(tokens)) + [EOS]:
        total += model.log10_prob(w, hist)
        hist.append(w)
    return total


def perplexity(model: NgramModel, token_sequences: Sequence[Sequence[str]]) -> float:
    """Per-token perplexity, counting one ``</s>`` per sequence."""
    if not token_sequences:
        raise ValueError("empty evaluation set")
    total = sum(score_sequence(model, s) for s in token_sequences)
    n = sum(len(s) + 1 for s in token_sequences)
    return 10.0 ** (-total / n)


def is_segmentable(word: str, units, max_len: int | None = None) -> bool:
    """Whether ``word`` is a concatenation of ``units``."""
    if max_len is None:
        max_len = max((len(u) for u in units), default=0)
    ok = [False] * (len(word) + 1)
    ok[0] = True
    for t in range(1, len(word) + 1):
        for d in range(1, min(max_len, t) + 1):
            if ok[t - d] and word[t - d : t] in units:
                ok[t] = True
                break
    return ok[-1]


def _eval_words(eval_lines):
    for line in eval_lines:
        if isinstance(line, (str, CorpusLine)):
            yield from split_words(line)
        else:
            yield from line


def oov_and_coverage(lexicon, eval_lines, word_lexicon=None) -> tuple[float, float]:
    """Return ``(oov_rate, coverage_rate)`` as fractions of running words.

    Coverage is the share of evaluation words that some concatenation of
    ``lexicon`` units spells. The OOV rate is the complement, unless a
    ``word_lexicon`` is given, in which case it is the share of words
    missing from that word list.
    """
    units = frozenset(lexicon) - {SP}
    max_len = max((len(u) for u in units), default=0)
    words = list(_eval_words(eval_lines))
    if not words:
        return 0.0, 1.0
    cache: dict[str, bool] = {}
    covered = 0
    oov = 0
    for w in words:
        if w not in cache:
            cache[w] = is_segmentable(w, units, max_len)
        covered += cache[w]
        if word_lexicon is not None:
            oov += w not in word_lexicon
    n = len(words)
    coverage = covered / n
    return (oov / n if word_lexicon is not None else 1.0 - coverage), coverage


def _fmt(x: float) -> str:
    return repr(float(x))


def write_arpa(model: NgramModel, path) -> None:
    by_order: dict[int, list] = defaultdict(list)
    for g, v in model.entries.items():
        by_order[len(g)].append((g, v))
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n\\data\\\n")
        for k in range(1, model.order + 1):
            f.write(f"ngram {k}={len(by_order[k])}\n")
        for k in range(1, model.order + 1):
            f.write(f"\n\\{k}-grams:\n")
            for g, (lp, bow) in sorted(by_order[k]):
                line = f"{_fmt(lp)}\t{' '.join(g)}"
                if k < model.order:
                    line += f"\t{_fmt(bow)}"
                f.write(line + "\n")
        f.write("\n\\end\\\n")


def read_arpa(path) -> NgramModel:
    with open(path, encoding="utf-8") as f:
        lines = [ln.rstrip("\n") for ln in f]
    i = 0
    while i < len(lines) and lines[i].strip() != "\\data\\":
        i += 1
    if i == len(lines):
        raise ArpaFormatError(f"{path}: missing \\data\\ header")
    i += 1
    declared: dict[int, int] = {}
    while i < len(lines) and lines[i].startswith("ngram "):
        try:
            k, n = lines[i][6:].split("=")
            declared[int(k)] = int(n)
        except ValueError:
            raise ArpaFormatError(f"{path}:{i + 1}: malformed header line {lines[i]!r}") from None
        i += 1
    if not declared:
        raise ArpaFormatError(f"{path}: no 'ngram k=n' header lines")
    order = max(declared)
    entries: dict[tuple[str, ...], tuple[float, float]] = {}
    found: Counter[int] = Counter()
    section = None
    for j in range(i, len(lines)):
        ln = lines[j].strip()
        if not ln:
            continue
        if ln == "\\end\\":
            section = None
            break
        if ln.startswith("\\") and ln.endswith("-grams:"):
            try:
                section = int(ln[1:-7])
            except ValueError:
                raise ArpaFormatError(f"{path}:{j + 1}: bad section header {ln!r}") from None
            if section not in declared:
                raise ArpaFormatError(f"{path}:{j + 1}: section \\{section}-grams: not declared in header")
            continue
        if section is None:
            raise ArpaFormatError(f"{path}:{j + 1}: entry outside any n-gram section")
        parts = ln.split("\t") if "\t" in ln else ln.split()
        if "\t" in ln:
            toks = parts[1].split()
            rest = parts[2:]
        else:
            toks = parts[1 : 1 + section]
            rest = parts[1 + section :]
        if len(toks) != section:
            raise ArpaFormatError(f"{path}:{j + 1}: expected {section} tokens in \\{section}-grams:")
        try:
            lp = float(parts[0])
            bow = float(rest[0]) if rest else 0.0
        except ValueError:
            raise ArpaFormatError(f"{path}:{j + 1}: non-numeric field in \\{section}-grams:") from None
        entries[tuple(toks)] = (lp, bow)
        found[section] += 1
    for k, n in declared.items():
        if found[k] != n:
            raise ArpaFormatError(
                f"{path}: section \\{k}-grams: has {found[k]} entries but header declares ngram {k}={n}"
            )
    vocab = {g[0] for g in entries if len(g) == 1}
    return NgramModel(order, frozenset(vocab), entries)
