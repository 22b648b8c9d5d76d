"""Multigram discovery with a zero-order hidden semi-Markov model.

A word ``O_1..O_T`` is generated as a sequence of variable-length units; the
hidden state of each unit is its length ``d`` and the unit string is drawn
from a per-length distribution ``P(u | d)``. There is no duration or
transition probability, so the likelihood of one segmentation is just the
product of its unit emissions. Training is Baum-Welch over all
segmentations; decoding is Viterbi, optionally with each emission raised to
``1/d`` so that longer units are preferred.
"""

from __future__ import annotations

import logging
import math
from collections import Counter, defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .corpus import CorpusLine, split_words, split_words_with_boundaries

logger = logging.getLogger(__name__)

SPACE_TOKEN = "<sp>"
FLOOR_PROB = 1e-10
NEG_INF = -math.inf
# Relative slack used when comparing Viterbi scores for ties.
TIE_TOL = 1e-12


class UnsegmentableWordError(ValueError):
    """Some position of the word is not covered by any unit of the model."""


@dataclass
class MultigramModel:
    d_max: int
    emissions: dict[str, float]
    language_tag: str = "multi"
    # corpus log-likelihood after each E-step, filled by em_train
    history: list[float] = field(default_factory=list, compare=False, repr=False)

    def __post_init__(self):
        if self.d_max < 1:
            raise ValueError("d_max must be >= 1")
        self._logp = {u: math.log(p) for u, p in self.emissions.items() if p > 0}

    def __len__(self):
        return len(self.emissions)

    def __contains__(self, unit):
        return unit in self.emissions

    def log_prob(self, unit: str) -> float:
        return self._logp.get(unit, NEG_INF)

    def units(self, length: int | None = None) -> list[str]:
        if length is None:
            return sorted(self.emissions)
        return sorted(u for u in self.emissions if len(u) == length)

    def duration_mass(self) -> dict[int, float]:
        mass: dict[int, float] = defaultdict(float)
        for u, p in self.emissions.items():
            mass[len(u)] += p
        return dict(mass)

    def with_fallback_characters(self, chars: Iterable[str]) -> MultigramModel:
        """Copy of the model with unseen characters added at ``FLOOR_PROB``."""
        missing = {c for c in chars if c not in self._logp}
        if not missing:
            return self
        em = dict(self.emissions)
        for c in missing:
            em[c] = FLOOR_PROB
        return MultigramModel(self.d_max, em, self.language_tag)

    def write(self, path):
        with open(path, "w", encoding="utf-8") as f:
            f.write(f"#d_max={self.d_max} lang={self.language_tag}\n")
            for u in sorted(self.emissions, key=lambda u: (len(u), u)):
                f.write(f"{u}\t{len(u)}\t{math.log10(self.emissions[u])!r}\n")

    @classmethod
    def read(cls, path) -> MultigramModel:
        with open(path, encoding="utf-8") as f:
            header = f.readline().rstrip("\n")
            if not header.startswith("#d_max="):
                raise ValueError(f"{path}:1: missing '#d_max=<k> lang=<tag>' header")
            fields = dict(kv.split("=", 1) for kv in header[1:].split())
            d_max = int(fields["d_max"])
            em = {}
            for lineno, line in enumerate(f, 2):
                line = line.rstrip("\n")
                if not line:
                    continue
                parts = line.split("\t")
                if len(parts) != 3:
                    raise ValueError(f"{path}:{lineno}: expected unit<TAB>length<TAB>log10_prob")
                unit, length, lp = parts
                if len(unit) != int(length) or not 1 <= len(unit) <= d_max:
                    raise ValueError(f"{path}:{lineno}: bad unit length for {unit!r}")
                em[unit] = 10.0 ** float(lp)
        return cls(d_max, em, fields.get("lang", "multi"))


@dataclass(frozen=True)
class Segmentation:
    units: tuple[str, ...]
    source_word: str

    def __post_init__(self):
        if "".join(self.units) != self.source_word:
            raise ValueError(f"units {self.units} do not spell {self.source_word!r}")


@dataclass
class TrellisState:
    """Per-word dynamic-programming tables, all in natural-log domain.

    ``delta[t, d]`` is the best score of a prefix of length ``t`` whose last
    unit has length ``d``; ``alpha[t]`` / ``beta[t]`` are the forward and
    backward log-sums at boundary ``t``.
    """

    delta: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray


@dataclass
class MultigramLexicon:
    units: frozenset[str]
    origin_tags: dict[str, frozenset[str]]

    def __len__(self):
        return len(self.units)

    def __contains__(self, unit):
        return unit in self.units

    @classmethod
    def from_tokens(cls, token_sequences: Iterable[Sequence[str]], tag: str) -> MultigramLexicon:
        units = {t for seq in token_sequences for t in seq if t != SPACE_TOKEN}
        return cls(frozenset(units), {u: frozenset([tag]) for u in units})

    @classmethod
    def from_model(cls, model: MultigramModel) -> MultigramLexicon:
        tag = model.language_tag
        return cls(frozenset(model.emissions), {u: frozenset([tag]) for u in model.emissions})


def _logsumexp(values):
    m = max(values)
    if m == NEG_INF:
        return NEG_INF
    return m + math.log(sum(math.exp(v - m) for v in values))


def initialize_model(words: Sequence[str], d_max: int, language_tag: str = "multi") -> MultigramModel:
    """Emissions proportional to substring counts, normalized per length."""
    if d_max < 1:
        raise ValueError("d_max must be >= 1")
    if not words:
        raise ValueError("no words to initialize from")
    counts: Counter[str] = Counter()
    for w in words:
        n = len(w)
        for i in range(n):
            for d in range(1, min(d_max, n - i) + 1):
                counts[w[i : i + d]] += 1
    return _normalize_per_length(counts, d_max, language_tag)


def _normalize_per_length(counts, d_max, language_tag):
    totals: dict[int, float] = defaultdict(float)
    for u, c in counts.items():
        totals[len(u)] += c
    em = {u: c / totals[len(u)] for u, c in counts.items() if c > 0}
    em = {u: p for u, p in em.items() if p > 0}
    return MultigramModel(d_max, em, language_tag)


def forward_backward(word: str, model: MultigramModel):
    """Return ``(trellis, log_likelihood, expected_counts)`` for one word.

    The likelihood sums the product of unit emissions over every
    segmentation of ``word``.
    """
    T = len(word)
    D = model.d_max
    logp = model._logp
    exp, log = math.exp, math.log
    # arcs[t]: (d, log P(word[t-d:t])) for units ending at boundary t
    arcs: list[list[tuple[int, float]]] = [[] for _ in range(T + 1)]
    for t in range(1, T + 1):
        for d in range(1, min(D, t) + 1):
            e = logp.get(word[t - d : t])
            if e is not None:
                arcs[t].append((d, e))

    alpha = [NEG_INF] * (T + 1)
    alpha[0] = 0.0
    delta = np.full((T + 1, D + 1), NEG_INF)
    best = [NEG_INF] * (T + 1)
    best[0] = 0.0
    for t in range(1, T + 1):
        m = NEG_INF
        for d, e in arcs[t]:
            v = alpha[t - d] + e
            if v > m:
                m = v
            delta[t, d] = best[t - d] + e
            if delta[t, d] > best[t]:
                best[t] = delta[t, d]
        if m > NEG_INF:
            alpha[t] = m + log(sum(exp(alpha[t - d] + e - m) for d, e in arcs[t]))

    beta = [NEG_INF] * (T + 1)
    beta[T] = 0.0
    out: list[list[tuple[int, float]]] = [[] for _ in range(T + 1)]
    for t in range(1, T + 1):
        for d, e in arcs[t]:
            out[t - d].append((d, e))
    for t in range(T - 1, -1, -1):
        m = NEG_INF
        for d, e in out[t]:
            v = e + beta[t + d]
            if v > m:
                m = v
        if m > NEG_INF:
            beta[t] = m + log(sum(exp(e + beta[t + d] - m) for d, e in out[t]))

    loglik = alpha[T]
    if loglik == NEG_INF:
        raise UnsegmentableWordError(f"word {word!r} cannot be segmented with the model units")

    counts: dict[str, float] = defaultdict(float)
    for t in range(1, T + 1):
        for d, e in arcs[t]:
            lp = alpha[t - d] + e + beta[t] - loglik
            if lp > NEG_INF:
                counts[word[t - d : t]] += exp(lp)
    return TrellisState(delta, np.array(alpha), np.array(beta)), float(loglik), dict(counts)


def _e_step(items, model):
    """Accumulate weighted expected counts over ``(word, weight)`` pairs."""
    acc: dict[str, float] = defaultdict(float)
    loglik = 0.0
    skipped = []
    for word, weight in items:
        try:
            _, ll, counts = forward_backward(word, model)
        except UnsegmentableWordError:
            skipped.append(word)
            continue
        loglik += weight * ll
        for u, c in counts.items():
            acc[u] += weight * c
    return acc, loglik, skipped


def em_train(
    words: Sequence[str],
    d_max: int,
    max_iters: int = 50,
    rel_tol: float = 1e-6,
    language_tag: str = "multi",
    init: MultigramModel | None = None,
    jobs: int = 1,
) -> MultigramModel:
    """Baum-Welch training of the multigram emission tables.

    ``words`` are running words (repeats count). The corpus log-likelihood of
    each E-step is appended to ``model.history``; iteration stops when its
    relative improvement drops below ``rel_tol`` or after ``max_iters``
    M-steps.
    """
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    if rel_tol <= 0:
        raise ValueError("rel_tol must be > 0")
    types = sorted(Counter(words).items())
    model = init if init is not None else initialize_model([w for w, _ in types], d_max, language_tag)
    history: list[float] = []
    chunks = [types[i::jobs] for i in range(jobs)] if jobs > 1 else [types]
    pool = ProcessPoolExecutor(jobs) if jobs > 1 else None
    try:
        for it in range(max_iters + 1):
            if pool is None:
                acc, loglik, skipped = _e_step(types, model)
            else:
                acc, loglik, skipped = defaultdict(float), 0.0, []
                for a, ll, sk in pool.map(_e_step, chunks, [model] * len(chunks)):
                    for u, c in a.items():
                        acc[u] += c
                    loglik += ll
                    skipped += sk
            if it == 0 and skipped:
                logger.warning("skipping %d unsegmentable word types (e.g. %r)", len(skipped), skipped[0])
            if not acc:
                raise ValueError("no segmentable words in training data")
            history.append(loglik)
            logger.debug("EM iteration %d: log-likelihood %.6f", it, loglik)
            if it > 0:
                prev = history[-2]
                if (loglik - prev) / abs(prev) < rel_tol:
                    break
            if it == max_iters:
                break
            model = _normalize_per_length(acc, d_max, model.language_tag)
    finally:
        if pool is not None:
            pool.shutdown()
    model.history = history
    return model


def viterbi_segment(word: str, model: MultigramModel, length_penalty: bool = True) -> Segmentation:
    """Most probable segmentation of ``word``.

    With ``length_penalty`` each unit scores ``log P(u) / len(u)``, which
    favours longer units. Ties go to the longer final unit, working
    right-to-left.
    """
    T = len(word)
    best = [NEG_INF] * (T + 1)
    back = [0] * (T + 1)
    best[0] = 0.0
    for t in range(1, T + 1):
        for d in range(min(model.d_max, t), 0, -1):
            if best[t - d] == NEG_INF:
                continue
            lp = model.log_prob(word[t - d : t])
            if lp == NEG_INF:
                continue
            s = best[t - d] + (lp / d if length_penalty else lp)
            if best[t] == NEG_INF or s > best[t] + TIE_TOL * max(1.0, abs(best[t])):
                best[t] = s
                back[t] = d
    if best[T] == NEG_INF:
        raise UnsegmentableWordError(f"word {word!r} cannot be segmented with the model units")
    units = []
    t = T
    while t > 0:
        d = back[t]
        units.append(word[t - d : t])
        t -= d
    return Segmentation(tuple(reversed(units)), word)


def prune_model(model: MultigramModel, min_prob: float) -> MultigramModel:
    """Drop units below ``min_prob`` (single characters are always kept)."""
    if not 0 <= min_prob < 1:
        raise ValueError("min_prob must be in [0, 1)")
    if min_prob == 0:
        return model
    kept = {u: p for u, p in model.emissions.items() if len(u) == 1 or p >= min_prob}
    return _normalize_per_length(kept, model.d_max, model.language_tag)


def tokenize_line(line: CorpusLine | str, model: MultigramModel) -> list[str]:
    tokens: list[str] = []
    for gi, group in enumerate(split_words_with_boundaries(line)):
        if gi:
            tokens.append(SPACE_TOKEN)
        for word in group:
            try:
                seg = viterbi_segment(word, model)
            except UnsegmentableWordError:
                seg = viterbi_segment(word, model.with_fallback_characters(word))
            tokens.extend(seg.units)
    return tokens


def tokenize_corpus(lines: Iterable[CorpusLine | str], model: MultigramModel) -> list[list[str]]:
    """Replace each word by its penalized Viterbi segmentation; ``<sp>`` marks spaces."""
    return [tokenize_line(line, model) for line in lines]


def word_tokens(line: CorpusLine | str) -> list[str]:
    """Whole words and detached punctuation, ``<sp>`` between space-separated chunks."""
    tokens: list[str] = []
    for gi, group in enumerate(split_words_with_boundaries(line)):
        if gi:
            tokens.append(SPACE_TOKEN)
        tokens.extend(group)
    return tokens


def char_tokens(line: CorpusLine | str) -> list[str]:
    """One token per character, with spaces written as ``<sp>``."""
    text = line.text if isinstance(line, CorpusLine) else line
    return [SPACE_TOKEN if c == " " else c for c in text]


def merge_lexicons(lexicons: Iterable[MultigramLexicon]) -> MultigramLexicon:
    tags: dict[str, set[str]] = defaultdict(set)
    for lex in lexicons:
        for u in lex.units:
            tags[u] |= lex.origin_tags.get(u, frozenset())
    return MultigramLexicon(frozenset(tags), {u: frozenset(t) for u, t in tags.items()})


def train_language(
    lines: Sequence[CorpusLine], d_max: int, max_iters: int = 50, rel_tol: float = 1e-6, jobs: int = 1
) -> MultigramModel:
    """Train one model on the running words of ``lines``."""

    words = [w for line in lines for w in split_words(line)]
    tag = lines[0].language_tag if lines else "multi"
    return em_train(words, d_max, max_iters, rel_tol, language_tag=tag, jobs=jobs)
