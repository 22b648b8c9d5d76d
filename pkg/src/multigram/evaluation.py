"""Error rates, vocabulary coverage, graph complexity tables and scenario runs."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .corpus import CharacterInventory, CorpusLine, build_character_inventory, split_words, unify_inventories
from .decoder import DecodeConfig, DecodeError, decode_many
from .graph import GraphStats, SearchGraph, build_graph, graph_stats
from .lm import BOS, EOS, SP, UNK, oov_and_coverage
from .optical import NoiseSpec, PosteriorLattice, greedy_collapse, synthesize_lattice

SCENARIOS = ("SS", "SU", "US", "UU")
LEXICON_ROW_ORDER = ("words", "m5", "m4", "m3", "m2", "chars")


def edit_distance(reference: Sequence, hypothesis: Sequence) -> tuple[int, int, int, int]:
    """Levenshtein distance and ``(substitutions, deletions, insertions)`` of one best alignment.

    When several alignments are optimal the backtrace prefers a
    substitution (or match), then a deletion, then an insertion.
    """
    ref, hyp = list(reference), list(hypothesis)
    n, m = len(ref), len(hyp)
    d = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        d[i][0] = i
    for j in range(1, m + 1):
        d[0][j] = j
    for i in range(1, n + 1):
        ri = ref[i - 1]
        row, prev = d[i], d[i - 1]
        for j in range(1, m + 1):
            row[j] = min(prev[j - 1] + (ri != hyp[j - 1]), prev[j] + 1, row[j - 1] + 1)
    s = dl = ins = 0
    i, j = n, m
    while i or j:
        if i and j and d[i][j] == d[i - 1][j - 1] + (ref[i - 1] != hyp[j - 1]):
            s += ref[i - 1] != hyp[j - 1]
            i, j = i - 1, j - 1
        elif i and d[i][j] == d[i - 1][j] + 1:
            dl += 1
            i -= 1
        else:
            ins += 1
            j -= 1
    return d[n][m], s, dl, ins


def _as_words(x):
    return x.split() if isinstance(x, str) else list(x)


def wer(pairs: Iterable[tuple]) -> float:
    """Pooled word error rate in percent; strings are split on whitespace."""
    errs = total = 0
    for ref, hyp in pairs:
        r = _as_words(ref)
        errs += edit_distance(r, _as_words(hyp))[0]
        total += len(r)
    if total == 0:
        raise ValueError("reference corpus has no words")
    return 100.0 * errs / total


def cer(pairs: Iterable[tuple[str, str]]) -> float:
    """Pooled character error rate in percent (spaces count as characters)."""
    errs = total = 0
    for ref, hyp in pairs:
        errs += edit_distance(ref, hyp)[0]
        total += len(ref)
    if total == 0:
        raise ValueError("reference corpus has no characters")
    return 100.0 * errs / total


def format_duration(seconds: float) -> str:
    """``mm:ss``; sub-second positive durations round up to 00:01."""
    s = int(round(seconds))
    if seconds > 0 and s == 0:
        s = 1
    return f"{s // 60:02d}:{s % 60:02d}"


@dataclass
class LineResult:
    line_id: str
    reference: str
    hypothesis: str
    word_errors: int
    ref_words: int
    char_errors: int
    ref_chars: int
    error: str | None = None


@dataclass
class EvalReport:
    wer: float
    cer: float
    oov_rate: float
    coverage_rate: float
    lines: list[LineResult] = field(repr=False)
    graph: GraphStats | None
    decode_seconds: float

    @property
    def failed(self) -> list[LineResult]:
        return [ln for ln in self.lines if ln.error is not None]

    @property
    def decode_time(self) -> str:
        return format_duration(self.decode_seconds)

    def to_text(self) -> str:
        rows = [
            ("WER", f"{self.wer:.2f}%"),
            ("CER", f"{self.cer:.2f}%"),
            ("OOV", f"{self.oov_rate:.2f}%"),
            ("coverage", f"{self.coverage_rate:.2f}%"),
            ("lines", str(len(self.lines))),
            ("failed", str(len(self.failed))),
            ("decode time", self.decode_time),
        ]
        if self.graph is not None:
            rows += [("graph states", str(self.graph.states)), ("graph arcs", str(self.graph.arcs))]
        w = max(len(k) for k, _ in rows)
        return "".join(f"{k:<{w}}  {v}\n" for k, v in rows)

    def to_tsv(self) -> str:
        head = "line_id\tword_errors\tref_words\tchar_errors\tref_chars\terror\treference\thypothesis\n"
        body = "".join(
            f"{r.line_id}\t{r.word_errors}\t{r.ref_words}\t{r.char_errors}\t{r.ref_chars}\t{r.error or ''}\t"
            f"{r.reference}\t{r.hypothesis}\n"
            for r in self.lines
        )
        return head + body


def graph_units(graph: SearchGraph) -> set[str]:
    """Lexicon units a graph can emit."""
    syms = graph.fst.osyms.symbols()[1:] if graph.fst.osyms is not None else []
    return set(syms) - {SP, UNK, BOS, EOS}


def score_lines(ids, refs, hyps, errors=None) -> list[LineResult]:
    errors = errors or [None] * len(refs)
    out = []
    for lid, ref, hyp, err in zip(ids, refs, hyps, errors):
        rw = ref.split()
        out.append(LineResult(lid, ref, hyp, edit_distance(rw, hyp.split())[0], len(rw),
                              edit_distance(ref, hyp)[0], len(ref), err))
    return out


def _pooled(lines: list[LineResult]):
    nw = sum(r.ref_words for r in lines)
    nc = sum(r.ref_chars for r in lines)
    if nw == 0:
        raise ValueError("reference corpus has no words")
    return (100.0 * sum(r.word_errors for r in lines) / nw,
            100.0 * sum(r.char_errors for r in lines) / max(nc, 1))


def evaluate_set(
    items: Sequence[tuple[str, PosteriorLattice, str]],
    graph: SearchGraph,
    config: DecodeConfig = DecodeConfig(),
    word_lexicon: Iterable[str] | None = None,
    jobs: int = 1,
) -> EvalReport:
    """Decode ``(line_id, lattice, reference)`` items and pool the errors.

    Lines that fail to decode are scored against an empty hypothesis and
    listed in ``report.failed``. OOV is measured against ``word_lexicon``
    when given, otherwise as the share of words the graph's units cannot
    spell.
    """
    if not items:
        raise ValueError("empty evaluation set")
    ids = [i for i, _, _ in items]
    refs = [r for _, _, r in items]
    t0 = time.perf_counter()
    res = decode_many([lat for _, lat, _ in items], graph, config, jobs)
    seconds = time.perf_counter() - t0
    hyps = [r[0].text if isinstance(r, list) else "" for r in res]
    errs = [None if isinstance(r, list) else f"{type(r).__name__}: {r}" for r in res]
    lines = score_lines(ids, refs, hyps, errs)
    w, c = _pooled(lines)
    wl = set(word_lexicon) if word_lexicon is not None else None
    oov, cov = oov_and_coverage(graph_units(graph), refs, wl)
    return EvalReport(w, c, 100.0 * oov, 100.0 * cov, lines, graph_stats(graph), seconds)


def evaluate_greedy(items: Sequence[tuple[str, PosteriorLattice, str]]) -> EvalReport:
    """Same report for the LM-free greedy collapse baseline."""
    if not items:
        raise ValueError("empty evaluation set")
    t0 = time.perf_counter()
    hyps = [" ".join(greedy_collapse(lat).split()) for _, lat, _ in items]
    seconds = time.perf_counter() - t0
    lines = score_lines([i for i, _, _ in items], [r for _, _, r in items], hyps)
    w, c = _pooled(lines)
    return EvalReport(w, c, 0.0, 100.0, lines, None, seconds)


# ---------------------------------------------------------------------------
# complexity tables


def _row_key(name):
    return LEXICON_ROW_ORDER.index(name) if name in LEXICON_ROW_ORDER else len(LEXICON_ROW_ORDER)


def complexity_rows(graphs: Sequence[SearchGraph | tuple[str, GraphStats]]) -> list[dict]:
    """States, arcs, size and states+arcs reduction versus the word row (or the first row)."""
    items = []
    for g in graphs:
        if isinstance(g, SearchGraph):
            items.append((g.lexicon_type, graph_stats(g)))
        else:
            items.append(tuple(g))
    items.sort(key=lambda it: _row_key(it[0]))
    ref = next((st for name, st in items if name == "words"), items[0][1] if items else None)
    rows = []
    for name, st in items:
        red = 100.0 * (1.0 - st.total / ref.total) if ref and ref.total else 0.0
        rows.append({"lexicon": name, "states": st.states, "arcs": st.arcs,
                     "size_bytes": st.size_bytes, "reduction": red})
    return rows


def complexity_report(graphs: Sequence[SearchGraph | tuple[str, GraphStats]], tsv: bool = False) -> str:
    rows = complexity_rows(graphs)
    if tsv:
        head = "lexicon\tstates\tarcs\tsize_bytes\treduction_pct\n"
        return head + "".join(
            f"{r['lexicon']}\t{r['states']}\t{r['arcs']}\t{r['size_bytes']}\t{r['reduction']:.1f}\n" for r in rows
        )
    lines = [f"{'lexicon':<8} {'states':>10} {'arcs':>10} {'size (MB)':>10} {'reduction':>10}"]
    for r in rows:
        lines.append(
            f"{r['lexicon']:<8} {r['states']:>10,} {r['arcs']:>10,} {r['size_bytes'] / 1e6:>10.2f} {r['reduction']:>9.1f}%"
        )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# specialized vs unified scenarios


@dataclass
class ScenarioResult:
    scenario: str
    language: str
    wer: float
    cer: float
    oov_rate: float
    coverage_rate: float
    stats: GraphStats


def run_scenarios(
    train_tokens: dict[str, list[list[str]]],
    train_lines: dict[str, list[CorpusLine]],
    test_lines: dict[str, list[CorpusLine]],
    lm_factory,
    noise: NoiseSpec = NoiseSpec(0.1),
    config: DecodeConfig = DecodeConfig(),
    lexicon_type: str = "m2",
    jobs: int = 1,
) -> list[ScenarioResult]:
    """Evaluate each language's test set under the four scenarios.

    The first letter chooses the character set (S = that language's own,
    U = union of all languages); the second chooses lexicon and LM (S =
    trained on that language only, U = trained on all languages).
    ``lm_factory(token_sequences, vocabulary)`` returns an ``NgramModel``.
    Test lines with characters outside a specialized set cannot be
    synthesized and are scored against an empty hypothesis.
    """
    langs = sorted(train_tokens)
    invs = {l: build_character_inventory(train_lines[l]) for l in langs}
    uni = invs[langs[0]]
    for l in langs[1:]:
        uni = unify_inventories(uni, invs[l])
    merged = [s for l in langs for s in train_tokens[l]]
    out = []
    for sc in SCENARIOS:
        for lang in langs:
            inv = invs[lang] if sc[0] == "S" else uni
            seqs = train_tokens[lang] if sc[1] == "S" else merged
            out.append(_run_one(sc, lang, inv, seqs, test_lines[lang], lm_factory, noise, config, lexicon_type, jobs))
    return out


def _run_one(sc, lang, inv: CharacterInventory, seqs, test, lm_factory, noise, config, lexicon_type, jobs):
    chars = [SP if c == " " else c for c in inv.characters]
    lex = {t for s in seqs for t in s if all(ch in inv for ch in t.replace(SP, " "))} | set(chars)
    model = lm_factory([[t for t in s if t in lex] for s in seqs], chars)
    graph = build_graph(model, lex, inv, lexicon_type)
    items, skipped = [], []
    for i, line in enumerate(test):
        try:
            lat = synthesize_lattice(line.text, inv, NoiseSpec(noise.confusion_mass, noise.frames_per_char,
                                                               noise.blank_bias, noise.seed + i))
            items.append((f"{lang}{i:05d}", lat, line.text))
        except ValueError:
            skipped.append((f"{lang}{i:05d}", line.text))
    rep_lines = evaluate_set(items, graph, config, jobs=jobs).lines if items else []
    rep_lines += score_lines([s[0] for s in skipped], [s[1] for s in skipped], [""] * len(skipped),
                             ["character outside the inventory"] * len(skipped))
    w, c = _pooled(rep_lines)
    oov, cov = oov_and_coverage(graph_units(graph), test)
    return ScenarioResult(sc, lang, w, c, 100.0 * oov, 100.0 * cov, graph_stats(graph))


def scenario_report(results: Sequence[ScenarioResult]) -> str:
    lines = [f"{'scenario':<9}{'lang':<6}{'WER':>8}{'CER':>8}{'OOV':>8}{'cover':>8}{'states':>9}{'arcs':>10}"]
    for r in results:
        lines.append(f"{r.scenario:<9}{r.language:<6}{r.wer:>7.2f}%{r.cer:>7.2f}%{r.oov_rate:>7.2f}%"
                     f"{r.coverage_rate:>7.2f}%{r.stats.states:>9}{r.stats.arcs:>10}")
    return "\n".join(lines) + "\n"


def oov_table(lexicons: dict[str, Iterable[str]], test_sets: dict[str, Sequence]) -> dict[tuple[str, str], float]:
    """OOV percent (segmentability-based) for every (lexicon name, test set name) pair."""
    out = {}
    for ln, lex in lexicons.items():
        units = set(lex)
        for tn, lines in test_sets.items():
            out[(ln, tn)] = 100.0 * oov_and_coverage(units, lines)[0]
    return out


def word_oov_rate(word_lexicon: Iterable[str], lines: Sequence) -> float:
    """Percent of running words (punctuation detached) missing from ``word_lexicon``."""
    lex = set(word_lexicon)
    words = [w for line in lines for w in split_words(line)]
    if not words:
        raise ValueError("empty evaluation set")
    return 100.0 * sum(w not in lex for w in words) / len(words)
