"""Token (T), lexicon (L) and grammar (G) transducers and the composed search graph."""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .corpus import CharacterInventory
from .fst import (
    EPS,
    FstError,
    SymbolTable,
    Transducer,
    compose,
    connect,
    determinize,
    minimize,
    relabel,
)
from .lm import BOS, EOS, SP, NgramModel

BLANK = "<blk>"
BACKOFF = "#0"
LN10 = math.log(10.0)


class GraphBuildError(FstError):
    pass


@dataclass
class SearchGraph:
    fst: Transducer
    lexicon_type: str
    lm_order: int
    charset_size: int
    params: dict = field(default_factory=dict)

    @property
    def input_symbols(self) -> SymbolTable:
        return self.fst.isyms

    @property
    def output_symbols(self) -> SymbolTable:
        return self.fst.osyms


@dataclass(frozen=True)
class GraphStats:
    states: int
    arcs: int
    size_bytes: int

    @property
    def total(self) -> int:
        return self.states + self.arcs


def spelling(token: str) -> str:
    return " " if token == SP else token


def char_symbols(inventory: CharacterInventory) -> SymbolTable:
    return SymbolTable(inventory.characters)


def frame_symbols(inventory: CharacterInventory) -> SymbolTable:
    """Frame labels: epsilon, blank, then the inventory in sorted order."""
    return SymbolTable((BLANK, *inventory.characters))


def token_symbols(tokens: Iterable[str]) -> SymbolTable:
    """Token table shared by L's output and G's input; ``#0`` is always last."""
    toks = sorted(set(tokens) - {BOS, EOS, BACKOFF})
    return SymbolTable((*toks, BACKOFF))


def build_token_fst(inventory: CharacterInventory) -> Transducer:
    """CTC collapse: frame labels to characters.

    State 0 means "last frame was blank (or nothing yet)", state ``k`` means
    "last frame was character k". Repeats of the current character emit
    nothing, a blank resets to state 0, any other character is emitted.
    """
    if len(inventory) == 0:
        raise GraphBuildError("empty character inventory")
    isyms = frame_symbols(inventory)
    osyms = char_symbols(inventory)
    V = len(inventory)
    t = Transducer(isyms, osyms)
    t.add_states(V + 1)
    t.start = 0
    blank = isyms.find(BLANK)
    for s in range(V + 1):
        t.add_arc(s, blank, EPS, 0.0, 0)
        for c in range(1, V + 1):
            # frame label of char c is c + 1 (after blank)
            if c == s:
                t.add_arc(s, c + 1, EPS, 0.0, s)
            else:
                t.add_arc(s, c + 1, c, 0.0, c)
        t.set_final(s, 0.0)
    return t


def _disambiguation(spellings: Mapping[str, str]) -> dict[str, int]:
    """Disambiguation index per token (0 = none needed)."""
    by_spelling: dict[str, list[str]] = {}
    for tok, sp in spellings.items():
        by_spelling.setdefault(sp, []).append(tok)
    prefixes = set()
    for sp in by_spelling:
        for i in range(1, len(sp)):
            prefixes.add(sp[:i])
    out = {}
    for sp, toks in by_spelling.items():
        toks.sort()
        need = len(toks) > 1 or sp in prefixes
        for i, tok in enumerate(toks):
            out[tok] = i + 1 if need else 0
    return out


def build_lexicon_fst(
    lexicon: Iterable[str] | Mapping[str, str],
    inventory: CharacterInventory,
    tokens: SymbolTable | None = None,
) -> Transducer:
    """Characters to tokens, closed under concatenation.

    ``lexicon`` is a token collection (spelled as themselves, ``<sp>`` as a
    space) or an explicit token -> spelling map. Tokens that spell a proper
    prefix of another token, or share a spelling, get a trailing ``#k``
    input symbol so that the composition with G stays determinizable.
    """
    if isinstance(lexicon, Mapping):
        spellings = dict(lexicon)
    else:
        spellings = {tok: spelling(tok) for tok in lexicon}
    if not spellings:
        raise GraphBuildError("empty lexicon")
    for tok, sp in spellings.items():
        if not sp:
            raise GraphBuildError(f"token {tok!r} has an empty spelling")
        bad = [c for c in sp if c not in inventory]
        if bad:
            raise GraphBuildError(f"token {tok!r} uses characters outside the inventory: {''.join(bad)!r}")
    osyms = tokens if tokens is not None else token_symbols(spellings)
    missing = [t for t in spellings if t not in osyms]
    if missing:
        raise GraphBuildError(f"tokens missing from the token table: {missing[:5]}")
    disamb = _disambiguation(spellings)
    isyms = SymbolTable((*inventory.characters, BACKOFF))
    for k in range(1, max(disamb.values(), default=0) + 1):
        isyms.add(f"#{k}")

    t = Transducer(isyms, osyms)
    t.add_state()
    t.start = 0
    t.set_final(0, 0.0)
    backoff = isyms.find(BACKOFF)
    t.add_arc(0, backoff, osyms.find(BACKOFF), 0.0, 0)
    for tok in sorted(spellings):
        labels = [isyms.find(c) for c in spellings[tok]]
        if disamb[tok]:
            labels.append(isyms.find(f"#{disamb[tok]}"))
        out = osyms.find(tok)
        prev = 0
        for i, lab in enumerate(labels):
            nxt = 0 if i == len(labels) - 1 else t.add_state()
            t.add_arc(prev, lab, out if i == 0 else EPS, 0.0, nxt)
            prev = nxt
    return t


def build_grammar_fst(model: NgramModel, tokens: SymbolTable | None = None) -> Transducer:
    """Backoff acceptor over tokens with natural-log costs.

    One state per context that has continuations. Token arcs cost
    ``-ln P(w|h)``; each context state has a ``#0``:epsilon arc to its
    backoff state costing ``-ln bow(h)``; ``</s>`` becomes the final weight.
    """
    syms = tokens if tokens is not None else token_symbols(model.vocabulary)
    backoff = syms.find(BACKOFF)
    entries = model.entries
    contexts = {()} | {g[:-1] for g in entries if len(g) >= 2}
    order = sorted(contexts, key=lambda h: (len(h), h))
    sid = {h: i for i, h in enumerate(order)}
    t = Transducer(syms, syms)
    t.add_states(len(order))
    t.start = sid[(BOS,)] if (BOS,) in sid else sid[()]

    def state_for(g):
        while g not in sid:
            g = g[1:]
        return sid[g]

    n_tokens = 0
    for g in sorted(entries, key=lambda g: (len(g), g)):
        w = g[-1]
        if w == BOS:
            continue
        h = g[:-1]
        if h not in sid:
            continue
        cost = -entries[g][0] * LN10
        if w == EOS:
            t.set_final(sid[h], cost)
            continue
        lab = syms.get(w)
        if lab is None:
            continue
        t.add_arc(sid[h], lab, lab, cost, state_for(g[1:] if len(g) >= model.order else g))
        n_tokens += 1
    for h in order:
        if not h:
            continue
        e = entries.get(h)
        bow = e[1] if e is not None else 0.0
        t.add_arc(sid[h], backoff, EPS, -bow * LN10, state_for(h[1:]))
    if n_tokens == 0:
        raise GraphBuildError("language model has an empty vocabulary")
    t.arcsort()
    return t


def build_search_graph(
    T: Transducer,
    L: Transducer,
    G: Transducer,
    inventory: CharacterInventory,
    lexicon_type: str = "unknown",
    lm_order: int = 0,
    **params,
) -> SearchGraph:
    """``S = T o min(det(L o G))`` with disambiguation symbols removed after min."""
    if T.osyms is None or L.isyms is None or L.osyms != G.isyms:
        raise GraphBuildError("lexicon output symbols do not match grammar input symbols")
    nchar = len(inventory) + 1
    if L.isyms.symbols()[:nchar] != T.osyms.symbols():
        raise GraphBuildError("token output symbols do not match lexicon input symbols")
    if G.num_arcs == 0:
        raise GraphBuildError("empty grammar")
    t0 = time.perf_counter()
    LG = compose(L, G)
    if LG.num_states == 0:
        raise GraphBuildError("lexicon and grammar share no token")
    LG = minimize(determinize(LG))
    aux = {i: EPS for i in range(nchar, len(L.isyms))}
    LG = relabel(LG, imap=aux)
    LG.isyms = T.osyms
    S = connect(compose(T, LG))
    S.arcsort()
    # drop the backoff symbol from the output table (it never survives composition)
    osyms = SymbolTable(LG.osyms.symbols()[1:-1])
    S.osyms = osyms
    params = dict(params)
    params.setdefault("build_seconds", round(time.perf_counter() - t0, 3))
    return SearchGraph(S, lexicon_type, lm_order, len(inventory), params)


def build_graph(
    model: NgramModel,
    lexicon: Iterable[str],
    inventory: CharacterInventory,
    lexicon_type: str = "unknown",
    **params,
) -> SearchGraph:
    """Build T, L and G with shared symbol tables and compose them."""
    lexicon = sorted(set(lexicon) - {BOS, EOS})
    syms = token_symbols(set(lexicon) | set(model.vocabulary))
    T = build_token_fst(inventory)
    L = build_lexicon_fst(lexicon, inventory, syms)
    G = build_grammar_fst(model, syms)
    return build_search_graph(T, L, G, inventory, lexicon_type, model.order, **params)


def graph_stats(graph: SearchGraph | Transducer) -> GraphStats:
    """Counts plus the byte size of the stored graph file and its symbol tables."""
    fst = graph.fst if isinstance(graph, SearchGraph) else graph
    size = len(fst.to_text().encode("utf-8"))
    for syms in (fst.isyms, fst.osyms):
        if syms is not None:
            size += len(syms.to_text().encode("utf-8"))
    return GraphStats(fst.num_states, fst.num_arcs, size)


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = int(epoch) if epoch and epoch.isdigit() else int(time.time())
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(t))


def save_graph(graph: SearchGraph, directory) -> Path:
    """Write ``graph.fst``, ``isyms.txt``, ``osyms.txt`` and ``meta.txt``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    graph.fst.write(d / "graph.fst", d / "isyms.txt", d / "osyms.txt")
    meta = {
        "lexicon_type": graph.lexicon_type,
        "lm_order": graph.lm_order,
        "charset_size": graph.charset_size,
        "timestamp": _timestamp(),
    }
    for k, v in sorted(graph.params.items()):
        if k != "build_seconds":
            meta[k] = v
    with open(d / "meta.txt", "w", encoding="utf-8") as f:
        for k, v in meta.items():
            f.write(f"{k}={v}\n")
    return d


def load_graph(directory) -> SearchGraph:
    d = Path(directory)
    for name in ("graph.fst", "isyms.txt", "osyms.txt", "meta.txt"):
        if not (d / name).is_file():
            raise FileNotFoundError(f"{d / name}: missing search-graph file")
    fst = Transducer.read(d / "graph.fst", d / "isyms.txt", d / "osyms.txt")
    meta = {}
    with open(d / "meta.txt", encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{d / 'meta.txt'}:{lineno}: expected key=value")
            k, v = line.split("=", 1)
            meta[k] = v
    try:
        lexicon_type = meta.pop("lexicon_type")
        lm_order = int(meta.pop("lm_order"))
        charset_size = int(meta.pop("charset_size"))
    except (KeyError, ValueError) as e:
        raise ValueError(f"{d / 'meta.txt'}: bad or missing field ({e})") from None
    if fst.isyms is not None and len(fst.isyms) != charset_size + 2:
        raise ValueError(f"{d}: input symbol table does not match charset_size={charset_size}")
    return SearchGraph(fst, lexicon_type, lm_order, charset_size, meta)
