"""Weighted finite-state transducers over the tropical semiring.

Weights are negative log probabilities: path weights add, alternative paths
take the minimum, ``0.0`` is the multiplicative identity and ``inf`` the
zero. Label ``0`` is epsilon in every symbol table.
"""

from __future__ import annotations

import heapq
import math
from collections import defaultdict, deque
from dataclasses import dataclass
from itertools import count
from typing import Iterable, NamedTuple, Sequence

EPS = 0
INF = math.inf
# residual/arc weights closer than this are treated as equal
WEIGHT_QUANTUM = 1e-9
DETERMINIZE_BUDGET = 50


class FstError(ValueError):
    pass


class DeterminizationError(FstError):
    pass


class SymbolTable:
    """Bidirectional symbol <-> id map with ``<eps>`` fixed at id 0."""

    def __init__(self, symbols: Iterable[str] = (), eps: str = "<eps>"):
        self._syms = [eps]
        self._ids = {eps: 0}
        for s in symbols:
            self.add(s)

    def add(self, sym: str) -> int:
        i = self._ids.get(sym)
        if i is None:
            i = len(self._syms)
            self._syms.append(sym)
            self._ids[sym] = i
        return i

    def find(self, sym: str) -> int:
        return self._ids[sym]

    def get(self, sym: str, default=None):
        return self._ids.get(sym, default)

    def __getitem__(self, i: int) -> str:
        return self._syms[i]

    def __contains__(self, sym):
        return sym in self._ids

    def __len__(self):
        return len(self._syms)

    def __iter__(self):
        return iter(self._syms)

    def __eq__(self, other):
        return isinstance(other, SymbolTable) and self._syms == other._syms

    def __repr__(self):
        return f"SymbolTable({len(self)} symbols)"

    def symbols(self) -> list[str]:
        return list(self._syms)

    def copy(self) -> SymbolTable:
        t = SymbolTable()
        t._syms = list(self._syms)
        t._ids = dict(self._ids)
        return t

    def to_text(self) -> str:
        return "".join(f"{_esc(s)}\t{i}\n" for i, s in enumerate(self._syms))

    def write(self, path):
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.to_text())

    @classmethod
    def read(cls, path) -> SymbolTable:
        pairs = []
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, 1):
                line = line.rstrip("\n")
                if not line:
                    continue
                parts = line.split("\t")
                if len(parts) != 2 or not parts[1].isdigit():
                    raise FstError(f"{path}:{lineno}: expected symbol<TAB>id")
                pairs.append((int(parts[1]), _unesc(parts[0])))
        pairs.sort()
        if not pairs or pairs[0][0] != 0 or [i for i, _ in pairs] != list(range(len(pairs))):
            raise FstError(f"{path}: ids must be dense and start at 0")
        t = cls(eps=pairs[0][1])
        for _, s in pairs[1:]:
            t._ids[s] = len(t._syms)
            t._syms.append(s)
        return t


def _esc(s):
    return "<space>" if s == " " else s


def _unesc(s):
    return " " if s == "<space>" else s


class Arc(NamedTuple):
    ilabel: int
    olabel: int
    weight: float
    nextstate: int


class Transducer:
    def __init__(self, isyms: SymbolTable | None = None, osyms: SymbolTable | None = None):
        self.isyms = isyms
        self.osyms = osyms
        self.start = -1
        self._arcs: list[list[Arc]] = []
        self.finals: dict[int, float] = {}

    # construction
    def add_state(self) -> int:
        self._arcs.append([])
        return len(self._arcs) - 1

    def add_states(self, n: int) -> None:
        self._arcs.extend([] for _ in range(n))

    def add_arc(self, state: int, ilabel: int, olabel: int, weight: float, nextstate: int) -> None:
        self._arcs[state].append(Arc(ilabel, olabel, float(weight), nextstate))

    def set_final(self, state: int, weight: float = 0.0) -> None:
        if weight == INF:
            self.finals.pop(state, None)
        else:
            self.finals[state] = float(weight)

    def set_start(self, state: int) -> None:
        self.start = state

    # inspection
    @property
    def num_states(self) -> int:
        return len(self._arcs)

    @property
    def num_arcs(self) -> int:
        return sum(len(a) for a in self._arcs)

    def states(self) -> range:
        return range(len(self._arcs))

    def arcs(self, state: int) -> list[Arc]:
        return self._arcs[state]

    def final(self, state: int) -> float:
        return self.finals.get(state, INF)

    def is_final(self, state: int) -> bool:
        return state in self.finals

    def arcsort(self, by: str = "ilabel") -> Transducer:
        key = (lambda a: (a.ilabel, a.olabel, a.nextstate)) if by == "ilabel" else (
            lambda a: (a.olabel, a.ilabel, a.nextstate)
        )
        for arcs in self._arcs:
            arcs.sort(key=key)
        return self

    def copy(self) -> Transducer:
        t = Transducer(self.isyms, self.osyms)
        t.start = self.start
        t._arcs = [list(a) for a in self._arcs]
        t.finals = dict(self.finals)
        return t

    def is_deterministic(self) -> bool:
        for arcs in self._arcs:
            seen = set()
            for a in arcs:
                if a.ilabel == EPS or a.ilabel in seen:
                    return False
                seen.add(a.ilabel)
        return True

    def has_input_epsilons(self) -> bool:
        return any(a.ilabel == EPS for arcs in self._arcs for a in arcs)

    def __repr__(self):
        return f"Transducer({self.num_states} states, {self.num_arcs} arcs)"

    # AT&T text format
    def to_text(self) -> str:
        lines = []
        order = list(self.states())
        if 0 <= self.start < len(order):
            order.remove(self.start)
            order.insert(0, self.start)
        for s in order:
            for a in self._arcs[s]:
                lines.append(f"{s}\t{a.nextstate}\t{a.ilabel}\t{a.olabel}\t{a.weight:.9g}\n")
        finals = [f"{s}\t{w:.9g}\n" for s, w in sorted(self.finals.items())]
        if self.start in self.finals and not self._arcs[self.start]:
            lines = [f"{self.start}\t{self.finals[self.start]:.9g}\n"] + lines
            finals = [ln for ln in finals if not ln.startswith(f"{self.start}\t")]
        return "".join(lines + finals)

    @classmethod
    def from_text(cls, text: str, isyms=None, osyms=None, source: str = "<string>") -> Transducer:
        t = cls(isyms, osyms)
        arcs = []
        finals = []
        n = 0
        start = -1
        for lineno, line in enumerate(text.split("\n"), 1):
            if not line.strip():
                continue
            f = line.split("\t")
            try:
                if len(f) == 5:
                    s, d, i, o, w = int(f[0]), int(f[1]), int(f[2]), int(f[3]), float(f[4])
                    arcs.append((s, i, o, w, d))
                    n = max(n, s + 1, d + 1)
                elif len(f) in (1, 2):
                    s = int(f[0])
                    w = float(f[1]) if len(f) == 2 else 0.0
                    finals.append((s, w))
                    n = max(n, s + 1)
                else:
                    raise ValueError
            except ValueError:
                raise FstError(f"{source}:{lineno}: malformed line {line!r}") from None
            if start < 0:
                start = s
        t.add_states(n)
        t.start = start
        for s, i, o, w, d in arcs:
            t.add_arc(s, i, o, w, d)
        for s, w in finals:
            t.set_final(s, w)
        return t

    def write(self, path, isyms_path=None, osyms_path=None) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.to_text())
        if isyms_path is not None and self.isyms is not None:
            self.isyms.write(isyms_path)
        if osyms_path is not None and self.osyms is not None:
            self.osyms.write(osyms_path)

    @classmethod
    def read(cls, path, isyms_path=None, osyms_path=None) -> Transducer:
        isyms = SymbolTable.read(isyms_path) if isyms_path else None
        osyms = SymbolTable.read(osyms_path) if osyms_path else None
        with open(path, encoding="utf-8") as f:
            return cls.from_text(f.read(), isyms, osyms, source=str(path))


@dataclass
class Path:
    arcs: list[tuple[int, Arc]]
    weight: float
    input: tuple[int, ...]
    output: tuple[int, ...]


# ---------------------------------------------------------------------------
# small constructions


def linear_fst(ilabels: Sequence[int], olabels: Sequence[int] | None = None, weights=None,
               isyms=None, osyms=None) -> Transducer:
    """Single-path machine; ``olabels`` defaults to ``ilabels``."""
    olabels = ilabels if olabels is None else olabels
    if len(olabels) != len(ilabels):
        raise FstError("label sequences differ in length")
    weights = [0.0] * len(ilabels) if weights is None else weights
    t = Transducer(isyms, osyms)
    t.add_states(len(ilabels) + 1)
    t.start = 0
    for k, (i, o, w) in enumerate(zip(ilabels, olabels, weights)):
        t.add_arc(k, i, o, w, k + 1)
    t.set_final(len(ilabels))
    return t


def project(t: Transducer, side: str = "input") -> Transducer:
    r = t.copy()
    for s in r.states():
        r._arcs[s] = [
            Arc(a.ilabel, a.ilabel, a.weight, a.nextstate) if side == "input" else Arc(a.olabel, a.olabel, a.weight, a.nextstate)
            for a in r._arcs[s]
        ]
    if side == "input":
        r.osyms = r.isyms
    else:
        r.isyms = r.osyms
    return r


def invert(t: Transducer) -> Transducer:
    r = t.copy()
    for s in r.states():
        r._arcs[s] = [Arc(a.olabel, a.ilabel, a.weight, a.nextstate) for a in r._arcs[s]]
    r.isyms, r.osyms = t.osyms, t.isyms
    return r


def relabel(t: Transducer, imap: dict[int, int] | None = None, omap: dict[int, int] | None = None) -> Transducer:
    """Replace labels through the given maps (missing keys are kept)."""
    r = t.copy()
    for s in r.states():
        r._arcs[s] = [
            Arc(imap.get(a.ilabel, a.ilabel) if imap else a.ilabel,
                omap.get(a.olabel, a.olabel) if omap else a.olabel, a.weight, a.nextstate)
            for a in r._arcs[s]
        ]
    return r


def scale_weights(t: Transducer, factor: float) -> Transducer:
    r = t.copy()
    for s in r.states():
        r._arcs[s] = [a._replace(weight=a.weight * factor) for a in r._arcs[s]]
    r.finals = {s: w * factor for s, w in r.finals.items()}
    return r


# ---------------------------------------------------------------------------
# reachability and shortest distance


def connect(t: Transducer) -> Transducer:
    """Remove states that are not both accessible and coaccessible."""
    n = t.num_states
    if t.start < 0 or n == 0:
        return Transducer(t.isyms, t.osyms)
    acc = [False] * n
    acc[t.start] = True
    stack = [t.start]
    rev: list[list[int]] = [[] for _ in range(n)]
    while stack:
        s = stack.pop()
        for a in t._arcs[s]:
            rev[a.nextstate].append(s)
            if not acc[a.nextstate]:
                acc[a.nextstate] = True
                stack.append(a.nextstate)
    coacc = [False] * n
    stack = [s for s in t.finals if acc[s]]
    for s in stack:
        coacc[s] = True
    while stack:
        s = stack.pop()
        for p in rev[s]:
            if not coacc[p]:
                coacc[p] = True
                stack.append(p)
    keep = [s for s in range(n) if acc[s] and coacc[s]]
    r = Transducer(t.isyms, t.osyms)
    if not keep or not coacc[t.start]:
        return r
    new = {s: i for i, s in enumerate(keep)}
    r.add_states(len(keep))
    r.start = new[t.start]
    for s in keep:
        ns = new[s]
        r._arcs[ns] = [Arc(a.ilabel, a.olabel, a.weight, new[a.nextstate]) for a in t._arcs[s] if a.nextstate in new]
        if s in t.finals:
            r.finals[ns] = t.finals[s]
    return r


def _spfa(n, sources, edges_of, limit_factor=None):
    """Single-source(s) shortest distances allowing negative weights."""
    dist = [INF] * n
    inq = [False] * n
    relax_count = [0] * n
    q = deque()
    for s, d in sources:
        if d < dist[s]:
            dist[s] = d
            if not inq[s]:
                inq[s] = True
                q.append(s)
    limit = (limit_factor or n) + 1
    while q:
        s = q.popleft()
        inq[s] = False
        ds = dist[s]
        for w, nxt in edges_of(s):
            nd = ds + w
            if nd < dist[nxt] - 1e-12 * max(1.0, abs(nd)):
                dist[nxt] = nd
                relax_count[nxt] += 1
                if relax_count[nxt] > limit:
                    raise FstError("negative-weight cycle")
                if not inq[nxt]:
                    inq[nxt] = True
                    q.append(nxt)
    return dist


def shortest_distance(t: Transducer, reverse: bool = False) -> list[float]:
    """Tropical distance from the start (or, with ``reverse``, to a final state)."""
    n = t.num_states
    if n == 0:
        return []
    if not reverse:
        return _spfa(n, [(t.start, 0.0)], lambda s: ((a.weight, a.nextstate) for a in t._arcs[s]))
    rev: list[list[tuple[float, int]]] = [[] for _ in range(n)]
    for s in range(n):
        for a in t._arcs[s]:
            rev[a.nextstate].append((a.weight, s))
    return _spfa(n, list(t.finals.items()), lambda s: rev[s])


def push_weights(t: Transducer) -> Transducer:
    """Push weights toward the start state, keeping every path weight."""
    t = connect(t)
    if t.num_states == 0:
        return t
    pot = shortest_distance(t, reverse=True)
    r = Transducer(t.isyms, t.osyms)
    r.add_states(t.num_states)
    for s in t.states():
        ps = pot[s]
        r._arcs[s] = [Arc(a.ilabel, a.olabel, a.weight + pot[a.nextstate] - ps, a.nextstate) for a in t._arcs[s]]
        if s in t.finals:
            r.finals[s] = t.finals[s] - ps
    total = pot[t.start]
    has_incoming = any(a.nextstate == t.start for arcs in t._arcs for a in arcs)
    start = t.start
    if has_incoming:
        start = r.add_state()
        r._arcs[start] = list(r._arcs[t.start])
        if t.start in r.finals:
            r.finals[start] = r.finals[t.start]
    r._arcs[start] = [a._replace(weight=a.weight + total) for a in r._arcs[start]]
    if start in r.finals:
        r.finals[start] += total
    r.start = start
    return r


def prune(t: Transducer, threshold: float) -> Transducer:
    """Keep only arcs and final weights on paths within ``threshold`` of the best path."""
    t = connect(t)
    if t.num_states == 0:
        return t
    fwd = shortest_distance(t)
    bwd = shortest_distance(t, reverse=True)
    limit = bwd[t.start] + threshold
    r = Transducer(t.isyms, t.osyms)
    r.add_states(t.num_states)
    r.start = t.start
    for s in t.states():
        fs = fwd[s]
        r._arcs[s] = [a for a in t._arcs[s] if fs + a.weight + bwd[a.nextstate] <= limit]
        if s in t.finals and fs + t.finals[s] <= limit:
            r.finals[s] = t.finals[s]
    return connect(r)


# ---------------------------------------------------------------------------
# composition


def compose(a: Transducer, b: Transducer, trim: bool = True) -> Transducer:
    """Compose ``a`` then ``b`` with a three-state epsilon filter.

    Filter state 0 allows everything; 1 is entered after ``a`` moved alone on
    an output epsilon and only allows further such moves or a real match; 2
    is the mirror for ``b`` input epsilons. Simultaneous epsilon moves are
    only allowed from state 0, which keeps exactly one path per epsilon
    alignment.
    """
    if a.osyms is not None and b.isyms is not None and a.osyms != b.isyms:
        raise FstError("output symbols of the first machine differ from input symbols of the second")
    r = Transducer(a.isyms, b.osyms)
    if a.start < 0 or b.start < 0:
        return r
    # b arcs indexed by input label, per state (lazily)
    b_index: dict[int, dict[int, list[Arc]]] = {}

    def index_b(q):
        idx = b_index.get(q)
        if idx is None:
            idx = defaultdict(list)
            for arc in b._arcs[q]:
                idx[arc.ilabel].append(arc)
            b_index[q] = idx
        return idx

    ids: dict[tuple[int, int, int], int] = {}
    queue = deque()

    def state_of(key):
        s = ids.get(key)
        if s is None:
            s = r.add_state()
            ids[key] = s
            queue.append(key)
        return s

    r.start = state_of((a.start, b.start, 0))
    while queue:
        key = queue.popleft()
        qa, qb, f = key
        s = ids[key]
        out = r._arcs[s]
        bi = index_b(qb)
        b_eps = bi.get(EPS, ())
        for arc in a._arcs[qa]:
            if arc.olabel == EPS:
                if f != 2:
                    out.append(Arc(arc.ilabel, EPS, arc.weight, state_of((arc.nextstate, qb, 1))))
                if f == 0:
                    for barc in b_eps:
                        out.append(Arc(arc.ilabel, barc.olabel, arc.weight + barc.weight,
                                       state_of((arc.nextstate, barc.nextstate, 0))))
            else:
                for barc in bi.get(arc.olabel, ()):
                    out.append(Arc(arc.ilabel, barc.olabel, arc.weight + barc.weight,
                                   state_of((arc.nextstate, barc.nextstate, 0))))
        if f != 1:
            for barc in b_eps:
                out.append(Arc(EPS, barc.olabel, barc.weight, state_of((qa, barc.nextstate, 2))))
        fa = a.finals.get(qa)
        if fa is not None:
            fb = b.finals.get(qb)
            if fb is not None:
                r.finals[s] = fa + fb
    return connect(r) if trim else r


# ---------------------------------------------------------------------------
# epsilon removal


def remove_epsilons(t: Transducer) -> Transducer:
    """Remove ``eps:eps`` arcs, folding their weights into the neighbours."""
    n = t.num_states
    for arcs in t._arcs:
        for a in arcs:
            if a.ilabel == EPS and a.olabel != EPS:
                raise FstError("cannot remove input epsilons carrying an output label")
    eps_edges = [[(a.weight, a.nextstate) for a in t._arcs[s] if a.ilabel == EPS] for s in range(n)]
    r = Transducer(t.isyms, t.osyms)
    r.add_states(n)
    r.start = t.start
    for s in range(n):
        if not eps_edges[s]:
            r._arcs[s] = list(t._arcs[s])
            if s in t.finals:
                r.finals[s] = t.finals[s]
            continue
        dist = _closure(s, eps_edges)
        best: dict[tuple[int, int, int], float] = {}
        fin = INF
        for p, d in dist.items():
            fin = min(fin, d + t.finals.get(p, INF))
            for a in t._arcs[p]:
                if a.ilabel == EPS:
                    continue
                k = (a.ilabel, a.olabel, a.nextstate)
                w = d + a.weight
                if w < best.get(k, INF):
                    best[k] = w
        r._arcs[s] = [Arc(i, o, w, d) for (i, o, d), w in best.items()]
        if fin < INF:
            r.finals[s] = fin
    return connect(r)


def _closure(s, eps_edges):
    dist = {s: 0.0}
    q = deque([s])
    relax = defaultdict(int)
    limit = len(eps_edges) + 1
    while q:
        p = q.popleft()
        dp = dist[p]
        for w, nxt in eps_edges[p]:
            nd = dp + w
            if nd < dist.get(nxt, INF) - 1e-12 * max(1.0, abs(nd)):
                dist[nxt] = nd
                relax[nxt] += 1
                if relax[nxt] > limit or (nxt == s and nd < 0):
                    raise FstError("negative-weight epsilon cycle")
                q.append(nxt)
    return dist


# ---------------------------------------------------------------------------
# determinization


def _quant(w):
    return round(w / WEIGHT_QUANTUM)


def determinize(t: Transducer, max_states: int | None = None) -> Transducer:
    """Input-deterministic equivalent of ``t``.

    Subset states hold ``(state, pending output, residual weight)`` triples.
    Each new arc carries the minimum weight and at most one output label,
    the first of the common prefix of pending outputs. When paths for the
    same input reach one state with different pending outputs only the
    cheapest is kept, which preserves the best output for every input.
    """
    if t.has_input_epsilons():
        t = remove_epsilons(t)
    t = connect(t)
    r = Transducer(t.isyms, t.osyms)
    if t.num_states == 0:
        return r
    if max_states is None:
        max_states = max(DETERMINIZE_BUDGET * t.num_states, 1000)
    ids: dict[tuple, int] = {}
    subsets: list[list[tuple[int, tuple, float]]] = []
    queue: deque[int] = deque()

    def state_of(elems):
        elems.sort(key=lambda e: (e[0], e[1]))
        key = tuple((q, s, _quant(w)) for q, s, w in elems)
        sid = ids.get(key)
        if sid is None:
            sid = r.add_state()
            if sid >= max_states:
                raise DeterminizationError(
                    f"determinization exceeded {max_states} states; input is probably not determinizable"
                )
            ids[key] = sid
            subsets.append(elems)
            queue.append(sid)
        return sid

    r.start = state_of([(t.start, (), 0.0)])
    pending_finals: list[tuple[int, tuple, float]] = []
    while queue:
        sid = queue.popleft()
        elems = subsets[sid]
        by_label: dict[int, dict[int, tuple[float, tuple]]] = defaultdict(dict)
        fin_w, fin_s = INF, ()
        for q, s, w in elems:
            fq = t.finals.get(q)
            if fq is not None and (w + fq < fin_w or (w + fq == fin_w and s < fin_s)):
                fin_w, fin_s = w + fq, s
            for a in t._arcs[q]:
                ns = s + (a.olabel,) if a.olabel != EPS else s
                nw = w + a.weight
                cand = by_label[a.ilabel]
                old = cand.get(a.nextstate)
                if old is None or nw < old[0] or (nw == old[0] and ns < old[1]):
                    cand[a.nextstate] = (nw, ns)
        if fin_w < INF:
            if fin_s:
                pending_finals.append((sid, fin_s, fin_w))
            else:
                r.finals[sid] = fin_w
        for label in sorted(by_label):
            cand = by_label[label]
            wmin = min(v[0] for v in cand.values())
            strings = [v[1] for v in cand.values()]
            first = strings[0][0] if strings[0] else None
            emit = first is not None and all(st and st[0] == first for st in strings)
            cut = 1 if emit else 0
            new = [(q, st[cut:], w - wmin) for q, (w, st) in cand.items()]
            r._arcs[sid].append(Arc(label, first if emit else EPS, wmin, state_of(new)))
    # flush pending output at final states through an epsilon-input chain
    for sid, s, w in pending_finals:
        prev = sid
        for k, o in enumerate(s):
            nxt = r.add_state()
            r._arcs[prev].append(Arc(EPS, o, w if k == 0 else 0.0, nxt))
            prev = nxt
        r.finals[prev] = 0.0
    return r


# ---------------------------------------------------------------------------
# minimization


def minimize(t: Transducer) -> Transducer:
    """Merge equivalent states of a deterministic machine.

    Weights are pushed toward the start first; states are then partitioned
    by their final weight and refined on ``(ilabel, olabel, weight, target
    block)`` signatures until stable.
    """
    if not t.is_deterministic():
        raise FstError("minimize requires a deterministic input (no input epsilons, one arc per input label)")
    t = push_weights(t)
    n = t.num_states
    if n == 0:
        return t
    finals = t.finals
    arcs = t._arcs
    qarcs = [[(a.ilabel, a.olabel, _quant(a.weight), a.nextstate) for a in arcs[s]] for s in range(n)]
    fkeys = [(_quant(finals[s]) if s in finals else None) for s in range(n)]
    ids: dict = {}
    block = [ids.setdefault(fk, len(ids)) for fk in fkeys]
    nblocks = len(ids)
    while True:
        ids = {}
        new = [
            ids.setdefault((block[s], tuple(sorted((i, o, w, block[d]) for i, o, w, d in qarcs[s]))), len(ids))
            for s in range(n)
        ]
        if len(ids) == nblocks:
            break
        block, nblocks = new, len(ids)
    r = Transducer(t.isyms, t.osyms)
    r.add_states(nblocks)
    done = [False] * nblocks
    for s in range(n):
        b = block[s]
        if done[b]:
            continue
        done[b] = True
        r._arcs[b] = [Arc(a.ilabel, a.olabel, a.weight, block[a.nextstate]) for a in arcs[s]]
        if s in finals:
            r.finals[b] = finals[s]
    r.start = block[t.start]
    return r


# ---------------------------------------------------------------------------
# paths


def enumerate_paths(t: Transducer, max_len: int) -> list[Path]:
    """Every accepting path with at most ``max_len`` arcs."""
    out: list[Path] = []
    if t.start < 0 or t.num_states == 0:
        return out

    def rec(s, trail, w):
        fw = t.finals.get(s)
        if fw is not None:
            arcs = list(trail)
            out.append(Path(arcs, w + fw,
                            tuple(a.ilabel for _, a in arcs if a.ilabel != EPS),
                            tuple(a.olabel for _, a in arcs if a.olabel != EPS)))
        if len(trail) >= max_len:
            return
        for a in t._arcs[s]:
            trail.append((s, a))
            rec(a.nextstate, trail, w + a.weight)
            trail.pop()

    rec(t.start, [], 0.0)
    return out


def weighted_relation(t: Transducer, max_len: int) -> dict[tuple[tuple, tuple], float]:
    """``(input, output) -> min weight`` over paths of at most ``max_len`` arcs."""
    rel: dict[tuple[tuple, tuple], float] = {}
    for p in enumerate_paths(t, max_len):
        k = (p.input, p.output)
        if p.weight < rel.get(k, INF):
            rel[k] = p.weight
    return rel


def shortest_path(t: Transducer, n: int = 1) -> list[Path]:
    """The ``n`` cheapest accepting paths, cheapest first."""
    if n < 1:
        raise ValueError("n must be >= 1")
    t = connect(t)
    if t.num_states == 0:
        raise FstError("machine has no accepting path")
    pot = shortest_distance(t, reverse=True)
    tie = count()
    # entries: (estimate, tiebreak, g, state, parent node) with parent node (state, arc, parent)
    heap = [(pot[t.start], next(tie), 0.0, t.start, None, False)]
    paths: list[Path] = []
    pops = defaultdict(int)
    while heap and len(paths) < n:
        est, _, g, s, node, done = heapq.heappop(heap)
        if done:
            arcs = []
            while node is not None:
                ps, a, node = node
                arcs.append((ps, a))
            arcs.reverse()
            paths.append(Path(arcs, g,
                              tuple(a.ilabel for _, a in arcs if a.ilabel != EPS),
                              tuple(a.olabel for _, a in arcs if a.olabel != EPS)))
            continue
        pops[s] += 1
        if pops[s] > n:
            continue
        fw = t.finals.get(s)
        if fw is not None:
            heapq.heappush(heap, (g + fw, next(tie), g + fw, s, node, True))
        for a in t._arcs[s]:
            ng = g + a.weight
            heapq.heappush(heap, (ng + pot[a.nextstate], next(tie), ng, a.nextstate, (s, a, node), False))
    return paths
