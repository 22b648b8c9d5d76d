"""Frame-synchronous beam search over a search graph."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .fst import (
    EPS,
    DeterminizationError,
    Transducer,
    compose,
    determinize,
    linear_fst,
    project,
    prune,
    remove_epsilons,
    shortest_path,
)
from .graph import BLANK, SearchGraph
from .lm import SP
from .optical import PosteriorLattice

PROB_FLOOR = 1e-12
DEFAULT_BEAM = 12.0


class DecodeError(RuntimeError):
    pass


class EmptyGraphError(DecodeError):
    pass


class NoSurvivorError(DecodeError):
    """Every hypothesis was pruned before reaching a final state."""


class LabelMismatchError(DecodeError):
    pass


@dataclass(frozen=True)
class DecodeConfig:
    gamma: float = 1.0
    beta: float = 1.0
    beam: float = DEFAULT_BEAM
    n_best: int = 1
    max_active: int | None = None
    # n-best lists only consider paths this close to the best one
    lattice_beam: float = 8.0

    def __post_init__(self):
        if not self.gamma >= 0:
            raise ValueError("gamma must be >= 0")
        if not self.beta > 0:
            raise ValueError("beta must be > 0")
        if not self.beam > 0:
            raise ValueError("beam must be > 0")
        if int(self.n_best) != self.n_best or self.n_best < 1:
            raise ValueError("n_best must be an integer >= 1")
        if not self.lattice_beam > 0:
            raise ValueError("lattice_beam must be > 0")
        if self.max_active is not None and self.max_active < 1:
            raise ValueError("max_active must be >= 1")


@dataclass(frozen=True)
class Hypothesis:
    tokens: tuple[str, ...]
    text: str
    acoustic: float
    lm: float

    @property
    def total(self) -> float:
        return self.acoustic + self.lm


def detokenize(tokens: Iterable[str], lexicon: Mapping[str, str] | Iterable[str] | None = None) -> str:
    """Join token spellings; ``<sp>`` becomes one space.

    With ``lexicon`` given, tokens outside it raise ``KeyError``; a mapping
    supplies explicit spellings.
    """
    spell = lexicon if isinstance(lexicon, Mapping) else None
    known = None if lexicon is None or spell is not None else set(lexicon)
    parts = []
    for t in tokens:
        if t == SP:
            parts.append(" ")
            continue
        if spell is not None:
            if t not in spell:
                raise KeyError(f"token {t!r} has no spelling")
            parts.append(spell[t])
        else:
            if known is not None and t not in known:
                raise KeyError(f"token {t!r} has no spelling")
            parts.append(t)
    return "".join(parts).strip(" ")


class _Compiled:
    """CSR view of a search graph, split into emitting and epsilon arcs."""

    def __init__(self, fst: Transducer):
        n = fst.num_states
        sp = fst.osyms.get(SP, -1) if fst.osyms is not None else -1
        em, ep = [], []
        for s in range(n):
            for a in fst.arcs(s):
                (ep if a.ilabel == EPS else em).append((s, a.ilabel, a.olabel, a.weight, a.nextstate))
        self.n = n
        self.start = fst.start
        self.sp = sp
        self.em = self._csr(em, n)
        self.ep = self._csr(ep, n)
        for part in (self.em, self.ep):
            part["is_sp"] = part["olabel"] == sp
        self.final = np.full(n, np.inf)
        for s, w in fst.finals.items():
            self.final[s] = w

    @staticmethod
    def _csr(arcs, n):
        arcs.sort(key=lambda a: a[0])
        src = np.array([a[0] for a in arcs], dtype=np.int64)
        ptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(ptr, src + 1, 1)
        np.cumsum(ptr, out=ptr)
        return {
            "ptr": ptr,
            "ilabel": np.array([a[1] for a in arcs], dtype=np.int64),
            "olabel": np.array([a[2] for a in arcs], dtype=np.int64),
            "weight": np.array([a[3] for a in arcs], dtype=float),
            "dst": np.array([a[4] for a in arcs], dtype=np.int64),
        }


def _compiled(graph: SearchGraph) -> _Compiled:
    c = getattr(graph, "_compiled", None)
    if c is None or c.n != graph.fst.num_states:
        c = _Compiled(graph.fst)
        graph._compiled = c
    return c


def _gather(part, states):
    """Arc indices leaving ``states`` and, per arc, the position of its source in ``states``."""
    ptr = part["ptr"]
    lo, hi = ptr[states], ptr[states + 1]
    cnt = hi - lo
    total = int(cnt.sum())
    if total == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    owner = np.repeat(np.arange(len(states)), cnt)
    offs = np.arange(total) - np.repeat(np.cumsum(cnt) - cnt, cnt)
    return lo[owner] + offs, owner


def _best_per_state(dst, cost):
    order = np.lexsort((cost, dst))
    d = dst[order]
    keep = np.ones(len(d), dtype=bool)
    keep[1:] = d[1:] != d[:-1]
    return order[keep]


class _Trace:
    """Append-only token store: state, arc (-1 for start), predecessor, costs."""

    def __init__(self):
        self.chunks = []
        self.size = 0

    def add(self, state, arc_kind, arc, prev, ac, lm):
        ids = np.arange(self.size, self.size + len(state))
        self.chunks.append((state, arc_kind, arc, prev, ac, lm))
        self.size += len(state)
        return ids

    def freeze(self):
        cols = list(zip(*self.chunks))
        return [np.concatenate(c) for c in cols]


def _check_labels(lattice: PosteriorLattice, graph: SearchGraph):
    isyms = graph.fst.isyms
    if isyms is None:
        return
    expected = tuple(isyms.symbols()[1:])
    if tuple(lattice.labels) != expected:
        raise LabelMismatchError("lattice label table differs from the graph input symbols")


def decode_lattice(lattice: PosteriorLattice, graph: SearchGraph, config: DecodeConfig = DecodeConfig()) -> list[Hypothesis]:
    """Viterbi beam search; returns up to ``config.n_best`` hypotheses, best first.

    Arc cost = acoustic ``-ln p(label)`` + ``gamma`` * graph weight, plus
    ``-ln beta`` on arcs emitting ``<sp>`` and once more at the end, so
    the penalty is paid once per word.
    """
    if graph.fst.num_states == 0 or graph.fst.start < 0:
        raise EmptyGraphError("search graph is empty")
    _check_labels(lattice, graph)
    g = _compiled(graph)
    gamma = float(config.gamma)
    wpen = -math.log(config.beta)
    beam = float(config.beam)
    A = -np.log(np.maximum(lattice.frames, PROB_FLOOR))
    em, ep = g.em, g.ep
    em_lm = gamma * em["weight"] + np.where(em["is_sp"], wpen, 0.0)
    ep_lm = gamma * ep["weight"] + np.where(ep["is_sp"], wpen, 0.0)
    record_all = config.n_best > 1
    trace = _Trace()
    edges = [] if record_all else None

    best_cost = np.full(g.n, np.inf)
    best_tok = np.full(g.n, -1, dtype=np.int64)

    start = np.array([g.start], dtype=np.int64)
    z = np.zeros(1)
    tok = trace.add(start, np.zeros(1, np.int8), np.full(1, -1, np.int64), np.full(1, -1, np.int64), z, z)
    states, costs, toks = start, z.copy(), tok
    states, costs, toks = _closure(states, costs, toks, ep, ep_lm, best_cost, best_tok, trace, edges)

    for t in range(lattice.frame_count):
        arcs, owner = _gather(em, states)
        if len(arcs) == 0:
            raise NoSurvivorError(f"no hypothesis survives frame {t}")
        ac = A[t, em["ilabel"][arcs] - 1]
        lmc = em_lm[arcs]
        cand = costs[owner] + ac + lmc
        cutoff = cand.min() + beam
        ok = cand <= cutoff
        arcs, owner, ac, lmc, cand = arcs[ok], owner[ok], ac[ok], lmc[ok], cand[ok]
        dst = em["dst"][arcs]
        if edges is not None:
            edges.append((t, toks[owner], arcs, np.zeros(len(arcs), np.int8), dst, ac, lmc))
        sel = _best_per_state(dst, cand)
        nstates = dst[sel]
        ntok = trace.add(nstates, np.ones(len(sel), np.int8), arcs[sel], toks[owner[sel]], ac[sel], lmc[sel])
        states, costs, toks = nstates, cand[sel], ntok
        states, costs, toks = _closure(states, costs, toks, ep, ep_lm, best_cost, best_tok, trace, edges, t)
        keep = costs <= costs.min() + beam
        if config.max_active is not None and keep.sum() > config.max_active:
            idx = np.argpartition(costs, config.max_active - 1)[: config.max_active]
            keep = np.zeros(len(costs), dtype=bool)
            keep[idx] = True
        states, costs, toks = states[keep], costs[keep], toks[keep]

    fw = g.final[states]
    # keep non-final states at +inf even when gamma is 0
    ok = np.isfinite(fw)
    fin = np.full(len(fw), np.inf)
    fin[ok] = gamma * fw[ok] + wpen
    total = costs + fin
    if not np.isfinite(total).any():
        raise NoSurvivorError("no hypothesis reached a final state")
    if not record_all:
        i = int(np.argmin(total))
        return [_backtrace(trace.freeze(), int(toks[i]), float(fin[i]), g, graph)]
    return _nbest(trace, edges, states, fin, g, graph, config, lattice.frame_count)


def _closure(states, costs, toks, ep, ep_lm, best_cost, best_tok, trace, edges, t=-1):
    """Relax epsilon arcs until no state improves; returns the merged active set."""
    best_cost[states] = costs
    best_tok[states] = toks
    touched = [states]
    frontier = states
    while len(frontier):
        arcs, owner = _gather(ep, frontier)
        if len(arcs) == 0:
            break
        src_cost = best_cost[frontier[owner]]
        lmc = ep_lm[arcs]
        cand = src_cost + lmc
        dst = ep["dst"][arcs]
        prev = best_tok[frontier[owner]]
        if edges is not None:
            edges.append((t, prev, arcs, np.ones(len(arcs), np.int8), dst, np.zeros(len(arcs)), lmc))
        sel = _best_per_state(dst, cand)
        sel = sel[cand[sel] < best_cost[dst[sel]] - 1e-12]
        if len(sel) == 0:
            break
        nd = dst[sel]
        ntok = trace.add(nd, np.full(len(sel), 2, np.int8), arcs[sel], prev[sel], np.zeros(len(sel)), lmc[sel])
        best_cost[nd] = cand[sel]
        best_tok[nd] = ntok
        touched.append(nd)
        frontier = nd
    allst = np.unique(np.concatenate(touched))
    out = allst, best_cost[allst].copy(), best_tok[allst].copy()
    best_cost[allst] = np.inf
    best_tok[allst] = -1
    return out


def _arc_olabel(g, kind, arc):
    return int((g.em if kind == 1 else g.ep)["olabel"][arc]) if kind else EPS


def _backtrace(cols, tok, fin, g, graph):
    state, kind, arc, prev, ac, lm = cols
    out = []
    acoustic = 0.0
    lmcost = fin
    while tok >= 0:
        acoustic += ac[tok]
        lmcost += lm[tok]
        o = _arc_olabel(g, int(kind[tok]), int(arc[tok]))
        if o != EPS:
            out.append(o)
        tok = int(prev[tok])
    out.reverse()
    return _hyp(out, acoustic, lmcost, graph)


def _hyp(olabels, acoustic, lmcost, graph):
    syms = graph.fst.osyms
    tokens = tuple(syms[o] for o in olabels)
    return Hypothesis(tokens, detokenize(tokens), float(acoustic), float(lmcost))


def _nbest(trace, edges, states, fin, g, graph, config, nframes):
    """Distinct-token-sequence n-best from the recorded search lattice.

    Lattice nodes are ``(frame, state)`` pairs; every recorded candidate arc
    becomes a lattice arc whose input label is a unique id, so the acoustic
    and LM parts of any path can be recovered.
    """
    tstate = trace.freeze()[0]
    node_ids: dict[tuple[int, int], int] = {}
    lat = Transducer()

    def node(frame, state):
        k = (frame, state)
        i = node_ids.get(k)
        if i is None:
            i = lat.add_state()
            node_ids[k] = i
        return i

    lat.start = node(-1, g.start)
    parts_info = []
    for t, prev, arcs, kind, dst, ac, lmc in edges:
        if len(arcs) == 0:
            continue
        emitting = kind[0] == 0
        part = g.em if emitting else g.ep
        src_frame = t - 1 if emitting else t
        src_states = tstate[prev]
        olab = part["olabel"][arcs]
        for j in range(len(arcs)):
            parts_info.append((float(ac[j]), float(lmc[j])))
            lat.add_arc(node(src_frame, int(src_states[j])), len(parts_info), int(olab[j]),
                        float(ac[j] + lmc[j]), node(t, int(dst[j])))
    for st, f in zip(states, fin):
        k = (nframes - 1, int(st))
        if k in node_ids and np.isfinite(f):
            lat.set_final(node_ids[k], float(f))
    # distinct output sequences in score order; tighten the lattice beam if
    # the pruned lattice is still too ambiguous to determinize
    lbeam = config.lattice_beam
    while True:
        lat_p = prune(lat, lbeam)
        try:
            best = shortest_path(determinize(remove_epsilons(project(lat_p, "output"))), config.n_best)
            break
        except DeterminizationError:
            lbeam /= 2
    lat = lat_p
    hyps = []
    for p in best:
        seq = list(p.output)
        constrained = compose(lat, linear_fst(seq))
        path = shortest_path(constrained, 1)[0]
        acoustic = sum(parts_info[a.ilabel - 1][0] for _, a in path.arcs if a.ilabel)
        lmcost = path.weight - acoustic
        hyps.append(_hyp(seq, acoustic, lmcost, graph))
    hyps.sort(key=lambda h: h.total)
    return hyps


# ---------------------------------------------------------------------------
# batch decoding and tuning


def _decode_worker(args):
    lattice, graph, config = args
    try:
        return decode_lattice(lattice, graph, config)
    except DecodeError as e:
        return e


_WORKER_GRAPH = None


def _init_worker(graph):
    global _WORKER_GRAPH
    _WORKER_GRAPH = graph


def _pool_worker(args):
    lattice, config = args
    return _decode_worker((lattice, _WORKER_GRAPH, config))


def decode_many(lattices: Sequence[PosteriorLattice], graph: SearchGraph, config: DecodeConfig, jobs: int = 1):
    """Decode a batch; failed lines come back as the ``DecodeError`` instance."""
    if jobs > 1 and len(lattices) > 1:
        _compiled(graph)
        with ProcessPoolExecutor(jobs, initializer=_init_worker, initargs=(graph,)) as ex:
            return list(ex.map(_pool_worker, [(l, config) for l in lattices], chunksize=4))
    return [_decode_worker((l, graph, config)) for l in lattices]


def grid_search(
    dev: Sequence[tuple[PosteriorLattice, str]],
    graph: SearchGraph,
    gammas: Sequence[float],
    betas: Sequence[float],
    beam: float = DEFAULT_BEAM,
    jobs: int = 1,
) -> dict[tuple[float, float], float]:
    """Pooled dev WER (percent) for every ``(gamma, beta)`` pair."""
    from .evaluation import wer

    if not dev:
        raise ValueError("empty dev set")
    if not gammas or not betas:
        raise ValueError("empty hyper-parameter grid")
    lattices = [lat for lat, _ in dev]
    refs = [ref for _, ref in dev]
    out = {}
    for gm in gammas:
        for bt in betas:
            res = decode_many(lattices, graph, DecodeConfig(gm, bt, beam), jobs)
            hyps = [r[0].text if isinstance(r, list) else "" for r in res]
            out[(gm, bt)] = wer([(r.split(), h.split()) for r, h in zip(refs, hyps)])
    return out


def tune_hyperparameters(
    dev: Sequence[tuple[PosteriorLattice, str]],
    graph: SearchGraph,
    gammas: Sequence[float],
    betas: Sequence[float],
    beam: float = DEFAULT_BEAM,
    jobs: int = 1,
) -> DecodeConfig:
    """Grid point with the lowest dev WER; ties go to smaller gamma, then smaller beta."""
    table = grid_search(dev, graph, gammas, betas, beam, jobs)
    (gm, bt), _ = min(table.items(), key=lambda kv: (kv[1], kv[0][0], kv[0][1]))
    return DecodeConfig(gm, bt, beam)
