"""Independent reference implementations used as test oracles.

Everything here is deliberately naive: brute-force enumeration or textbook
recurrences written without reusing library internals.
"""

from __future__ import annotations

import itertools
import math
import random

from multigram.fst import EPS, Transducer

LN10 = math.log(10.0)


# ---------------------------------------------------------------------------
# segmentations


def all_segmentations(word, d_max):
    """Every split of ``word`` into pieces of length 1..d_max."""
    if not word:
        yield ()
        return
    for d in range(1, min(d_max, len(word)) + 1):
        for rest in all_segmentations(word[d:], d_max):
            yield (word[:d],) + rest


def brute_likelihood(word, probs, d_max):
    total = 0.0
    for seg in all_segmentations(word, d_max):
        p = 1.0
        for u in seg:
            p *= probs.get(u, 0.0)
        total += p
    return total


def brute_viterbi(word, probs, d_max, length_penalty=True, tol=1e-9):
    """Argmax segmentation; ties prefer the longer unit, compared from the right."""
    scored = []
    for seg in all_segmentations(word, d_max):
        if any(probs.get(u, 0.0) <= 0 for u in seg):
            continue
        s = sum(math.log(probs[u]) / (len(u) if length_penalty else 1) for u in seg)
        scored.append((s, seg))
    if not scored:
        return None
    top = max(s for s, _ in scored)
    tied = [seg for s, seg in scored if s >= top - tol * max(1.0, abs(top))]
    return max(tied, key=lambda seg: [len(u) for u in reversed(seg)])


def random_unit_model(alphabet, d_max, rng, drop=0.3):
    """Random emission table, normalized per unit length, length-1 units always present."""
    probs = {}
    for d in range(1, d_max + 1):
        units = ["".join(t) for t in itertools.product(alphabet, repeat=d)]
        if d > 1:
            units = [u for u in units if rng.random() > drop] or units[:1]
        w = [rng.random() + 1e-3 for _ in units]
        z = sum(w)
        probs.update({u: x / z for u, x in zip(units, w)})
    return probs


# ---------------------------------------------------------------------------
# n-gram backoff


def backoff_log10(entries, order, word, context):
    """Recursive backoff: P(w|h) if listed, else bow(h) * P(w|h[1:])."""
    h = tuple(context)[-(order - 1):] if order > 1 else ()
    if h + (word,) in entries:
        return entries[h + (word,)][0]
    if not h:
        return entries[("<unk>",)][0]
    bow = entries[h][1] if h in entries else 0.0
    return bow + backoff_log10(entries, order, word, h[1:])


def backoff_score(model, tokens):
    vocab = model.vocabulary
    seq = [t if t in vocab else "<unk>" for t in tokens] + ["</s>"]
    hist = ["<s>"]
    total = 0.0
    for w in seq:
        total += backoff_log10(model.entries, model.order, w, hist)
        hist.append(w)
    return total


def tropical_lm_cost(model, tokens):
    """Natural-log cost of ``tokens`` through a backoff grammar read as a
    weighted automaton: every context may emit a listed continuation or take
    its backoff arc, and the cheapest route over the whole sequence wins.
    """
    entries = model.entries
    contexts = {()} | {g[:-1] for g in entries if len(g) >= 2}

    def state(g):
        while g not in contexts:
            g = g[1:]
        return g

    def emit(h, w):
        """(cost, next state) options for emitting w from state h."""
        opts = []
        cost = 0.0
        while True:
            g = h + (w,)
            if g in entries:
                nxt = state(g[1:] if len(g) >= model.order else g)
                opts.append((cost - entries[g][0] * LN10, nxt))
            if not h:
                break
            cost += -(entries[h][1] if h in entries else 0.0) * LN10
            h = h[1:]
        return opts

    start = ("<s>",) if ("<s>",) in contexts else ()
    frontier = {start: 0.0}
    for w in tokens:
        nxt = {}
        for h, c in frontier.items():
            for dc, s in emit(h, w):
                if c + dc < nxt.get(s, math.inf):
                    nxt[s] = c + dc
        frontier = nxt
    best = math.inf
    for h, c in frontier.items():
        for dc, _ in emit(h, "</s>"):
            best = min(best, c + dc)
    return best


# ---------------------------------------------------------------------------
# CTC and edit distance


def ctc_collapse(labels, blank=0):
    out = []
    prev = None
    for x in labels:
        if x != prev and x != blank:
            out.append(x)
        prev = x
    return tuple(out)


def levenshtein(a, b):
    """Plain distance (no alignment), computed on full matrices."""
    a, b = list(a), list(b)
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, 1):
        cur = [i]
        for j, y in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x != y)))
        prev = cur
    return prev[-1]


# ---------------------------------------------------------------------------
# random machines


def random_acyclic(rng, n_states=None, labels=(1, 2, 3), eps_rate=0.2, max_arcs=3, acceptor=False,
                   olabels=None, weight_range=(0.0, 4.0)):
    n = n_states or rng.randint(2, 8)
    t = Transducer()
    t.add_states(n)
    t.start = 0
    olabels = olabels or labels
    for s in range(n - 1):
        for _ in range(rng.randint(1, max_arcs)):
            d = rng.randint(s + 1, n - 1)
            i = EPS if rng.random() < eps_rate else rng.choice(labels)
            o = i if acceptor else (EPS if rng.random() < eps_rate else rng.choice(olabels))
            t.add_arc(s, i, o, round(rng.uniform(*weight_range), 3), d)
    t.set_final(n - 1, round(rng.uniform(*weight_range), 3))
    for s in range(1, n - 1):
        if rng.random() < 0.3:
            t.set_final(s, round(rng.uniform(*weight_range), 3))
    return t


def paths_by_input(t, max_len=30):
    """input string -> minimum weight over every path (brute force DFS)."""
    out = {}

    def rec(s, ins, w, depth):
        if s in t.finals:
            k = tuple(ins)
            out[k] = min(out.get(k, math.inf), w + t.finals[s])
        if depth == max_len:
            return
        for a in t.arcs(s):
            rec(a.nextstate, ins + ([a.ilabel] if a.ilabel else []), w + a.weight, depth + 1)

    if t.start >= 0 and t.num_states:
        rec(t.start, [], 0.0, 0)
    return out


def relation(t, max_len=30):
    """(input, output) -> minimum weight (brute force DFS)."""
    out = {}

    def rec(s, ins, outs, w, depth):
        if s in t.finals:
            k = (tuple(ins), tuple(outs))
            out[k] = min(out.get(k, math.inf), w + t.finals[s])
        if depth == max_len:
            return
        for a in t.arcs(s):
            rec(a.nextstate, ins + ([a.ilabel] if a.ilabel else []), outs + ([a.olabel] if a.olabel else []),
                w + a.weight, depth + 1)

    if t.start >= 0 and t.num_states:
        rec(t.start, [], [], 0.0, 0)
    return out


def join(ra, rb):
    """Relation composition of two (input, output) -> weight maps."""
    by_mid = {}
    for (y, z), w in rb.items():
        by_mid.setdefault(y, []).append((z, w))
    out = {}
    for (x, y), w in ra.items():
        for z, w2 in by_mid.get(y, ()):
            k = (x, z)
            out[k] = min(out.get(k, math.inf), w + w2)
    return out


def same_weights(r1, r2, tol=1e-9):
    if set(r1) != set(r2):
        return False
    return all(abs(r1[k] - r2[k]) <= tol * max(1.0, abs(r1[k])) for k in r1)


# ---------------------------------------------------------------------------
# joint decoding oracle


def best_alignment_costs(cost_matrix, labels):
    """min acoustic cost of every collapsed string, over all frame alignments.

    ``cost_matrix[t][j]`` is the cost of label j at frame t; label 0 is blank.
    Exhaustive over alignments (memoized on (collapsed prefix, last label)).
    """
    layer = {((), None): 0.0}
    for row in cost_matrix:
        nxt = {}
        for (s, last), c in layer.items():
            for j, cj in enumerate(row):
                ns = s if (j == 0 or j == last) else s + (labels[j],)
                k = (ns, j)
                v = c + cj
                if v < nxt.get(k, math.inf):
                    nxt[k] = v
        layer = nxt
    out = {}
    for (s, _), c in layer.items():
        out[s] = min(out.get(s, math.inf), c)
    return out


def token_segmentations(chars, spellings):
    """All token sequences whose spellings concatenate to ``chars``."""
    text = "".join(chars)
    if not text:
        yield ()
        return
    for tok, sp in spellings.items():
        if text.startswith(sp):
            for rest in token_segmentations(text[len(sp):], spellings):
                yield (tok,) + rest


def joint_argmax(frames, labels, spellings, model, gamma, beta, floor=1e-12):
    """Exhaustive best (total, tokens set) over alignment x segmentation x LM route."""
    cost = [[-math.log(max(p, floor)) for p in row] for row in frames]
    per_string = best_alignment_costs(cost, labels)
    best = math.inf
    argmax = []
    wpen = -math.log(beta)
    for s, ac in per_string.items():
        for toks in token_segmentations(s, spellings):
            lm = tropical_lm_cost(model, toks)
            total = ac + gamma * lm + wpen * (toks.count("<sp>") + 1)
            if total < best - 1e-9:
                best, argmax = total, [toks]
            elif abs(total - best) <= 1e-9:
                argmax.append(toks)
    return best, argmax


def seeded(seed):
    return random.Random(seed)
