"""Small random decoding instances shared by the decoder and acceptance tests."""

from __future__ import annotations

import numpy as np

from multigram.corpus import CharacterInventory
from multigram.graph import build_graph, spelling
from multigram.lm import train_lm
from multigram.optical import PosteriorLattice, lattice_labels

TOY_CHARS = ("a", "b", " ")


def toy_case(rng, max_tokens=6, max_frames=8, order=None):
    """(graph, lattice, spellings, model) for a random toy problem.

    The lexicon always holds the single letters and ``<sp>`` so every
    collapsed string is spellable, plus up to three random 2-3 letter units.
    """
    inv = CharacterInventory(TOY_CHARS)
    lex = {"a", "b", "<sp>"}
    while len(lex) < rng.randint(3, max_tokens):
        lex.add("".join(rng.choice("ab") for _ in range(rng.randint(2, 3))))
    lex = sorted(lex)
    order = order or rng.randint(1, 2)
    seqs = [[rng.choice(lex) for _ in range(rng.randint(1, 6))] for _ in range(rng.randint(3, 8))]
    seqs.append(list(lex))
    model = train_lm(seqs, order, concatenate=False)
    graph = build_graph(model, lex, inv, "toy")
    labels = lattice_labels(inv)
    n = rng.randint(1, max_frames)
    nrng = np.random.default_rng(rng.randint(0, 2**31))
    frames = nrng.dirichlet(np.full(len(labels), 0.6), size=n)
    lattice = PosteriorLattice(frames, labels)
    spellings = {t: spelling(t) for t in lex}
    return graph, lattice, spellings, model
