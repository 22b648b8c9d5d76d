"""
Search-graph size for word, multigram and character lexicons
============================================================

Build the composed search graph for each lexicon type on the same text and
compare state and arc counts. Smaller units give smaller graphs because
the lexicon and the set of observed n-gram contexts both shrink.
"""

import logging

from multigram.corpus import build_character_inventory, sample_corpus
from multigram.evaluation import complexity_report
from multigram.graph import build_graph
from multigram.hsmm import char_tokens, tokenize_corpus, train_language, word_tokens
from multigram.lm import train_lm

logging.basicConfig(level=logging.ERROR)

ORDER = 3  # the full-size default (9) works too but takes minutes to compose

train = {lang: sample_corpus(lang, "train") for lang in ("fr", "en")}
lines = [ln for lang in train for ln in train[lang]]
inv = build_character_inventory(lines)
chars = ["<sp>" if c == " " else c for c in inv.characters]

seqs = {"words": [word_tokens(ln) for ln in lines], "chars": [char_tokens(ln) for ln in lines]}
for k in (2, 3):
    seqs[f"m{k}"] = [s for lang in train for s in tokenize_corpus(train[lang], train_language(train[lang], k))]

graphs = []
for name, s in seqs.items():
    # word LMs are padded per line, the others see one long stream
    lm = train_lm(s, ORDER, concatenate=name != "words", vocabulary=chars)
    units = {t for seq in s for t in seq}
    if name != "words":
        units |= set(chars)  # every character stays reachable
    g = build_graph(lm, units, inv, name)
    print(f"built {name}: {g.fst.num_states} states in {g.params['build_seconds']:.1f}s")
    graphs.append(g)

print()
print(complexity_report(graphs))
