"""
Decoding noisy lattices with and without an open vocabulary
===========================================================

The emulated optical model turns each test line into frame posteriors with
some confusion noise. We decode the same lattices with a word graph, a
2-multigram graph and no language model at all (greedy collapse).
Test lines contain words never seen in training, which the word graph
cannot produce but the multigram graph can spell.
"""

import logging

from multigram.corpus import build_character_inventory, sample_corpus, split_words
from multigram.decoder import DecodeConfig, decode_lattice
from multigram.evaluation import evaluate_greedy, evaluate_set, word_oov_rate
from multigram.graph import build_graph
from multigram.hsmm import tokenize_corpus, train_language, word_tokens
from multigram.lm import train_lm
from multigram.optical import NoiseSpec, greedy_collapse, synthesize_lattice

logging.basicConfig(level=logging.ERROR)

train = {lang: sample_corpus(lang, "train") for lang in ("fr", "en")}
test = [ln.text for lang in ("fr", "en") for ln in sample_corpus(lang, "test")[:50]]
lines = [ln for lang in train for ln in train[lang]]
# the charset is the optical model's label set, so it covers every split
inv = build_character_inventory(lines + test)
chars = ["<sp>" if c == " " else c for c in inv.characters]

train_words = {w for ln in lines for w in split_words(ln)}
print(f"word OOV rate of the test lines: {word_oov_rate(train_words, test):.1f}%")

word_seqs = [word_tokens(ln) for ln in lines]
m2_seqs = [s for lang in train for s in tokenize_corpus(train[lang], train_language(train[lang], 2))]
word_graph = build_graph(train_lm(word_seqs, 3, concatenate=False, vocabulary=chars),
                         {t for s in word_seqs for t in s}, inv, "words")
m2_graph = build_graph(train_lm(m2_seqs, 3, vocabulary=chars),
                       {t for s in m2_seqs for t in s} | set(chars), inv, "m2")

items = [(f"l{i}", synthesize_lattice(t, inv, NoiseSpec(0.1, seed=i)), t) for i, t in enumerate(test)]
cfg = DecodeConfig(gamma=1.0, beta=1.0)
print(f"greedy collapse WER {evaluate_greedy(items).wer:6.2f}%")
for g in (word_graph, m2_graph):
    rep = evaluate_set(items, g, cfg)
    print(f"{g.lexicon_type:<6} graph WER {rep.wer:6.2f}%  CER {rep.cer:5.2f}%  ({rep.decode_time})")

# one line in detail
_, lat, ref = items[3]
print("\nreference :", ref)
print("greedy    :", greedy_collapse(lat))
for g in (word_graph, m2_graph):
    hyps = decode_lattice(lat, g, DecodeConfig(n_best=3))
    for rank, h in enumerate(hyps, 1):
        print(f"{g.lexicon_type:<6} #{rank}: {h.text}  (acoustic {h.acoustic:.2f}, lm {h.lm:.2f})")
print("m2 tokens :", " ".join(decode_lattice(lat, m2_graph)[0].tokens))
