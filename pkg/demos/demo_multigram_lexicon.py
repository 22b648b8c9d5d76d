"""
Learning multigram units from a bilingual corpus
================================================

Train one multigram model per language for several maximum unit lengths,
look at how a few words get decomposed, and compare lexicon sizes with the
plain word lexicon.
"""

import logging

from multigram.corpus import sample_corpus, split_words
from multigram.hsmm import tokenize_corpus, train_language, viterbi_segment

logging.basicConfig(level=logging.ERROR)

# the bundled sample corpus: 500 training lines per language
train = {lang: sample_corpus(lang, "train") for lang in ("fr", "en")}
words = {w for lines in train.values() for ln in lines for w in split_words(ln)}
print(f"{len(words)} distinct words in the training text")

# one HSMM per language and per k; EM stops once the log-likelihood settles
models = {k: {lang: train_language(lines, k) for lang, lines in train.items()} for k in (2, 3, 5)}

# decompositions under each k (the 1/d penalty favors longer units)
for word, lang in [("Merci", "fr"), ("beaucoup", "fr"), ("darling", "en"), ("children", "en")]:
    row = [" ".join(viterbi_segment(word, models[k][lang]).units) for k in (2, 3, 5)]
    print(f"{word:<10} " + " | ".join(f"{r:<14}" for r in row))

# lexicon = distinct units used when the training text is tokenized
print(f"\n{'lexicon':<8}{'size':>7}{'vs words':>10}")
print(f"{'words':<8}{len(words):>7}{'100.0%':>10}")
for k in (2, 3, 5):
    units = {t for lang in train for seq in tokenize_corpus(train[lang], models[k][lang]) for t in seq} - {"<sp>"}
    print(f"{'m' + str(k):<8}{len(units):>7}{100 * len(units) / len(words):>9.1f}%")
