"""Regenerate the bundled FR/EN sample corpora.

Lines are sampled word by word from the ``wordfreq`` frequency lists, so the
text has realistic spelling and a Zipfian vocabulary but no syntax. The
output is committed under ``src/multigram/data``; ``wordfreq`` is only needed
to rebuild it::

    pip install wordfreq
    python scripts/make_sample_corpus.py
"""

import argparse
from pathlib import Path

import numpy as np
import wordfreq

OUT = Path(__file__).resolve().parents[1] / "src" / "multigram" / "data"

# (n_lines, seed) per split
SPLITS = {"train": (500, 11), "dev": (60, 23), "test": (100, 37)}
# fraction of dev/test words drawn from outside the training vocabulary
HELD_OUT_RATE = 0.08
SHORT_OK = {"fr": {"a", "à", "y", "ou", "et"}, "en": {"a", "i"}}


def vocabulary(lang, top_n):
    words, freqs = [], []
    for w in wordfreq.top_n_list(lang, top_n):
        if not w.isalpha():
            continue
        if len(w) < 2 and w not in SHORT_OK[lang]:
            continue
        if lang == "en" and w == "i":
            w = "I"
        words.append(w)
        freqs.append(wordfreq.word_frequency(w.lower(), lang))
    p = np.asarray(freqs)
    return words, p / p.sum()


def sample_line(rng, words, p, held_out=None):
    n = int(rng.integers(5, 12))
    toks = [words[i] for i in rng.choice(len(words), size=n, p=p)]
    if held_out is not None:
        ho_words, ho_p = held_out
        for i in range(n):
            if rng.random() < HELD_OUT_RATE:
                toks[i] = ho_words[rng.choice(len(ho_words), p=ho_p)]
    toks[0] = toks[0][0].upper() + toks[0][1:]
    if n > 6 and rng.random() < 0.2:
        k = int(rng.integers(2, n - 2))
        toks[k] += ","
    return " ".join(toks) + "."


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--top-n", type=int, default=6000)
    args = ap.parse_args()
    OUT.mkdir(parents=True, exist_ok=True)
    for li, lang in enumerate(("fr", "en")):
        words, p = vocabulary(lang, args.top_n)
        seen = set()
        for split, (n_lines, seed) in SPLITS.items():
            rng = np.random.default_rng(seed + 100 * li)
            if split == "train":
                lines = [sample_line(rng, words, p) for _ in range(n_lines)]
                seen = {w.lower() for line in lines for w in line.rstrip(".").replace(",", "").split()}
                in_idx = [i for i, w in enumerate(words) if w.lower() in seen]
                out_idx = [i for i, w in enumerate(words) if w.lower() not in seen]
                known = ([words[i] for i in in_idx], p[in_idx] / p[in_idx].sum())
                held = ([words[i] for i in out_idx], p[out_idx] / p[out_idx].sum())
            else:
                lines = [sample_line(rng, *known, held_out=held) for _ in range(n_lines)]
            (OUT / f"{lang}_{split}.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
            print(lang, split, len(lines))


if __name__ == "__main__":
    main()
