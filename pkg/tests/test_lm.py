import math
import random

import pytest

from multigram.lm import (
    ArpaFormatError,
    NgramModel,
    count_ngrams,
    estimate_kneser_ney,
    is_segmentable,
    oov_and_coverage,
    perplexity,
    read_arpa,
    score_sequence,
    train_lm,
    write_arpa,
)

from oracles import backoff_score


def _total_mass(model, context):
    return sum(10 ** model.log10_prob(w, context) for w in model.predictable)


@pytest.fixture(scope="module")
def toy_model():
    rng = random.Random(3)
    seqs = [[rng.choice("abcde") for _ in range(rng.randint(1, 12))] for _ in range(200)]
    return train_lm(seqs, 4)


def test_count_examples():
    c = count_ngrams([["a", "b"]], 2)
    assert c.of_order(2) == {("<s>", "a"): 1, ("a", "b"): 1, ("b", "</s>"): 1}
    c = count_ngrams([["a"], ["a"]], 2, concatenate=True)
    assert c.counts[("a",)] == 2
    assert c.counts[("a", "<sp>")] == 1 and c.counts[("<sp>", "a")] == 1
    c = count_ngrams([["x", "y", "x"]], 1)
    assert c.counts[("x",)] == 2 and c.counts[("y",)] == 1


def test_count_errors():
    with pytest.raises(ValueError):
        count_ngrams([], 2)
    with pytest.raises(ValueError):
        count_ngrams([["a"]], 0)


def test_count_consistency():
    c = count_ngrams([list("abracadabra"), list("cadabra")], 3)
    for g, n in c.counts.items():
        if len(g) >= 2:
            ext = sum(v for h, v in c.counts.items() if len(h) == len(g) + 1 and h[:-1] == g)
            assert n >= ext


def test_kn_unigram_example(caplog):
    # hand computation: one discount D=0.5 (degenerate counts), counts a=3 b=1 </s>=1,
    # gamma = 3 * 0.5 / 5 = 0.3, uniform over {a, b, </s>, <sp>, <unk>}
    m = estimate_kneser_ney(count_ngrams([["a", "a", "a", "b"]], 1))
    assert "degenerate" in caplog.text
    p = {w: 10 ** m.log10_prob(w) for w in ("a", "b", "</s>", "<unk>", "<sp>")}
    assert p["a"] == pytest.approx(2.5 / 5 + 0.3 / 5)
    assert p["b"] == pytest.approx(0.5 / 5 + 0.3 / 5)
    assert p["a"] > p["b"] > p["<unk>"] > 0
    assert sum(p.values()) == pytest.approx(1.0, abs=1e-6)


def test_kn_single_token_takes_non_unk_mass():
    m = estimate_kneser_ney(count_ngrams([["a"] * 4], 1, concatenate=True))
    pa = 10 ** m.log10_prob("a")
    assert pa > 10 ** m.log10_prob("<unk>")
    assert pa == max(10 ** m.log10_prob(w) for w in m.predictable)


def test_normalization_random_contexts(toy_model):
    rng = random.Random(1)
    ctxs = toy_model.contexts()
    for h in rng.sample(ctxs, min(100, len(ctxs))):
        assert _total_mass(toy_model, h) == pytest.approx(1.0, abs=1e-6)
    # unseen contexts normalize through backoff too
    assert _total_mass(toy_model, ("e", "e", "e")) == pytest.approx(1.0, abs=1e-6)


def test_score_examples(toy_model):
    m = toy_model
    assert score_sequence(m, []) == pytest.approx(m.log10_prob("</s>", ["<s>"]))
    assert score_sequence(m, ["a"]) == pytest.approx(m.log10_prob("a", ["<s>"]) + m.log10_prob("</s>", ["<s>", "a"]))
    assert score_sequence(m, ["zzz"]) == pytest.approx(score_sequence(m, ["<unk>"]))


def test_score_matches_backoff_oracle(toy_model):
    rng = random.Random(2)
    for _ in range(100):
        seq = [rng.choice("abcdef") for _ in range(rng.randint(0, 10))]
        assert score_sequence(toy_model, seq) == pytest.approx(backoff_score(toy_model, seq), abs=1e-9)


def test_perplexity_examples(toy_model):
    seqs = [list("abc"), list("dd")]
    total = sum(score_sequence(toy_model, s) for s in seqs)
    assert perplexity(toy_model, seqs) == pytest.approx(10 ** (-total / 7))
    with pytest.raises(ValueError):
        perplexity(toy_model, [])


def test_perplexity_uniform():
    vocab = ["<sp>", "</s>", "<unk>", "a", "b"]
    lp = math.log10(1 / len(vocab))
    m = NgramModel(1, frozenset(vocab), {(w,): (lp, 0.0) for w in vocab} | {("<s>",): (-99.0, 0.0)})
    assert perplexity(m, [list("abba")]) == pytest.approx(len(vocab))


def test_perplexity_high_order_beats_unigram():
    sent = list("the cat sat on the mat")
    uni = train_lm([sent], 1, concatenate=False)
    big = train_lm([sent], 8, concatenate=False)
    assert perplexity(big, [sent]) < perplexity(uni, [sent])


def test_arpa_round_trip(toy_model, tmp_path):
    write_arpa(toy_model, tmp_path / "lm.arpa")
    back = read_arpa(tmp_path / "lm.arpa")
    assert back.order == toy_model.order
    assert set(back.entries) == set(toy_model.entries)
    for g, (lp, bow) in toy_model.entries.items():
        assert back.entries[g][0] == pytest.approx(lp, abs=1e-6)
        assert back.entries[g][1] == pytest.approx(bow, abs=1e-6)


def test_arpa_hand_written(tmp_path):
    p = tmp_path / "u.arpa"
    p.write_text("\\data\\\nngram 1=2\n\n\\1-grams:\n-0.3\ta\n-0.5\t</s>\n\n\\end\\\n")
    m = read_arpa(p)
    assert m.entries == {("a",): (-0.3, 0.0), ("</s>",): (-0.5, 0.0)}
    assert m.log10_prob("a") == -0.3


def test_arpa_count_mismatch_names_section(tmp_path):
    p = tmp_path / "bad.arpa"
    p.write_text("\\data\\\nngram 1=5\n\n\\1-grams:\n-1\ta\n-1\tb\n-1\tc\n-1\td\n\n\\end\\\n")
    with pytest.raises(ArpaFormatError, match="1-grams"):
        read_arpa(p)


def test_arpa_malformed(tmp_path):
    p = tmp_path / "bad.arpa"
    p.write_text("not an arpa file\n")
    with pytest.raises(ArpaFormatError):
        read_arpa(p)
    p.write_text("\\data\\\nngram 1=1\n\n\\1-grams:\nxx\ta\n\n\\end\\\n")
    with pytest.raises(ArpaFormatError):
        read_arpa(p)


def test_segmentable():
    assert is_segmentable("abc", {"ab", "c"})
    assert not is_segmentable("abd", {"ab", "c"})


def test_oov_examples():
    words = ["abc", "ab", "c"]
    assert oov_and_coverage(set(words), [words]) == (0.0, 1.0)
    oov, cov = oov_and_coverage({"ab", "c"}, [["abc", "abd"]])
    assert oov == 0.5 and cov == 0.5
    # character-complete lexicon: open vocabulary
    assert oov_and_coverage(set("abcdefghij"), ["jig bad face"])[0] == 0.0


def test_oov_with_word_lexicon():
    oov, cov = oov_and_coverage({"a", "b"}, [["ab", "ba", "aa"]], word_lexicon={"ab"})
    assert oov == pytest.approx(2 / 3) and cov == 1.0
