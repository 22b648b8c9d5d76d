"""Command-line pipeline: ``multigram <command> [flags]``.

Exit status: 0 on success, 1 when a stage fails, 2 for usage errors.
"""

from __future__ import annotations

import argparse
import sys
from collections import Counter
from pathlib import Path

from . import __version__
from .corpus import (
    CharacterInventory,
    build_character_inventory,
    load_corpus,
    sample_corpus,
    split_words,
)
from .decoder import DEFAULT_BEAM, DecodeConfig, DecodeError, decode_many, grid_search
from .evaluation import complexity_report, evaluate_greedy, evaluate_set
from .fst import FstError
from .graph import GraphStats, build_graph, graph_stats, load_graph, save_graph
from .hsmm import MultigramModel, char_tokens, tokenize_line, train_language, word_tokens
from .lm import SP, read_arpa, train_lm, write_arpa
from .optical import NoiseSpec, load_manifest, synthesize_manifest


class StageError(Exception):
    pass


def _read_tokens(path) -> list[list[str]]:
    out = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.rstrip("\n")
            if line:
                out.append(line.split(" "))
    return out


def _read_units(path) -> list[str]:
    units = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            unit = line.split("\t")[0]
            if not unit:
                raise StageError(f"{path}:{lineno}: empty unit")
            units.append(unit)
    if not units:
        raise StageError(f"{path}: no units")
    return units


def _write_units(counts: Counter, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for u, c in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])):
            f.write(f"{u}\t{c}\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _need(path):
    if not Path(path).exists():
        raise StageError(f"{path}: no such file or directory")
    return path


# ---------------------------------------------------------------------------
# commands


def cmd_prepare(a):
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    sets = []
    if a.sample:
        for lang in ("fr", "en"):
            for split in ("train", "dev", "test"):
                sets.append((f"{lang}_{split}", sample_corpus(lang, split)))
    langs = a.lang or []
    for i, p in enumerate(a.input or []):
        tag = langs[i] if i < len(langs) else Path(_need(p)).stem
        sets.append((tag, load_corpus(_need(p), tag)))
    if not sets:
        raise StageError("nothing to prepare: give --input files or --sample")
    everything = []
    for name, lines in sets:
        with open(out / f"{name}.txt", "w", encoding="utf-8") as f:
            f.writelines(ln.text + "\n" for ln in lines)
        everything.extend(lines)
        print(f"{name}: {len(lines)} lines, {len({w for l in lines for w in split_words(l)})} distinct words")
    inv = build_character_inventory(everything)
    inv.write(out / "charset.tsv")
    print(f"charset: {len(inv)} characters -> {out / 'charset.tsv'}")


def cmd_train_multigrams(a):
    lines = load_corpus(_need(a.corpus), a.lang or Path(a.corpus).stem)
    if not lines:
        raise StageError(f"{a.corpus}: empty corpus")
    model = train_language(lines, a.dmax, a.max_iters, a.tol, jobs=a.jobs)
    model.write(a.out)
    print(f"{len(model)} units, {len(model.history) - 1} EM iterations, log-likelihood {model.history[-1]:.3f} -> {a.out}")


def cmd_tokenize(a):
    lines = load_corpus(_need(a.corpus), "multi")
    models = {}
    for p in a.model or []:
        m = MultigramModel.read(_need(p))
        models.setdefault(m.language_tag, m)
    if a.mode == "multigram" and not models:
        raise StageError("multigram mode needs at least one --model")
    first = next(iter(models.values()), None)
    counts: Counter = Counter()
    with open(a.out, "w", encoding="utf-8") as f:
        for line in lines:
            if a.mode == "word":
                toks = word_tokens(line)
            elif a.mode == "char":
                toks = char_tokens(line)
            else:
                toks = tokenize_line(line, models.get(line.language_tag, first))
            counts.update(toks)
            f.write(" ".join(toks) + "\n")
    if a.units:
        _write_units(counts, a.units)
    print(f"{len(lines)} lines, {len(counts)} distinct tokens -> {a.out}")


def cmd_train_lm(a):
    seqs = [s for p in a.tokens for s in _read_tokens(_need(p))]
    if not seqs:
        raise StageError("no token sequences")
    vocab = []
    if a.charset:
        inv = CharacterInventory.read(_need(a.charset))
        vocab = [SP if c == " " else c for c in inv]
    model = train_lm(seqs, a.order, concatenate=not a.per_line, vocabulary=vocab)
    write_arpa(model, a.out)
    print(f"order {model.order}, {len(model.entries)} n-grams -> {a.out}")


def cmd_build_graph(a):
    model = read_arpa(_need(a.lm))
    units = set(_read_units(_need(a.lexicon)))
    inv = CharacterInventory.read(_need(a.charset))
    if a.open_vocab:
        units |= {SP if c == " " else c for c in inv}
    g = build_graph(model, units, inv, a.type)
    save_graph(g, a.out)
    st = graph_stats(g)
    print(f"{a.type}: {st.states} states, {st.arcs} arcs, {st.size_bytes} bytes -> {a.out}")


def cmd_synth(a):
    inv = CharacterInventory.read(_need(a.charset))
    lines = load_corpus(_need(a.corpus))
    noise = NoiseSpec(a.eps, a.frames_per_char, a.blank_bias, a.seed)
    m = synthesize_manifest(lines, inv, noise, a.out, jobs=a.jobs)
    print(f"{len(lines)} lattices -> {m}")


def _config(a):
    return DecodeConfig(a.gamma, a.beta, a.beam, getattr(a, "nbest", 1), a.max_active)


def cmd_decode(a):
    graph = load_graph(_need(a.graph))
    items = load_manifest(_need(a.manifest))
    res = decode_many([lat for _, lat in items], graph, _config(a), a.jobs)
    out = open(a.out, "w", encoding="utf-8") if a.out else sys.stdout
    failed = 0
    try:
        for (e, _), r in zip(items, res):
            if isinstance(r, DecodeError):
                failed += 1
                print(f"warning: {e.line_id}: {r}", file=sys.stderr)
                continue
            for rank, h in enumerate(r, 1):
                out.write(f"{e.line_id}\t{rank}\t{h.total:.6f}\t{h.acoustic:.6f}\t{h.lm:.6f}\t{h.text}\n")
    finally:
        if out is not sys.stdout:
            out.close()
    if failed:
        raise StageError(f"{failed} of {len(items)} lattices failed to decode")


def cmd_tune(a):
    graph = load_graph(_need(a.graph))
    items = load_manifest(_need(a.manifest))
    table = grid_search([(lat, e.text) for e, lat in items], graph, a.gammas, a.betas, a.beam, a.jobs)
    for (g, b), w in sorted(table.items()):
        print(f"gamma={g:g}\tbeta={b:g}\tWER={w:.2f}")
    (g, b), w = min(table.items(), key=lambda kv: (kv[1], kv[0][0], kv[0][1]))
    print(f"best: gamma={g:g} beta={b:g} WER={w:.2f}")
    if a.out:
        with open(a.out, "w", encoding="utf-8") as f:
            f.write(f"gamma={g!r}\nbeta={b!r}\nbeam={a.beam!r}\n")


def cmd_evaluate(a):
    items = [(e.line_id, lat, e.text) for e, lat in load_manifest(_need(a.manifest))]
    if a.greedy:
        rep = evaluate_greedy(items)
    else:
        if not a.graph:
            raise StageError("--graph is required unless --greedy is given")
        graph = load_graph(_need(a.graph))
        wl = None
        if a.word_lexicon:
            wl = set(_read_units(_need(a.word_lexicon)))
        rep = evaluate_set(items, graph, _config(a), wl, a.jobs)
    print(rep.to_text(), end="")
    if a.tsv:
        Path(a.tsv).write_text(rep.to_tsv(), encoding="utf-8")
    if rep.failed:
        raise StageError(f"{len(rep.failed)} lines failed to decode")


def cmd_stats(a):
    rows = []
    for d in a.graphs:
        g = load_graph(_need(d))
        rows.append((g.lexicon_type, graph_stats(g)))
    print(complexity_report(rows, tsv=a.tsv), end="")


# ---------------------------------------------------------------------------
# parser


def _decode_flags(p):
    p.add_argument("--gamma", type=float, default=1.0, help="LM scale (default 1.0)")
    p.add_argument("--beta", type=float, default=1.0, help="word insertion factor; cost -ln(beta) per word (default 1.0)")
    p.add_argument("--beam", type=float, default=DEFAULT_BEAM, help=f"pruning margin in -ln units (default {DEFAULT_BEAM})")
    p.add_argument("--max-active", type=int, default=None, help="cap on active states per frame (default: none)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="multigram", description="Multigram sub-lexical recognition toolkit.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("prepare", help="normalize corpora and write the character set")
    p.add_argument("--input", action="append", help="UTF-8 corpus, one sample per line (repeatable)")
    p.add_argument("--lang", action="append", help="language tag for the matching --input (repeatable)")
    p.add_argument("--sample", action="store_true", help="also export the bundled FR/EN sample corpus")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("train-multigrams", help="train a multigram model with EM")
    p.add_argument("--corpus", required=True, help="training text")
    p.add_argument("--dmax", type=int, required=True, help="maximum unit length k")
    p.add_argument("--lang", default=None, help="language tag (default: corpus file stem)")
    p.add_argument("--max-iters", type=int, default=50, help="EM iteration cap (default 50)")
    p.add_argument("--tol", type=float, default=1e-6, help="relative log-likelihood tolerance (default 1e-6)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for the E-step (default 1)")
    p.add_argument("--out", required=True, help="model file")
    p.set_defaults(func=cmd_train_multigrams)

    p = sub.add_parser("tokenize", help="turn text into token sequences")
    p.add_argument("--corpus", required=True, help="text to tokenize (.tsv = lang<TAB>text)")
    p.add_argument("--model", action="append", help="multigram model (repeatable, picked by language tag)")
    p.add_argument("--mode", choices=("multigram", "word", "char"), default="multigram", help="token type (default multigram)")
    p.add_argument("--units", default=None, help="also write the unit lexicon (unit<TAB>count)")
    p.add_argument("--out", required=True, help="token file, one space-separated sequence per line")
    p.set_defaults(func=cmd_tokenize)

    p = sub.add_parser("train-lm", help="estimate a modified Kneser-Ney n-gram model")
    p.add_argument("--tokens", action="append", required=True, help="token file (repeatable)")
    p.add_argument("--order", type=int, default=9,
                   help="n-gram order (default 9; 10 is the usual choice for character models)")
    p.add_argument("--charset", default=None, help="add every character of this set to the vocabulary")
    p.add_argument("--per-line", action="store_true", help="pad each line with <s> </s> instead of one stream")
    p.add_argument("--out", required=True, help="ARPA file")
    p.set_defaults(func=cmd_train_lm)

    p = sub.add_parser("build-graph", help="compose the search graph T o min(det(L o G))")
    p.add_argument("--lm", required=True, help="ARPA language model")
    p.add_argument("--lexicon", required=True, help="unit list (unit[<TAB>count] per line)")
    p.add_argument("--charset", required=True, help="character set file")
    p.add_argument("--type", default="m2", help="lexicon type label for reports (words, chars, m2, ...)")
    p.add_argument("--open-vocab", action="store_true", help="add every character as a unit")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_build_graph)

    p = sub.add_parser("synth", help="synthesize posterior lattices for a text file")
    p.add_argument("--corpus", required=True, help="ground-truth text, one line per lattice")
    p.add_argument("--charset", required=True, help="character set file")
    p.add_argument("--eps", type=float, default=0.0, help="confusion mass in [0,1) (default 0)")
    p.add_argument("--frames-per-char", type=int, default=2, help="frames per character, >= 2 (default 2)")
    p.add_argument("--blank-bias", type=float, default=0.5, help="noise share on blank frames (default 0.5)")
    p.add_argument("--seed", type=int, default=0, help="base seed; line i uses seed+i (default 0)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("decode", help="decode a lattice manifest")
    p.add_argument("--graph", required=True, help="search graph directory")
    p.add_argument("--manifest", required=True, help="manifest.tsv from synth")
    _decode_flags(p)
    p.add_argument("--nbest", type=int, default=1, help="hypotheses per line (default 1)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
    p.add_argument("--out", default=None, help="output TSV (default stdout)")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("tune", help="grid-search gamma and beta on a dev manifest")
    p.add_argument("--graph", required=True, help="search graph directory")
    p.add_argument("--manifest", required=True, help="dev manifest.tsv")
    p.add_argument("--gammas", type=_floats, default=[0.5, 1.0, 1.5, 2.0], help="comma-separated gamma grid")
    p.add_argument("--betas", type=_floats, default=[0.5, 1.0, 2.0, 4.0], help="comma-separated beta grid")
    p.add_argument("--beam", type=float, default=DEFAULT_BEAM, help=f"pruning margin (default {DEFAULT_BEAM})")
    p.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
    p.add_argument("--out", default=None, help="write the winning config as key=value lines")
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("evaluate", help="decode a manifest and report WER/CER/OOV")
    p.add_argument("--graph", default=None, help="search graph directory")
    p.add_argument("--manifest", required=True, help="manifest.tsv")
    _decode_flags(p)
    p.add_argument("--greedy", action="store_true", help="score greedy collapse instead of graph decoding")
    p.add_argument("--word-lexicon", default=None, help="word list for word-level OOV")
    p.add_argument("--tsv", default=None, help="write per-line results here")
    p.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("stats", help="complexity table for one or more graph directories")
    p.add_argument("graphs", nargs="+", help="graph directories")
    p.add_argument("--tsv", action="store_true", help="machine-readable output")
    p.set_defaults(func=cmd_stats)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        args.func(args)
    except (StageError, ValueError, OSError, FstError, DecodeError, KeyError) as e:
        print(f"error [{args.command}]: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
