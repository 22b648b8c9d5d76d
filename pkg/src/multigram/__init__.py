"""Multigram sub-lexical units for open-vocabulary, multilingual line recognition.

Pipeline: corpus -> multigram segmentation (EM over a zero-order HSMM) ->
Kneser-Ney n-gram LM over units -> search graph T o min(det(L o G)) ->
beam search over (synthetic) character posterior lattices -> WER/CER.
"""

__version__ = "0.1.0"

from .corpus import (
    CharacterInventory,
    CorpusLine,
    build_character_inventory,
    load_corpus,
    normalize,
    sample_corpus,
    split_words,
    unify_inventories,
)
from .hsmm import (
    MultigramLexicon,
    MultigramModel,
    Segmentation,
    UnsegmentableWordError,
    char_tokens,
    em_train,
    forward_backward,
    initialize_model,
    merge_lexicons,
    prune_model,
    tokenize_corpus,
    tokenize_line,
    train_language,
    viterbi_segment,
    word_tokens,
)
from .lm import (
    ArpaFormatError,
    NgramCounts,
    NgramModel,
    count_ngrams,
    estimate_kneser_ney,
    oov_and_coverage,
    perplexity,
    read_arpa,
    score_sequence,
    train_lm,
    write_arpa,
)
from .fst import (
    Arc,
    DeterminizationError,
    FstError,
    Path,
    SymbolTable,
    Transducer,
    compose,
    connect,
    determinize,
    enumerate_paths,
    minimize,
    remove_epsilons,
    shortest_path,
)
from .graph import (
    GraphStats,
    SearchGraph,
    build_grammar_fst,
    build_graph,
    build_lexicon_fst,
    build_search_graph,
    build_token_fst,
    graph_stats,
    load_graph,
    save_graph,
)
from .optical import NoiseSpec, PosteriorLattice, greedy_collapse, synthesize_lattice, synthesize_manifest
from .decoder import DecodeConfig, Hypothesis, decode_lattice, detokenize, tune_hyperparameters
from .evaluation import EvalReport, cer, complexity_report, edit_distance, evaluate_set, wer
