"""Sentiment lexicon expansion with task-specific embedding subspaces."""

from ._lexpand import (
    Embeddings,
    Lexicon,
    LexpandError,
    Model,
    ParseError,
    Split,
    classify,
    continuous_lexicon,
    default_grid,
    expand,
    filter_neutral,
    grid_search,
    kendall_tau,
    lexicon_features,
    load_embeddings,
    load_model,
    macro_f1,
    normalize,
    parse_lexicon,
    restrict_to_vocabulary,
    score_message,
    split_dataset,
    tokenize,
    train,
)

__all__ = [
    "Embeddings",
    "Lexicon",
    "LexpandError",
    "Model",
    "ParseError",
    "Split",
    "classify",
    "continuous_lexicon",
    "default_grid",
    "expand",
    "filter_neutral",
    "grid_search",
    "kendall_tau",
    "lexicon_features",
    "load_embeddings",
    "load_model",
    "macro_f1",
    "normalize",
    "parse_lexicon",
    "restrict_to_vocabulary",
    "score_message",
    "split_dataset",
    "tokenize",
    "train",
]
