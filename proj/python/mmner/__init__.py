"""Python surface of the multimodal NER toolkit (pybind11 core)."""

from ._mmner import (  # noqa: F401
    MmnerError,
    SubwordVocab,
    TAG_LABELS,
    crf_log_likelihood,
    evaluate,
    extract_spans,
    parse_conll,
    preprocess_text,
    report_table,
    run_verification,
    sine_relu,
    softmax,
    tag_index,
    top_k_indices,
    viterbi_decode,
)

__all__ = [
    "MmnerError",
    "SubwordVocab",
    "TAG_LABELS",
    "crf_log_likelihood",
    "evaluate",
    "extract_spans",
    "parse_conll",
    "preprocess_text",
    "report_table",
    "run_verification",
    "sine_relu",
    "softmax",
    "tag_index",
    "top_k_indices",
    "viterbi_decode",
]
