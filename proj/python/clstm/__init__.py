"""C-LSTM sentence classification: n-gram convolution feeding an LSTM.

Thin python surface over the C++ core: dataset loading, training,
evaluation, checkpoint IO and the finite-difference gradient checker.
"""

from ._clstm import (
    ClstmError,
    Dataset,
    Model,
    gradcheck,
    load_dataset,
    load_model,
    parse_sst_tree,
    parse_trec,
    read_word2vec,
    sst_roundtrip,
    train,
    write_word2vec,
)

__all__ = [
    "ClstmError",
    "Dataset",
    "Model",
    "gradcheck",
    "load_dataset",
    "load_model",
    "parse_sst_tree",
    "parse_trec",
    "read_word2vec",
    "sst_roundtrip",
    "train",
    "write_word2vec",
]
